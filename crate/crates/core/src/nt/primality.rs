//! Primality testing.
//!
//! Below 2^64 the test is deterministic: a strong-probable-prime check
//! against the fixed witness set [`WITNESSES_V1`], which is known to be
//! exact for every n < 3.3 * 10^24. Above 2^64 the same witness set is
//! used as a strong-probable-prime filter and combined with a strong
//! Lucas test (Selfridge parameter choice), so a composite would have to
//! fool both to slip through. Callers that certify primes above 2^64
//! must label them as probable.

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::{nat, Natural};

/// Fixed, versioned strong-probable-prime bases. Deterministic below 2^64.
pub const WITNESSES_V1: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

pub fn is_prime(n: &Natural) -> bool {
    match n.to_u64() {
        Some(v) => is_prime_u64(v),
        None => is_prime_big(n),
    }
}

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for &a in &WITNESSES_V1 {
        let mut x = pow_mod_u64(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub(crate) fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

fn is_prime_big(n: &Natural) -> bool {
    debug_assert!(n.bits() > 64);
    if n.is_even() {
        return false;
    }
    for &p in &[3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67] {
        if (n % nat(p)).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for &a in &WITNESSES_V1 {
        let mut x = nat(a).modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&nat(2), n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    strong_lucas_probable_prime(n)
}

/// Strong Lucas probable prime test with Selfridge's parameter choice:
/// the first D in 5, -7, 9, -11, ... with Jacobi(D/n) = -1, then P = 1,
/// Q = (1 - D)/4. The caller has already excluded even n, small prime
/// divisors, and (via the base-2 strong test) perfect squares in practice;
/// a square would make the D search run forever, so it is checked here.
fn strong_lucas_probable_prime(n: &Natural) -> bool {
    use num_bigint::BigInt;
    use num_bigint::Sign;

    let n_int = BigInt::from_biguint(Sign::Plus, n.clone());
    if &n.sqrt() * &n.sqrt() == *n {
        return false;
    }
    let mut d = BigInt::from(5);
    loop {
        let j = super::symbols::jacobi_bigint(&d, &n_int);
        if j == -1 {
            break;
        }
        if j == 0 && d.magnitude() != n {
            return false;
        }
        d = if d.sign() == Sign::Plus { -(&d + 2i32) } else { -(&d - 2i32) };
    }
    let q: BigInt = (BigInt::one() - &d) / 4;

    // n + 1 = delta; strong test on delta = t * 2^s with t odd.
    let delta = n + 1u32;
    let s = delta.trailing_zeros().unwrap_or(0);
    let t = &delta >> s;

    // Lucas sequences U_t, V_t (mod n) by binary chaining on BigInt with
    // reduction into [0, n).
    let modn = |x: &BigInt| -> BigInt { x.mod_floor(&n_int) };
    let mut u = BigInt::one();
    let mut v = BigInt::one();
    let mut qk = q.clone();
    let bits = t.bits();
    for i in (0..bits.saturating_sub(1)).rev() {
        // double: U_{2k} = U_k V_k, V_{2k} = V_k^2 - 2 Q^k
        u = modn(&(&u * &v));
        v = modn(&(&v * &v - 2 * &qk));
        qk = modn(&(&qk * &qk));
        if (&t >> i) & Natural::one() == Natural::one() {
            // increment: U_{k+1} = (P U_k + V_k)/2, V_{k+1} = (D U_k + P V_k)/2
            let u1 = &u + &v;
            let v1 = &d * &u + &v;
            u = modn(&half(&u1, &n_int));
            v = modn(&half(&v1, &n_int));
            qk = modn(&(&qk * &q));
        }
    }
    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 1..s {
        v = modn(&(&v * &v - 2 * &qk));
        qk = modn(&(&qk * &qk));
        if v.is_zero() {
            return true;
        }
    }
    false
}

/// Exact division by 2 modulo odd n.
fn half(x: &num_bigint::BigInt, n: &num_bigint::BigInt) -> num_bigint::BigInt {
    if x.is_even() {
        x / 2
    } else {
        (x + n) / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_division_oracle_agrees_below_10_000() {
        fn slow(n: u64) -> bool {
            if n < 2 {
                return false;
            }
            let mut d = 2;
            while d * d <= n {
                if n.is_multiple_of(d) {
                    return false;
                }
                d += 1;
            }
            true
        }
        for n in 0..10_000u64 {
            assert_eq!(is_prime_u64(n), slow(n), "n = {n}");
        }
    }

    #[test]
    fn spec_examples() {
        assert!(is_prime(&nat(1093)));
        assert!(!is_prime(&nat(1)));
        assert!(!is_prime(&nat(9_018_009)));
    }

    #[test]
    fn known_values_above_u64() {
        // 2^89 - 1 and 2^127 - 1 are Mersenne primes; 2^87 - 1 and
        // 2^101 - 1 are composite.
        let m = |e: u32| (Natural::one() << e) - 1u32;
        assert!(is_prime(&m(89)));
        assert!(is_prime(&m(127)));
        assert!(!is_prime(&m(87)));
        assert!(!is_prime(&m(101)));
        // A big square must not pass.
        let sq = m(89) * m(89);
        assert!(!is_prime(&sq));
    }

    #[test]
    fn strong_pseudoprimes_to_small_bases_are_caught() {
        // 3215031751 is a strong pseudoprime to bases 2, 3, 5, 7.
        assert!(!is_prime_u64(3_215_031_751));
        // Carmichael numbers.
        assert!(!is_prime_u64(561));
        assert!(!is_prime_u64(41_041));
    }
}
