//! Multiplicative order modulo n.

use num_integer::Integer;
use num_traits::{One, Zero};

use super::factor::{factorize, FactorBudget};
use super::{nat, Factorization, Natural, NtError};

/// Least `h >= 1` with `a^h = 1 (mod m)`, for `gcd(a, m) = 1`, `m >= 2`.
///
/// Computed by reducing the Carmichael value lambda(m) (which the order
/// must divide): for each prime `r` of lambda, strip factors of `r` while
/// `a^(h/r)` stays 1. Both `m` and lambda(m) must factor completely
/// within the default budget.
pub fn mult_order(a: &Natural, m: &Natural) -> Result<Natural, NtError> {
    if *m < nat(2) {
        return Err(NtError::ModulusTooSmall(m.clone()));
    }
    let a = a % m;
    if !a.gcd(m).is_one() {
        return Err(NtError::NotCoprime { a, m: m.clone() });
    }
    let budget = FactorBudget::default();
    let fm = factorize(m, &budget);
    let Some(fm) = fm.fully_factored().then_some(fm.factors) else {
        return Err(NtError::FactorBudgetExhausted(m.clone()));
    };
    let lambda = carmichael(&fm);
    let fl = factorize(&lambda, &budget);
    if !fl.fully_factored() {
        return Err(NtError::FactorBudgetExhausted(lambda));
    }
    let mut h = lambda;
    for pp in fl.factors.factors() {
        let r = &pp.prime;
        while (&h % r).is_zero() && a.modpow(&(&h / r), m).is_one() {
            h /= r;
        }
    }
    Ok(h)
}

/// Carmichael function lambda from a complete factorization: lcm of the
/// per-prime-power values, with the usual halving at 2^e for e >= 3.
fn carmichael(f: &Factorization) -> Natural {
    let mut acc = Natural::one();
    for pp in f.factors() {
        let term = if pp.prime == nat(2) {
            match pp.exp {
                1 => Natural::one(),
                2 => nat(2),
                e => Natural::one() << (e - 2),
            }
        } else {
            pp.prime.pow(pp.exp - 1) * (&pp.prime - 1u32)
        };
        acc = acc.lcm(&term);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ord(a: u64, m: u64) -> u64 {
        use num_traits::ToPrimitive;
        mult_order(&nat(a), &nat(m)).unwrap().to_u64().unwrap()
    }

    #[test]
    fn spec_examples() {
        assert_eq!(ord(11, 25), 5);
        assert_eq!(ord(3, 17), 16);
        for m in [2u64, 9, 25, 1093] {
            assert_eq!(ord(1, m), 1);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            mult_order(&nat(10), &nat(25)),
            Err(NtError::NotCoprime { .. })
        ));
        assert!(matches!(
            mult_order(&nat(3), &nat(1)),
            Err(NtError::ModulusTooSmall(_))
        ));
    }

    #[test]
    fn brute_force_agreement() {
        for m in 2u64..200 {
            for a in 1..m {
                if nat(a).gcd(&nat(m)).is_one() {
                    let mut h = 1u64;
                    let mut x = a % m;
                    while x != 1 {
                        x = x * a % m;
                        h += 1;
                    }
                    assert_eq!(ord(a, m), h, "a={a} m={m}");
                }
            }
        }
    }
}
