//! Legendre and Jacobi symbols.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{is_prime, nat, Natural, NtError};

/// Legendre symbol `(a/q)` for an odd prime `q`, evaluated by Euler's
/// criterion: `a^((q-1)/2) mod q`, mapped onto {-1, 0, +1}. Accepts any
/// integer `a`, including negatives.
pub fn legendre(a: &BigInt, q: &Natural) -> Result<i8, NtError> {
    if q.is_even() || !is_prime(q) {
        return Err(NtError::NotOddPrime(q.clone()));
    }
    let q_int = BigInt::from(q.clone());
    let a_mod = a.mod_floor(&q_int).to_biguint().expect("mod_floor of positive modulus");
    if a_mod.is_zero() {
        return Ok(0);
    }
    let e = (q - 1u32) >> 1;
    let r = a_mod.modpow(&e, q);
    if r.is_one() {
        Ok(1)
    } else {
        debug_assert_eq!(r, q - 1u32);
        Ok(-1)
    }
}

pub fn legendre_u64(a: i64, q: u64) -> Result<i8, NtError> {
    legendre(&BigInt::from(a), &nat(q))
}

/// Jacobi symbol `(a/n)` for odd positive `n`; no primality requirement.
pub fn jacobi(a: &Natural, n: &Natural) -> i8 {
    jacobi_bigint(&BigInt::from(a.clone()), &BigInt::from(n.clone()))
}

pub(crate) fn jacobi_bigint(a: &BigInt, n: &BigInt) -> i8 {
    debug_assert!(n.is_positive() && n.is_odd());
    let mut a = a.mod_floor(n);
    let mut n = n.clone();
    let mut sign = 1i8;
    while !a.is_zero() {
        while a.is_even() {
            a /= 2;
            let r = (&n % 8u32).to_u8().unwrap();
            if r == 3 || r == 5 {
                sign = -sign;
            }
        }
        core::mem::swap(&mut a, &mut n);
        if (&a % 4u32).to_u8().unwrap() == 3 && (&n % 4u32).to_u8().unwrap() == 3 {
            sign = -sign;
        }
        a = a.mod_floor(&n);
    }
    if n.is_one() {
        sign
    } else {
        0
    }
}
