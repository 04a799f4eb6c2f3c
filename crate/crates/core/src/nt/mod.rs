//! Arbitrary-precision number theory primitives.
//!
//! All arithmetic is exact: integers are [`Natural`] (unbounded, unsigned)
//! and ratios are [`Rational`] (kept in lowest terms by construction, with
//! exact cross-multiplication comparison). Nothing in this module rounds.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_integer::Integer;
use num_traits::{One, Zero};

mod factor;
mod order;
mod primality;
mod symbols;

pub use factor::{factorize, FactorBudget, FactorOutcome};
pub use order::mult_order;
pub use primality::{is_prime, is_prime_u64};
pub use symbols::{jacobi, legendre, legendre_u64};

/// Unbounded nonnegative integer; no precision loss at any magnitude.
pub type Natural = num_bigint::BigUint;

/// Exact fraction of naturals, always reduced to lowest terms.
pub type Rational = num_rational::Ratio<Natural>;

/// Shorthand for small constants.
pub fn nat(v: u64) -> Natural {
    Natural::from(v)
}

/// `num/den` as an exact rational (reduced on construction).
pub fn rat(num: Natural, den: Natural) -> Rational {
    Rational::new(num, den)
}

pub fn rat_u64(num: u64, den: u64) -> Rational {
    Rational::new(nat(num), nat(den))
}

/// Errors from domain precondition violations in this module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NtError {
    /// An argument required to be prime is not.
    NotPrime(Natural),
    /// `mult_order` requires `gcd(a, m) = 1`.
    NotCoprime { a: Natural, m: Natural },
    /// `mult_order` requires a modulus `m >= 2`.
    ModulusTooSmall(Natural),
    /// The Legendre symbol is defined only for odd prime moduli.
    NotOddPrime(Natural),
    /// `sigma_divisibility` requires distinct primes.
    EqualPrimes(Natural),
    /// A factorization needed by the operation did not complete within
    /// the effort budget.
    FactorBudgetExhausted(Natural),
    /// Factor list passed to `Factorization::new` violates canonical form.
    NotCanonical(String),
}

impl fmt::Display for NtError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NtError::NotPrime(n) => write!(f, "{n} is not prime"),
            NtError::NotCoprime { a, m } => write!(f, "gcd({a}, {m}) != 1"),
            NtError::ModulusTooSmall(m) => write!(f, "modulus {m} < 2"),
            NtError::NotOddPrime(q) => write!(f, "{q} is not an odd prime"),
            NtError::EqualPrimes(p) => write!(f, "primes must be distinct, both are {p}"),
            NtError::FactorBudgetExhausted(n) => {
                write!(f, "factorization budget exhausted on cofactor {n}")
            }
            NtError::NotCanonical(msg) => write!(f, "non-canonical factorization: {msg}"),
        }
    }
}

/// A prime power `p^a` with `p` prime and `a >= 0`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrimePower {
    pub prime: Natural,
    pub exp: u32,
}

impl PrimePower {
    pub fn value(&self) -> Natural {
        self.prime.pow(self.exp)
    }
}

/// A number as a sorted list of prime powers. The empty list denotes 1.
///
/// Invariants: primes strictly ascending, every exponent >= 1, every prime
/// passes the primality check.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Factorization {
    factors: Vec<PrimePower>,
}

impl Factorization {
    /// The factorization of 1.
    pub fn one() -> Self {
        Factorization { factors: Vec::new() }
    }

    /// Builds a canonical factorization, validating every invariant.
    pub fn new(factors: Vec<PrimePower>) -> Result<Self, NtError> {
        let mut prev: Option<&Natural> = None;
        for pp in &factors {
            if pp.exp == 0 {
                return Err(NtError::NotCanonical(alloc::format!(
                    "exponent 0 on prime {}",
                    pp.prime
                )));
            }
            if let Some(prev) = prev {
                if *prev >= pp.prime {
                    return Err(NtError::NotCanonical(alloc::format!(
                        "primes not strictly ascending at {}",
                        pp.prime
                    )));
                }
            }
            if !is_prime(&pp.prime) {
                return Err(NtError::NotPrime(pp.prime.clone()));
            }
            prev = Some(&pp.prime);
        }
        Ok(Factorization { factors })
    }

    /// Builds from `(prime, exp)` pairs without re-checking primality or
    /// order. For trusted callers (sieves over known prime tables) and for
    /// deserialized data that a later `verify` pass re-audits.
    pub fn from_parts_unchecked(factors: Vec<PrimePower>) -> Self {
        Factorization { factors }
    }

    pub fn from_u64_pairs(pairs: &[(u64, u32)]) -> Result<Self, NtError> {
        Self::new(
            pairs
                .iter()
                .map(|&(p, a)| PrimePower { prime: nat(p), exp: a })
                .collect(),
        )
    }

    pub fn factors(&self) -> &[PrimePower] {
        &self.factors
    }

    /// Number of distinct prime divisors.
    pub fn omega(&self) -> usize {
        self.factors.len()
    }

    /// Reconstructs the represented integer exactly.
    pub fn value(&self) -> Natural {
        self.factors
            .iter()
            .fold(Natural::one(), |acc, pp| acc * pp.value())
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn is_odd(&self) -> bool {
        self.factors.first().is_none_or(|pp| pp.prime.is_odd())
    }

    /// True when every exponent is even, i.e. the value is a perfect square.
    pub fn all_exponents_even(&self) -> bool {
        self.factors.iter().all(|pp| pp.exp % 2 == 0)
    }

    pub fn exponent_of(&self, p: &Natural) -> u32 {
        self.factors
            .iter()
            .find(|pp| pp.prime == *p)
            .map_or(0, |pp| pp.exp)
    }

    /// Divides out the given factorization, if it divides this one.
    pub fn checked_div(&self, other: &Factorization) -> Option<Factorization> {
        let mut out = Vec::new();
        for pp in &self.factors {
            let b = other.exponent_of(&pp.prime);
            if b > pp.exp {
                return None;
            }
            if b < pp.exp {
                out.push(PrimePower { prime: pp.prime.clone(), exp: pp.exp - b });
            }
        }
        if other.factors.iter().any(|pp| self.exponent_of(&pp.prime) < pp.exp) {
            return None;
        }
        Some(Factorization { factors: out })
    }

    /// Factors `m` over this factorization's prime support. Returns `None`
    /// when `m` has a prime divisor outside the support.
    pub fn factor_over_support(&self, m: &Natural) -> Option<Factorization> {
        let mut rem = m.clone();
        let mut out = Vec::new();
        for pp in &self.factors {
            let mut e = 0u32;
            while (&rem % &pp.prime).is_zero() {
                rem /= &pp.prime;
                e += 1;
            }
            if e > 0 {
                out.push(PrimePower { prime: pp.prime.clone(), exp: e });
            }
        }
        if rem.is_one() {
            Some(Factorization { factors: out })
        } else {
            None
        }
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, pp) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            if pp.exp == 1 {
                write!(f, "{}", pp.prime)?;
            } else {
                write!(f, "{}^{}", pp.prime, pp.exp)?;
            }
        }
        Ok(())
    }
}

/// Divisor sum of a prime power: `sigma(p^a) = (p^(a+1) - 1)/(p - 1)`,
/// the geometric sum `1 + p + ... + p^a`. `sigma(p^0) = 1` by convention.
pub fn sigma_prime_power(p: &Natural, a: u32) -> Result<Natural, NtError> {
    if !is_prime(p) {
        return Err(NtError::NotPrime(p.clone()));
    }
    Ok(sigma_prime_power_unchecked(p, a))
}

pub(crate) fn sigma_prime_power_unchecked(p: &Natural, a: u32) -> Natural {
    (p.pow(a + 1) - 1u32) / (p - 1u32)
}

/// Divisor sum of a canonical factorization; multiplicative over the
/// prime powers. `sigma(1) = 1`.
pub fn sigma(f: &Factorization) -> Natural {
    f.factors()
        .iter()
        .fold(Natural::one(), |acc, pp| {
            acc * sigma_prime_power_unchecked(&pp.prime, pp.exp)
        })
}

/// Exact per-prime abundancy `sigma(p^a) / p^a`.
pub fn sigma_ratio(p: &Natural, a: u32) -> Rational {
    rat(sigma_prime_power_unchecked(p, a), p.pow(a))
}

/// Strict supremum `p/(p-1)` of `sigma(p^a)/p^a` over all exponents.
pub fn sup_ratio(p: &Natural) -> Rational {
    rat(p.clone(), p - 1u32)
}

/// `base^exp mod modulus` by square-and-multiply.
pub fn pow_mod(base: &Natural, exp: &Natural, modulus: &Natural) -> Natural {
    base.modpow(exp, modulus)
}

/// `sigma(p^a) mod m` without ever forming the full value, for any
/// modulus `m >= 2` (prime or not). Splits on the geometric-sum recurrence
/// `S(2k) = S(k) * (1 + p^k)`, `S(k+1) = S(k) + p^k`.
pub fn sigma_prime_power_mod(p: &Natural, a: u32, m: &Natural) -> Natural {
    // S(t) = 1 + p + ... + p^(t-1) mod m, together with p^t mod m.
    fn step(p: &Natural, t: u64, m: &Natural) -> (Natural, Natural) {
        if t == 0 {
            return (Natural::zero(), Natural::one());
        }
        if t.is_multiple_of(2) {
            let (s, pw) = step(p, t / 2, m);
            ((&s + &s * &pw) % m, (&pw * &pw) % m)
        } else {
            let (s, pw) = step(p, t - 1, m);
            ((s + &pw) % m, (pw * p) % m)
        }
    }
    step(p, u64::from(a) + 1, m).0
}
