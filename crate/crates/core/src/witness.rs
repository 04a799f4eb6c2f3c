//! The deficient-perfect predicate and verified witnesses.
//!
//! `n` is deficient-perfect with deficient divisor `d` when
//! `sigma(n) = 2n - d` and `d` is a proper divisor of `n`. The codivisor
//! `D = n/d` then satisfies `sigma(n) = (2D - 1) d`, equivalently
//! `sigma(n)/n + 1/D = 2`.

use core::fmt;

use num_traits::{One, Zero};

use crate::nt::{rat, sigma, Factorization, Natural, Rational};

/// A verified `(n, d, D)` triple together with `sigma(n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpWitness {
    n: Factorization,
    d: Factorization,
    codivisor: Factorization,
    sigma_n: Natural,
}

/// A witness whose fields do not cohere (tampered or corrupted data).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntegrityError {
    DivisorProductMismatch,
    SigmaMismatch,
    DefectIdentityBroken,
    NotProper,
}

impl fmt::Display for IntegrityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrityError::DivisorProductMismatch => write!(f, "d * D != n"),
            IntegrityError::SigmaMismatch => write!(f, "stored sigma differs from sigma(n)"),
            IntegrityError::DefectIdentityBroken => write!(f, "sigma(n) != 2n - d"),
            IntegrityError::NotProper => write!(f, "d is not a proper divisor of n"),
        }
    }
}

impl DpWitness {
    pub fn n(&self) -> &Factorization {
        &self.n
    }

    /// The deficient divisor `d`.
    pub fn deficient_divisor(&self) -> &Factorization {
        &self.d
    }

    /// The codivisor `D = n / d`.
    pub fn codivisor(&self) -> &Factorization {
        &self.codivisor
    }

    pub fn sigma_n(&self) -> &Natural {
        &self.sigma_n
    }

    /// Reassembles a witness from serialized parts without validation.
    /// `verify_eq1` re-audits such data.
    pub fn from_parts_unchecked(
        n: Factorization,
        d: Factorization,
        codivisor: Factorization,
        sigma_n: Natural,
    ) -> Self {
        DpWitness { n, d, codivisor, sigma_n }
    }

    /// True iff `d = 1` (the almost perfect case).
    pub fn is_almost_perfect(&self) -> bool {
        self.d.is_one()
    }

    /// Independent recomputation of the identity `sigma(n) = (2D - 1) d`.
    ///
    /// Field coherence is checked first: `d * D = n`, `d` proper, the
    /// stored sigma, and `sigma(n) = 2n - d` itself. A witness built by
    /// [`dp_witness`] always passes; deserialized or perturbed data may
    /// not, and the specific broken invariant is reported.
    pub fn verify_eq1(&self) -> Result<bool, IntegrityError> {
        let n = self.n.value();
        let d = self.d.value();
        let co = self.codivisor.value();
        if &d * &co != n {
            return Err(IntegrityError::DivisorProductMismatch);
        }
        if d >= n || d < Natural::one() {
            return Err(IntegrityError::NotProper);
        }
        if sigma(&self.n) != self.sigma_n {
            return Err(IntegrityError::SigmaMismatch);
        }
        if &self.sigma_n + &d != (&n << 1) {
            return Err(IntegrityError::DefectIdentityBroken);
        }
        Ok(self.sigma_n == ((co << 1) - 1u32) * d)
    }
}

/// Extracts the deficient-perfect witness of `n >= 2` if one exists.
///
/// The deficit `delta = 2n - sigma(n)` is the only candidate for `d`; a
/// witness exists iff `delta >= 1`, `delta` divides `n`, and `delta < n`.
/// `d` is factored over the known prime support of `n` (every divisor of
/// `n` factors there), so no general factorization is needed.
pub fn dp_witness(f: &Factorization) -> Option<DpWitness> {
    let n = f.value();
    debug_assert!(n >= Natural::from(2u32), "dp_witness requires n >= 2");
    let sigma_n = sigma(f);
    let twice = &n << 1;
    if sigma_n >= twice {
        return None; // perfect or abundant
    }
    let delta = &twice - &sigma_n;
    if delta >= n || !(&n % &delta).is_zero() {
        return None;
    }
    let d = f
        .factor_over_support(&delta)
        .expect("a divisor of n factors over n's support");
    let codivisor = f.checked_div(&d).expect("d divides n");
    Some(DpWitness { n: f.clone(), d, codivisor, sigma_n })
}

/// Exact abundancy `sigma(n)/n` in lowest terms.
pub fn abundancy(f: &Factorization) -> Rational {
    rat(sigma(f), f.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nt::{nat, rat_u64};

    fn fz(pairs: &[(u64, u32)]) -> Factorization {
        Factorization::from_u64_pairs(pairs).unwrap()
    }

    #[test]
    fn headline_witness() {
        let n = fz(&[(3, 2), (7, 2), (11, 2), (13, 2)]);
        let w = dp_witness(&n).expect("9018009 is deficient-perfect");
        assert_eq!(w.deficient_divisor(), &fz(&[(3, 2), (7, 1), (13, 1)]));
        assert_eq!(w.codivisor(), &fz(&[(7, 1), (11, 2), (13, 1)]));
        assert_eq!(w.codivisor().value(), nat(11_011));
        assert_eq!(w.sigma_n(), &nat(18_035_199));
        assert!(!w.is_almost_perfect());
        // 18035199 = 22021 * 819
        assert_eq!(w.verify_eq1(), Ok(true));
    }

    #[test]
    fn non_witnesses() {
        // delta = 18 - 13 = 5 does not divide 9
        assert!(dp_witness(&fz(&[(3, 2)])).is_none());
        // 6 is perfect
        assert!(dp_witness(&fz(&[(2, 1), (3, 1)])).is_none());
        // 12 is abundant
        assert!(dp_witness(&fz(&[(2, 2), (3, 1)])).is_none());
    }

    #[test]
    fn small_witnesses() {
        let w = dp_witness(&fz(&[(2, 1), (5, 1)])).unwrap();
        assert_eq!(w.deficient_divisor().value(), nat(2));
        assert_eq!(w.codivisor().value(), nat(5));
        assert!(!w.is_almost_perfect());

        let w4 = dp_witness(&fz(&[(2, 2)])).unwrap();
        assert!(w4.is_almost_perfect());
        assert_eq!(w4.sigma_n(), &nat(7));

        let w2 = dp_witness(&fz(&[(2, 1)])).unwrap();
        assert_eq!(w2.verify_eq1(), Ok(true)); // 3 = 3 * 1

        // sigma(44) = 84, d = 4, D = 11, 84 = 21 * 4
        let w44 = dp_witness(&fz(&[(2, 2), (11, 1)])).unwrap();
        assert_eq!(w44.deficient_divisor().value(), nat(4));
        assert_eq!(w44.verify_eq1(), Ok(true));
    }

    #[test]
    fn abundancy_examples() {
        assert_eq!(abundancy(&Factorization::one()), rat_u64(1, 1));
        let n = fz(&[(3, 2), (7, 2), (11, 2), (13, 2)]);
        let a = abundancy(&n);
        assert_eq!(a, rat_u64(2_003_911, 1_002_001));
        assert_eq!(a + rat_u64(1, 11_011), rat_u64(2, 1));
        assert_eq!(abundancy(&fz(&[(3, 4)])), rat_u64(121, 81));
    }

    #[test]
    fn perturbed_witness_is_an_integrity_error() {
        let n = fz(&[(3, 2), (7, 2), (11, 2), (13, 2)]);
        let w = dp_witness(&n).unwrap();
        let bad = DpWitness::from_parts_unchecked(
            w.n.clone(),
            fz(&[(2, 2), (5, 1), (41, 1)]), // 820 = d + 1
            w.codivisor.clone(),
            w.sigma_n.clone(),
        );
        assert_eq!(bad.verify_eq1(), Err(IntegrityError::DivisorProductMismatch));

        let bad_sigma = DpWitness::from_parts_unchecked(
            w.n.clone(),
            w.d.clone(),
            w.codivisor.clone(),
            w.sigma_n.clone() + 1u32,
        );
        assert_eq!(bad_sigma.verify_eq1(), Err(IntegrityError::SigmaMismatch));
    }
}
