//! Residue, divisibility and bound constraints on the codivisor `D`.
//!
//! Constraints accumulate as rules fire: forced divisors of `2D - 1`
//! become residue classes, known-zero beta positions force prime-power
//! divisors of `D`, and case frames may pin `D` into an interval. All
//! classes are merged into one `D = residue (mod modulus)` pair by CRT;
//! inconsistency detection is exact.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::nt::{nat, Natural};

/// Bound on the support-restricted search for the least admissible `D`.
/// Any admissible `D` past this is represented by the cap itself, which
/// only weakens (never unsounds) the interval bounds built from it.
pub const SMOOTH_SEARCH_CAP_BITS: u64 = 44;

const SMOOTH_SEARCH_NODE_CAP: u64 = 200_000;

/// Why a set of `D` constraints is unsatisfiable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintConflict {
    /// Two residue classes with no common solution.
    ResidueClash {
        residue_a: Natural,
        modulus_a: Natural,
        residue_b: Natural,
        modulus_b: Natural,
    },
    /// Least admissible value already exceeds the known upper bound.
    BoundClash { min_admissible: Natural, d_max: Natural },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DConstraints {
    /// Odd primes `q` with `q | 2D - 1`, kept sorted and deduplicated.
    forced: Vec<Natural>,
    /// Merged residue class `D = residue (mod modulus)`; modulus 1 when
    /// nothing is known.
    residue: Natural,
    modulus: Natural,
    d_min: Option<Natural>,
    d_max: Option<Natural>,
    conflict: Option<ConstraintConflict>,
}

impl DConstraints {
    pub fn new() -> Self {
        DConstraints {
            forced: Vec::new(),
            residue: Natural::zero(),
            modulus: Natural::one(),
            d_min: None,
            d_max: None,
            conflict: None,
        }
    }

    pub fn forced_divisors(&self) -> &[Natural] {
        &self.forced
    }

    pub fn residue_class(&self) -> (&Natural, &Natural) {
        (&self.residue, &self.modulus)
    }

    pub fn d_min(&self) -> Option<&Natural> {
        self.d_min.as_ref()
    }

    pub fn d_max(&self) -> Option<&Natural> {
        self.d_max.as_ref()
    }

    pub fn conflict(&self) -> Option<&ConstraintConflict> {
        self.conflict.as_ref()
    }

    pub fn is_contradictory(&self) -> bool {
        self.conflict.is_some()
    }

    /// Records `q | 2D - 1` for an odd prime `q`, i.e. the residue class
    /// `D = (q + 1)/2 (mod q)`. Returns false on contradiction.
    pub fn require_forced_divisor(&mut self, q: &Natural) -> bool {
        debug_assert!(q.is_odd() && *q > Natural::one());
        if self.forced.binary_search(q).is_err() {
            let pos = self.forced.partition_point(|x| x < q);
            self.forced.insert(pos, q.clone());
        }
        let r = (q + 1u32) >> 1;
        self.require_residue(&r, q)
    }

    /// Records `D = r (mod m)` and merges by CRT. Returns false on
    /// contradiction.
    pub fn require_residue(&mut self, r: &Natural, m: &Natural) -> bool {
        if self.conflict.is_some() {
            return false;
        }
        match crt_merge(&self.residue, &self.modulus, &(r % m), m) {
            Some((nr, nm)) => {
                self.residue = nr;
                self.modulus = nm;
                true
            }
            None => {
                self.conflict = Some(ConstraintConflict::ResidueClash {
                    residue_a: self.residue.clone(),
                    modulus_a: self.modulus.clone(),
                    residue_b: r % m,
                    modulus_b: m.clone(),
                });
                false
            }
        }
    }

    /// Records `p^e | D` (from a position whose beta is known zero).
    pub fn require_divides(&mut self, p: &Natural, e: u32) -> bool {
        let m = p.pow(e);
        self.require_residue(&Natural::zero(), &m)
    }

    pub fn require_d_min(&mut self, v: &Natural) {
        if self.d_min.as_ref().is_none_or(|cur| cur < v) {
            self.d_min = Some(v.clone());
        }
    }

    pub fn require_d_max(&mut self, v: &Natural) {
        if self.d_max.as_ref().is_none_or(|cur| cur > v) {
            self.d_max = Some(v.clone());
        }
    }

    /// Pins `D` exactly.
    pub fn require_d_exact(&mut self, v: &Natural) {
        self.require_d_min(v);
        self.require_d_max(v);
    }

    /// Smallest value admissible under the residue class, parity and
    /// explicit bounds alone (no support restriction). `floor` is a
    /// caller-supplied sound lower bound (`D > 1` and the least prime of
    /// the support at minimum). Returns None when the class admits no odd
    /// value or everything admissible exceeds `d_max`.
    pub fn class_min(&self, floor: &Natural, odd_only: bool) -> Option<Natural> {
        let mut lo = floor.clone().max(nat(2));
        if let Some(d_min) = &self.d_min {
            lo = lo.max(d_min.clone());
        }
        // First class element >= lo.
        let mut x = if self.residue >= lo {
            self.residue.clone()
        } else {
            let k = (&lo - &self.residue + &self.modulus - 1u32) / &self.modulus;
            &self.residue + k * &self.modulus
        };
        if odd_only && x.is_even() {
            if self.modulus.is_even() {
                return None; // whole class is even
            }
            x += &self.modulus;
        }
        if let Some(d_max) = &self.d_max {
            if x > *d_max {
                return None;
            }
        }
        Some(x)
    }

    /// Exact check that a concrete codivisor value satisfies every
    /// accumulated constraint.
    pub fn admits_value(&self, d: &Natural) -> bool {
        if self.conflict.is_some() {
            return false;
        }
        if (d % &self.modulus) != self.residue {
            return false;
        }
        if self.d_min.as_ref().is_some_and(|m| d < m) {
            return false;
        }
        if self.d_max.as_ref().is_some_and(|m| d > m) {
            return false;
        }
        let twice_minus_1 = (d << 1) - 1u32;
        self.forced.iter().all(|q| Natural::is_zero(&(&twice_minus_1 % q)))
    }

    /// A sound lower bound on any admissible `D`, optionally sharpened by
    /// restricting `D` to products of the support grid. Errors when the
    /// constraints provably admit no `D` at all.
    pub fn d_lower_bound(
        &self,
        support: Option<&SupportGrid<'_>>,
        floor: &Natural,
        odd_only: bool,
    ) -> Result<Natural, ConstraintConflict> {
        if let Some(c) = &self.conflict {
            return Err(c.clone());
        }
        let simple = match self.class_min(floor, odd_only) {
            Some(v) => v,
            None => {
                let d_max = self.d_max.clone().unwrap_or_else(Natural::zero);
                return Err(ConstraintConflict::BoundClash {
                    min_admissible: &d_max + 1u32,
                    d_max,
                });
            }
        };
        let Some(grid) = support else {
            return Ok(simple);
        };
        let hard_cap = Natural::one() << SMOOTH_SEARCH_CAP_BITS;
        let cap = match &self.d_max {
            Some(m) => m.clone().min(hard_cap.clone()),
            None => hard_cap.clone(),
        };
        match grid.min_in_class(self, &simple, &cap) {
            SmoothSearch::Found(v) => Ok(v),
            SmoothSearch::NoneBelowCap => {
                if let Some(d_max) = &self.d_max {
                    if *d_max <= hard_cap {
                        // The whole admissible window was enumerated: empty.
                        return Err(ConstraintConflict::BoundClash {
                            min_admissible: d_max + 1u32,
                            d_max: d_max.clone(),
                        });
                    }
                }
                Ok(cap)
            }
            SmoothSearch::Bailed => Ok(simple),
        }
    }
}

/// Merge `x = r1 (mod m1)` with `x = r2 (mod m2)`. None when incompatible.
fn crt_merge(r1: &Natural, m1: &Natural, r2: &Natural, m2: &Natural) -> Option<(Natural, Natural)> {
    if m1.is_one() {
        return Some((r2.clone(), m2.clone()));
    }
    if m2.is_one() {
        return Some((r1.clone(), m1.clone()));
    }
    let (m1, m2) = (BigInt::from(m1.clone()), BigInt::from(m2.clone()));
    let (r1, r2) = (BigInt::from(r1.clone()), BigInt::from(r2.clone()));
    let e = m1.extended_gcd(&m2);
    let g = e.gcd;
    let diff = &r2 - &r1;
    if !(&diff % &g).is_zero() {
        return None;
    }
    let lcm = &m1 / &g * &m2;
    // x = r1 + m1 * t where t = (diff / g) * inv(m1/g mod m2/g)
    let m2g = &m2 / &g;
    let t = (&diff / &g * e.x).mod_floor(&m2g);
    let x = (&r1 + &m1 * t).mod_floor(&lcm);
    debug_assert!(!x.is_negative());
    Some((
        x.to_biguint().expect("mod_floor of positive"),
        lcm.to_biguint().expect("positive lcm"),
    ))
}

/// Per-position sets of exponents the codivisor may take, used to restrict
/// the least-admissible-`D` search to products of the frame's primes.
pub struct SupportGrid<'a> {
    /// `(prime, allowed exponents of that prime in D)`, primes ascending.
    pub positions: &'a [(Natural, Vec<u32>)],
}

enum SmoothSearch {
    Found(Natural),
    NoneBelowCap,
    Bailed,
}

impl SupportGrid<'_> {
    /// Least product over the grid that satisfies `cons` (class, forced
    /// divisors, bounds), is > 1, at least `lo`, and at most `cap`.
    fn min_in_class(&self, cons: &DConstraints, lo: &Natural, cap: &Natural) -> SmoothSearch {
        let mut best: Option<Natural> = None;
        let mut nodes = 0u64;
        let mut bailed = false;
        self.walk(0, &Natural::one(), cons, lo, cap, &mut best, &mut nodes, &mut bailed);
        if bailed {
            SmoothSearch::Bailed
        } else {
            match best {
                Some(v) => SmoothSearch::Found(v),
                None => SmoothSearch::NoneBelowCap,
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        idx: usize,
        acc: &Natural,
        cons: &DConstraints,
        lo: &Natural,
        cap: &Natural,
        best: &mut Option<Natural>,
        nodes: &mut u64,
        bailed: &mut bool,
    ) {
        *nodes += 1;
        if *bailed || *nodes > SMOOTH_SEARCH_NODE_CAP {
            *bailed = true;
            return;
        }
        if best.as_ref().is_some_and(|b| acc >= b) {
            return;
        }
        if idx == self.positions.len() {
            if acc > &Natural::one() && acc >= lo && cons.admits_value(acc) {
                *best = Some(acc.clone());
            }
            return;
        }
        let (p, exps) = &self.positions[idx];
        for &e in exps {
            let v = acc * p.pow(e);
            if v > *cap {
                break; // exponent lists ascend, larger e only grows v
            }
            self.walk(idx + 1, &v, cons, lo, cap, best, nodes, bailed);
        }
    }
}
