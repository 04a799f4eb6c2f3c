//! Sound subtree pruning over factorization shapes.
//!
//! A [`SubtreeSpec`] frames a family of odd candidates
//! `n = p_1^a_1 ... p_k^a_k` (optionally with further primes pending)
//! whose exponents are even and range over a grid, together with
//! accumulated constraints on the codivisor `D`. Four rule families can
//! eliminate the whole frame:
//!
//! * interval bounds on `sigma(n)/n + 1/D` against 2,
//! * forced divisors of `2D - 1` from sigma values of fixed prime powers,
//! * multiplicative-order arguments (a prime that must divide `sigma(n)`
//!   but cannot, or whose unique carrier forces impossible divisors),
//! * quadratic-residue eliminations of every admissible deficient divisor.
//!
//! Every prune emits a [`PruneCertificate`] carrying the frame, the exact
//! numbers compared, and the elementary facts used, so the decision can be
//! replayed offline.

#![allow(clippy::result_large_err)]

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::facts::{Expr, FactPayload, FactRecord, RatioTerm, Relation};
use crate::nt::{
    factorize, legendre, mult_order, nat, rat_u64, sigma_prime_power_unchecked, sigma_ratio,
    sup_ratio, FactorBudget, Factorization, Natural, NtError, Rational,
};
use crate::witness::DpWitness;

mod constraints;

pub use constraints::{ConstraintConflict, DConstraints, SupportGrid};

/// Exponent knowledge at one position. All values are even and >= 2;
/// a free range steps by 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentStatus {
    Fixed(u32),
    Free { min: u32, max: u32 },
}

impl ExponentStatus {
    pub fn min(&self) -> u32 {
        match *self {
            ExponentStatus::Fixed(a) => a,
            ExponentStatus::Free { min, .. } => min,
        }
    }

    pub fn max(&self) -> u32 {
        match *self {
            ExponentStatus::Fixed(a) => a,
            ExponentStatus::Free { max, .. } => max,
        }
    }

    pub fn values(&self) -> impl Iterator<Item = u32> {
        let (min, max) = (self.min(), self.max());
        (min..=max).step_by(2)
    }

    pub fn count(&self) -> u64 {
        u64::from((self.max() - self.min()) / 2 + 1)
    }
}

/// What is known about the exponent of this prime in the deficient
/// divisor `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaSupport {
    Unknown,
    KnownZero,
    KnownPositive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Position {
    pub prime: Natural,
    pub status: ExponentStatus,
    pub beta: BetaSupport,
}

/// Positions whose primes have not been chosen yet: `count` further primes,
/// strictly ascending, drawn from `[prime_min, prime_max]`, exponents on
/// the same even grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingTail {
    pub count: usize,
    pub prime_min: u64,
    pub prime_max: u64,
    pub exp_min: u32,
    pub exp_max: u32,
}

/// A frame of odd candidate shapes with accumulated `D` knowledge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubtreeSpec {
    pub positions: Vec<Position>,
    pub pending: Option<PendingTail>,
    pub constraints: DConstraints,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecError {
    PrimesNotAscending,
    NotOddPrime(Natural),
    OddOrTinyExponent,
    EmptySpec,
}

impl SubtreeSpec {
    pub fn new(positions: Vec<Position>, pending: Option<PendingTail>) -> Result<Self, SpecError> {
        let spec = SubtreeSpec { positions, pending, constraints: DConstraints::new() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.positions.is_empty() && self.pending.is_none() {
            return Err(SpecError::EmptySpec);
        }
        let mut prev: Option<&Natural> = None;
        for pos in &self.positions {
            if pos.prime.is_even() || !crate::nt::is_prime(&pos.prime) {
                return Err(SpecError::NotOddPrime(pos.prime.clone()));
            }
            if let Some(p) = prev {
                if *p >= pos.prime {
                    return Err(SpecError::PrimesNotAscending);
                }
            }
            let (lo, hi) = (pos.status.min(), pos.status.max());
            if lo < 2 || lo % 2 != 0 || hi % 2 != 0 || hi < lo {
                return Err(SpecError::OddOrTinyExponent);
            }
            prev = Some(&pos.prime);
        }
        if let Some(tail) = &self.pending {
            if tail.exp_min < 2 || tail.exp_min % 2 != 0 || tail.exp_max % 2 != 0 {
                return Err(SpecError::OddOrTinyExponent);
            }
            if let Some(p) = prev {
                if p.to_u64().is_none_or(|p| p >= tail.prime_min) {
                    return Err(SpecError::PrimesNotAscending);
                }
            }
        }
        Ok(())
    }

    /// The smallest prime any divisor of a completion can have; `D > 1`
    /// makes this a sound floor for `D`.
    fn least_prime_floor(&self) -> Natural {
        match self.positions.first() {
            Some(pos) => pos.prime.clone(),
            None => nat(self.pending.as_ref().map_or(3, |t| t.prime_min)),
        }
    }

    /// Sound lower bound for the codivisor of any witness in this frame.
    fn d_floor(&self) -> Result<Natural, ConstraintConflict> {
        let grid_store;
        let grid = if self.pending.is_none() {
            grid_store = self.support_grid();
            Some(SupportGrid { positions: &grid_store })
        } else {
            None
        };
        self.constraints
            .d_lower_bound(grid.as_ref(), &self.least_prime_floor(), true)
    }

    /// Exponents each prime may contribute to `D = n/d`.
    fn support_grid(&self) -> Vec<(Natural, Vec<u32>)> {
        self.positions
            .iter()
            .map(|pos| {
                let gammas: Vec<u32> = match (pos.status, pos.beta) {
                    // beta = 0 means D carries the full exponent of p.
                    (ExponentStatus::Fixed(a), BetaSupport::KnownZero) => alloc::vec![a],
                    (ExponentStatus::Fixed(a), BetaSupport::KnownPositive) => (0..a).collect(),
                    (ExponentStatus::Fixed(a), BetaSupport::Unknown) => (0..=a).collect(),
                    (st @ ExponentStatus::Free { .. }, BetaSupport::KnownZero) => {
                        st.values().collect()
                    }
                    (st, BetaSupport::KnownPositive) => (0..st.max()).collect(),
                    (st, BetaSupport::Unknown) => (0..=st.max()).collect(),
                };
                (pos.prime.clone(), gammas)
            })
            .collect()
    }

    /// Number of exponent/prime completions, given the odd-prime table the
    /// pending tail draws from.
    pub fn completion_count(&self, prime_table: &[u64]) -> u128 {
        let mut acc: u128 = 1;
        for pos in &self.positions {
            acc = acc.saturating_mul(u128::from(pos.status.count()));
        }
        if let Some(tail) = &self.pending {
            let m = prime_table
                .iter()
                .filter(|&&p| p >= tail.prime_min && p <= tail.prime_max)
                .count();
            let grid = u128::from((tail.exp_max.saturating_sub(tail.exp_min)) / 2 + 1);
            acc = acc
                .saturating_mul(binomial(m as u128, tail.count as u128))
                .saturating_mul(grid.saturating_pow(tail.count as u32));
        }
        acc
    }

    /// Visits every completion of the frame (within the given prime table)
    /// as a canonical factorization.
    pub fn for_each_completion<F: FnMut(&Factorization)>(&self, prime_table: &[u64], f: &mut F) {
        let tail_primes: Vec<u64> = match &self.pending {
            Some(tail) => prime_table
                .iter()
                .copied()
                .filter(|&p| p >= tail.prime_min && p <= tail.prime_max)
                .collect(),
            None => Vec::new(),
        };
        let tail_count = self.pending.as_ref().map_or(0, |t| t.count);
        let mut exps = alloc::vec![0u32; self.positions.len()];
        let mut chosen: Vec<(u64, u32)> = Vec::new();
        self.walk_completions(0, &mut exps, &tail_primes, 0, tail_count, &mut chosen, f);
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_completions<F: FnMut(&Factorization)>(
        &self,
        idx: usize,
        exps: &mut [u32],
        tail_primes: &[u64],
        tail_from: usize,
        tail_left: usize,
        chosen: &mut Vec<(u64, u32)>,
        f: &mut F,
    ) {
        if idx < self.positions.len() {
            for a in self.positions[idx].status.values() {
                exps[idx] = a;
                self.walk_completions(idx + 1, exps, tail_primes, tail_from, tail_left, chosen, f);
            }
            return;
        }
        if tail_left > 0 {
            let tail = self.pending.as_ref().expect("tail_left > 0 implies pending");
            for i in tail_from..tail_primes.len() {
                for a in (tail.exp_min..=tail.exp_max).step_by(2) {
                    chosen.push((tail_primes[i], a));
                    self.walk_completions(idx, exps, tail_primes, i + 1, tail_left - 1, chosen, f);
                    chosen.pop();
                }
            }
            return;
        }
        let mut parts: Vec<crate::nt::PrimePower> = self
            .positions
            .iter()
            .zip(exps.iter())
            .map(|(pos, &a)| crate::nt::PrimePower { prime: pos.prime.clone(), exp: a })
            .collect();
        parts.extend(
            chosen
                .iter()
                .map(|&(p, a)| crate::nt::PrimePower { prime: nat(p), exp: a }),
        );
        f(&Factorization::from_parts_unchecked(parts));
    }

    /// Does a concrete witness satisfy every constraint this frame assumed
    /// or derived? Used by soundness audits: a pruned frame is unsound iff
    /// some completion has a witness that passes this check.
    pub fn witness_consistent(&self, w: &DpWitness) -> bool {
        let co = w.codivisor().value();
        if !self.constraints.admits_value(&co) {
            return false;
        }
        for pos in &self.positions {
            let beta = w.deficient_divisor().exponent_of(&pos.prime);
            match pos.beta {
                BetaSupport::KnownZero if beta != 0 => return false,
                BetaSupport::KnownPositive if beta == 0 => return false,
                _ => {}
            }
        }
        true
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Which rule families the pipeline may apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleSet {
    pub bound: bool,
    pub forced_divisor: bool,
    pub order: bool,
    pub quadratic_residue: bool,
}

impl RuleSet {
    pub const ALL: RuleSet = RuleSet {
        bound: true,
        forced_divisor: true,
        order: true,
        quadratic_residue: true,
    };
    pub const NONE: RuleSet = RuleSet {
        bound: false,
        forced_divisor: false,
        order: false,
        quadratic_residue: false,
    };

    pub fn any(&self) -> bool {
        self.bound || self.forced_divisor || self.order || self.quadratic_residue
    }
}

/// The exact comparison a prune decision came down to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleOutcome {
    /// Every completion has `sigma(n)/n + 1/D > 2`.
    BoundAboveTwo { lower: Rational },
    /// Every completion has `sigma(n)/n + 1/D < 2`.
    BoundBelowTwo { upper: Rational },
    /// Accumulated `D` constraints are unsatisfiable.
    ForcedDivisorContradiction { conflict: ConstraintConflict },
    /// `q` must divide `sigma(n)` but no position can carry it, or its
    /// unique carrier forces divisors incompatible with the constraints.
    OrderContradiction {
        q: Natural,
        carrier: Option<(Natural, Natural)>,
        conflict: Option<ConstraintConflict>,
    },
    /// No parity vector for `d` matches the required Legendre product.
    QuadraticResidueContradiction { q: Natural, target: i8, symbols: Vec<i8> },
}

impl RuleOutcome {
    /// Stable rule name for serialization.
    pub fn rule_name(&self) -> &'static str {
        match self {
            RuleOutcome::BoundAboveTwo { .. } => "BoundAboveTwo",
            RuleOutcome::BoundBelowTwo { .. } => "BoundBelowTwo",
            RuleOutcome::ForcedDivisorContradiction { .. } => "ForcedDivisorContradiction",
            RuleOutcome::OrderContradiction { .. } => "OrderContradiction",
            RuleOutcome::QuadraticResidueContradiction { .. } => "QuadraticResidueContradiction",
        }
    }
}

/// Proof sketch that a frame holds no witness: the frame, the decisive
/// comparison, and the elementary facts it leaned on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneCertificate {
    pub spec: SubtreeSpec,
    pub outcome: RuleOutcome,
    pub facts: Vec<FactRecord>,
}

/// Shared scratch state: factorization budget plus memo tables, so a
/// search re-deriving the same sigma values at every node stays cheap.
pub struct PruneContext {
    pub budget: FactorBudget,
    sigma_factors: alloc::collections::BTreeMap<(Natural, u32), (Vec<Natural>, bool)>,
    orders: alloc::collections::BTreeMap<(Natural, Natural), Option<Natural>>,
    symbols: alloc::collections::BTreeMap<(Natural, Natural), i8>,
}

impl PruneContext {
    pub fn new(budget: FactorBudget) -> Self {
        PruneContext {
            budget,
            sigma_factors: alloc::collections::BTreeMap::new(),
            orders: alloc::collections::BTreeMap::new(),
            symbols: alloc::collections::BTreeMap::new(),
        }
    }

    /// Prime factors of `sigma(p^a)` found within budget, and whether the
    /// factorization completed. Incomplete cofactors contribute nothing
    /// (the sound direction).
    fn sigma_prime_factors(&mut self, p: &Natural, a: u32) -> (Vec<Natural>, bool) {
        if let Some(hit) = self.sigma_factors.get(&(p.clone(), a)) {
            return hit.clone();
        }
        let value = sigma_prime_power_unchecked(p, a);
        let out = factorize(&value, &self.budget);
        let complete = out.fully_factored();
        let primes: Vec<Natural> = out.factors.factors().iter().map(|pp| pp.prime.clone()).collect();
        self.sigma_factors.insert((p.clone(), a), (primes.clone(), complete));
        (primes, complete)
    }

    fn order(&mut self, a: &Natural, m: &Natural) -> Option<Natural> {
        if let Some(hit) = self.orders.get(&(a.clone(), m.clone())) {
            return hit.clone();
        }
        let v = mult_order(a, m).ok();
        self.orders.insert((a.clone(), m.clone()), v.clone());
        v
    }

    fn legendre_cached(&mut self, a: &Natural, q: &Natural) -> Option<i8> {
        if let Some(&hit) = self.symbols.get(&(a.clone(), q.clone())) {
            return Some(hit);
        }
        let v = legendre(&BigInt::from(a.clone()), q).ok()?;
        self.symbols.insert((a.clone(), q.clone()), v);
        Some(v)
    }
}

impl Default for PruneContext {
    fn default() -> Self {
        PruneContext::new(FactorBudget::default())
    }
}

/// Exact interval for `sigma(n)/n + 1/D` over all completions of the
/// frame: per-prime abundancy is minimized at the least admissible
/// exponent (of the largest admissible prime, for pending positions) and
/// bounded above by `p/(p-1)` sups; `1/D` is bracketed by the constraint
/// set. Errors when the constraints are already unsatisfiable.
pub fn bound_interval(spec: &SubtreeSpec) -> Result<(Rational, Rational), ConstraintConflict> {
    if let Some(c) = spec.constraints.conflict() {
        return Err(c.clone());
    }
    let mut lo = rat_u64(1, 1);
    let mut hi = rat_u64(1, 1);
    for pos in &spec.positions {
        match pos.status {
            ExponentStatus::Fixed(a) => {
                let r = sigma_ratio(&pos.prime, a);
                lo *= r.clone();
                hi *= r;
            }
            ExponentStatus::Free { min, .. } => {
                lo *= sigma_ratio(&pos.prime, min);
                hi *= sup_ratio(&pos.prime);
            }
        }
    }
    if let Some(tail) = &spec.pending {
        for _ in 0..tail.count {
            lo *= sigma_ratio(&nat(tail.prime_max), tail.exp_min);
            hi *= sup_ratio(&nat(tail.prime_min));
        }
    }
    if let Some(d_max) = spec.constraints.d_max() {
        lo += crate::nt::rat(Natural::one(), d_max.clone());
    }
    let d_floor = spec.d_floor()?;
    hi += crate::nt::rat(Natural::one(), d_floor);
    debug_assert!(lo <= hi);
    Ok((lo, hi))
}

/// Emits a bound certificate when the interval clears 2 on either side.
pub fn prune_by_bounds(spec: &SubtreeSpec) -> Result<Option<PruneCertificate>, ConstraintConflict> {
    let (lo, hi) = bound_interval(spec)?;
    let two = rat_u64(2, 1);
    if lo > two {
        let fact = lo_chain_fact(spec);
        return Ok(Some(PruneCertificate {
            spec: spec.clone(),
            outcome: RuleOutcome::BoundAboveTwo { lower: lo },
            facts: alloc::vec![fact],
        }));
    }
    if hi < two {
        let fact = hi_chain_fact(spec);
        return Ok(Some(PruneCertificate {
            spec: spec.clone(),
            outcome: RuleOutcome::BoundBelowTwo { upper: hi },
            facts: alloc::vec![fact],
        }));
    }
    Ok(None)
}

fn lo_chain_fact(spec: &SubtreeSpec) -> FactRecord {
    let mut terms: Vec<RatioTerm> = spec
        .positions
        .iter()
        .map(|pos| RatioTerm::SigmaRatio { p: pos.prime.clone(), a: pos.status.min() })
        .collect();
    if let Some(tail) = &spec.pending {
        for _ in 0..tail.count {
            terms.push(RatioTerm::SigmaRatio { p: nat(tail.prime_max), a: tail.exp_min });
        }
    }
    FactRecord::new(
        FactPayload::Inequality {
            terms,
            inv_d: spec.constraints.d_max().cloned(),
            relation: Relation::GreaterTwo,
        },
        "derived: frame lower bound",
    )
}

fn hi_chain_fact(spec: &SubtreeSpec) -> FactRecord {
    let mut terms: Vec<RatioTerm> = spec
        .positions
        .iter()
        .map(|pos| match pos.status {
            ExponentStatus::Fixed(a) => RatioTerm::SigmaRatio { p: pos.prime.clone(), a },
            ExponentStatus::Free { .. } => RatioTerm::SupRatio { p: pos.prime.clone() },
        })
        .collect();
    if let Some(tail) = &spec.pending {
        for _ in 0..tail.count {
            terms.push(RatioTerm::SupRatio { p: nat(tail.prime_min) });
        }
    }
    let inv_d = spec.d_floor().ok();
    FactRecord::new(
        FactPayload::Inequality { terms, inv_d, relation: Relation::LessTwo },
        "derived: frame upper bound",
    )
}

/// Does the odd prime `q` divide `sigma(p^a)` for even `a`? Decided by the
/// order criterion: with `h = ord_q(p) > 1`, `q | sigma(p^a)` iff
/// `h | a + 1`; with `p = 1 (mod q)`, iff `q | a + 1`.
pub fn sigma_divisibility(q: &Natural, p: &Natural, a: u32) -> Result<bool, NtError> {
    if q == p {
        return Err(NtError::EqualPrimes(q.clone()));
    }
    if !crate::nt::is_prime(q) {
        return Err(NtError::NotPrime(q.clone()));
    }
    if (p % q).is_zero() {
        return Ok(false); // sigma(p^a) = 1 (mod p), and q = p is excluded
    }
    let a1 = nat(u64::from(a) + 1);
    if (p % q).is_one() {
        return Ok((&a1 % q).is_zero());
    }
    let h = mult_order(p, q)?;
    Ok((a1 % h).is_zero())
}

/// All forced divisors available in the frame: for every fixed `p^a`,
/// every prime of `sigma(p^a)` outside the support must divide `2D - 1`
/// (because `sigma(n) = (2D - 1) d` and `d` factors over the support).
/// Returns the enriched spec or a contradiction certificate.
pub fn forced_divisors(
    spec: &SubtreeSpec,
    ctx: &mut PruneContext,
) -> Result<(SubtreeSpec, Vec<FactRecord>), PruneCertificate> {
    let mut out = spec.clone();
    let mut facts = Vec::new();
    for pos in &spec.positions {
        let ExponentStatus::Fixed(a) = pos.status else { continue };
        let (primes, _complete) = ctx.sigma_prime_factors(&pos.prime, a);
        for q in primes {
            if spec.positions.iter().any(|other| other.prime == q) {
                continue;
            }
            if out.constraints.forced_divisors().contains(&q) {
                continue;
            }
            facts.push(FactRecord::new(
                FactPayload::Divides {
                    q: q.clone(),
                    expr: Expr::SigmaPp { p: pos.prime.clone(), a },
                },
                "derived: forced divisor of 2D-1",
            ));
            let before = out.constraints.clone();
            if !out.constraints.require_forced_divisor(&q) {
                let conflict = out.constraints.conflict().expect("merge failed").clone();
                out.constraints = before; // certificate frame stays satisfiable
                return Err(PruneCertificate {
                    spec: out,
                    outcome: RuleOutcome::ForcedDivisorContradiction { conflict },
                    facts,
                });
            }
        }
    }
    // A finite D window may already be impossible to satisfy.
    if let Err(conflict) = out.d_floor() {
        return Err(PruneCertificate {
            spec: out.clone(),
            outcome: RuleOutcome::ForcedDivisorContradiction { conflict },
            facts,
        });
    }
    Ok((out, facts))
}

/// Parity vectors of `d` compatible with `q | sigma(n)`: since
/// `sigma(n) = 2n - d`, `d = 2n (mod q)`; with every exponent of `n` even
/// and `q` coprime to `n`, `(n/q) = 1`, so `(d/q) = (2/q)` and therefore
/// `prod (p_i/q)^(beta_i) = (2/q)`. Only parities of the betas matter.
pub fn qr_admissible_parities(primes: &[Natural], q: &Natural) -> Result<Vec<Vec<u8>>, NtError> {
    if q.is_even() || !crate::nt::is_prime(q) {
        return Err(NtError::NotOddPrime(q.clone()));
    }
    if primes.iter().any(|p| (p % q).is_zero()) {
        return Err(NtError::EqualPrimes(q.clone()));
    }
    let target = legendre(&BigInt::from(2), q)?;
    let symbols: Result<Vec<i8>, _> = primes
        .iter()
        .map(|p| legendre(&BigInt::from(p.clone()), q))
        .collect();
    let symbols = symbols?;
    let k = primes.len();
    let mut admissible = Vec::new();
    for mask in 0u32..(1 << k) {
        let mut prod = 1i8;
        for (i, s) in symbols.iter().enumerate() {
            if mask >> i & 1 == 1 {
                prod *= s;
            }
        }
        if prod == target {
            admissible.push((0..k).map(|i| (mask >> i & 1) as u8).collect());
        }
    }
    Ok(admissible)
}

/// Carrier analysis for "q divides sigma(n)": which positions could host
/// the divisibility, and the induced requirement `m | a + 1` on a free
/// exponent.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Carrier {
    /// A fixed exponent already accounts for q.
    Explained(usize),
    /// Exactly one free position can carry q, with requirement m | a + 1.
    Unique { index: usize, requirement: Natural },
    /// Several positions could carry q; nothing can be concluded.
    Ambiguous,
    /// No position can carry q.
    Impossible,
}

/// Requirement `m` such that `q | sigma(p^a)` forces `m | a + 1`, or None
/// when no even exponent in the grid can host the divisibility.
fn carrier_requirement(
    q: &Natural,
    pos: &Position,
    ctx: &mut PruneContext,
) -> Option<Natural> {
    if (&pos.prime % q).is_zero() {
        return None;
    }
    let m = if (&pos.prime % q).is_one() {
        q.clone()
    } else {
        let h = ctx.order(&pos.prime, q)?;
        if h.is_even() {
            return None; // a + 1 is odd for even a
        }
        h
    };
    // Smallest even a with m | a + 1 is m - 1 (m odd). It must fit the grid.
    let min_needed = &m - 1u32;
    match pos.status {
        ExponentStatus::Fixed(a) => {
            if (nat(u64::from(a) + 1) % &m).is_zero() {
                Some(m)
            } else {
                None
            }
        }
        ExponentStatus::Free { min, max } => {
            // Even values a in [min, max] with a = m - 1 (mod 2m).
            let max = nat(u64::from(max));
            if min_needed > max {
                return None;
            }
            // min <= m - 1 always satisfiable by a = m - 1 when m - 1 >= min;
            // otherwise jump by 2m.
            let min = nat(u64::from(min));
            let candidate = if min_needed >= min {
                min_needed
            } else {
                let step = &m + &m;
                let k = (&min - &min_needed + &step - 1u32) / &step;
                &min_needed + k * step
            };
            (candidate <= max).then_some(m)
        }
    }
}

fn classify_carriers(q: &Natural, spec: &SubtreeSpec, ctx: &mut PruneContext) -> Carrier {
    if spec.pending.is_some() {
        return Carrier::Ambiguous; // unknown primes could carry anything
    }
    let mut found: Option<(usize, Natural)> = None;
    for (i, pos) in spec.positions.iter().enumerate() {
        match pos.status {
            ExponentStatus::Fixed(_) => {
                if carrier_requirement(q, pos, ctx).is_some() {
                    return Carrier::Explained(i);
                }
            }
            ExponentStatus::Free { .. } => {
                if let Some(m) = carrier_requirement(q, pos, ctx) {
                    if found.is_some() {
                        return Carrier::Ambiguous;
                    }
                    found = Some((i, m));
                }
            }
        }
    }
    match found {
        Some((index, requirement)) => Carrier::Unique { index, requirement },
        None => Carrier::Impossible,
    }
}

/// Folds the consequences of an established requirement `m | a + 1` for
/// the free exponent of `p` into the constraints: `sigma(p^(m-1))` divides
/// `sigma(p^a)` for every admissible `a`, so its out-of-support prime
/// factors all divide `2D - 1`. Reports whether anything new was learned,
/// or the certificate when the enriched constraints clash.
fn propagate_requirement(
    spec: &mut SubtreeSpec,
    p: &Natural,
    requirement: &Natural,
    ctx: &mut PruneContext,
) -> Result<bool, PruneCertificate> {
    let Some(m_small) = requirement.to_u64().filter(|&m| (2..=1 << 20).contains(&m)) else {
        return Ok(false); // sigma(p^0) never prunes; huge m is hopeless to factor
    };
    let frame = spec.clone();
    let (primes, _complete) = ctx.sigma_prime_factors(p, (m_small - 1) as u32);
    let mut facts = Vec::new();
    let mut changed = false;
    for q in primes {
        if spec.positions.iter().any(|other| other.prime == q) {
            continue;
        }
        if spec.constraints.forced_divisors().contains(&q) {
            continue;
        }
        facts.push(FactRecord::new(
            FactPayload::Divides {
                q: q.clone(),
                expr: Expr::SigmaPp { p: p.clone(), a: (m_small - 1) as u32 },
            },
            "derived: divisor propagated through order requirement",
        ));
        changed = true;
        let before = spec.constraints.clone();
        if !spec.constraints.require_forced_divisor(&q) {
            let conflict = spec.constraints.conflict().expect("merge failed").clone();
            let mut cert_frame = frame.clone();
            cert_frame.constraints = before;
            return Err(PruneCertificate {
                spec: cert_frame,
                outcome: RuleOutcome::OrderContradiction {
                    q,
                    carrier: Some((p.clone(), requirement.clone())),
                    conflict: Some(conflict),
                },
                facts,
            });
        }
    }
    if changed {
        if let Err(conflict) = spec.d_floor() {
            return Err(PruneCertificate {
                spec: frame,
                outcome: RuleOutcome::OrderContradiction {
                    q: requirement.clone(),
                    carrier: Some((p.clone(), requirement.clone())),
                    conflict: Some(conflict),
                },
                facts,
            });
        }
    }
    Ok(changed)
}

/// Order-based elimination seeded by an established requirement
/// `m | a + 1` for a free exponent of `p`. Empty when the propagated
/// divisors stay compatible (or nothing factors within budget).
pub fn order_contradiction(
    spec: &SubtreeSpec,
    p: &Natural,
    requirement: &Natural,
    ctx: &mut PruneContext,
) -> Option<PruneCertificate> {
    let mut scratch = spec.clone();
    propagate_requirement(&mut scratch, p, requirement, ctx).err()
}

/// The full deterministic pipeline, cheapest rule first: bounds, forced
/// divisors, order analysis (including derived beta zeros), quadratic
/// residues. Returns either a certificate or the enriched open frame.
pub fn apply_rules(
    spec: &SubtreeSpec,
    rules: &RuleSet,
    ctx: &mut PruneContext,
) -> Result<SubtreeSpec, PruneCertificate> {
    let mut cur = spec.clone();
    if cur.constraints.is_contradictory() {
        let conflict = cur.constraints.conflict().expect("contradictory").clone();
        return Err(PruneCertificate {
            spec: cur,
            outcome: RuleOutcome::ForcedDivisorContradiction { conflict },
            facts: Vec::new(),
        });
    }

    if rules.bound {
        if let Some(cert) = prune_by_bounds(&cur).map_err(|conflict| PruneCertificate {
            spec: cur.clone(),
            outcome: RuleOutcome::ForcedDivisorContradiction { conflict },
            facts: Vec::new(),
        })? {
            return Err(cert);
        }
    }

    if rules.forced_divisor {
        let (enriched, _facts) = forced_divisors(&cur, ctx)?;
        cur = enriched;
    }

    if rules.order && cur.pending.is_none() {
        cur = order_stage(cur, ctx)?;
    }

    if rules.quadratic_residue && cur.pending.is_none() {
        qr_stage(&cur, ctx)?;
    }

    // Derived constraints may have pushed the D floor past the window.
    if rules.bound {
        if let Some(cert) = prune_by_bounds(&cur).map_err(|conflict| PruneCertificate {
            spec: cur.clone(),
            outcome: RuleOutcome::ForcedDivisorContradiction { conflict },
            facts: Vec::new(),
        })? {
            return Err(cert);
        }
    }
    Ok(cur)
}

/// Order stage: derive beta zeros (a support prime that cannot divide
/// sigma(n) cannot divide d), check every forced divisor has a possible
/// carrier, and propagate unique-carrier requirements. Runs to a fixpoint
/// with a small round cap.
fn order_stage(
    mut cur: SubtreeSpec,
    ctx: &mut PruneContext,
) -> Result<SubtreeSpec, PruneCertificate> {
    for _round in 0..4 {
        let mut changed = false;

        // beta derivation: p_i | d would force p_i | sigma(n).
        for i in 0..cur.positions.len() {
            if cur.positions[i].beta != BetaSupport::Unknown {
                continue;
            }
            let p = cur.positions[i].prime.clone();
            if classify_carriers(&p, &cur, ctx) == Carrier::Impossible {
                cur.positions[i].beta = BetaSupport::KnownZero;
                let exp = cur.positions[i].status.min();
                let before = cur.constraints.clone();
                if !cur.constraints.require_divides(&p, exp) {
                    let conflict = cur.constraints.conflict().expect("merge failed").clone();
                    cur.constraints = before;
                    return Err(PruneCertificate {
                        spec: cur.clone(),
                        outcome: RuleOutcome::OrderContradiction {
                            q: p.clone(),
                            carrier: None,
                            conflict: Some(conflict),
                        },
                        facts: beta_zero_facts(&p, &cur, ctx),
                    });
                }
                changed = true;
            }
        }

        // forced divisors must be carried somewhere.
        for q in cur.constraints.forced_divisors().to_vec() {
            match classify_carriers(&q, &cur, ctx) {
                Carrier::Impossible => {
                    return Err(PruneCertificate {
                        spec: cur.clone(),
                        outcome: RuleOutcome::OrderContradiction {
                            q: q.clone(),
                            carrier: None,
                            conflict: None,
                        },
                        facts: beta_zero_facts(&q, &cur, ctx),
                    });
                }
                Carrier::Unique { index, requirement } => {
                    let p = cur.positions[index].prime.clone();
                    if propagate_requirement(&mut cur, &p, &requirement, ctx)? {
                        changed = true;
                    }
                }
                _ => {}
            }
        }

        if !changed {
            break;
        }
    }
    Ok(cur)
}

/// Elementary order facts explaining why no position carries `q`.
fn beta_zero_facts(q: &Natural, spec: &SubtreeSpec, ctx: &mut PruneContext) -> Vec<FactRecord> {
    let mut facts = Vec::new();
    if let Some(f) = provenance_fact(q, spec, ctx) {
        facts.push(f);
    }
    for pos in &spec.positions {
        if (&pos.prime % q).is_zero() || (&pos.prime % q).is_one() {
            continue;
        }
        if let Some(h) = ctx.order(&pos.prime, q) {
            facts.push(FactRecord::new(
                FactPayload::Order { base: pos.prime.clone(), modulus: q.clone(), value: h },
                "derived: carrier analysis",
            ));
        }
    }
    facts
}

/// The sigma divisibility that introduced `q` as a forced divisor, when it
/// came from a fixed prime power of this frame.
fn provenance_fact(q: &Natural, spec: &SubtreeSpec, ctx: &mut PruneContext) -> Option<FactRecord> {
    for pos in &spec.positions {
        let ExponentStatus::Fixed(a) = pos.status else { continue };
        let (primes, _) = ctx.sigma_prime_factors(&pos.prime, a);
        if primes.contains(q) {
            return Some(FactRecord::new(
                FactPayload::Divides {
                    q: q.clone(),
                    expr: Expr::SigmaPp { p: pos.prime.clone(), a },
                },
                "derived: forced divisor of 2D-1",
            ));
        }
    }
    None
}

/// QR stage: every forced divisor q of 2D-1 divides sigma(n) = 2n - d, so
/// the Legendre product over d's parity vector must hit (2/q). An empty
/// admissible set prunes the frame.
fn qr_stage(cur: &SubtreeSpec, ctx: &mut PruneContext) -> Result<(), PruneCertificate> {
    let primes: Vec<Natural> = cur.positions.iter().map(|pos| pos.prime.clone()).collect();
    for q in cur.constraints.forced_divisors() {
        if primes.iter().any(|p| (p % q).is_zero()) {
            continue; // rule requires q outside the support
        }
        let Some(target) = ctx.legendre_cached(&nat(2), q) else { continue };
        let symbols: Option<Vec<i8>> = primes
            .iter()
            .map(|p| ctx.legendre_cached(p, q))
            .collect();
        let Some(symbols) = symbols else { continue };
        if symbols.contains(&0) {
            continue;
        }
        let viable = (0u32..(1 << primes.len())).any(|mask| {
            let mut prod = 1i8;
            for (i, s) in symbols.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    // beta known zero pins this parity to 0
                    if cur.positions[i].beta == BetaSupport::KnownZero {
                        return false;
                    }
                    prod *= s;
                }
            }
            prod == target
        });
        if !viable {
            let mut facts = Vec::new();
            if let Some(f) = provenance_fact(q, cur, ctx) {
                facts.push(f);
            }
            facts.push(FactRecord::new(
                FactPayload::Legendre { a: BigInt::from(2), q: q.clone(), value: target },
                "derived: QR elimination target",
            ));
            for (p, s) in primes.iter().zip(symbols.iter()) {
                facts.push(FactRecord::new(
                    FactPayload::Legendre {
                        a: BigInt::from(p.clone()),
                        q: q.clone(),
                        value: *s,
                    },
                    "derived: QR elimination factor",
                ));
            }
            return Err(PruneCertificate {
                spec: cur.clone(),
                outcome: RuleOutcome::QuadraticResidueContradiction {
                    q: q.clone(),
                    target,
                    symbols,
                },
                facts,
            });
        }
    }
    Ok(())
}

/// Can some position of the frame host `q | sigma(p^a)` for an admissible
/// exponent? Used when re-checking no-carrier eliminations.
pub fn forced_divisor_has_carrier(
    spec: &SubtreeSpec,
    q: &Natural,
    ctx: &mut PruneContext,
) -> bool {
    !matches!(classify_carriers(q, spec, ctx), Carrier::Impossible)
}

/// Re-derives a certificate's decisive comparison from its own frame and
/// re-verifies every embedded fact. Does not trust any stored value.
pub fn replay_certificate(
    cert: &PruneCertificate,
    ctx: &mut PruneContext,
) -> Result<(), ReplayError> {
    for fact in &cert.facts {
        let (verified, actual) = crate::facts::verify_fact(fact);
        if verified.status != crate::facts::Status::Confirmed {
            return Err(ReplayError::FactRefuted { fact: crate::facts::to_line(fact), actual });
        }
    }
    let ok = match &cert.outcome {
        RuleOutcome::BoundAboveTwo { lower } => match bound_interval(&cert.spec) {
            Ok((lo, _)) => lo == *lower && lo > rat_u64(2, 1),
            Err(_) => false,
        },
        RuleOutcome::BoundBelowTwo { upper } => match bound_interval(&cert.spec) {
            Ok((_, hi)) => hi == *upper && hi < rat_u64(2, 1),
            Err(_) => false,
        },
        RuleOutcome::ForcedDivisorContradiction { conflict } => {
            replay_conflict(&cert.spec, conflict)
        }
        RuleOutcome::OrderContradiction { q, carrier, conflict } => match (carrier, conflict) {
            (Some((p, m)), _) => order_contradiction(&cert.spec, p, m, ctx)
                .is_some_and(|again| again.outcome == cert.outcome),
            (None, Some(conflict)) => replay_conflict(&cert.spec, conflict),
            (None, None) => !forced_divisor_has_carrier(&cert.spec, q, ctx),
        },
        RuleOutcome::QuadraticResidueContradiction { q, target, symbols } => {
            replay_qr(&cert.spec, q, *target, symbols, ctx)
        }
    };
    if ok {
        Ok(())
    } else {
        Err(ReplayError::NotReproduced { rule: cert.outcome.rule_name() })
    }
}

/// The stored conflict must re-manifest against the frame's constraints.
fn replay_conflict(spec: &SubtreeSpec, conflict: &ConstraintConflict) -> bool {
    match conflict {
        ConstraintConflict::ResidueClash { residue_b, modulus_b, .. } => {
            let mut scratch = spec.constraints.clone();
            !scratch.require_residue(residue_b, modulus_b)
        }
        ConstraintConflict::BoundClash { .. } => spec.d_floor().is_err(),
    }
}

fn replay_qr(
    spec: &SubtreeSpec,
    q: &Natural,
    target: i8,
    symbols: &[i8],
    ctx: &mut PruneContext,
) -> bool {
    if spec.pending.is_some() || symbols.len() != spec.positions.len() {
        return false;
    }
    if !spec.constraints.forced_divisors().contains(q) {
        return false;
    }
    if ctx.legendre_cached(&nat(2), q) != Some(target) {
        return false;
    }
    for (pos, &s) in spec.positions.iter().zip(symbols) {
        if s == 0 || ctx.legendre_cached(&pos.prime, q) != Some(s) {
            return false;
        }
    }
    // no parity vector (respecting known-zero betas) reaches the target
    !(0u32..(1 << symbols.len())).any(|mask| {
        let mut prod = 1i8;
        for (i, &s) in symbols.iter().enumerate() {
            if mask >> i & 1 == 1 {
                if spec.positions[i].beta == BetaSupport::KnownZero {
                    return false;
                }
                prod *= s;
            }
        }
        prod == target
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayError {
    NotReproduced { rule: &'static str },
    FactRefuted { fact: alloc::string::String, actual: alloc::string::String },
}

impl core::fmt::Display for ReplayError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ReplayError::NotReproduced { rule } => {
                write!(f, "stored {rule} comparison does not re-derive from the frame")
            }
            ReplayError::FactRefuted { fact, actual } => {
                write!(f, "embedded fact refuted: {fact} ({actual})")
            }
        }
    }
}
