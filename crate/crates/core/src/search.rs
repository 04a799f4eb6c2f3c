//! Depth-first branch-and-bound enumeration over factorization shapes.
//!
//! Shapes are visited primes-outer, exponents-inner, smallest prime first:
//! choose `p_1 < ... < p_omega` from the pool, then fix exponents left to
//! right. At every node a [`SubtreeSpec`] frame is built and the prune
//! pipeline consulted; surviving leaves are evaluated exactly. Bound
//! prunes extend monotonically (a frame dead at prime `q` stays dead for
//! every larger candidate, a frame dead at exponent `a` stays dead for
//! larger exponents on the same side), which is what keeps wide searches
//! tractable.
//!
//! Accounting is exact: every leaf of the configured grid is either
//! evaluated, covered by a prune, or excluded by the value cap, and the
//! report carries all three tallies plus the grid total.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::One;

use crate::nt::{is_prime_u64, nat, FactorBudget, Factorization, Natural, NtError, PrimePower};
use crate::prune::{
    apply_rules, prune_by_bounds, BetaSupport, ExponentStatus, PendingTail, Position,
    PruneCertificate, PruneContext, RuleSet, SubtreeSpec,
};
use crate::witness::{dp_witness, DpWitness};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    /// Number of distinct primes of every candidate.
    pub omega: usize,
    /// Restrict to odd n: odd primes, even exponents, prune rules active.
    pub odd_only: bool,
    /// Optional per-position lower bounds on the primes.
    pub prime_min: Vec<u64>,
    /// Largest prime considered.
    pub prime_max: u64,
    /// Largest exponent per prime (highest even value used in odd mode).
    pub exp_max: u32,
    /// Optional cap on the candidate value n.
    pub value_max: Option<Natural>,
    /// Optional restriction of the two smallest primes to given pairs.
    pub pair_presets: Option<Vec<(u64, u64)>>,
    pub rules: RuleSet,
    /// Stop after this many leaf evaluations (partial report).
    pub max_leaves: Option<u64>,
    /// Seed for speculative factorizations inside prune rules.
    pub seed: u64,
    /// Record a trace line per leaf and per prune.
    pub trace: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            omega: 4,
            odd_only: true,
            prime_min: Vec::new(),
            prime_max: 300,
            exp_max: 16,
            value_max: None,
            pair_presets: None,
            rules: RuleSet::ALL,
            max_leaves: None,
            seed: 1,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    OmegaZero,
    NoExponentGrid,
    NoPrimes,
    BadPreset(u64, u64),
}

impl core::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ConfigError::OmegaZero => write!(f, "omega must be at least 1"),
            ConfigError::NoExponentGrid => write!(f, "exponent cap admits no exponent"),
            ConfigError::NoPrimes => write!(f, "prime cap admits no prime"),
            ConfigError::BadPreset(a, b) => write!(f, "preset pair ({a}, {b}) is not valid"),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.omega == 0 {
            return Err(ConfigError::OmegaZero);
        }
        if self.exponent_grid().is_empty() {
            return Err(ConfigError::NoExponentGrid);
        }
        if self.prime_pool().len() < self.omega {
            return Err(ConfigError::NoPrimes);
        }
        if let Some(pairs) = &self.pair_presets {
            if self.omega < 2 {
                return Err(ConfigError::OmegaZero);
            }
            for &(a, b) in pairs {
                if a >= b || !is_prime_u64(a) || !is_prime_u64(b) {
                    return Err(ConfigError::BadPreset(a, b));
                }
            }
        }
        Ok(())
    }

    /// Admissible exponents per prime: even values only in odd mode.
    pub fn exponent_grid(&self) -> Vec<u32> {
        if self.odd_only {
            (2..=self.exp_max).step_by(2).collect()
        } else {
            (1..=self.exp_max).collect()
        }
    }

    /// Ascending candidate primes.
    pub fn prime_pool(&self) -> Vec<u64> {
        let start = if self.odd_only { 3 } else { 2 };
        (start..=self.prime_max).filter(|&p| is_prime_u64(p)).collect()
    }

    fn min_prime_for(&self, position: usize) -> u64 {
        let floor = if self.odd_only { 3 } else { 2 };
        self.prime_min.get(position).copied().unwrap_or(0).max(floor)
    }
}

/// Everything one run produced, with exact leaf accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchReport {
    pub config: SearchConfig,
    /// Witnesses ascending by n.
    pub witnesses: Vec<DpWitness>,
    /// Certificates in deterministic frame order.
    pub certificates: Vec<PruneCertificate>,
    pub leaves_evaluated: u64,
    pub subtrees_pruned: u64,
    /// Leaves covered by prunes (including monotone extensions of bound
    /// prunes).
    pub leaves_pruned: u128,
    /// Leaves excluded by the value cap.
    pub leaves_skipped_value_cap: u128,
    /// Size of the configured shape grid.
    pub total_leaves: u128,
    /// False when a leaf or wall-clock budget stopped the run early.
    pub complete: bool,
    pub engine_version: String,
    pub seed: u64,
    pub trace: Vec<String>,
}

impl SearchReport {
    /// Evaluated, pruned and cap-skipped leaves cover the grid exactly
    /// (only claimed for complete runs).
    pub fn counts_consistent(&self) -> bool {
        !self.complete
            || u128::from(self.leaves_evaluated) + self.leaves_pruned + self.leaves_skipped_value_cap
                == self.total_leaves
    }
}

/// Evaluates a single fully specified shape.
pub fn evaluate_leaf(primes: &[u64], exponents: &[u32]) -> Result<Option<DpWitness>, NtError> {
    let pairs: Vec<(u64, u32)> = primes.iter().copied().zip(exponents.iter().copied()).collect();
    let f = Factorization::from_u64_pairs(&pairs)?;
    Ok(dp_witness(&f))
}

/// Runs the full enumeration.
pub fn enumerate(config: &SearchConfig) -> Result<SearchReport, ConfigError> {
    enumerate_with_stop(config, &mut || false)
}

/// Runs the enumeration with an external stop signal (wall-clock budgets
/// live in the caller). A triggered stop yields a partial report flagged
/// incomplete.
pub fn enumerate_with_stop(
    config: &SearchConfig,
    should_stop: &mut dyn FnMut() -> bool,
) -> Result<SearchReport, ConfigError> {
    config.validate()?;
    let mut driver = Driver::new(config, should_stop);
    driver.run();
    Ok(driver.finish())
}

struct Driver<'a> {
    cfg: &'a SearchConfig,
    pool: Vec<u64>,
    grid: Vec<u32>,
    /// ways[j][i]: tuples filling positions j.. from pool[i..] (ignoring
    /// presets, which are layered on top for positions 0 and 1).
    ways: Vec<Vec<u128>>,
    ctx: PruneContext,
    should_stop: &'a mut dyn FnMut() -> bool,
    stopped: bool,
    witnesses: Vec<DpWitness>,
    certificates: Vec<PruneCertificate>,
    leaves_evaluated: u64,
    subtrees_pruned: u64,
    leaves_pruned: u128,
    leaves_skipped_value_cap: u128,
    trace: Vec<String>,
}

impl<'a> Driver<'a> {
    fn new(cfg: &'a SearchConfig, should_stop: &'a mut dyn FnMut() -> bool) -> Self {
        let pool = cfg.prime_pool();
        let grid = cfg.exponent_grid();
        let omega = cfg.omega;
        let mut ways = alloc::vec![alloc::vec![0u128; pool.len() + 1]; omega + 1];
        ways[omega] = alloc::vec![1u128; pool.len() + 1];
        for j in (0..omega).rev() {
            let min_p = cfg.min_prime_for(j);
            for i in (0..pool.len()).rev() {
                let take = if pool[i] >= min_p { ways[j + 1][i + 1] } else { 0 };
                ways[j][i] = ways[j][i + 1].saturating_add(take);
            }
        }
        Driver {
            cfg,
            pool,
            grid,
            ways,
            ctx: PruneContext::new(FactorBudget::quick(cfg.seed)),
            should_stop,
            stopped: false,
            witnesses: Vec::new(),
            certificates: Vec::new(),
            leaves_evaluated: 0,
            subtrees_pruned: 0,
            leaves_pruned: 0,
            leaves_skipped_value_cap: 0,
            trace: Vec::new(),
        }
    }

    fn leaves_per_tuple(&self) -> u128 {
        (self.grid.len() as u128).saturating_pow(self.cfg.omega as u32)
    }

    /// Tuples under choosing pool[t] at position j (preset-aware).
    fn tuples_under(&self, j: usize, t: usize, first_prime: Option<u64>) -> u128 {
        match (&self.cfg.pair_presets, j) {
            (Some(pairs), 0) => pairs
                .iter()
                .filter(|&&(a, _)| a == self.pool[t])
                .map(|&(_, b)| {
                    self.pool
                        .iter()
                        .position(|&p| p == b)
                        .filter(|&bi| bi > t && b >= self.cfg.min_prime_for(1))
                        .map_or(0, |bi| self.ways[2.min(self.cfg.omega)][bi + 1])
                })
                .sum(),
            (Some(pairs), 1) => {
                let p0 = first_prime.expect("position 1 has a first prime");
                if pairs.contains(&(p0, self.pool[t])) {
                    self.ways[2][t + 1]
                } else {
                    0
                }
            }
            _ => {
                if self.pool[t] >= self.cfg.min_prime_for(j) {
                    self.ways[j + 1][t + 1]
                } else {
                    0
                }
            }
        }
    }

    fn tuples_from(&self, j: usize, i: usize, first_prime: Option<u64>) -> u128 {
        if self.cfg.pair_presets.is_some() && j <= 1 {
            (i..self.pool.len()).map(|t| self.tuples_under(j, t, first_prime)).sum()
        } else {
            self.ways[j][i]
        }
    }

    fn total_leaves(&self) -> u128 {
        self.tuples_from(0, 0, None).saturating_mul(self.leaves_per_tuple())
    }

    fn run(&mut self) {
        let mut chosen: Vec<usize> = Vec::new();
        self.choose_prime(0, 0, &mut chosen);
    }

    fn check_stop(&mut self) -> bool {
        if self.stopped {
            return true;
        }
        if (self.should_stop)() {
            self.stopped = true;
        }
        self.stopped
    }

    /// Smallest completion value when positions 0..j hold `chosen` primes,
    /// position j takes pool[t], and the rest take the next pool primes.
    fn min_completion_value(&self, chosen: &[usize], t: usize) -> Natural {
        let e = self.grid[0];
        let mut v = Natural::one();
        for &idx in chosen {
            v *= nat(self.pool[idx]).pow(e);
        }
        let remaining = self.cfg.omega - chosen.len();
        for k in 0..remaining {
            match self.pool.get(t + k) {
                Some(&p) => v *= nat(p).pow(e),
                None => return v, // too few primes left; the branch dies anyway
            }
        }
        v
    }

    fn use_rules(&self) -> bool {
        self.cfg.odd_only && self.cfg.rules.any()
    }

    /// Frame for "position j takes pool[t], deeper positions pending".
    /// Built without re-validation: the driver constructs it canonical.
    fn prime_level_spec(&self, chosen: &[usize], t: usize) -> Option<SubtreeSpec> {
        let grid_min = self.grid[0];
        let grid_max = *self.grid.last().expect("nonempty grid");
        let mut positions: Vec<Position> = chosen
            .iter()
            .map(|&idx| Position {
                prime: nat(self.pool[idx]),
                status: ExponentStatus::Free { min: grid_min, max: grid_max },
                beta: BetaSupport::Unknown,
            })
            .collect();
        positions.push(Position {
            prime: nat(self.pool[t]),
            status: ExponentStatus::Free { min: grid_min, max: grid_max },
            beta: BetaSupport::Unknown,
        });
        let pending_count = self.cfg.omega - positions.len();
        let pending = if pending_count > 0 {
            let next = *self.pool.get(t + 1)?;
            Some(PendingTail {
                count: pending_count,
                prime_min: next,
                prime_max: self.cfg.prime_max,
                exp_min: grid_min,
                exp_max: grid_max,
            })
        } else {
            None
        };
        Some(SubtreeSpec {
            positions,
            pending,
            constraints: crate::prune::DConstraints::new(),
        })
    }

    fn choose_prime(&mut self, j: usize, from: usize, chosen: &mut Vec<usize>) {
        let leaves_per_tuple = self.leaves_per_tuple();
        let first_prime = chosen.first().map(|&i| self.pool[i]);
        for t in from..self.pool.len() {
            if self.check_stop() {
                return;
            }
            if self.pool.len() - t < self.cfg.omega - j {
                break; // not enough primes left
            }
            let tuples_here = self.tuples_under(j, t, first_prime);
            if tuples_here == 0 {
                continue;
            }
            // Value cap: the minimum completion grows with the candidate,
            // so the first overflow kills the whole rest of the level.
            if let Some(cap) = &self.cfg.value_max {
                if self.min_completion_value(chosen, t) > *cap {
                    let skipped = self.tuples_from(j, t, first_prime);
                    self.leaves_skipped_value_cap +=
                        skipped.saturating_mul(leaves_per_tuple);
                    break;
                }
            }
            // Bound check on the frame. An upper bound below 2 is monotone
            // in the candidate prime: everything from here on is dead.
            if self.use_rules() && self.cfg.rules.bound {
                if let Some(spec) = self.prime_level_spec(chosen, t) {
                    match prune_by_bounds(&spec) {
                        Ok(Some(cert)) => {
                            let below = matches!(
                                cert.outcome,
                                crate::prune::RuleOutcome::BoundBelowTwo { .. }
                            );
                            if self.cfg.trace {
                                self.trace.push(format!(
                                    "prune[{}] at prime level {}: {}",
                                    cert.outcome.rule_name(),
                                    self.pool[t],
                                    frame_label(&cert.spec),
                                ));
                            }
                            self.certificates.push(cert);
                            self.subtrees_pruned += 1;
                            if below {
                                let skipped = self.tuples_from(j, t, first_prime);
                                self.leaves_pruned += skipped.saturating_mul(leaves_per_tuple);
                                break;
                            } else {
                                self.leaves_pruned +=
                                    tuples_here.saturating_mul(leaves_per_tuple);
                                continue;
                            }
                        }
                        Ok(None) => {}
                        Err(_) => {} // no constraints exist yet; cannot happen
                    }
                }
            }
            if j + 1 == self.cfg.omega {
                let spec = self.prime_level_spec(chosen, t).expect("complete frame");
                self.assign_exponents(0, spec);
            } else {
                chosen.push(t);
                self.choose_prime(j + 1, t + 1, chosen);
                chosen.pop();
            }
            if self.stopped {
                return;
            }
        }
    }

    /// Exponent phase: positions 0..i of `spec` are fixed, the rest free.
    fn assign_exponents(&mut self, i: usize, spec: SubtreeSpec) {
        let deeper = (self.grid.len() as u128)
            .saturating_pow((self.cfg.omega - 1 - i) as u32);
        for rank in 0..self.grid.len() {
            let a = self.grid[rank];
            if self.check_stop() {
                return;
            }
            // Value cap: minimum completion grows with this exponent.
            if let Some(cap) = &self.cfg.value_max {
                let mut v = Natural::one();
                for (k, pos) in spec.positions.iter().enumerate() {
                    let e = match k.cmp(&i) {
                        core::cmp::Ordering::Less => pos.status.min(),
                        core::cmp::Ordering::Equal => a,
                        core::cmp::Ordering::Greater => self.grid[0],
                    };
                    v *= pos.prime.pow(e);
                }
                if v > *cap {
                    let values_left = (self.grid.len() - rank) as u128;
                    self.leaves_skipped_value_cap +=
                        values_left.saturating_mul(deeper);
                    break;
                }
            }
            let mut child = spec.clone();
            child.positions[i].status = ExponentStatus::Fixed(a);
            if self.use_rules() {
                match apply_rules(&child, &self.cfg.rules, &mut self.ctx) {
                    Err(cert) => {
                        let above = matches!(
                            cert.outcome,
                            crate::prune::RuleOutcome::BoundAboveTwo { .. }
                        );
                        if self.cfg.trace {
                            self.trace.push(format!(
                                "prune[{}]: {}",
                                cert.outcome.rule_name(),
                                frame_label(&cert.spec),
                            ));
                        }
                        self.certificates.push(cert);
                        self.subtrees_pruned += 1;
                        self.leaves_pruned += deeper;
                        if above {
                            // larger exponents only push the lower bound higher
                            let values_left = (self.grid.len() - rank - 1) as u128;
                            self.leaves_pruned += values_left.saturating_mul(deeper);
                            break;
                        }
                        continue;
                    }
                    Ok(enriched) => child = enriched,
                }
            }
            if i + 1 == self.cfg.omega {
                self.evaluate(&child);
            } else {
                self.assign_exponents(i + 1, child);
            }
            if self.stopped {
                return;
            }
        }
    }

    fn evaluate(&mut self, spec: &SubtreeSpec) {
        let parts: Vec<PrimePower> = spec
            .positions
            .iter()
            .map(|pos| PrimePower {
                prime: pos.prime.clone(),
                exp: pos.status.min(),
            })
            .collect();
        let f = Factorization::from_parts_unchecked(parts);
        if let Some(cap) = &self.cfg.value_max {
            if f.value() > *cap {
                self.leaves_skipped_value_cap += 1;
                return;
            }
        }
        self.leaves_evaluated += 1;
        let found = dp_witness(&f);
        if self.cfg.trace {
            self.trace.push(match &found {
                Some(w) => format!("leaf {} -> witness d={}", f, w.deficient_divisor()),
                None => format!("leaf {} -> none", f),
            });
        }
        if let Some(w) = found {
            self.witnesses.push(w);
        }
        if self.cfg.max_leaves.is_some_and(|cap| self.leaves_evaluated >= cap) {
            self.stopped = true;
        }
    }

    fn finish(mut self) -> SearchReport {
        let total = self.total_leaves();
        self.witnesses.sort_by_key(|w| w.n().value());
        self.certificates.sort_by_key(|a| frame_key(&a.spec));
        SearchReport {
            config: self.cfg.clone(),
            witnesses: self.witnesses,
            certificates: self.certificates,
            leaves_evaluated: self.leaves_evaluated,
            subtrees_pruned: self.subtrees_pruned,
            leaves_pruned: self.leaves_pruned,
            leaves_skipped_value_cap: self.leaves_skipped_value_cap,
            total_leaves: total,
            complete: !self.stopped,
            engine_version: String::from(crate::ENGINE_VERSION),
            seed: self.cfg.seed,
            trace: self.trace,
        }
    }
}

fn frame_key(spec: &SubtreeSpec) -> (Vec<(Natural, u32, u32)>, u64, usize) {
    let positions = spec
        .positions
        .iter()
        .map(|p| (p.prime.clone(), p.status.min(), p.status.max()))
        .collect();
    let tail_min = spec.pending.as_ref().map_or(0, |t| t.prime_min);
    let tail_count = spec.pending.as_ref().map_or(0, |t| t.count);
    (positions, tail_min, tail_count)
}

fn frame_label(spec: &SubtreeSpec) -> String {
    let mut out = String::new();
    for (i, p) in spec.positions.iter().enumerate() {
        if i > 0 {
            out.push('*');
        }
        match p.status {
            ExponentStatus::Fixed(a) => out.push_str(&format!("{}^{}", p.prime, a)),
            ExponentStatus::Free { min, max } => {
                out.push_str(&format!("{}^[{},{}]", p.prime, min, max))
            }
        }
    }
    if let Some(tail) = &spec.pending {
        out.push_str(&format!(" (+{} primes >= {})", tail.count, tail.prime_min));
    }
    out
}

/// Re-verifies a report: every witness must satisfy the defining identity
/// and every certificate must re-derive from its own frame.
pub fn replay(report: &SearchReport) -> Result<(), ReplayFailure> {
    for w in &report.witnesses {
        match w.verify_eq1() {
            Ok(true) => {}
            Ok(false) => {
                return Err(ReplayFailure::Witness {
                    n: format!("{}", w.n()),
                    reason: String::from("(2D-1)d identity fails"),
                })
            }
            Err(e) => {
                return Err(ReplayFailure::Witness {
                    n: format!("{}", w.n()),
                    reason: format!("{e}"),
                })
            }
        }
    }
    let mut ctx = PruneContext::new(FactorBudget::quick(report.seed));
    for (i, cert) in report.certificates.iter().enumerate() {
        crate::prune::replay_certificate(cert, &mut ctx).map_err(|e| {
            ReplayFailure::Certificate { index: i, reason: format!("{e}") }
        })?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayFailure {
    Witness { n: String, reason: String },
    Certificate { index: usize, reason: String },
}

impl core::fmt::Display for ReplayFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ReplayFailure::Witness { n, reason } => write!(f, "witness {n}: {reason}"),
            ReplayFailure::Certificate { index, reason } => {
                write!(f, "certificate #{index}: {reason}")
            }
        }
    }
}

/// Exhaustively evaluates every completion of each certificate's frame
/// (up to `completion_cap` completions per frame); a surviving witness
/// consistent with the frame's constraints disproves soundness.
pub fn audit_certificates(
    report: &SearchReport,
    completion_cap: u128,
) -> Result<AuditSummary, AuditFailure> {
    let pool = report.config.prime_pool();
    let mut audited = 0u64;
    let mut skipped = 0u64;
    for (index, cert) in report.certificates.iter().enumerate() {
        let count = cert.spec.completion_count(&pool);
        if count > completion_cap {
            skipped += 1;
            continue;
        }
        let mut offending: Option<String> = None;
        cert.spec.for_each_completion(&pool, &mut |f| {
            if offending.is_some() {
                return;
            }
            if let Some(w) = dp_witness(f) {
                if cert.spec.witness_consistent(&w) {
                    offending = Some(format!("{f}"));
                }
            }
        });
        if let Some(n) = offending {
            return Err(AuditFailure { index, n });
        }
        audited += 1;
    }
    Ok(AuditSummary { audited, skipped })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditSummary {
    pub audited: u64,
    pub skipped: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditFailure {
    pub index: usize,
    pub n: String,
}

impl core::fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "certificate #{} wrongly prunes witness-bearing {}", self.index, self.n)
    }
}
