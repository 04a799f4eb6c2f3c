//! Brute-force ground truth: a segmented divisor-accumulation sieve that
//! enumerates every deficient-perfect number up to a limit, annotated with
//! omega and parity. Entirely independent of the factorization engine; the
//! two are cross-checked against each other.

use std::sync::Mutex;

use defiperf_core::nt::{factorize, FactorBudget};
use defiperf_core::search::SearchReport;
use num_traits::ToPrimitive;

/// Values per sieve segment.
pub const SEGMENT: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveEntry {
    pub n: u64,
    pub d: u64,
    pub codivisor: u64,
    pub omega: u32,
    pub is_odd: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Filters {
    pub odd_only: bool,
    pub omega_equals: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SieveResult {
    pub limit: u64,
    pub filters: Filters,
    /// Ascending by n, duplicate-free.
    pub entries: Vec<SieveEntry>,
}

/// Worker count: `DEFIPERF_THREADS` when set, else available parallelism
/// capped at 8.
pub fn thread_count() -> usize {
    std::env::var("DEFIPERF_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(8)
        })
}

/// sigma(n) for every n in [lo, hi) by divisor accumulation.
fn segment_sigma(lo: u64, hi: u64) -> Vec<u64> {
    let len = (hi - lo) as usize;
    let mut sigma = vec![0u64; len];
    for d in 1..hi {
        let first = if d >= lo { d } else { lo.div_ceil(d) * d };
        let mut m = first;
        while m < hi {
            sigma[(m - lo) as usize] += d;
            m += d;
        }
    }
    sigma
}

/// omega(n) for every n in [lo, hi) by marking prime multiples.
fn segment_omega(lo: u64, hi: u64, primes: &[u64]) -> Vec<u8> {
    let len = (hi - lo) as usize;
    let mut omega = vec![0u8; len];
    for &p in primes {
        if p >= hi {
            break;
        }
        let first = if p >= lo { p } else { lo.div_ceil(p) * p };
        let mut m = first;
        while m < hi {
            omega[(m - lo) as usize] += 1;
            m += p;
        }
    }
    omega
}

fn primes_up_to(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            primes.push(p as u64);
            let mut m = p * p;
            while m <= n {
                composite[m] = true;
                m += p;
            }
        }
    }
    primes
}

/// Independent recomputation of sigma by trial divisor enumeration.
fn sigma_by_trial(n: u64) -> u64 {
    let mut total = 0u64;
    let mut d = 1u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            total += d;
            let q = n / d;
            if q != d {
                total += q;
            }
        }
        d += 1;
    }
    total
}

fn scan_segment(lo: u64, hi: u64, primes: &[u64]) -> Vec<SieveEntry> {
    let sigma = segment_sigma(lo, hi);
    let omega = segment_omega(lo, hi, primes);
    let mut found = Vec::new();
    for n in lo.max(2)..hi {
        let s = sigma[(n - lo) as usize];
        let twice = 2 * n;
        if s >= twice {
            continue;
        }
        let d = twice - s;
        if d < n && n % d == 0 {
            // each entry is re-derived by trial division, independent of
            // the sieve array
            assert_eq!(sigma_by_trial(n), s, "sieve cell disagrees at {n}");
            found.push(SieveEntry {
                n,
                d,
                codivisor: n / d,
                omega: u32::from(omega[(n - lo) as usize]),
                is_odd: n % 2 == 1,
            });
        }
    }
    found
}

/// Runs `f` over each segment's sigma block, in segment order. Exposed for
/// spot-agreement tests against the multiplicative route.
pub fn for_each_sigma_segment(limit: u64, mut f: impl FnMut(u64, &[u64])) {
    let mut lo = 1u64;
    while lo <= limit {
        let hi = (lo + SEGMENT).min(limit + 1);
        f(lo, &segment_sigma(lo, hi));
        lo = hi;
    }
}

/// Materialized sigma table, `sigma[n]` valid for `1 <= n <= limit`.
pub fn sieve_sigma(limit: u64) -> Vec<u64> {
    assert!(limit >= 2, "sieve limit must be at least 2");
    let mut out = vec![0u64; (limit + 1) as usize];
    for_each_sigma_segment(limit, |lo, block| {
        out[lo as usize..lo as usize + block.len()].copy_from_slice(block);
    });
    out
}

/// All deficient-perfect n <= limit, filtered as requested. Segments are
/// processed by a pool of workers and merged in segment order, so output
/// is deterministic regardless of thread count.
pub fn enumerate_dp(limit: u64, filters: Filters) -> SieveResult {
    assert!(limit >= 2, "sieve limit must be at least 2");
    let primes = primes_up_to(limit);
    let seg_count = limit.div_ceil(SEGMENT) as usize;
    let results: Mutex<Vec<Option<Vec<SieveEntry>>>> = Mutex::new(vec![None; seg_count]);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let workers = thread_count().min(seg_count.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let seg = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if seg >= seg_count {
                    break;
                }
                let lo = (seg as u64 * SEGMENT).max(1);
                let hi = ((seg as u64 + 1) * SEGMENT).min(limit + 1);
                let found = scan_segment(lo, hi, &primes);
                results.lock().unwrap()[seg] = Some(found);
            });
        }
    });
    let mut entries: Vec<SieveEntry> = results
        .into_inner()
        .unwrap()
        .into_iter()
        .flat_map(|seg| seg.expect("all segments processed"))
        .collect();
    entries.retain(|e| {
        (!filters.odd_only || e.is_odd)
            && filters.omega_equals.is_none_or(|k| e.omega == k)
    });
    SieveResult { limit, filters, entries }
}

/// Outcome of comparing an engine report against the sieve on the overlap
/// of their domains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossCheck {
    pub matched: usize,
    /// True when the domains do not overlap at all.
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossCheckMismatch {
    pub only_engine: Vec<u64>,
    pub only_sieve: Vec<u64>,
}

impl std::fmt::Display for CrossCheckMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "witness sets differ: engine-only {:?}, sieve-only {:?}",
            self.only_engine, self.only_sieve
        )
    }
}

/// Exact set comparison of engine and sieve witnesses over the shape
/// domain they share: n within both caps, shape within the engine grid.
pub fn cross_check(
    report: &SearchReport,
    sieve: &SieveResult,
) -> Result<CrossCheck, CrossCheckMismatch> {
    let cfg = &report.config;
    let in_engine_domain = |n: u64| -> bool {
        if sieve.filters.odd_only && n.is_multiple_of(2) {
            return false;
        }
        let f = factorize(&n.into(), &FactorBudget::default());
        if !f.fully_factored() {
            return false;
        }
        let f = f.factors;
        f.omega() == cfg.omega
            && f.factors().iter().all(|pp| {
                let p = pp.prime.to_u64().unwrap_or(u64::MAX);
                let grid_ok = if cfg.odd_only {
                    pp.exp >= 2 && pp.exp % 2 == 0 && pp.exp <= cfg.exp_max
                } else {
                    pp.exp >= 1 && pp.exp <= cfg.exp_max
                };
                let p_min = if cfg.odd_only { 3 } else { 2 };
                grid_ok && p >= p_min && p <= cfg.prime_max
            })
            && cfg.value_max.as_ref().is_none_or(|cap| &num_bigint::BigUint::from(n) <= cap)
    };

    let engine: Vec<u64> = report
        .witnesses
        .iter()
        .filter(|w| {
            (!sieve.filters.odd_only || w.n().is_odd())
                && sieve
                    .filters
                    .omega_equals
                    .is_none_or(|k| w.n().omega() as u32 == k)
        })
        .filter_map(|w| w.n().value().to_u64())
        .filter(|&n| n <= sieve.limit)
        .collect();
    let sieve_side: Vec<u64> = sieve
        .entries
        .iter()
        .map(|e| e.n)
        .filter(|&n| in_engine_domain(n))
        .collect();

    let only_engine: Vec<u64> =
        engine.iter().copied().filter(|n| !sieve_side.contains(n)).collect();
    let only_sieve: Vec<u64> =
        sieve_side.iter().copied().filter(|n| !engine.contains(n)).collect();
    if only_engine.is_empty() && only_sieve.is_empty() {
        Ok(CrossCheck { matched: engine.len(), vacuous: engine.is_empty() && sieve_side.is_empty() })
    } else {
        Err(CrossCheckMismatch { only_engine, only_sieve })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_first_ten() {
        let s = sieve_sigma(10);
        assert_eq!(&s[1..=10], &[1, 3, 4, 7, 6, 12, 8, 15, 13, 18]);
    }

    #[test]
    fn small_witness_list() {
        let r = enumerate_dp(100, Filters::default());
        let ns: Vec<u64> = r.entries.iter().map(|e| e.n).collect();
        // exhaustive trial-division check computes the same list below
        let mut expect = Vec::new();
        for n in 2..=100u64 {
            let s = sigma_by_trial(n);
            if s < 2 * n {
                let d = 2 * n - s;
                if d < n && n % d == 0 {
                    expect.push(n);
                }
            }
        }
        assert_eq!(ns, expect);
        assert!(ns.starts_with(&[2, 4, 8, 10, 16, 32, 44, 64]));
    }

    #[test]
    fn entries_carry_consistent_annotations() {
        let r = enumerate_dp(3000, Filters::default());
        for e in &r.entries {
            assert_eq!(e.n % e.d, 0);
            assert_eq!(e.codivisor, e.n / e.d);
            assert_eq!(e.is_odd, e.n % 2 == 1);
            let f = factorize(&e.n.into(), &FactorBudget::default());
            assert_eq!(f.factors.omega() as u32, e.omega, "omega of {}", e.n);
        }
        let ns: Vec<u64> = r.entries.iter().map(|e| e.n).collect();
        let mut sorted = ns.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(ns, sorted);
    }

    #[test]
    fn filters_apply() {
        let all = enumerate_dp(10_000, Filters::default());
        let odd = enumerate_dp(10_000, Filters { odd_only: true, omega_equals: None });
        assert!(odd.entries.iter().all(|e| e.is_odd));
        assert!(odd.entries.len() <= all.entries.len());
        let om2 = enumerate_dp(10_000, Filters { odd_only: false, omega_equals: Some(2) });
        assert!(om2.entries.iter().all(|e| e.omega == 2));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let base = enumerate_dp((1 << 21) + 17, Filters::default());
        std::env::set_var("DEFIPERF_THREADS", "1");
        let single = enumerate_dp((1 << 21) + 17, Filters::default());
        std::env::remove_var("DEFIPERF_THREADS");
        assert_eq!(base, single);
    }
}
