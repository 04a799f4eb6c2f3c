//! Set-equality check of the enumerator against a brute-force scan: over a
//! small cap grid, the engine must find exactly the witnesses a direct
//! divisor-sum sweep finds among the same numbers — with pruning on, off,
//! and per-rule.

use defiperf_core::nt::nat;
use defiperf_core::search::{enumerate, SearchConfig};
use defiperf_core::prune::RuleSet;
use num_traits::ToPrimitive;

fn sigma_by_trial(n: u64) -> u64 {
    let mut s = 0;
    let mut d = 1u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            s += d;
            if d != n / d {
                s += n / d;
            }
        }
        d += 1;
    }
    s
}

/// Witnesses among n <= cap whose shape fits the config grid.
fn brute_witnesses(cap: u64, cfg: &SearchConfig) -> Vec<u64> {
    let mut out = Vec::new();
    'outer: for n in 2..=cap {
        if cfg.odd_only && n % 2 == 0 {
            continue;
        }
        // factor by trial division (independent of the engine's factorizer)
        let mut m = n;
        let mut shape: Vec<(u64, u32)> = Vec::new();
        let mut p = 2u64;
        while p * p <= m {
            if m % p == 0 {
                let mut e = 0;
                while m % p == 0 {
                    m /= p;
                    e += 1;
                }
                shape.push((p, e));
            }
            p += 1;
        }
        if m > 1 {
            shape.push((m, 1));
        }
        if shape.len() != cfg.omega {
            continue;
        }
        for &(p, e) in &shape {
            let min_p = if cfg.odd_only { 3 } else { 2 };
            let grid_ok = if cfg.odd_only { e >= 2 && e % 2 == 0 } else { e >= 1 };
            if p < min_p || p > cfg.prime_max || !grid_ok || e > cfg.exp_max {
                continue 'outer;
            }
        }
        let s = sigma_by_trial(n);
        if s < 2 * n {
            let d = 2 * n - s;
            if d < n && n % d == 0 {
                out.push(n);
            }
        }
    }
    out
}

fn engine_witnesses(cfg: &SearchConfig) -> Vec<u64> {
    let report = enumerate(cfg).unwrap();
    assert!(report.complete);
    assert!(report.counts_consistent(), "leaf accounting broke: {report:?}");
    report
        .witnesses
        .iter()
        .map(|w| w.n().value().to_u64().unwrap())
        .collect()
}

#[test]
fn engine_matches_brute_force_on_small_grids() {
    let cap = 400_000u64;
    for omega in 1..=3usize {
        for odd in [false, true] {
            let mut cfg = SearchConfig {
                omega,
                odd_only: odd,
                prime_max: 20,
                exp_max: 4,
                value_max: Some(nat(cap)),
                ..Default::default()
            };
            let expect = brute_witnesses(cap, &cfg);
            let with_rules = engine_witnesses(&cfg);
            assert_eq!(with_rules, expect, "omega={omega} odd={odd} rules on");
            cfg.rules = RuleSet::NONE;
            let without = engine_witnesses(&cfg);
            assert_eq!(without, expect, "omega={omega} odd={odd} rules off");
        }
    }
}

#[test]
fn single_rule_subsets_are_neutral() {
    let base = SearchConfig {
        omega: 3,
        odd_only: true,
        prime_max: 30,
        exp_max: 6,
        ..Default::default()
    };
    let reference = engine_witnesses(&base);
    for mask in 0u32..16 {
        let mut cfg = base.clone();
        cfg.rules = RuleSet {
            bound: mask & 1 != 0,
            forced_divisor: mask & 2 != 0,
            order: mask & 4 != 0,
            quadratic_residue: mask & 8 != 0,
        };
        assert_eq!(engine_witnesses(&cfg), reference, "rule mask {mask:04b}");
    }
}

/// Desk-scale default caps: a 2.1-billion-leaf grid collapses to a single
/// evaluated leaf. Slow-ish, so opt in with `cargo test -- --ignored`.
#[test]
#[ignore = "takes ~10s; run with --ignored"]
fn default_caps_find_only_the_known_witness() {
    let cfg = SearchConfig::default(); // omega 4, odd, primes <= 300, exponents <= 16
    let report = enumerate(&cfg).unwrap();
    assert!(report.complete);
    assert!(report.counts_consistent());
    assert_eq!(report.witnesses.len(), 1);
    assert_eq!(report.witnesses[0].n().value(), nat(9_018_009));
    assert_eq!(report.leaves_evaluated, 1);
    assert_eq!(report.total_leaves, 2_137_518_080);

    let mut omega3 = cfg;
    omega3.omega = 3;
    let report3 = enumerate(&omega3).unwrap();
    assert!(report3.witnesses.is_empty());
    assert!(report3.counts_consistent());
}
