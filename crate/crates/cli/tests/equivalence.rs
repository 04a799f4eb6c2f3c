//! Definition-level equivalences between the sieve oracle and the
//! multiplicative engine on the first million integers.

use defiperf::oracle::{for_each_sigma_segment, sieve_sigma, Filters};
use defiperf_core::nt::{factorize, nat, sigma, FactorBudget};
use defiperf_core::witness::dp_witness;
use num_traits::ToPrimitive;

const N: u64 = 1_000_000;

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// dp_witness is nonempty exactly when a proper divisor d with
/// sigma(n) = 2n - d exists; checked against the sieve for every witness
/// and a random sample of non-witnesses, with the unique-d property
/// verified by full divisor enumeration.
#[test]
fn witness_definition_equivalence_to_1e6() {
    let sigma_table = sieve_sigma(N);
    let budget = FactorBudget::default();
    let mut witnesses = Vec::new();
    for n in 2..=N {
        let s = sigma_table[n as usize];
        if s < 2 * n {
            let d = 2 * n - s;
            if d < n && n % d == 0 {
                witnesses.push((n, d));
            }
        }
    }
    assert!(!witnesses.is_empty());

    for &(n, d) in &witnesses {
        let f = factorize(&nat(n), &budget).factors;
        let w = dp_witness(&f).unwrap_or_else(|| panic!("engine misses witness {n}"));
        assert_eq!(w.deficient_divisor().value().to_u64(), Some(d));
        assert_eq!(w.verify_eq1(), Ok(true));
        // uniqueness: no other proper divisor satisfies sigma(n) = 2n - d'
        let mut matches = 0;
        let mut div = 1u64;
        while div * div <= n {
            if n % div == 0 {
                for cand in [div, n / div] {
                    if cand < n && sigma_table[n as usize] == 2 * n - cand {
                        matches += 1;
                    }
                }
            }
            div += 1;
        }
        assert_eq!(matches, 1, "deficient divisor of {n} is unique");
        // parity consequence for odd witnesses
        if n % 2 == 1 {
            assert_eq!(d % 2, 1);
            assert!(factorize(&nat(n), &budget).factors.all_exponents_even());
        }
    }

    let witness_set: std::collections::BTreeSet<u64> =
        witnesses.iter().map(|&(n, _)| n).collect();
    let mut state = 42u64;
    let mut checked = 0;
    while checked < 2_000 {
        let n = splitmix(&mut state) % (N - 2) + 2;
        if witness_set.contains(&n) {
            continue;
        }
        let f = factorize(&nat(n), &budget).factors;
        assert!(dp_witness(&f).is_none(), "engine invents witness at {n}");
        checked += 1;
    }
}

/// The segmented sieve's sigma cells agree with the multiplicative
/// formula on a large random sample.
#[test]
fn sieve_formula_agreement() {
    let budget = FactorBudget::default();
    let mut state = 7u64;
    let mut targets: Vec<u64> = (0..10_000).map(|_| splitmix(&mut state) % N + 1).collect();
    targets.sort_unstable();
    targets.dedup();
    let mut idx = 0;
    for_each_sigma_segment(N, |lo, block| {
        while idx < targets.len() {
            let n = targets[idx];
            if n >= lo + block.len() as u64 {
                break;
            }
            let expect = sigma(&factorize(&nat(n), &budget).factors).to_u64().unwrap();
            assert_eq!(block[(n - lo) as usize], expect, "sigma({n})");
            idx += 1;
        }
    });
    assert_eq!(idx, targets.len());
}

/// Cross-check catches a tampered engine report (fault injection).
#[test]
fn cross_check_detects_fault_injection() {
    use defiperf::oracle::{cross_check, enumerate_dp};
    use defiperf_core::search::{enumerate, SearchConfig};

    let cfg = SearchConfig {
        omega: 4,
        odd_only: true,
        prime_max: 50,
        exp_max: 6,
        ..Default::default()
    };
    let good = enumerate(&cfg).unwrap();
    let sieve = enumerate_dp(10_000_000, Filters { odd_only: true, omega_equals: Some(4) });
    assert!(cross_check(&good, &sieve).is_ok());

    // drop the witness, as a wrongly-inverted prune rule would
    let mut bad = good.clone();
    bad.witnesses.clear();
    let diff = cross_check(&bad, &sieve).unwrap_err();
    assert_eq!(diff.only_sieve, vec![9_018_009]);
    assert!(diff.only_engine.is_empty());

    // vacuous overlap passes with the flag set
    let tiny = enumerate_dp(100, Filters { odd_only: true, omega_equals: Some(4) });
    let ck = cross_check(&bad, &tiny).unwrap();
    assert!(ck.vacuous);
}
