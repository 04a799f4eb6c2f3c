//! Integer factorization: trial division, then Brent's cycle-finding rho
//! with a deterministic seed, behind an explicit effort budget.

use alloc::vec::Vec;

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::primality::{is_prime, mul_mod_u64};
use super::{nat, Factorization, Natural, PrimePower};

/// Effort limit for [`factorize`]. Exhausting it is a reported state,
/// not an error: the unfinished part comes back as a composite cofactor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorBudget {
    /// Trial-divide by every prime candidate up to this bound.
    pub trial_limit: u64,
    /// Brent rounds attempted per stubborn composite.
    pub rho_rounds: u32,
    /// Iteration cap per Brent round.
    pub rho_iterations: u64,
    /// Seed for the deterministic rho parameter stream; echoed in reports.
    pub seed: u64,
}

impl Default for FactorBudget {
    fn default() -> Self {
        FactorBudget {
            trial_limit: 1_000_000,
            rho_rounds: 24,
            rho_iterations: 1 << 20,
            seed: 1,
        }
    }
}

impl FactorBudget {
    /// A cheap budget for speculative factorizations inside prune rules,
    /// where giving up only means a rule declines to fire.
    pub fn quick(seed: u64) -> Self {
        FactorBudget {
            trial_limit: 20_000,
            rho_rounds: 6,
            rho_iterations: 1 << 16,
            seed,
        }
    }
}

/// Outcome of a budgeted factorization: the canonical factored part and,
/// when the budget ran out, the remaining composite residue (which is
/// excluded from the factor list).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorOutcome {
    pub factors: Factorization,
    pub cofactor: Option<Natural>,
}

impl FactorOutcome {
    pub fn fully_factored(&self) -> bool {
        self.cofactor.is_none()
    }

    /// The represented integer: factored part times cofactor.
    pub fn value(&self) -> Natural {
        let v = self.factors.value();
        match &self.cofactor {
            Some(c) => v * c,
            None => v,
        }
    }
}

/// Factors `n >= 1` within the budget.
pub fn factorize(n: &Natural, budget: &FactorBudget) -> FactorOutcome {
    let mut primes: Vec<Natural> = Vec::new();
    let mut residues: Vec<Natural> = Vec::new();
    let mut n = n.clone();

    if n.is_one() {
        return FactorOutcome { factors: Factorization::one(), cofactor: None };
    }

    // Trial division, with a u64 fast path once the remainder fits. While
    // the remainder exceeds u64 no trial divisor can pass its square root,
    // so the big loop needs no root check.
    let mut stack: Vec<Natural> = Vec::new();
    let mut d = 2u64;
    while d <= budget.trial_limit {
        if let Some(small) = n.to_u64() {
            let survivor = trial_u64(small, d, budget.trial_limit, &mut primes);
            if survivor > 1 {
                stack.push(nat(survivor));
            }
            n = Natural::one();
            break;
        }
        while (&n % d).is_zero() {
            primes.push(nat(d));
            n /= d;
        }
        d = if d == 2 { 3 } else { d + 2 };
    }
    if !n.is_one() {
        stack.push(n);
    }

    let mut rng = budget.seed;
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if is_prime(&m) {
            primes.push(m);
            continue;
        }
        if let Some(root) = perfect_power_root(&m) {
            let mut acc = Natural::one();
            let mut k = 0u32;
            while acc < m {
                acc *= &root;
                k += 1;
            }
            debug_assert_eq!(acc, m);
            for _ in 0..k {
                stack.push(root.clone());
            }
            continue;
        }
        match brent_rho(&m, budget, &mut rng) {
            Some(g) => {
                stack.push(&m / &g);
                stack.push(g);
            }
            None => residues.push(m),
        }
    }

    primes.sort();
    let mut grouped: Vec<PrimePower> = Vec::new();
    for p in primes {
        match grouped.last_mut() {
            Some(last) if last.prime == p => last.exp += 1,
            _ => grouped.push(PrimePower { prime: p, exp: 1 }),
        }
    }
    let cofactor = if residues.is_empty() {
        None
    } else {
        Some(residues.into_iter().fold(Natural::one(), |a, b| a * b))
    };
    FactorOutcome {
        factors: Factorization::from_parts_unchecked(grouped),
        cofactor,
    }
}

/// Trial division of a u64 up to `limit`, collecting prime factors.
/// Returns the surviving cofactor (1 when fully factored, prime when
/// trial division passed its square root, otherwise a composite the
/// caller hands to rho).
fn trial_u64(mut n: u64, start: u64, limit: u64, primes: &mut Vec<Natural>) -> u64 {
    let mut d = start;
    while d <= limit {
        if d.checked_mul(d).is_none_or(|sq| sq > n) {
            if n > 1 {
                primes.push(nat(n));
                n = 1;
            }
            break;
        }
        while n.is_multiple_of(d) {
            primes.push(nat(d));
            n /= d;
        }
        d = if d == 2 { 3 } else { d + 2 };
    }
    n
}

/// Smallest root r with r^k = n for some k >= 2, if any.
fn perfect_power_root(n: &Natural) -> Option<Natural> {
    let bits = n.bits();
    for k in (2..=bits).rev() {
        let r = n.nth_root(k as u32);
        if r <= Natural::one() {
            continue;
        }
        if r.pow(k as u32) == *n {
            return Some(r);
        }
    }
    None
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One or more Brent rounds on an odd composite that is neither prime nor
/// a perfect power. Returns a nontrivial factor or gives up.
fn brent_rho(m: &Natural, budget: &FactorBudget, rng: &mut u64) -> Option<Natural> {
    if m.is_even() {
        return Some(nat(2));
    }
    if let Some(small) = m.to_u64() {
        for _ in 0..budget.rho_rounds {
            let c = splitmix64(rng) % (small - 2) + 1;
            if let Some(g) = brent_rho_u64(small, c, budget.rho_iterations) {
                return Some(nat(g));
            }
        }
        return None;
    }
    for _ in 0..budget.rho_rounds {
        let c = nat(splitmix64(rng));
        if let Some(g) = brent_rho_big(m, &c, budget.rho_iterations) {
            return Some(g);
        }
    }
    None
}

fn brent_rho_u64(n: u64, c: u64, max_iters: u64) -> Option<u64> {
    let f = |x: u64| (mul_mod_u64(x, x, n) + c) % n;
    let mut y = 2u64;
    let mut r = 1u64;
    let mut q = 1u64;
    let mut g = 1u64;
    let mut x = 0u64;
    let mut ys = 0u64;
    let batch = 128u64;
    let mut spent = 0u64;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0u64;
        while k < r && g == 1 {
            ys = y;
            let lim = batch.min(r - k);
            for _ in 0..lim {
                y = f(y);
                q = mul_mod_u64(q, x.abs_diff(y), n);
            }
            g = q.gcd(&n);
            k += lim;
        }
        r <<= 1;
        spent += r;
        if spent > max_iters {
            return None;
        }
    }
    if g == n {
        loop {
            ys = f(ys);
            g = x.abs_diff(ys).gcd(&n);
            if g > 1 {
                break;
            }
        }
    }
    if g == n {
        None
    } else {
        Some(g)
    }
}

fn brent_rho_big(n: &Natural, c: &Natural, max_iters: u64) -> Option<Natural> {
    let f = |x: &Natural| (x * x + c) % n;
    let abs_diff = |a: &Natural, b: &Natural| if a > b { a - b } else { b - a };
    let mut y = nat(2);
    let mut r = 1u64;
    let mut q = Natural::one();
    let mut g = Natural::one();
    let mut x = Natural::zero();
    let mut ys = Natural::zero();
    let batch = 128u64;
    let mut spent = 0u64;
    while g.is_one() {
        x = y.clone();
        for _ in 0..r {
            y = f(&y);
        }
        let mut k = 0u64;
        while k < r && g.is_one() {
            ys = y.clone();
            let lim = batch.min(r - k);
            for _ in 0..lim {
                y = f(&y);
                q = q * abs_diff(&x, &y) % n;
            }
            g = q.gcd(n);
            k += lim;
        }
        r <<= 1;
        spent += r;
        if spent > max_iters {
            return None;
        }
    }
    if g == *n {
        loop {
            ys = f(&ys);
            g = abs_diff(&x, &ys).gcd(n);
            if !g.is_one() {
                break;
            }
        }
    }
    if g == *n {
        None
    } else {
        Some(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(n: u64) -> Factorization {
        let out = factorize(&nat(n), &FactorBudget::default());
        assert!(out.fully_factored(), "budget exhausted on {n}");
        out.factors
    }

    #[test]
    fn spec_examples() {
        // 11^5 - 1: trial division decides; the claimed divisor 3221 indeed
        // appears (161050 = 2 * 5^2 * 3221).
        assert_eq!(
            full(161_050),
            Factorization::from_u64_pairs(&[(2, 1), (5, 2), (3221, 1)]).unwrap()
        );
        let one = factorize(&nat(1), &FactorBudget::default());
        assert!(one.fully_factored());
        assert!(one.factors.is_one());
        assert_eq!(full(819), Factorization::from_u64_pairs(&[(3, 2), (7, 1), (13, 1)]).unwrap());
    }

    #[test]
    fn value_round_trip_holds_with_and_without_budget() {
        let tight = FactorBudget { trial_limit: 10, rho_rounds: 0, rho_iterations: 0, seed: 1 };
        for n in [161_050u64, 9_018_009, 1_000_003, 2u64.pow(20) * 3221] {
            let out = factorize(&nat(n), &tight);
            assert_eq!(out.value(), nat(n));
        }
    }

    #[test]
    fn rho_cracks_semiprimes_past_the_trial_bound() {
        // 1e9-ish primes multiplied together defeat the trial bound.
        let p = 1_000_000_007u64;
        let q = 1_000_000_009u64;
        let n = nat(p) * nat(q);
        let out = factorize(&n, &FactorBudget::default());
        assert!(out.fully_factored());
        assert_eq!(
            out.factors,
            Factorization::from_u64_pairs(&[(p, 1), (q, 1)]).unwrap()
        );
    }

    #[test]
    fn perfect_powers_are_split() {
        let p = nat(1_000_000_007u64);
        let n = p.pow(3);
        let out = factorize(&n, &FactorBudget::default());
        assert!(out.fully_factored());
        assert_eq!(out.factors.factors().len(), 1);
        assert_eq!(out.factors.factors()[0].exp, 3);
    }

    #[test]
    fn determinism_under_fixed_seed() {
        let n = nat(1_000_000_007u64) * nat(998_244_353u64) * nat(4u64);
        let a = factorize(&n, &FactorBudget::default());
        let b = factorize(&n, &FactorBudget::default());
        assert_eq!(a, b);
    }
}
