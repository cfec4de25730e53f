//! Utility bounds for Myopic Greedy on binary-valued instances.
//!
//! With the algorithm's utilities sorted ascending, the benchmark utilities
//! `b` (taken in that same agent order) satisfy, for every `i`,
//! `sum_{j <= i} b_j <= sum_j min(u_i, u_j)`. Subject to these constraints,
//! `sum_i ln u_i` is smallest at `u_i = sum_{j <= i} b_j / (N + 1 - j)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::KahanSum;

/// Outcome of checking the prefix-sum constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixSumCheck {
    /// Agents sorted by ascending algorithm utility (ties by index).
    pub order: Vec<usize>,
    /// `lhs_i - rhs_i` for each position `i` of `order`.
    pub excess: Vec<f64>,
}

impl PrefixSumCheck {
    pub fn max_excess(&self) -> f64 {
        self.excess.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when every excess is at most `slack`.
    pub fn holds(&self, slack: f64) -> bool {
        self.excess.iter().all(|&e| e <= slack)
    }
}

fn check_pair(alg: &[f64], benchmark: &[f64]) -> Result<()> {
    if alg.len() != benchmark.len() || alg.is_empty() {
        return Err(Error::Structure(format!("utility vectors of lengths {} and {}", alg.len(), benchmark.len())));
    }
    if alg.iter().chain(benchmark).any(|u| !(u.is_finite() && *u >= 0.0)) {
        return Err(Error::Precondition("utilities must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Agent indices sorted by ascending utility, ties broken by index.
pub fn ascending_order(u: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]).then(a.cmp(&b)));
    order
}

/// Evaluates every prefix-sum constraint for algorithm utilities `alg` and
/// benchmark utilities `benchmark`, both indexed by agent.
pub fn prefix_sum_check(alg: &[f64], benchmark: &[f64]) -> Result<PrefixSumCheck> {
    check_pair(alg, benchmark)?;
    let order = ascending_order(alg);
    let mut lhs = KahanSum::default();
    let excess = order
        .iter()
        .map(|&i| {
            lhs.add(benchmark[i]);
            let rhs: KahanSum = alg.iter().map(|&u| u.min(alg[i])).collect();
            lhs.value() - rhs.value()
        })
        .collect();
    Ok(PrefixSumCheck { order, excess })
}

/// `u_i = sum_{j <= i} b_j / (N + 1 - j)` for benchmark utilities `b` listed in
/// sorted agent order. The result is nondecreasing.
pub fn step_function_minimizer(benchmark: &[f64]) -> Vec<f64> {
    let n = benchmark.len();
    let mut acc = KahanSum::default();
    benchmark
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            acc.add(b / (n - j) as f64);
            acc.value()
        })
        .collect()
}

/// Smallest `c` such that `c * u` satisfies the prefix-sum constraints, where
/// `u` is nondecreasing and `benchmark` is listed in the same order.
pub fn feasibility_scale(u: &[f64], benchmark: &[f64]) -> Result<f64> {
    check_pair(u, benchmark)?;
    if u.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Precondition("utilities must be sorted ascending".into()));
    }
    let mut lhs = KahanSum::default();
    let mut scale = 0.0f64;
    for (i, &b) in benchmark.iter().enumerate() {
        lhs.add(b);
        let rhs: KahanSum = u.iter().map(|&v| v.min(u[i])).collect();
        let rhs = rhs.value();
        if lhs.value() > 0.0 {
            if rhs <= 0.0 {
                return Err(Error::Precondition(format!("no scaling makes constraint {i} feasible")));
            }
            scale = scale.max(lhs.value() / rhs);
        }
    }
    Ok(scale)
}

/// A random nondecreasing vector scaled up until it meets the prefix-sum
/// constraints for `benchmark`; positive entries only.
pub fn sample_feasible<R: Rng + ?Sized>(benchmark: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let mut u: Vec<f64> = benchmark.iter().map(|_| 1.0 - rng.random::<f64>()).collect();
    u.sort_by(f64::total_cmp);
    let c = feasibility_scale(&u, benchmark)?;
    // Push strictly inside so rounding cannot leave a constraint violated.
    let c = c * (1.0 + 4.0 * f64::EPSILON);
    Ok(u.into_iter().map(|v| v * c).collect())
}
