//! Welfare metrics and the two ratios that classify instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, KahanSum, UtilityVector, INVARIANT_TOLERANCE};
use crate::offline::EgSolution;

/// `u_i = sum_t x_it v_it`, accumulated in item order with compensated summation.
pub fn utilities(alloc: &Allocation, inst: &Instance) -> Result<UtilityVector> {
    alloc.check_dimensions(inst)?;
    let mut acc = vec![KahanSum::default(); inst.num_agents()];
    for (col, item) in alloc.columns().iter().zip(inst.items()) {
        for ((a, &x), &v) in acc.iter_mut().zip(col).zip(&item.values) {
            a.add(x * v);
        }
    }
    Ok(UtilityVector(acc.iter().map(KahanSum::value).collect()))
}

/// Geometric mean of the utilities; exactly zero when any utility is zero.
pub fn nash_welfare(u: &UtilityVector) -> f64 {
    let u = u.as_slice();
    if u.is_empty() || u.iter().any(|&x| x <= 0.0) {
        return 0.0;
    }
    let logs: KahanSum = u.iter().map(|x| x.ln()).collect();
    (logs.value() / u.len() as f64).exp()
}

/// Sum of log utilities, `-inf` if any utility is zero.
pub fn log_nash_objective(u: &[f64]) -> f64 {
    if u.iter().any(|&x| x <= 0.0) {
        return f64::NEG_INFINITY;
    }
    u.iter().map(|x| x.ln()).collect::<KahanSum>().value()
}

/// `V_i = sum_t s_t v_it`: what agent `i` would get holding every item.
pub fn monopolist_utilities(inst: &Instance) -> UtilityVector {
    let mut acc = vec![KahanSum::default(); inst.num_agents()];
    for item in inst.items() {
        for (a, &v) in acc.iter_mut().zip(&item.values) {
            a.add(item.supply * v);
        }
    }
    UtilityVector(acc.iter().map(KahanSum::value).collect())
}

fn max_min_ratio(u: &UtilityVector, quantity: &'static str) -> Result<f64> {
    let zeros: Vec<usize> = u.as_slice().iter().enumerate().filter(|(_, &x)| x <= 0.0).map(|(i, _)| i).collect();
    if !zeros.is_empty() {
        return Err(Error::UndefinedRatio { quantity, agents: zeros });
    }
    Ok(u.max() / u.min())
}

/// Balance ratio `lambda* = max_i V_i / min_i V_i`.
pub fn balance_ratio(inst: &Instance) -> Result<f64> {
    max_min_ratio(&monopolist_utilities(inst), "monopolist utility")
}

/// Impartiality ratio `mu* = max_i u*_i / min_i u*_i` of the Nash-welfare optimum.
///
/// Optimal utilities are unique, so this depends only on the solver's utility
/// vector; its accuracy is limited by the solution's `fw_gap`.
pub fn impartiality_ratio(eg: &EgSolution) -> Result<f64> {
    max_min_ratio(&eg.utilities, "optimal utility")
}

/// `opt / alg`, with `+inf` when the algorithm got zero welfare and `1` when both are zero.
pub fn competitive_ratio(opt_nw: f64, alg_nw: f64) -> Result<f64> {
    if opt_nw < 0.0 || alg_nw < 0.0 {
        return Err(Error::Precondition("welfare must be nonnegative".into()));
    }
    if alg_nw > opt_nw * (1.0 + INVARIANT_TOLERANCE) + f64::MIN_POSITIVE {
        return Err(Error::Inconsistent { opt: opt_nw, alg: alg_nw });
    }
    Ok(match (opt_nw == 0.0, alg_nw == 0.0) {
        (true, true) => 1.0,
        (false, true) => f64::INFINITY,
        _ => opt_nw / alg_nw,
    })
}

/// Mean log of a sorted sequence minus the mean log of its prefix averages.
///
/// For `1 <= a_1 <= ... <= a_N <= mu` this is at most `ln(ln mu + 1) + 1`
/// (see [`prefix_average_bound`]).
pub fn prefix_average_gap(a: &[f64], mu: f64) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Precondition("empty sequence".into()));
    }
    if mu.is_nan() || mu < 1.0 {
        return Err(Error::Precondition(format!("mu = {mu} < 1")));
    }
    if a.iter().any(|&x| !(1.0..=mu).contains(&x)) {
        return Err(Error::Precondition(format!("entries must lie in [1, {mu}]")));
    }
    if a.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Precondition("sequence is not sorted".into()));
    }
    let n = a.len() as f64;
    let mut prefix = KahanSum::default();
    let mut gap = KahanSum::default();
    for (i, &x) in a.iter().enumerate() {
        prefix.add(x);
        let avg = prefix.value() / (i + 1) as f64;
        gap.add(x.ln() - avg.ln());
    }
    Ok(gap.value() / n)
}

pub fn prefix_average_bound(mu: f64) -> f64 {
    (mu.ln() + 1.0).ln() + 1.0
}

/// Balance and impartiality ratios of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub balance_ratio: f64,
    pub impartiality_ratio: f64,
    /// Frank-Wolfe gap of the solution `impartiality_ratio` was read from.
    pub impartiality_fw_gap: f64,
    pub monopolist_utilities: UtilityVector,
}

impl RatioReport {
    pub fn new(inst: &Instance, eg: &EgSolution) -> Result<Self> {
        Ok(Self {
            balance_ratio: balance_ratio(inst)?,
            impartiality_ratio: impartiality_ratio(eg)?,
            impartiality_fw_gap: eg.fw_gap,
            monopolist_utilities: monopolist_utilities(inst),
        })
    }

    /// `lambda* <= mu* N` and `mu* <= lambda* N`, each with relative slack `tol`.
    pub fn ratios_consistent(&self, tol: f64) -> bool {
        let n = self.monopolist_utilities.len() as f64;
        self.balance_ratio <= n * self.impartiality_ratio * (1.0 + tol)
            && self.impartiality_ratio <= n * self.balance_ratio * (1.0 + tol)
    }
}
