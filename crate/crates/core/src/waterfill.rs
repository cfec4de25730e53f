//! Closed-form solver for one item under anticipated utilities.
//!
//! Maximizes `sum_i ln(u'_i + v_i z_i)` subject to `sum_i z_i <= s`, `z >= 0`.
//! The optimum fills a common "water level" `W = 1/nu*` over per-agent
//! breakpoints `b_i = u'_i / v_i`: `z_i = max(W - b_i, 0)`. Agents with
//! `v_i = 0` are never served. `W` is found by scanning sorted breakpoints, so
//! the result is exact up to rounding and reproducible across platforms.

use std::cmp::Ordering;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillResult {
    /// Amount given to each agent.
    pub z: Vec<f64>,
    /// Optimal multiplier of the supply constraint; `0` when nobody values the item.
    pub nu_star: f64,
    /// `u'_i + v_i z_i`.
    pub post_utilities: Vec<f64>,
}

pub fn waterfill(u_prime: &[f64], v: &[f64], s: f64) -> Result<WaterfillResult> {
    if u_prime.len() != v.len() || v.is_empty() {
        return Err(Error::Precondition(format!(
            "anticipated utilities ({}) and values ({}) must be non-empty and equal length",
            u_prime.len(),
            v.len()
        )));
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Precondition(format!("budget {s} must be positive")));
    }
    if u_prime.iter().chain(v).any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Precondition("anticipated utilities and values must be finite and nonnegative".into()));
    }

    let n = v.len();
    let mut z = vec![0.0; n];

    let mut order: Vec<(usize, f64)> = (0..n).filter(|&i| v[i] > 0.0).map(|i| (i, u_prime[i] / v[i])).collect();
    if order.is_empty() {
        return Ok(WaterfillResult { z, nu_star: 0.0, post_utilities: u_prime.to_vec() });
    }
    order.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));

    // Work relative to the lowest breakpoint so large anticipated utilities do
    // not swamp the budget.
    let base = order[0].1;
    let mut offsets = 0.0;
    let mut active = order.len();
    let mut level = 0.0;
    for k in 1..=order.len() {
        offsets += order[k - 1].1 - base;
        level = (s + offsets) / k as f64;
        // Ties at the boundary join together, so the split does not depend on sort order.
        if k == order.len() || level <= order[k].1 - base {
            active = k;
            break;
        }
    }

    let mut total = 0.0;
    for &(i, b) in &order[..active] {
        let amount = (level - (b - base)).max(0.0);
        z[i] = amount;
        total += amount;
    }
    if total > 0.0 && total != s {
        let scale = s / total;
        for &(i, _) in &order[..active] {
            z[i] *= scale;
        }
    }

    let water = base + level;
    let post_utilities = (0..n).map(|i| u_prime[i] + v[i] * z[i]).collect();
    Ok(WaterfillResult { z, nu_star: 1.0 / water, post_utilities })
}

/// Which optimality condition a [`WaterfillResult`] failed.
#[derive(Debug, Clone, PartialEq)]
pub enum KktViolation {
    Budget { used: f64, supply: f64 },
    ServedZeroValue { agent: usize },
    Level { agent: usize, marginal: f64, nu_star: f64 },
    Excluded { agent: usize, marginal: f64, nu_star: f64 },
}

impl std::fmt::Display for KktViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Budget { used, supply } => write!(f, "allocated {used} of supply {supply}"),
            Self::ServedZeroValue { agent } => write!(f, "agent {agent} has zero value but was served"),
            Self::Level { agent, marginal, nu_star } => {
                write!(f, "served agent {agent} has marginal {marginal}, nu* = {nu_star}")
            }
            Self::Excluded { agent, marginal, nu_star } => {
                write!(f, "unserved agent {agent} has marginal {marginal} > nu* = {nu_star}")
            }
        }
    }
}

impl WaterfillResult {
    /// Checks budget exhaustion and the KKT conditions at relative tolerance `tol`.
    pub fn verify(&self, u_prime: &[f64], v: &[f64], s: f64, tol: f64) -> Result<(), KktViolation> {
        if v.iter().all(|&x| x == 0.0) {
            let used: f64 = self.z.iter().sum();
            return if used == 0.0 { Ok(()) } else { Err(KktViolation::Budget { used, supply: 0.0 }) };
        }
        let used: f64 = self.z.iter().sum();
        if (used - s).abs() > 1e-12 * s {
            return Err(KktViolation::Budget { used, supply: s });
        }
        for (i, (&zi, &vi)) in self.z.iter().zip(v).enumerate() {
            if vi == 0.0 {
                if zi != 0.0 {
                    return Err(KktViolation::ServedZeroValue { agent: i });
                }
                continue;
            }
            let marginal = vi / (u_prime[i] + vi * zi);
            if zi > 0.0 {
                if (marginal - self.nu_star).abs() > tol * self.nu_star {
                    return Err(KktViolation::Level { agent: i, marginal, nu_star: self.nu_star });
                }
            } else if marginal > self.nu_star * (1.0 + tol) {
                return Err(KktViolation::Excluded { agent: i, marginal, nu_star: self.nu_star });
            }
        }
        Ok(())
    }
}

/// `LHS - RHS` of the per-step gain inequality
/// `sum_i ln(u'_i + v_i z_i) - sum_i ln u'_i >= s * max_i v_i / (u'_i + v_i z_i)`.
///
/// Agents with zero post-allocation utility are left out of both sides. An agent
/// starting from zero utility and served a positive amount makes the left side
/// infinite.
pub fn gain_lower_bound_check(result: &WaterfillResult, u_prime: &[f64], v: &[f64], s: f64) -> f64 {
    let mut lhs = 0.0;
    let mut rhs: f64 = 0.0;
    for i in 0..v.len() {
        let post = result.post_utilities[i];
        if post <= 0.0 {
            continue;
        }
        let gained = post - u_prime[i];
        lhs += if u_prime[i] > 0.0 { (gained / u_prime[i]).ln_1p() } else { f64::INFINITY };
        rhs = rhs.max(v[i] / post);
    }
    lhs - s * rhs
}
