//! Frank-Wolfe for the Eisenberg-Gale program
//! `max sum_i ln u_i(x)` over the product of per-item supply simplices.
//!
//! The linear maximization oracle gives each item to the agents with the best
//! bang-per-buck `v_it / u_i`, so the Frank-Wolfe gap has the closed form
//! `sum_t s_t max_i v_it / u_i - sum_i (sum_t x_it v_it) / u_i`. By concavity it
//! bounds `F(x*) - F(x)`, which is what every returned solution is certified by.

use crate::error::{Error, Result};
use crate::metrics::{log_nash_objective, monopolist_utilities, utilities};
use crate::model::{Allocation, Instance, KahanSum, UtilityVector};
use crate::waterfill::waterfill;

/// Step rule for the Frank-Wolfe update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    /// `2 / (k + 2)`, falling back to line search whenever it would lower the objective.
    #[default]
    OpenLoop,
    /// Exact line search along the Frank-Wolfe direction.
    LineSearch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgOptions {
    /// Target Frank-Wolfe gap (absolute, in units of the log objective).
    pub tol: f64,
    pub max_iterations: usize,
    pub step_rule: StepRule,
    /// After each Frank-Wolfe step, re-solve every item exactly against the
    /// others (one water-filling call per item). Each sweep can only raise the
    /// objective and it zeroes out agents that do not belong in an item's support.
    pub coordinate_sweeps: bool,
}

impl Default for EgOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iterations: 1_000_000, step_rule: StepRule::OpenLoop, coordinate_sweeps: true }
    }
}

impl EgOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Offline Nash-welfare optimum with its optimality certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct EgSolution {
    pub allocation: Allocation,
    pub utilities: UtilityVector,
    /// `sum_i ln u_i`.
    pub objective: f64,
    pub fw_gap: f64,
    pub iterations: usize,
}

impl EgSolution {
    pub fn nash_welfare(&self) -> f64 {
        crate::metrics::nash_welfare(&self.utilities)
    }
}

/// Frank-Wolfe gap at utilities `u`, i.e. `sum_t s_t max_i v_it/u_i - sum_i u_i/u_i`.
fn fw_gap(inst: &Instance, u: &[f64]) -> f64 {
    let prices: KahanSum = inst
        .items()
        .iter()
        .map(|item| {
            let best = item.values.iter().zip(u).map(|(v, ui)| v / ui).fold(0.0, f64::max);
            item.supply * best
        })
        .collect();
    // Zero-valued items contribute nothing to either side.
    (prices.value() - u.len() as f64).max(0.0)
}

/// Vertex of the feasible set maximizing `<grad F(x), y>`; ties split equally.
fn linear_oracle(inst: &Instance, u: &[f64]) -> Allocation {
    let n = inst.num_agents();
    let mut out = Allocation::zeros(n, inst.num_items());
    for (t, item) in inst.items().iter().enumerate() {
        let ratios: Vec<f64> = item.values.iter().zip(u).map(|(v, ui)| v / ui).collect();
        let best = ratios.iter().copied().fold(0.0, f64::max);
        if best == 0.0 {
            continue;
        }
        let winners: Vec<usize> = (0..n).filter(|&i| ratios[i] == best).collect();
        let share = item.supply / winners.len() as f64;
        let col = out.column_mut(t);
        for i in winners {
            col[i] = share;
        }
    }
    out
}

/// Maximizes `phi(g) = sum_i ln(u_i + g du_i)` on `[0, 1]` by bisection on `phi'`.
fn line_search(u: &[f64], du: &[f64]) -> f64 {
    let slope = |g: f64| -> f64 {
        u.iter()
            .zip(du)
            .map(|(ui, di)| {
                let w = ui + g * di;
                if w <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    di / w
                }
            })
            .sum()
    };
    if slope(0.0) <= 0.0 {
        return 0.0;
    }
    let end = slope(1.0);
    if end >= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn coordinate_sweep(inst: &Instance, x: &mut Allocation, u: &mut [f64]) -> Result<()> {
    for (t, item) in inst.items().iter().enumerate() {
        let col = x.column(t);
        let rest: Vec<f64> =
            u.iter().zip(col).zip(&item.values).map(|((ui, xi), vi)| (ui - xi * vi).max(0.0)).collect();
        let r = waterfill(&rest, &item.values, item.supply)?;
        u.copy_from_slice(&r.post_utilities);
        x.column_mut(t).copy_from_slice(&r.z);
    }
    Ok(())
}

fn initial_point(inst: &Instance) -> Allocation {
    let n = inst.num_agents();
    let columns = inst.items().iter().map(|item| vec![item.supply / n as f64; n]).collect();
    Allocation::from_columns(n, columns).expect("equal split is well-formed")
}

/// Solves the Eisenberg-Gale program from the equal split.
pub fn solve_eg(inst: &Instance, opts: &EgOptions) -> Result<EgSolution> {
    solve_eg_from(inst, initial_point(inst), opts)
}

/// Solves the Eisenberg-Gale program from a caller-supplied start.
///
/// The start must give every agent positive utility.
pub fn solve_eg_from(inst: &Instance, start: Allocation, opts: &EgOptions) -> Result<EgSolution> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::Precondition(format!("tolerance {} must be positive", opts.tol)));
    }
    let zero = monopolist_utilities(inst)
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= 0.0)
        .map(|(i, _)| i)
        .collect::<Vec<_>>();
    if !zero.is_empty() {
        return Err(Error::UndefinedRatio { quantity: "monopolist utility", agents: zero });
    }
    if !start.is_feasible(inst)? {
        return Err(Error::Precondition("start allocation is infeasible".into()));
    }

    let mut x = start;
    let mut u = utilities(&x, inst)?.0;
    if u.iter().any(|&ui| ui <= 0.0) {
        return Err(Error::Precondition("start allocation leaves an agent with zero utility".into()));
    }

    let mut iterations = 0;
    loop {
        // Refresh utilities from the allocation to stop drift from incremental updates.
        if iterations % 64 == 0 {
            u = utilities(&x, inst)?.0;
        }
        let gap = fw_gap(inst, &u);
        if gap <= opts.tol || iterations >= opts.max_iterations {
            let utilities = utilities(&x, inst)?;
            let gap = fw_gap(inst, utilities.as_slice());
            let solution = EgSolution {
                objective: log_nash_objective(utilities.as_slice()),
                allocation: x,
                utilities,
                fw_gap: gap,
                iterations,
            };
            if gap <= opts.tol {
                return Ok(solution);
            }
            return Err(Error::Nonconvergence { gap, iterations, best: Box::new(solution) });
        }

        let target = linear_oracle(inst, &u);
        let target_u = utilities(&target, inst)?.0;
        let du: Vec<f64> = target_u.iter().zip(&u).map(|(a, b)| a - b).collect();
        let step = match opts.step_rule {
            StepRule::LineSearch => line_search(&u, &du),
            StepRule::OpenLoop => {
                let g = 2.0 / (iterations as f64 + 2.0);
                let trial: Vec<f64> = u.iter().zip(&du).map(|(ui, di)| ui + g * di).collect();
                if log_nash_objective(&trial) >= log_nash_objective(&u) {
                    g
                } else {
                    line_search(&u, &du)
                }
            }
        };
        if step > 0.0 {
            for t in 0..inst.num_items() {
                let goal = target.column(t).to_vec();
                for (xi, yi) in x.column_mut(t).iter_mut().zip(goal) {
                    *xi = (*xi + step * (yi - *xi)).max(0.0);
                }
            }
            for (ui, di) in u.iter_mut().zip(&du) {
                *ui += step * di;
            }
        }
        if opts.coordinate_sweeps {
            coordinate_sweep(inst, &mut x, &mut u)?;
        }
        iterations += 1;
    }
}
