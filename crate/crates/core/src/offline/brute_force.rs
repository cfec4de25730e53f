use crate::error::{Error, Result};
use crate::metrics::log_nash_objective;
use crate::model::{Allocation, Instance};

/// Hard cap on the number of grid points the oracle will visit.
pub const MAX_GRID_POINTS: f64 = 5e7;

/// Number of ways to split `steps` grid units among `parts` agents.
fn compositions(steps: usize, parts: usize) -> f64 {
    // C(steps + parts - 1, parts - 1)
    (1..parts).fold(1.0, |acc, k| acc * (steps + k) as f64 / k as f64)
}

/// Size of the search space `brute_force_oracle` would enumerate.
pub fn grid_size(num_agents: usize, num_items: usize, grid_steps: usize) -> f64 {
    compositions(grid_steps, num_agents).powi(num_items as i32)
}

/// Worst-case objective loss from restricting allocations to the grid.
///
/// Flooring every `x*_it` to a multiple of `s_t / g` and handing the remainder
/// to anyone costs agent `i` at most `V_i / g`; since `u*_i >= V_i / N`, each
/// log term drops by at most `-ln(1 - N/g)`.
pub fn grid_error_bound(num_agents: usize, grid_steps: usize) -> f64 {
    let n = num_agents as f64;
    let g = grid_steps as f64;
    if g <= n {
        return f64::INFINITY;
    }
    -n * (-n / g).ln_1p()
}

/// Exhaustive search over allocations where each item is split in multiples
/// of `s_t / grid_steps`. Only for tiny instances: `N <= 3`, `T <= 3`.
pub fn brute_force_oracle(inst: &Instance, grid_steps: usize) -> Result<(Allocation, f64)> {
    let n = inst.num_agents();
    let t = inst.num_items();
    if n > 3 || t > 3 {
        return Err(Error::Refused(format!("brute force limited to 3x3, got {n}x{t}")));
    }
    if grid_steps == 0 {
        return Err(Error::Precondition("grid_steps must be positive".into()));
    }
    let size = grid_size(n, t, grid_steps);
    if size > MAX_GRID_POINTS {
        return Err(Error::Refused(format!("grid of {size:.3e} points exceeds {MAX_GRID_POINTS:e}")));
    }

    // All splits of `grid_steps` units among `n` agents.
    let mut splits = Vec::new();
    let mut current = vec![0usize; n];
    enumerate_splits(grid_steps, 0, &mut current, &mut splits);

    let mut search = Search {
        inst,
        splits: &splits,
        grid_steps,
        choice: vec![0; t],
        best_choice: vec![0; t],
        best: f64::NEG_INFINITY,
    };
    search.descend(0, [0.0; 3]);

    let columns = search
        .best_choice
        .iter()
        .zip(inst.items())
        .map(|(&c, item)| splits[c].iter().map(|&k| item.supply * k as f64 / grid_steps as f64).collect())
        .collect();
    Ok((Allocation::from_columns(n, columns)?, search.best))
}

fn enumerate_splits(left: usize, agent: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if agent + 1 == current.len() {
        current[agent] = left;
        out.push(current.clone());
        return;
    }
    for k in 0..=left {
        current[agent] = k;
        enumerate_splits(left - k, agent + 1, current, out);
    }
}

struct Search<'a> {
    inst: &'a Instance,
    splits: &'a [Vec<usize>],
    grid_steps: usize,
    choice: Vec<usize>,
    best_choice: Vec<usize>,
    best: f64,
}

impl Search<'_> {
    fn descend(&mut self, item: usize, u: [f64; 3]) {
        if item == self.inst.num_items() {
            let obj = log_nash_objective(&u[..self.inst.num_agents()]);
            if obj > self.best {
                self.best = obj;
                self.best_choice.clone_from(&self.choice);
            }
            return;
        }
        let it = self.inst.item(item);
        let unit = it.supply / self.grid_steps as f64;
        for (c, split) in self.splits.iter().enumerate() {
            let mut next = u;
            for ((ui, &k), &v) in next.iter_mut().zip(split).zip(&it.values) {
                *ui += k as f64 * unit * v;
            }
            self.choice[item] = c;
            self.descend(item + 1, next);
        }
    }
}
