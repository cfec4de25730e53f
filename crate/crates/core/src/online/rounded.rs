//! Greedy with Rounded Values.
//!
//! Each item is cut into `J = ceil(log2 mu)` equal sub-items. Sub-item `j`
//! carries the binary value `vbar/2^j` for every agent whose true value reaches
//! that threshold, and zero for the rest. Myopic greedy then allocates the
//! sub-items in level order against utilities measured in rounded values.

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, Item, KahanSum};

use super::{run_online, sample_guess, AlgorithmSummary, GuessSample, OnlineAllocator, RunTrace, WaterfillStep};

/// Default cap on sub-items per item for guessed impartiality bounds.
pub const DEFAULT_LEVEL_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SubItem {
    /// 1-based level `j`; values are `vbar / 2^j` or zero.
    pub level: usize,
    pub supply: f64,
    pub values: Vec<f64>,
}

/// Upper bound on the impartiality ratio handed to the rounded greedy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImpartialityBound {
    Known(f64),
    /// `mu = 2^(2^k)`, so `ceil(log2 mu) = 2^k` levels before capping.
    Guessed(u32),
}

impl ImpartialityBound {
    /// Number of levels and whether `level_cap` cut it short.
    pub fn levels(&self, level_cap: usize) -> (usize, bool) {
        match *self {
            Self::Known(mu) => (levels_for(mu), false),
            Self::Guessed(k) => {
                let wanted = 1usize.checked_shl(k).unwrap_or(usize::MAX);
                if wanted > level_cap {
                    (level_cap, true)
                } else {
                    (wanted, false)
                }
            }
        }
    }
}

/// `max(1, ceil(log2 mu))`, computed without floating-point logs.
fn levels_for(mu: f64) -> usize {
    let mut levels = 1;
    let mut reach = 2.0;
    while reach < mu {
        reach *= 2.0;
        levels += 1;
    }
    levels
}

/// Splits `item` into `levels` thresholded sub-items. All-zero items yield nothing.
pub fn round_item_levels(item: &Item, levels: usize) -> Vec<SubItem> {
    let top = item.max_value();
    if top == 0.0 || levels == 0 {
        return Vec::new();
    }
    let supply = item.supply / levels as f64;
    let mut threshold = top;
    (1..=levels)
        .map(|level| {
            threshold *= 0.5;
            let values = item.values.iter().map(|&v| if v >= threshold && v > 0.0 { threshold } else { 0.0 }).collect();
            SubItem { level, supply, values }
        })
        .collect()
}

/// [`round_item_levels`] with `J = max(1, ceil(log2 mu))`.
pub fn round_item(item: &Item, mu: f64) -> Result<Vec<SubItem>> {
    if mu.is_nan() || mu < 1.0 {
        return Err(Error::Precondition(format!("impartiality bound {mu} must be at least 1")));
    }
    Ok(round_item_levels(item, levels_for(mu)))
}

#[derive(Debug, Clone)]
pub struct RoundedGreedy {
    bound: ImpartialityBound,
    levels: usize,
    level_cap_hit: bool,
    decision_utilities: Vec<KahanSum>,
}

impl RoundedGreedy {
    pub fn new(num_agents: usize, bound: ImpartialityBound, level_cap: usize) -> Result<Self> {
        if let ImpartialityBound::Known(mu) = bound {
            if mu.is_nan() || mu < 1.0 {
                return Err(Error::Precondition(format!("impartiality bound {mu} must be at least 1")));
            }
        }
        if level_cap == 0 {
            return Err(Error::Precondition("level cap must be positive".into()));
        }
        let (levels, level_cap_hit) = bound.levels(level_cap);
        Ok(Self { bound, levels, level_cap_hit, decision_utilities: vec![KahanSum::default(); num_agents] })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }
}

impl OnlineAllocator for RoundedGreedy {
    fn num_agents(&self) -> usize {
        self.decision_utilities.len()
    }

    fn allocate(&mut self, item: &Item) -> Result<(Vec<f64>, Vec<WaterfillStep>)> {
        let mut column = vec![0.0; self.num_agents()];
        let mut steps = Vec::with_capacity(self.levels);
        for sub in round_item_levels(item, self.levels) {
            let anticipated = self.decision_utilities.iter().map(KahanSum::value).collect();
            let step = WaterfillStep::solve(anticipated, sub.values, sub.supply)?;
            for (i, &z) in step.result.z.iter().enumerate() {
                column[i] += z;
                self.decision_utilities[i].add(z * step.values[i]);
            }
            steps.push(step);
        }
        Ok((column, steps))
    }

    fn summary(&self) -> AlgorithmSummary {
        AlgorithmSummary::Rounded {
            bound: self.bound,
            levels: self.levels,
            level_cap_hit: self.level_cap_hit,
            decision_utilities: self.decision_utilities.iter().map(KahanSum::value).collect(),
        }
    }
}

/// Greedy with Rounded Values for a known impartiality bound `mu >= 1`.
pub fn rounded_greedy(inst: &Instance, mu: f64) -> Result<RunTrace> {
    let mut alg = RoundedGreedy::new(inst.num_agents(), ImpartialityBound::Known(mu), usize::MAX)?;
    run_online(inst, &mut alg)
}

/// Greedy with Rounded Values for the guess `mu = 2^(2^k)`, at most `level_cap` levels.
pub fn rounded_greedy_with_guess(inst: &Instance, k: u32, level_cap: usize) -> Result<RunTrace> {
    let mut alg = RoundedGreedy::new(inst.num_agents(), ImpartialityBound::Guessed(k), level_cap)?;
    let mut trace = run_online(inst, &mut alg)?;
    trace.guess = Some(GuessSample::new(k));
    Ok(trace)
}

/// Greedy with Rounded Values with `k` drawn by [`sample_guess`].
pub fn rounded_greedy_guessed(inst: &Instance, seed: u64, level_cap: usize) -> Result<RunTrace> {
    rounded_greedy_with_guess(inst, sample_guess(seed).k, level_cap)
}

/// Image of an allocation of the original items on the sub-item instance.
///
/// Agent `i`'s share `x_it` is moved, scaled by `1/J`, onto the single level
/// `l` with `vbar/2^l <= v_it < vbar/2^(l-1)` (level 1 also takes `v_it = vbar`).
/// Values below `vbar/2^J` have no level and their share is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SubItemImage {
    pub levels: usize,
    /// `level[t][i]`: the level agent `i` lands on for item `t`, if any.
    pub level: Vec<Vec<Option<usize>>>,
    /// `contribution[t][i] = x'_{i(t,l)} * vbar_t / 2^l`.
    pub contribution: Vec<Vec<f64>>,
    /// Per-agent utility for the mapped sub-item allocation.
    pub utilities: Vec<f64>,
}

pub fn subitem_image(inst: &Instance, alloc: &Allocation, mu: f64) -> Result<SubItemImage> {
    alloc.check_dimensions(inst)?;
    if mu.is_nan() || mu < 1.0 {
        return Err(Error::Precondition(format!("impartiality bound {mu} must be at least 1")));
    }
    let levels = levels_for(mu);
    let n = inst.num_agents();
    let mut level = Vec::with_capacity(inst.num_items());
    let mut contribution = Vec::with_capacity(inst.num_items());
    let mut acc = vec![KahanSum::default(); n];
    for (t, item) in inst.items().iter().enumerate() {
        let top = item.max_value();
        let mut lv = vec![None; n];
        let mut ct = vec![0.0; n];
        for i in 0..n {
            let v = item.values[i];
            if v == 0.0 {
                continue;
            }
            let mut threshold = top;
            for j in 1..=levels {
                threshold *= 0.5;
                if v >= threshold {
                    lv[i] = Some(j);
                    ct[i] = alloc.get(i, t) / levels as f64 * threshold;
                    break;
                }
            }
            acc[i].add(ct[i]);
        }
        level.push(lv);
        contribution.push(ct);
    }
    Ok(SubItemImage { levels, level, contribution, utilities: acc.iter().map(KahanSum::value).collect() })
}

impl SubItemImage {
    /// Largest relative overuse of any sub-item's supply `s_t / J`.
    pub fn max_overrun(&self, inst: &Instance, alloc: &Allocation) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (t, item) in inst.items().iter().enumerate() {
            let cap = item.supply / self.levels as f64;
            for j in 1..=self.levels {
                let used: f64 = (0..inst.num_agents())
                    .filter(|&i| self.level[t][i] == Some(j))
                    .map(|i| alloc.get(i, t) / self.levels as f64)
                    .sum();
                worst = worst.max((used - cap) / cap);
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::online::myopic_greedy;

    #[test]
    fn thresholds_for_mu_four() {
        let item = Item::new(2.0, vec![8.0, 3.0, 0.0]);
        let subs = round_item(&item, 4.0).unwrap();
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0], SubItem { level: 1, supply: 1.0, values: vec![4.0, 0.0, 0.0] });
        assert_eq!(subs[1], SubItem { level: 2, supply: 1.0, values: vec![2.0, 2.0, 0.0] });
    }

    #[test]
    fn single_level_for_small_mu() {
        let item = Item::new(1.0, vec![8.0, 4.0, 3.9]);
        for mu in [1.0, 1.5, 2.0] {
            let subs = round_item(&item, mu).unwrap();
            assert_eq!(subs.len(), 1);
            assert_eq!(subs[0].values, vec![4.0, 4.0, 0.0]);
        }
    }

    #[test]
    fn top_agent_present_at_every_level() {
        let item = Item::new(1.0, vec![0.3, 5.0, 1.0]);
        for sub in round_item(&item, 1000.0).unwrap() {
            assert!(sub.values[1] > 0.0);
        }
    }

    #[test]
    fn zero_item_has_no_subitems() {
        assert!(round_item(&Item::new(1.0, vec![0.0, 0.0]), 4.0).unwrap().is_empty());
        assert!(round_item(&Item::new(1.0, vec![1.0]), 0.5).is_err());
    }

    #[test]
    fn level_counts() {
        assert_eq!(levels_for(1.0), 1);
        assert_eq!(levels_for(2.0), 1);
        assert_eq!(levels_for(2.5), 2);
        assert_eq!(levels_for(16.0), 4);
        assert_eq!(levels_for(17.0), 5);
        assert_eq!(ImpartialityBound::Guessed(2).levels(64), (4, false));
        assert_eq!(ImpartialityBound::Guessed(6).levels(64), (64, false));
        assert_eq!(ImpartialityBound::Guessed(7).levels(64), (64, true));
        assert_eq!(ImpartialityBound::Guessed(200).levels(64), (64, true));
    }

    #[test]
    fn binary_values_reproduce_myopic() {
        let inst = Instance::new(
            3,
            vec![
                Item::new(1.0, vec![0.7, 0.7, 0.0]),
                Item::new(2.0, vec![0.0, 0.3, 0.3]),
                Item::new(1.0, vec![0.9, 0.0, 0.9]),
                Item::new(0.5, vec![0.2, 0.2, 0.2]),
            ],
        )
        .unwrap();
        let rounded = rounded_greedy(&inst, 2.0).unwrap();
        let myopic = myopic_greedy(&inst).unwrap();
        assert_eq!(rounded.allocation, myopic.allocation);
    }

    #[test]
    fn guess_zero_matches_mu_two() {
        let inst = Instance::new(2, vec![Item::new(1.0, vec![1.0, 0.6]), Item::new(1.0, vec![0.2, 1.0])]).unwrap();
        let known = rounded_greedy(&inst, 2.0).unwrap();
        let guessed = rounded_greedy_with_guess(&inst, 0, DEFAULT_LEVEL_CAP).unwrap();
        assert_eq!(known.allocation, guessed.allocation);
    }

    #[test]
    fn cap_is_recorded() {
        let inst = Instance::new(2, vec![Item::new(1.0, vec![1.0, 0.6])]).unwrap();
        let trace = rounded_greedy_with_guess(&inst, 7, DEFAULT_LEVEL_CAP).unwrap();
        match trace.summary {
            AlgorithmSummary::Rounded { levels, level_cap_hit, .. } => {
                assert_eq!(levels, 64);
                assert!(level_cap_hit);
            }
            _ => unreachable!(),
        }
        assert_eq!(trace.records[0].steps.len(), 64);
    }

    #[test]
    fn single_agent_rounded_utility_envelope() {
        let inst = Instance::new(1, vec![Item::new(2.0, vec![3.0]), Item::new(1.0, vec![5.0])]).unwrap();
        for mu in [2.0, 8.0, 1e6] {
            let trace = rounded_greedy(&inst, mu).unwrap();
            assert!((trace.allocation.get(0, 0) - 2.0).abs() < 1e-12);
            let AlgorithmSummary::Rounded { decision_utilities, levels, .. } = &trace.summary else { unreachable!() };
            let j = *levels as f64;
            assert!(decision_utilities[0] >= 11.0 / (2.0 * j) * (1.0 - 1e-12));
            assert!(decision_utilities[0] <= 11.0 / j);
        }
    }

    #[test]
    fn image_lands_on_one_level() {
        let inst = Instance::new(3, vec![Item::new(1.0, vec![8.0, 3.0, 1.0])]).unwrap();
        let x = Allocation::from_columns(3, vec![vec![0.5, 0.3, 0.2]]).unwrap();
        let img = subitem_image(&inst, &x, 4.0).unwrap();
        assert_eq!(img.level[0], vec![Some(1), Some(2), None]);
        assert_eq!(img.contribution[0], vec![0.5 / 2.0 * 4.0, 0.3 / 2.0 * 2.0, 0.0]);
        assert!(img.max_overrun(&inst, &x) <= 0.0);
    }
}
