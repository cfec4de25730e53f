use crate::error::{Error, Result};
use crate::model::{Instance, Item, KahanSum};

use super::{run_online, sample_guess, AlgorithmSummary, GuessSample, OnlineAllocator, RunTrace, WaterfillStep};

/// Upper bound on the balance ratio handed to Half-and-Half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BalanceBound {
    Known(f64),
    /// `lambda = 2^(2^k)`.
    Guessed(u32),
}

impl BalanceBound {
    /// Largest `k` for which `2^(2^k)` is a finite double.
    const EXACT_K: u32 = 9;

    /// `1 / (2 lambda N^2)`.
    ///
    /// For guesses with `k <= 9`, `lambda` is an exact power of two and this
    /// matches `Known(lambda)` bit for bit. Larger guesses go through log space
    /// and underflow to zero.
    pub fn coefficient(&self, num_agents: usize) -> f64 {
        let n = num_agents as f64;
        match *self {
            Self::Known(lambda) => 1.0 / (2.0 * lambda * n * n),
            Self::Guessed(k) if k <= Self::EXACT_K => {
                let lambda = 2f64.powi(1 << k);
                1.0 / (2.0 * lambda * n * n)
            }
            Self::Guessed(k) => {
                let log_lambda = 2f64.powi(k.min(1023) as i32) * std::f64::consts::LN_2;
                (-log_lambda - (2.0 * n * n).ln()).exp()
            }
        }
    }

    /// Whether an instance with balance ratio `lambda_star` is `lambda`-balanced.
    pub fn covers(&self, lambda_star: f64) -> bool {
        match *self {
            Self::Known(lambda) => lambda >= lambda_star,
            Self::Guessed(k) => k > Self::EXACT_K || 2f64.powi(1 << k) >= lambda_star,
        }
    }

    /// `ln lambda`.
    pub fn ln(&self) -> f64 {
        match *self {
            Self::Known(lambda) => lambda.ln(),
            Self::Guessed(k) => 2f64.powi(k.min(1023) as i32) * std::f64::consts::LN_2,
        }
    }
}

/// Half of each item is split equally; the other half goes to the water-filling
/// optimum against anticipated utilities
/// `u'_it = coefficient * sum_j sum_{t' <= t} v_jt' s_t' + sum_{t' < t} v_it' z_it'`.
#[derive(Debug, Clone)]
pub struct HalfAndHalf {
    bound: BalanceBound,
    coefficient: f64,
    cumulative_monopolist: KahanSum,
    second_half: Vec<KahanSum>,
}

impl HalfAndHalf {
    pub fn new(num_agents: usize, bound: BalanceBound) -> Result<Self> {
        if let BalanceBound::Known(lambda) = bound {
            if lambda.is_nan() || lambda < 1.0 {
                return Err(Error::Precondition(format!("balance bound {lambda} must be at least 1")));
            }
        }
        Ok(Self {
            bound,
            coefficient: bound.coefficient(num_agents),
            cumulative_monopolist: KahanSum::default(),
            second_half: vec![KahanSum::default(); num_agents],
        })
    }
}

impl OnlineAllocator for HalfAndHalf {
    fn num_agents(&self) -> usize {
        self.second_half.len()
    }

    fn allocate(&mut self, item: &Item) -> Result<(Vec<f64>, Vec<WaterfillStep>)> {
        let n = self.num_agents();
        for &v in &item.values {
            self.cumulative_monopolist.add(v * item.supply);
        }
        // The monopolist sum already includes this item; the second halves do not.
        let shared = self.coefficient * self.cumulative_monopolist.value();
        let anticipated: Vec<f64> = self.second_half.iter().map(|s| shared + s.value()).collect();
        let step = WaterfillStep::solve(anticipated, item.values.clone(), item.supply / 2.0)?;

        let equal = item.supply / (2 * n) as f64;
        let column = step.result.z.iter().map(|z| equal + z).collect();
        for ((acc, &z), &v) in self.second_half.iter_mut().zip(&step.result.z).zip(&item.values) {
            acc.add(v * z);
        }
        Ok((column, vec![step]))
    }

    fn summary(&self) -> AlgorithmSummary {
        AlgorithmSummary::HalfAndHalf {
            bound: self.bound,
            coefficient: self.coefficient,
            cumulative_monopolist: self.cumulative_monopolist.value(),
            second_half_utilities: self.second_half.iter().map(KahanSum::value).collect(),
        }
    }
}

/// Half-and-Half with a known balance bound `lambda >= 1`.
pub fn half_and_half(inst: &Instance, lambda: f64) -> Result<RunTrace> {
    let mut alg = HalfAndHalf::new(inst.num_agents(), BalanceBound::Known(lambda))?;
    run_online(inst, &mut alg)
}

/// Half-and-Half with the guess `lambda = 2^(2^k)` fixed by the caller.
pub fn half_and_half_with_guess(inst: &Instance, k: u32) -> Result<RunTrace> {
    let mut alg = HalfAndHalf::new(inst.num_agents(), BalanceBound::Guessed(k))?;
    let mut trace = run_online(inst, &mut alg)?;
    trace.guess = Some(GuessSample::new(k));
    Ok(trace)
}

/// Half-and-Half with `k` drawn by [`sample_guess`].
pub fn half_and_half_guessed(inst: &Instance, seed: u64) -> Result<RunTrace> {
    half_and_half_with_guess(inst, sample_guess(seed).k)
}
