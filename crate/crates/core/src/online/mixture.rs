use crate::error::{Error, Result};
use crate::metrics::{nash_welfare, utilities};
use crate::model::{Allocation, Instance, UtilityVector};

use super::{guess_probability, half_and_half_with_guess, rounded_greedy_with_guess, GuessSample, RunTrace};

/// Expected allocation `sum_g p_g x^(g)` of a randomized algorithm.
///
/// Weights may sum to less than one; the missing mass is put on the last trace.
pub fn derandomize_mixture(traces: &[RunTrace], probs: &[f64]) -> Result<Allocation> {
    let Some(first) = traces.first() else {
        return Err(Error::Structure("no traces to mix".into()));
    };
    if traces.len() != probs.len() {
        return Err(Error::Structure(format!("{} traces but {} weights", traces.len(), probs.len())));
    }
    if traces.iter().any(|t| t.fingerprint != first.fingerprint) {
        return Err(Error::Structure("traces come from different instances".into()));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Precondition("weights must be finite and nonnegative".into()));
    }
    let total: f64 = probs.iter().sum();
    if total > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!("weights sum to {total} > 1")));
    }
    let mut weights = probs.to_vec();
    *weights.last_mut().expect("non-empty") += (1.0 - total).max(0.0);

    let n = first.allocation.num_agents();
    let columns = (0..first.allocation.num_items())
        .map(|t| (0..n).map(|i| traces.iter().zip(&weights).map(|(tr, w)| w * tr.allocation.get(i, t)).sum()).collect())
        .collect();
    Allocation::from_columns(n, columns)
}

/// Which guessing algorithm to enumerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuessedFamily {
    HalfAndHalf,
    Rounded { level_cap: usize },
}

#[derive(Debug, Clone)]
pub struct GuessedRun {
    pub sample: GuessSample,
    pub trace: RunTrace,
    pub nash_welfare: f64,
}

/// Exact per-guess runs for `k = 0..=max_k` and two sound summaries of the
/// randomized algorithm's welfare.
#[derive(Debug, Clone)]
pub struct GuessedEvaluation {
    pub runs: Vec<GuessedRun>,
    /// Weights actually mixed: `P(k)` with the tail mass moved onto `max_k`.
    pub weights: Vec<f64>,
    /// `sum_{k <= max_k} P(k) NW_k`, counting every larger guess as zero welfare.
    pub expected_lower_bound: f64,
    /// `sum_k weights_k NW_k`.
    pub weighted_mean: f64,
    pub mixture: Allocation,
    pub mixture_utilities: UtilityVector,
    pub mixture_nash_welfare: f64,
}

pub fn evaluate_guessed(inst: &Instance, family: GuessedFamily, max_k: u32) -> Result<GuessedEvaluation> {
    let runs = (0..=max_k)
        .map(|k| {
            let trace = match family {
                GuessedFamily::HalfAndHalf => half_and_half_with_guess(inst, k)?,
                GuessedFamily::Rounded { level_cap } => rounded_greedy_with_guess(inst, k, level_cap)?,
            };
            Ok(GuessedRun { sample: GuessSample::new(k), nash_welfare: trace.nash_welfare(), trace })
        })
        .collect::<Result<Vec<_>>>()?;

    let probs: Vec<f64> = (0..=max_k).map(guess_probability).collect();
    let expected_lower_bound = runs.iter().zip(&probs).map(|(r, p)| p * r.nash_welfare).sum();
    let mut weights = probs.clone();
    let total: f64 = probs.iter().sum();
    *weights.last_mut().expect("k = 0 always present") += 1.0 - total;
    let weighted_mean = runs.iter().zip(&weights).map(|(r, w)| w * r.nash_welfare).sum();

    let traces: Vec<RunTrace> = runs.iter().map(|r| r.trace.clone()).collect();
    let mixture = derandomize_mixture(&traces, &probs)?;
    let mixture_utilities = utilities(&mixture, inst)?;
    Ok(GuessedEvaluation {
        mixture_nash_welfare: nash_welfare(&mixture_utilities),
        runs,
        weights,
        expected_lower_bound,
        weighted_mean,
        mixture,
        mixture_utilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Item;
    use crate::online::{half_and_half, myopic_greedy};

    fn inst() -> Instance {
        Instance::new(
            3,
            vec![
                Item::new(1.0, vec![1.0, 0.5, 0.2]),
                Item::new(1.0, vec![0.1, 1.0, 0.4]),
                Item::new(2.0, vec![0.3, 0.3, 1.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_trace_is_identity() {
        let inst = inst();
        let trace = myopic_greedy(&inst).unwrap();
        let mixed = derandomize_mixture(std::slice::from_ref(&trace), &[1.0]).unwrap();
        assert_eq!(mixed, trace.allocation);
        // Residual mass goes to the last trace.
        let mixed = derandomize_mixture(std::slice::from_ref(&trace), &[0.25]).unwrap();
        assert_eq!(mixed, trace.allocation);
    }

    #[test]
    fn equal_mixture_beats_average_welfare() {
        let inst = inst();
        let a = myopic_greedy(&inst).unwrap();
        let b = half_and_half(&inst, 4.0).unwrap();
        let mixed = derandomize_mixture(&[a.clone(), b.clone()], &[0.5, 0.5]).unwrap();
        let nw = nash_welfare(&utilities(&mixed, &inst).unwrap());
        assert!(nw >= 0.5 * (a.nash_welfare() + b.nash_welfare()) - 1e-12);
        assert!(mixed.is_feasible(&inst).unwrap());
    }

    #[test]
    fn rejects_mismatched_traces() {
        let inst = inst();
        let other = inst.prefix(2).unwrap();
        let a = myopic_greedy(&inst).unwrap();
        let b = myopic_greedy(&other).unwrap();
        assert!(matches!(derandomize_mixture(&[a.clone(), b], &[0.5, 0.5]), Err(Error::Structure(_))));
        assert!(matches!(derandomize_mixture(std::slice::from_ref(&a), &[0.5, 0.5]), Err(Error::Structure(_))));
        assert!(derandomize_mixture(&[a], &[1.5]).is_err());
        assert!(derandomize_mixture(&[], &[]).is_err());
    }

    #[test]
    fn enumeration_summaries_are_ordered() {
        let inst = inst();
        for family in [GuessedFamily::HalfAndHalf, GuessedFamily::Rounded { level_cap: 64 }] {
            let eval = evaluate_guessed(&inst, family, 6).unwrap();
            assert_eq!(eval.runs.len(), 7);
            assert!((eval.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(eval.expected_lower_bound <= eval.weighted_mean);
            assert!(eval.mixture_nash_welfare >= eval.weighted_mean * (1.0 - 1e-12));
        }
    }
}
