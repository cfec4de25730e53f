//! Online allocation algorithms.
//!
//! Every algorithm implements [`OnlineAllocator`]: it is handed one item at a
//! time and must return that item's allocation before it sees the next one.
//! [`run_online`] drives an allocator over an instance and records a
//! [`RunTrace`] with every water-filling step for auditing.

mod guess;
mod half_and_half;
mod mixture;
mod myopic;
mod rounded;

pub use guess::{guess_probability, sample_guess, GuessSample, GUESS_MASS};
pub use half_and_half::{half_and_half, half_and_half_guessed, half_and_half_with_guess, BalanceBound, HalfAndHalf};
pub use mixture::{derandomize_mixture, evaluate_guessed, GuessedEvaluation, GuessedFamily, GuessedRun};
pub use myopic::{myopic_greedy, MyopicGreedy};
pub use rounded::{
    round_item, round_item_levels, rounded_greedy, rounded_greedy_guessed, rounded_greedy_with_guess, subitem_image,
    ImpartialityBound, RoundedGreedy, SubItem, SubItemImage, DEFAULT_LEVEL_CAP,
};

use std::fmt;

use crate::error::Result;
use crate::metrics::{balance_ratio, nash_welfare, utilities};
use crate::model::{Allocation, Instance, Item, KahanSum, UtilityVector, FEASIBILITY_TOLERANCE};
use crate::waterfill::{gain_lower_bound_check, waterfill, KktViolation, WaterfillResult};

/// Smallest gain-inequality residual accepted by audits.
pub const GAIN_RESIDUAL_TOLERANCE: f64 = -1e-9;

/// One call to the water-filling solver made while allocating an item.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillStep {
    pub anticipated: Vec<f64>,
    pub values: Vec<f64>,
    pub budget: f64,
    pub result: WaterfillResult,
    pub gain_residual: f64,
}

impl WaterfillStep {
    pub(crate) fn solve(anticipated: Vec<f64>, values: Vec<f64>, budget: f64) -> Result<Self> {
        let result = waterfill(&anticipated, &values, budget)?;
        let gain_residual = gain_lower_bound_check(&result, &anticipated, &values, budget);
        Ok(Self { anticipated, values, budget, result, gain_residual })
    }
}

/// Everything an algorithm did for one item.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub steps: Vec<WaterfillStep>,
    pub column: Vec<f64>,
    /// True utilities after committing this item.
    pub utilities_after: Vec<f64>,
}

/// An algorithm that allocates items one at a time, irrevocably.
pub trait OnlineAllocator {
    fn num_agents(&self) -> usize;

    /// Allocates `item`; returns the committed column and the solver calls behind it.
    fn allocate(&mut self, item: &Item) -> Result<(Vec<f64>, Vec<WaterfillStep>)>;

    /// Algorithm-specific facts to attach to the finished trace.
    fn summary(&self) -> AlgorithmSummary;
}

/// Which algorithm produced a trace, with its parameters and end state.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmSummary {
    HalfAndHalf {
        bound: BalanceBound,
        /// `1 / (2 lambda N^2)` as used, possibly underflowed to zero.
        coefficient: f64,
        /// `sum_j sum_t v_jt s_t` over the whole stream.
        cumulative_monopolist: f64,
        /// `sum_t v_it z_it`: utility from the greedily allocated halves.
        second_half_utilities: Vec<f64>,
    },
    Myopic,
    Rounded {
        bound: ImpartialityBound,
        levels: usize,
        level_cap_hit: bool,
        /// Utilities under rounded values, which drive the decisions.
        decision_utilities: Vec<f64>,
    },
}

impl AlgorithmSummary {
    pub fn name(&self) -> &'static str {
        match self {
            Self::HalfAndHalf { .. } => "half-and-half",
            Self::Myopic => "myopic",
            Self::Rounded { .. } => "rounded",
        }
    }
}

/// Full record of one online run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub summary: AlgorithmSummary,
    pub guess: Option<GuessSample>,
    pub records: Vec<StepRecord>,
    pub allocation: Allocation,
    pub utilities: UtilityVector,
    pub(crate) fingerprint: u64,
}

/// Runs `alg` over `inst`, feeding items strictly in order.
pub fn run_online<A: OnlineAllocator>(inst: &Instance, alg: &mut A) -> Result<RunTrace> {
    let n = inst.num_agents();
    let mut allocation = Allocation::empty(n);
    let mut running = vec![KahanSum::default(); n];
    let mut records = Vec::with_capacity(inst.num_items());
    for item in inst.items() {
        let (column, steps) = alg.allocate(item)?;
        for ((acc, &x), &v) in running.iter_mut().zip(&column).zip(&item.values) {
            acc.add(x * v);
        }
        records.push(StepRecord {
            steps,
            column: column.clone(),
            utilities_after: running.iter().map(KahanSum::value).collect(),
        });
        allocation.push_column(column);
    }
    Ok(RunTrace {
        summary: alg.summary(),
        guess: None,
        records,
        utilities: UtilityVector(running.iter().map(KahanSum::value).collect()),
        allocation,
        fingerprint: inst.fingerprint(),
    })
}

/// A trace invariant that failed.
#[derive(Debug, Clone, PartialEq)]
pub enum AuditViolation {
    WrongInstance,
    Infeasible { item: usize, overrun: f64 },
    Underallocated { item: usize, used: f64, supply: f64 },
    UtilityMismatch { agent: usize, traced: f64, recomputed: f64 },
    GainInequality { item: usize, step: usize, residual: f64 },
    Kkt { item: usize, step: usize, violation: KktViolation },
    Anticipation { agent: usize, utility: f64, anticipated: f64 },
}

impl AuditViolation {
    /// Short name of the invariant, for reports and exit diagnostics.
    pub fn invariant(&self) -> &'static str {
        match self {
            Self::WrongInstance => "instance",
            Self::Infeasible { .. } => "feasibility",
            Self::Underallocated { .. } => "full-allocation",
            Self::UtilityMismatch { .. } => "utility-consistency",
            Self::GainInequality { .. } => "gain-inequality",
            Self::Kkt { .. } => "waterfill-kkt",
            Self::Anticipation { .. } => "anticipation",
        }
    }
}

impl fmt::Display for AuditViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.invariant())?;
        match self {
            Self::WrongInstance => write!(f, "trace was produced on a different instance"),
            Self::Infeasible { item, overrun } => write!(f, "item {item} over-allocated by {overrun:e} (relative)"),
            Self::Underallocated { item, used, supply } => write!(f, "item {item}: allocated {used} of {supply}"),
            Self::UtilityMismatch { agent, traced, recomputed } => {
                write!(f, "agent {agent}: traced {traced}, recomputed {recomputed}")
            }
            Self::GainInequality { item, step, residual } => {
                write!(f, "item {item} step {step}: residual {residual:e}")
            }
            Self::Kkt { item, step, violation } => write!(f, "item {item} step {step}: {violation}"),
            Self::Anticipation { agent, utility, anticipated } => {
                write!(f, "agent {agent}: utility {utility} below anticipated {anticipated}")
            }
        }
    }
}

impl std::error::Error for AuditViolation {}

impl RunTrace {
    pub fn nash_welfare(&self) -> f64 {
        nash_welfare(&self.utilities)
    }

    pub fn algorithm(&self) -> &'static str {
        self.summary.name()
    }

    pub fn steps(&self) -> impl Iterator<Item = (usize, usize, &WaterfillStep)> {
        self.records.iter().enumerate().flat_map(|(t, r)| r.steps.iter().enumerate().map(move |(j, s)| (t, j, s)))
    }

    pub fn num_steps(&self) -> usize {
        self.records.iter().map(|r| r.steps.len()).sum()
    }

    pub fn min_gain_residual(&self) -> f64 {
        self.steps().map(|(_, _, s)| s.gain_residual).fold(f64::INFINITY, f64::min)
    }

    pub fn produced_on(&self, inst: &Instance) -> bool {
        self.fingerprint == inst.fingerprint()
    }

    /// Half-and-Half's end-of-stream anticipated utilities
    /// `coefficient * cumulative_monopolist + second_half_i`.
    pub fn anticipated_final(&self) -> Option<Vec<f64>> {
        match &self.summary {
            AlgorithmSummary::HalfAndHalf { coefficient, cumulative_monopolist, second_half_utilities, .. } => {
                Some(second_half_utilities.iter().map(|s| coefficient * cumulative_monopolist + s).collect())
            }
            _ => None,
        }
    }

    /// Checks every invariant that holds for all runs, plus Half-and-Half's
    /// anticipation bound when the run's balance bound covers the instance.
    pub fn audit(&self, inst: &Instance) -> Result<(), AuditViolation> {
        if !self.produced_on(inst) {
            return Err(AuditViolation::WrongInstance);
        }
        let overrun = self.allocation.max_overrun(inst).map_err(|_| AuditViolation::WrongInstance)?;
        if overrun > FEASIBILITY_TOLERANCE {
            let item = (0..inst.num_items())
                .find(|&t| {
                    let used: f64 = self.allocation.column(t).iter().sum();
                    used > inst.item(t).supply * (1.0 + FEASIBILITY_TOLERANCE)
                })
                .unwrap_or(0);
            return Err(AuditViolation::Infeasible { item, overrun });
        }
        if let AlgorithmSummary::HalfAndHalf { .. } = self.summary {
            for (t, item) in inst.items().iter().enumerate() {
                if item.is_zero() {
                    continue;
                }
                let used: f64 = self.allocation.column(t).iter().sum();
                if (used - item.supply).abs() > FEASIBILITY_TOLERANCE * item.supply {
                    return Err(AuditViolation::Underallocated { item: t, used, supply: item.supply });
                }
            }
        }

        let recomputed = utilities(&self.allocation, inst).map_err(|_| AuditViolation::WrongInstance)?;
        for (agent, (&a, &b)) in self.utilities.as_slice().iter().zip(recomputed.as_slice()).enumerate() {
            if (a - b).abs() > 1e-9 * a.abs().max(b.abs()) {
                return Err(AuditViolation::UtilityMismatch { agent, traced: a, recomputed: b });
            }
        }

        for (item, step, s) in self.steps() {
            if s.gain_residual.is_nan() || s.gain_residual < GAIN_RESIDUAL_TOLERANCE {
                return Err(AuditViolation::GainInequality { item, step, residual: s.gain_residual });
            }
            if let Err(violation) = s.result.verify(&s.anticipated, &s.values, s.budget, 1e-9) {
                return Err(AuditViolation::Kkt { item, step, violation });
            }
        }

        if let (AlgorithmSummary::HalfAndHalf { bound, .. }, Some(hat)) = (&self.summary, self.anticipated_final()) {
            let covered = balance_ratio(inst).map(|l| bound.covers(l)).unwrap_or(false);
            if covered {
                for (agent, (&u, &h)) in self.utilities.as_slice().iter().zip(&hat).enumerate() {
                    if u < h - 1e-9 * h {
                        return Err(AuditViolation::Anticipation { agent, utility: u, anticipated: h });
                    }
                }
            }
        }
        Ok(())
    }
}
