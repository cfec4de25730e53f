//! Experiment orchestration: algorithms x instances x seeds, with the offline
//! optimum computed once per instance.

use std::time::Instant;

use anyhow::Context;
use nash_stream_core::generators::GeneratorSpec;
use nash_stream_core::metrics::{balance_ratio, competitive_ratio, impartiality_ratio};
use nash_stream_core::online::{
    evaluate_guessed, half_and_half_guessed, rounded_greedy_guessed, GuessedFamily, DEFAULT_LEVEL_CAP,
};
use nash_stream_core::{
    half_and_half, myopic_greedy, rounded_greedy, solve_eg, EgOptions, EgSolution, Error, Instance, RunTrace,
};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::report::{half_and_half_bound, staircase_bound, Bound, ReportRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum AlgorithmKind {
    HalfAndHalf,
    HalfAndHalfGuessed,
    Myopic,
    Rounded,
    RoundedGuessed,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] = [
        AlgorithmKind::HalfAndHalf,
        AlgorithmKind::HalfAndHalfGuessed,
        AlgorithmKind::Myopic,
        AlgorithmKind::Rounded,
        AlgorithmKind::RoundedGuessed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::HalfAndHalf => "half-and-half",
            AlgorithmKind::HalfAndHalfGuessed => "half-and-half-guessed",
            AlgorithmKind::Myopic => "myopic",
            AlgorithmKind::Rounded => "rounded",
            AlgorithmKind::RoundedGuessed => "rounded-guessed",
        }
    }

    pub fn is_guessed(self) -> bool {
        matches!(self, AlgorithmKind::HalfAndHalfGuessed | AlgorithmKind::RoundedGuessed)
    }
}

/// Algorithm parameters; which ones are required depends on the algorithm.
#[derive(Debug, Clone, Copy)]
pub struct AlgorithmParams {
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub seed: Option<u64>,
    pub level_cap: usize,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        Self { lambda: None, mu: None, seed: None, level_cap: DEFAULT_LEVEL_CAP }
    }
}

fn required<T>(value: Option<T>, flag: &str, kind: AlgorithmKind) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("{} requires --{flag}", kind.name())))
}

pub fn run_algorithm(inst: &Instance, kind: AlgorithmKind, params: &AlgorithmParams) -> CliResult<RunTrace> {
    let trace = match kind {
        AlgorithmKind::HalfAndHalf => half_and_half(inst, required(params.lambda, "lambda", kind)?)?,
        AlgorithmKind::HalfAndHalfGuessed => half_and_half_guessed(inst, required(params.seed, "seed", kind)?)?,
        AlgorithmKind::Myopic => myopic_greedy(inst)?,
        AlgorithmKind::Rounded => rounded_greedy(inst, required(params.mu, "mu", kind)?)?,
        AlgorithmKind::RoundedGuessed => {
            rounded_greedy_guessed(inst, required(params.seed, "seed", kind)?, params.level_cap)?
        }
    };
    Ok(trace)
}

/// Per-instance columns shared by every row of that instance.
#[derive(Debug, Clone)]
pub struct InstanceContext {
    pub id: String,
    pub generator: String,
    pub params: String,
    pub num_agents: usize,
    pub lambda_star: f64,
    pub mu_star: f64,
    pub optimum: EgSolution,
    pub converged: bool,
    pub staircase_n: Option<usize>,
}

impl InstanceContext {
    /// Solves the offline benchmark; a solver that hits its cap keeps its best iterate.
    pub fn new(inst: &Instance, generator: &str, params: &str, eg: &EgOptions) -> CliResult<Self> {
        let lambda_star = balance_ratio(inst).map_err(|e| CliError::Other(e.into()))?;
        let (optimum, converged) = match solve_eg(inst, eg) {
            Ok(sol) => (sol, true),
            Err(Error::Nonconvergence { best, .. }) => (*best, false),
            Err(e) => return Err(CliError::Other(e.into())),
        };
        let mu_star = impartiality_ratio(&optimum).map_err(|e| CliError::Other(e.into()))?;
        Ok(Self {
            id: format!("{:016x}", inst.fingerprint()),
            generator: generator.to_string(),
            params: params.to_string(),
            num_agents: inst.num_agents(),
            lambda_star,
            mu_star,
            optimum,
            converged,
            staircase_n: None,
        })
    }

    pub fn row(&self, algorithm: String, seed: Option<u64>, k: Option<u32>, alg_nw: f64) -> ReportRow {
        let opt_nw = self.optimum.nash_welfare();
        let (ratio, inconsistent) = match competitive_ratio(opt_nw, alg_nw) {
            Ok(r) => (r, false),
            Err(_) => (opt_nw / alg_nw, true),
        };
        let status = match (self.converged, inconsistent) {
            (false, _) => "eg-nonconverged",
            (true, true) => "inconsistent",
            (true, false) => "ok",
        };
        ReportRow {
            instance_id: self.id.clone(),
            generator: self.generator.clone(),
            params: self.params.clone(),
            algorithm,
            seed,
            k,
            alg_nw,
            opt_nw,
            fw_gap: self.optimum.fw_gap,
            competitive_ratio: ratio,
            lambda_star: self.lambda_star,
            mu_star: self.mu_star,
            bound: None,
            bound_satisfied: None,
            wall_time_ms: None,
            status: status.to_string(),
        }
    }

    /// Theoretical bound for a single run of `kind` with the given balance bound.
    pub fn bound_for(&self, kind: AlgorithmKind, lambda: Option<f64>) -> Option<Bound> {
        match kind {
            AlgorithmKind::HalfAndHalf => lambda.map(|l| Bound::Upper(half_and_half_bound(l, self.num_agents))),
            AlgorithmKind::Myopic => self.staircase_n.map(|n| Bound::Lower(staircase_bound(n))),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub instances: Vec<GeneratorSpec>,
    pub algorithms: Vec<AlgorithmKind>,
    /// Seeds for the guessed algorithms when guesses are sampled.
    pub seeds: Vec<u64>,
    /// Enumerate guesses `k = 0..=K` instead of sampling them.
    pub enumerate_k: Option<u32>,
    pub level_cap: usize,
    pub eg: EgOptions,
    pub timing: bool,
    pub audit: bool,
}

impl SuiteConfig {
    /// The default desk suite: balanced and binary random families plus the staircase instances.
    pub fn desk() -> Self {
        let mut instances = Vec::new();
        for agents in [2, 4, 8] {
            for lambda in [1.0, 2.0, 16.0] {
                for seed in 0..4 {
                    instances.push(GeneratorSpec::RandomBalanced { agents, items: 50, lambda, seed });
                }
            }
        }
        for agents in [4, 8] {
            for seed in 0..4 {
                instances.push(GeneratorSpec::RandomBinary { agents, items: 30, density: 0.5, seed });
            }
        }
        for n in 3..=6 {
            instances.push(GeneratorSpec::HardTable2 { n });
            instances.push(GeneratorSpec::HardTable2Binary { n });
        }
        instances.push(GeneratorSpec::Copies { base: Box::new(GeneratorSpec::HardTable2 { n: 3 }), copies: 3 });
        Self::with_instances(instances)
    }

    /// A few small instances, for quick checks.
    pub fn smoke() -> Self {
        Self::with_instances(vec![
            GeneratorSpec::RandomBalanced { agents: 3, items: 10, lambda: 2.0, seed: 0 },
            GeneratorSpec::RandomBinary { agents: 3, items: 10, density: 0.5, seed: 0 },
            GeneratorSpec::HardTable2 { n: 3 },
        ])
    }

    pub fn empty() -> Self {
        Self::with_instances(Vec::new())
    }

    fn with_instances(instances: Vec<GeneratorSpec>) -> Self {
        Self {
            instances,
            algorithms: AlgorithmKind::ALL.to_vec(),
            seeds: (0..4).collect(),
            enumerate_k: None,
            level_cap: DEFAULT_LEVEL_CAP,
            eg: EgOptions::default(),
            timing: false,
            audit: true,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOutcome {
    pub rows: Vec<ReportRow>,
    pub waterfill_steps: usize,
    pub min_gain_residual: f64,
    /// One message per failed audit, naming the invariant.
    pub audit_failures: Vec<String>,
    pub nonconverged: usize,
}

impl SuiteOutcome {
    fn absorb(&mut self, other: SuiteOutcome) {
        self.rows.extend(other.rows);
        self.waterfill_steps += other.waterfill_steps;
        self.min_gain_residual = self.min_gain_residual.min(other.min_gain_residual);
        self.audit_failures.extend(other.audit_failures);
        self.nonconverged += other.nonconverged;
    }
}

struct Cell<'a> {
    cfg: &'a SuiteConfig,
    inst: &'a Instance,
    ctx: &'a InstanceContext,
    out: SuiteOutcome,
}

impl Cell<'_> {
    fn record(&mut self, label: &str, trace: &RunTrace) {
        self.out.waterfill_steps += trace.num_steps();
        self.out.min_gain_residual = self.out.min_gain_residual.min(trace.min_gain_residual());
        if self.cfg.audit {
            if let Err(v) = trace.audit(self.inst) {
                self.out.audit_failures.push(format!("{} {} on {}: {v}", self.ctx.id, label, self.ctx.params));
            }
        }
    }

    fn push(&mut self, mut row: ReportRow, started: Instant) {
        if self.cfg.timing {
            row.wall_time_ms = Some(started.elapsed().as_secs_f64() * 1e3);
        }
        self.out.rows.push(row);
    }

    fn run(&mut self, kind: AlgorithmKind) -> CliResult<()> {
        let name = kind.name();
        let params = AlgorithmParams {
            lambda: Some(self.ctx.lambda_star),
            mu: Some(self.ctx.mu_star.max(1.0)),
            seed: None,
            level_cap: self.cfg.level_cap,
        };
        if !kind.is_guessed() {
            let started = Instant::now();
            let trace = run_algorithm(self.inst, kind, &params)?;
            self.record(name, &trace);
            let row = self.ctx.row(name.to_string(), None, None, trace.nash_welfare());
            self.push(row.with_bound(self.ctx.bound_for(kind, params.lambda)), started);
            return Ok(());
        }
        if let Some(max_k) = self.cfg.enumerate_k {
            let started = Instant::now();
            let family = match kind {
                AlgorithmKind::HalfAndHalfGuessed => GuessedFamily::HalfAndHalf,
                _ => GuessedFamily::Rounded { level_cap: self.cfg.level_cap },
            };
            let eval = evaluate_guessed(self.inst, family, max_k)?;
            for run in &eval.runs {
                self.record(name, &run.trace);
                let row = self.ctx.row(name.to_string(), None, Some(run.sample.k), run.nash_welfare);
                self.push(row, started);
            }
            let mixture = self.ctx.row(format!("{name}/mixture"), None, None, eval.mixture_nash_welfare);
            self.push(mixture, started);
            let lower = self.ctx.row(format!("{name}/expected-lower-bound"), None, None, eval.expected_lower_bound);
            self.push(lower, started);
            return Ok(());
        }
        for &seed in &self.cfg.seeds {
            let started = Instant::now();
            let trace = run_algorithm(self.inst, kind, &AlgorithmParams { seed: Some(seed), ..params })?;
            self.record(name, &trace);
            let k = trace.guess.map(|g| g.k);
            let row = self.ctx.row(name.to_string(), Some(seed), k, trace.nash_welfare());
            self.push(row, started);
        }
        Ok(())
    }
}

fn run_instance(cfg: &SuiteConfig, spec: &GeneratorSpec) -> CliResult<SuiteOutcome> {
    let inst = spec.generate().with_context(|| format!("generating {}", spec.params()))?;
    let mut ctx = InstanceContext::new(&inst, spec.family(), &spec.params(), &cfg.eg)?;
    ctx.staircase_n = spec.staircase_n();
    let mut cell = Cell {
        cfg,
        inst: &inst,
        ctx: &ctx,
        out: SuiteOutcome { min_gain_residual: f64::INFINITY, ..SuiteOutcome::default() },
    };
    if !ctx.converged {
        cell.out.nonconverged += 1;
    }
    for &kind in &cfg.algorithms {
        cell.run(kind)?;
    }
    Ok(cell.out)
}

/// Runs every cell on the current rayon pool; rows come back in suite order.
pub fn run_suite(cfg: &SuiteConfig) -> CliResult<SuiteOutcome> {
    let parts: Vec<CliResult<SuiteOutcome>> = cfg.instances.par_iter().map(|spec| run_instance(cfg, spec)).collect();
    let mut total = SuiteOutcome { min_gain_residual: f64::INFINITY, ..SuiteOutcome::default() };
    for part in parts {
        total.absorb(part?);
    }
    Ok(total)
}
