//! Command-line parsing and the subcommand handlers.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nash_stream_core::generators::GeneratorSpec;
use nash_stream_core::metrics::RatioReport;
use nash_stream_core::{solve_eg, EgOptions, Error};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::io::{read_instance, write_allocation, write_allocation_file, write_instance, NumberFormat};
use crate::report::{ReportRow, ReportWriter};
use crate::suite::{run_algorithm, run_suite, AlgorithmKind, AlgorithmParams, InstanceContext, SuiteConfig};

#[derive(Debug, Parser)]
#[command(
    name = "nash-stream",
    version,
    about = "Online Nash welfare allocation: instances, runs and competitive-ratio reports"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an instance file and print its balance ratio.
    Gen(GenArgs),
    /// Stream an instance through one online algorithm.
    Run(RunArgs),
    /// Run an experiment suite and write the report CSV.
    Bench(BenchArgs),
    /// Print the balance and impartiality ratios of an instance as JSON.
    Ratios(RatiosArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    HardTable2,
    HardTable2Binary,
    Copies,
    RandomBalanced,
    RandomBinary,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    family: Family,
    /// Staircase size (hard-table2 families).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    items: Option<usize>,
    /// Target balance ratio (random-balanced).
    #[arg(long)]
    lambda: Option<f64>,
    /// Membership probability (random-binary).
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Base family for copies.
    #[arg(long)]
    base: Option<Family>,
    /// Number of copies for copies.
    #[arg(long)]
    copies: Option<usize>,
    /// Output path.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    format: NumberFormat,
    /// Also solve the offline optimum and print the impartiality ratio.
    #[arg(long)]
    solve: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    alg: AlgorithmKind,
    /// Balance bound for half-and-half (at least 1).
    #[arg(long)]
    lambda: Option<f64>,
    /// Impartiality bound for rounded (at least 1).
    #[arg(long)]
    mu: Option<f64>,
    /// Seed for the guessed algorithms.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = nash_stream_core::online::DEFAULT_LEVEL_CAP)]
    level_cap: usize,
    /// Where to write the allocation CSV.
    #[arg(long)]
    allocation: Option<PathBuf>,
    /// Where to write the report CSV (stdout if absent).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Check every trace invariant; exit 3 on a violation.
    #[arg(long)]
    audit: bool,
    /// Exit 4 if the offline solver does not converge.
    #[arg(long)]
    strict: bool,
    /// Fill the wall_time_ms column.
    #[arg(long)]
    timing: bool,
    #[arg(long, default_value_t = EgOptions::default().tol)]
    tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteName {
    Desk,
    Smoke,
    None,
}

fn parse_enumerate(s: &str) -> Result<u32, String> {
    let upper = s.strip_prefix("0..").map(|r| r.strip_prefix('=').unwrap_or(r)).unwrap_or(s);
    upper.parse().map_err(|_| format!("expected K or 0..K, got {s:?}"))
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value_t = SuiteName::Desk)]
    suite: SuiteName,
    /// Restrict to these algorithms (repeatable; default all).
    #[arg(long = "alg", value_enum)]
    algorithms: Vec<AlgorithmKind>,
    /// Number of seeds for guessed algorithms.
    #[arg(long, default_value_t = 4)]
    seeds: u64,
    /// Enumerate guesses 0..K for guessed algorithms instead of sampling.
    #[arg(long, value_parser = parse_enumerate)]
    enumerate_k: Option<u32>,
    /// Report path (stdout if absent).
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    timing: bool,
    /// Exit 4 if the offline solver fails to converge on any instance.
    #[arg(long)]
    strict: bool,
    #[arg(long, env = "NASH_STREAM_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct RatiosArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    run(std::env::args_os())
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_broken_pipe() => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            e.into()
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run_one(a),
        Command::Bench(a) => bench(a),
        Command::Ratios(a) => ratios(a),
    }
}

fn need<T>(value: Option<T>, flag: &str, family: Family) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("{} requires --{flag}", family_name(family))))
}

fn family_name(f: Family) -> String {
    f.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

fn spec_for(family: Family, a: &GenArgs) -> CliResult<GeneratorSpec> {
    Ok(match family {
        Family::HardTable2 => GeneratorSpec::HardTable2 { n: need(a.n, "n", family)? },
        Family::HardTable2Binary => GeneratorSpec::HardTable2Binary { n: need(a.n, "n", family)? },
        Family::Copies => {
            let base = need(a.base, "base", family)?;
            if base == Family::Copies {
                return Err(CliError::Usage("copies cannot nest".into()));
            }
            GeneratorSpec::Copies { base: Box::new(spec_for(base, a)?), copies: need(a.copies, "copies", family)? }
        }
        Family::RandomBalanced => GeneratorSpec::RandomBalanced {
            agents: need(a.agents, "agents", family)?,
            items: need(a.items, "items", family)?,
            lambda: need(a.lambda, "lambda", family)?,
            seed: need(a.seed, "seed", family)?,
        },
        Family::RandomBinary => GeneratorSpec::RandomBinary {
            agents: need(a.agents, "agents", family)?,
            items: need(a.items, "items", family)?,
            density: need(a.density, "density", family)?,
            seed: need(a.seed, "seed", family)?,
        },
    })
}

fn gen(a: GenArgs) -> CliResult<()> {
    let spec = spec_for(a.family, &a)?;
    let inst = spec.generate().map_err(|e| match e {
        Error::Precondition(m) | Error::Refused(m) => CliError::Usage(m),
        other => CliError::Other(other.into()),
    })?;
    write_instance(&a.out, &inst, a.format)?;
    let lambda = nash_stream_core::balance_ratio(&inst).map_err(|e| CliError::Other(e.into()))?;
    writeln!(io::stdout(), "lambda_star={lambda:?}").context("writing stdout")?;
    if a.solve {
        let eg = solve_eg(&inst, &EgOptions::default()).map_err(|e| CliError::Other(e.into()))?;
        let mu = nash_stream_core::impartiality_ratio(&eg).map_err(|e| CliError::Other(e.into()))?;
        writeln!(io::stdout(), "mu_star={mu:?} fw_gap={:?}", eg.fw_gap).context("writing stdout")?;
    }
    Ok(())
}

fn report_sink(path: Option<&PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot write {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_rows(path: Option<&PathBuf>, rows: &[ReportRow]) -> CliResult<()> {
    let mut w = ReportWriter::new(report_sink(path)?)?;
    for row in rows {
        w.write(row)?;
    }
    w.finish()?;
    Ok(())
}

fn run_one(a: RunArgs) -> CliResult<()> {
    let inst = read_instance(&a.instance)?;
    let params = AlgorithmParams { lambda: a.lambda, mu: a.mu, seed: a.seed, level_cap: a.level_cap };
    let started = std::time::Instant::now();
    let trace = run_algorithm(&inst, a.alg, &params)?;
    let elapsed = started.elapsed();

    let name = a.instance.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let ctx = InstanceContext::new(&inst, "file", &format!("path={name}"), &EgOptions::with_tol(a.tol))?;
    let seed = a.alg.is_guessed().then_some(a.seed).flatten();
    let mut row = ctx
        .row(a.alg.name().to_string(), seed, trace.guess.map(|g| g.k), trace.nash_welfare())
        .with_bound(ctx.bound_for(a.alg, a.lambda));
    if a.timing {
        row.wall_time_ms = Some(elapsed.as_secs_f64() * 1e3);
    }

    match &a.allocation {
        Some(p) => write_allocation_file(p, &trace.allocation)?,
        None if a.report.is_some() => write_allocation(io::stdout().lock(), &trace.allocation)?,
        None => {}
    }
    write_rows(a.report.as_ref(), std::slice::from_ref(&row))?;

    if a.audit {
        trace.audit(&inst).map_err(|v| CliError::Audit(v.to_string()))?;
    }
    if a.strict && !ctx.converged {
        return Err(CliError::Nonconvergence(format!("offline gap {:e} above {:e}", ctx.optimum.fw_gap, a.tol)));
    }
    Ok(())
}

fn bench(a: BenchArgs) -> CliResult<()> {
    let mut cfg = match a.suite {
        SuiteName::Desk => SuiteConfig::desk(),
        SuiteName::Smoke => SuiteConfig::smoke(),
        SuiteName::None => SuiteConfig::empty(),
    };
    if !a.algorithms.is_empty() {
        cfg.algorithms = AlgorithmKind::ALL.into_iter().filter(|k| a.algorithms.contains(k)).collect();
    }
    cfg.seeds = (0..a.seeds).collect();
    cfg.enumerate_k = a.enumerate_k;
    cfg.timing = a.timing;

    let outcome = match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building worker pool")?
            .install(|| run_suite(&cfg))?,
        None => run_suite(&cfg)?,
    };
    write_rows(a.out.as_ref(), &outcome.rows)?;
    eprintln!(
        "{} rows, {} waterfill steps, min gain residual {:e}",
        outcome.rows.len(),
        outcome.waterfill_steps,
        outcome.min_gain_residual
    );
    if let Some(first) = outcome.audit_failures.first() {
        return Err(CliError::Audit(format!("{} failure(s); first: {first}", outcome.audit_failures.len())));
    }
    if a.strict && outcome.nonconverged > 0 {
        return Err(CliError::Nonconvergence(format!("{} instance(s) flagged", outcome.nonconverged)));
    }
    Ok(())
}

#[derive(Serialize)]
struct RatiosJson {
    balance_ratio: f64,
    impartiality_ratio: f64,
    impartiality_fw_gap: f64,
    monopolist_utilities: Vec<f64>,
    optimal_utilities: Vec<f64>,
}

fn ratios(a: RatiosArgs) -> CliResult<()> {
    let inst = read_instance(&a.instance)?;
    let eg = solve_eg(&inst, &EgOptions::with_tol(a.tol)).map_err(|e| CliError::Other(e.into()))?;
    let report = RatioReport::new(&inst, &eg).map_err(|e| CliError::Other(e.into()))?;
    let out = RatiosJson {
        balance_ratio: report.balance_ratio,
        impartiality_ratio: report.impartiality_ratio,
        impartiality_fw_gap: report.impartiality_fw_gap,
        monopolist_utilities: report.monopolist_utilities.0,
        optimal_utilities: eg.utilities.0,
    };
    writeln!(io::stdout(), "{}", serde_json::to_string_pretty(&out).context("encoding ratios")?)
        .context("writing stdout")?;
    Ok(())
}
