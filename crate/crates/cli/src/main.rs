//! `sccsp` command-line front end.
//!
//! Failures print a single JSON object `{"error": kind, "message": text}` on
//! stderr and exit with status 1.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sccsp::bench::{self, Algo, BenchConfig, BenchError, GenSpec, Reference};
use sccsp::budget::Budget;
use sccsp::decoder::gantt_rows;
use sccsp::hierc::{solve_traced, HiercParams, RunConfig, RunStats};
use sccsp::local_search::SearchParams;
use sccsp::model::validate_solution;
use sccsp::{evaluate, Instance, ModelError, Solution};

#[derive(Parser)]
#[command(name = "sccsp", version, about = "Steelmaking-continuous casting scheduler")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random instance.
    Gen {
        #[arg(long)]
        stages: usize,
        #[arg(long)]
        casts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Accept sizes outside the standard grid.
        #[arg(long)]
        off_grid: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Solve one instance and write its run statistics.
    Solve(SolveArgs),
    /// Run the multi-algorithm benchmark over a grid of generated instances.
    Bench {
        /// JSON array of generator specs.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "hierc,idh,ils,vns")]
        algos: Vec<Algo>,
        #[arg(long, default_value_t = 30)]
        runs: usize,
        #[arg(long)]
        lambda: f64,
        /// Master seed; run seeds are split from it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Evaluation cap per run instead of wall time.
        #[arg(long)]
        max_evals: Option<u64>,
        #[arg(long)]
        serial: bool,
        /// Relate each algorithm to its own best run.
        #[arg(long)]
        per_algorithm_best: bool,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Export the schedule of a stats file as Gantt rows.
    Gantt {
        #[arg(long)]
        inst: PathBuf,
        #[arg(long)]
        stats: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Decode and score a given permutation pair (one-based).
    Eval {
        #[arg(long)]
        inst: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        u: Vec<usize>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        v: Vec<usize>,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    inst: PathBuf,
    #[arg(long, default_value = "hierc")]
    algo: Algo,
    /// Budget factor: each run gets `Z * S * lambda` ms.
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    gamma: usize,
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    #[arg(long, default_value_t = 0.9)]
    eps0: f64,
    #[arg(long, default_value_t = 0.1)]
    epsf: f64,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 10)]
    ep_charge: usize,
    #[arg(long, default_value_t = 10)]
    ep_cast: usize,
    #[arg(long, default_value_t = 10)]
    ep_joint: usize,
    /// Stop after this many evaluations; the nominal budget still drives epsilon.
    #[arg(long)]
    max_evals: Option<u64>,
    /// Write the final Q-tables as CSV (hierc only).
    #[arg(long)]
    qtable_dump: Option<PathBuf>,
    /// Write one JSON line per evaluated move (hierc only).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// Error kinds reported on stderr.
#[derive(Debug)]
enum Failure {
    Model(ModelError),
    Bench(BenchError),
    Param(String),
    Io(anyhow::Error),
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Failure::Model(ModelError::DuplicateCharge { .. }) => "duplicate_charge",
            Failure::Model(ModelError::SizeMismatch { .. }) => "size_mismatch",
            Failure::Model(ModelError::NegativeTime { .. }) => "negative_time",
            Failure::Model(ModelError::Invalid { .. }) => "invalid",
            Failure::Model(ModelError::NotAPermutation { .. }) => "not_a_permutation",
            Failure::Bench(BenchError::BadGrid { .. }) => "bad_grid",
            Failure::Bench(BenchError::DivByZero) => "div_by_zero",
            Failure::Bench(BenchError::BadRange { .. }) => "bad_range",
            Failure::Bench(_) => "io",
            Failure::Param(_) => "bad_param",
            Failure::Io(_) => "io",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Model(e) => e.to_string(),
            Failure::Bench(e) => e.to_string(),
            Failure::Param(m) => m.clone(),
            Failure::Io(e) => format!("{e:#}"),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Model(e)
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        Failure::Bench(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Instance::from_json(&text)?)
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).context("serializing output")?;
    match out {
        Some(path) => fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Failure::Param(format!("lambda must be finite and nonnegative, got {lambda}")))
    }
}

fn run_solve(a: SolveArgs) -> Result<()> {
    check_lambda(a.lambda)?;
    let inst = read_instance(&a.inst)?;
    let total_ms = Budget::for_instance_ms(inst.cast_count(), inst.stages(), a.lambda);
    let budget = match a.max_evals {
        Some(max) => Budget::Evaluations {
            max,
            nominal_ms: total_ms,
        },
        None => Budget::WallClock { total_ms },
    };
    let run = RunConfig {
        budget,
        seed: a.seed,
        max_iterations: None,
        target_f: None,
    };
    let search = SearchParams {
        alpha: a.alpha,
        eps0: a.eps0,
        eps_final: a.epsf,
        sigma: a.sigma,
        ep_charge: a.ep_charge,
        ep_cast: a.ep_cast,
        ep_joint: a.ep_joint,
        ..SearchParams::default()
    };
    let params = HiercParams {
        run,
        gamma: a.gamma,
        search,
    };
    params.validate()?;
    if a.algo != Algo::Hierc && (a.qtable_dump.is_some() || a.trace.is_some()) {
        return Err(Failure::Param("--qtable-dump and --trace apply to hierc only".into()));
    }

    let (stats, q_dump) = if a.algo == Algo::Hierc && a.trace.is_some() {
        let path = a.trace.as_ref().unwrap();
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let out = solve_traced(&inst, &params, Box::new(BufWriter::new(file)));
        let dump = out
            .q_tables
            .map(|q| format!("{}{}{}", q.charge.to_csv(), q.cast.to_csv(), q.joint.to_csv()));
        (out.stats, dump)
    } else {
        let out = bench::run_algo(&inst, a.algo, run, a.gamma, search);
        (out.stats, out.q_dump)
    };
    if let (Some(path), Some(dump)) = (&a.qtable_dump, q_dump) {
        fs::write(path, dump).with_context(|| format!("writing {}", path.display()))?;
    }
    emit(&stats, a.out.as_deref())
}

#[allow(clippy::too_many_arguments)]
fn run_bench(
    grid: &Path,
    algos: Vec<Algo>,
    runs: usize,
    lambda: f64,
    seed: u64,
    max_evals: Option<u64>,
    serial: bool,
    per_algorithm_best: bool,
    out: &Path,
) -> Result<()> {
    check_lambda(lambda)?;
    if runs == 0 {
        return Err(Failure::Param("--runs must be at least 1".into()));
    }
    if algos.is_empty() {
        return Err(Failure::Param("--algos is empty".into()));
    }
    let text = fs::read_to_string(grid).with_context(|| format!("reading {}", grid.display()))?;
    let specs: Vec<GenSpec> =
        serde_json::from_str(&text).with_context(|| format!("parsing grid {}", grid.display()))?;
    let mut cfg = BenchConfig::new(specs, algos, runs, lambda);
    cfg.master_seed = seed;
    cfg.eval_cap = max_evals;
    cfg.parallel = !serial;
    if per_algorithm_best {
        cfg.reference = Reference::PerAlgorithm;
    }
    let report = bench::bench(&cfg)?;
    let summary = report.write_csv(out)?;
    emit(
        &serde_json::json!({
            "runs": out,
            "summary": summary,
            "rows": report.runs.len(),
        }),
        None,
    )
}

fn run_gantt(inst: &Path, stats: &Path, out: Option<&Path>) -> Result<()> {
    let inst = read_instance(inst)?;
    let text = fs::read_to_string(stats).with_context(|| format!("reading {}", stats.display()))?;
    let stats: RunStats = serde_json::from_str(&text).with_context(|| format!("parsing {}", stats.display()))?;
    let sol = Solution::from_one_based(&stats.u, &stats.v);
    validate_solution(&inst, &sol)?;
    let (sched, _) = sccsp::decode(&inst, &sol);
    emit(
        &serde_json::json!({
            "f": sched.f,
            "c_max": sched.c_max,
            "f_wait": sched.f_wait,
            "rows": gantt_rows(&inst, &sched),
        }),
        out,
    )
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen {
            stages,
            casts,
            seed,
            off_grid,
            out,
        } => {
            let spec = GenSpec {
                off_grid,
                ..GenSpec::new(stages, casts, seed)
            };
            let inst = bench::generate(&spec)?;
            emit(&inst.to_file(), out.as_deref())
        }
        Cmd::Solve(args) => run_solve(args),
        Cmd::Bench {
            grid,
            algos,
            runs,
            lambda,
            seed,
            max_evals,
            serial,
            per_algorithm_best,
            out,
        } => run_bench(&grid, algos, runs, lambda, seed, max_evals, serial, per_algorithm_best, &out),
        Cmd::Gantt { inst, stats, out } => run_gantt(&inst, &stats, out.as_deref()),
        Cmd::Eval { inst, u, v } => {
            let inst = read_instance(&inst)?;
            let sol = Solution::from_one_based(&u, &v);
            validate_solution(&inst, &sol)?;
            emit(&evaluate(&inst, &sol), None)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": e.kind(), "message": e.message() });
            let mut err = std::io::stderr().lock();
            let _ = writeln!(err, "{body}");
            ExitCode::FAILURE
        }
    }
}
