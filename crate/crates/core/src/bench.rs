//! Instance generation, the ARPD metric and the comparison harness.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{idh_run, ils, vns};
use crate::budget::Budget;
use crate::hierc::{solve, HiercParams, RunConfig};
use crate::local_search::SearchParams;
use crate::model::{CastRecord, Instance, InstanceFile, Time, Weights};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("(S={stages}, Z={casts}) is outside the benchmark grid; set off_grid to override")]
    BadGrid { stages: usize, casts: usize },
    #[error("reference objective is zero")]
    DivByZero,
    #[error("bad range `{field}`: {lo}..={hi}")]
    BadRange { field: &'static str, lo: i64, hi: i64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const GRID_STAGES: [usize; 4] = [3, 4, 5, 6];
pub const GRID_CASTS: [usize; 5] = [10, 15, 20, 25, 30];

fn default_proc() -> (i64, i64) {
    (36, 50)
}
fn default_setup() -> (i64, i64) {
    (80, 100)
}
fn default_machines() -> (i64, i64) {
    (3, 5)
}
fn default_cast_size() -> (i64, i64) {
    (8, 12)
}
fn default_transport() -> (i64, i64) {
    (10, 15)
}

/// Generator parameters; every range is inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub stages: usize,
    pub casts: usize,
    pub seed: u64,
    #[serde(default = "default_proc")]
    pub proc: (i64, i64),
    #[serde(default = "default_setup")]
    pub setup: (i64, i64),
    #[serde(default = "default_machines")]
    pub machines: (i64, i64),
    #[serde(default = "default_cast_size")]
    pub cast_size: (i64, i64),
    #[serde(default = "default_transport")]
    pub transport: (i64, i64),
    /// Allows sizes outside the standard `S x Z` grid.
    #[serde(default)]
    pub off_grid: bool,
}

impl GenSpec {
    pub fn new(stages: usize, casts: usize, seed: u64) -> Self {
        Self {
            stages,
            casts,
            seed,
            proc: default_proc(),
            setup: default_setup(),
            machines: default_machines(),
            cast_size: default_cast_size(),
            transport: default_transport(),
            off_grid: false,
        }
    }

    pub fn name(&self) -> String {
        format!("S{}_Z{}_seed{}", self.stages, self.casts, self.seed)
    }
}

fn draw(rng: &mut ChaCha8Rng, range: (i64, i64)) -> i64 {
    rng.gen_range(range.0..=range.1)
}

/// Deterministic instance from `spec`. Charge ids are assigned in cast order.
pub fn generate(spec: &GenSpec) -> Result<Instance, BenchError> {
    let on_grid = GRID_STAGES.contains(&spec.stages) && GRID_CASTS.contains(&spec.casts);
    if !on_grid && !spec.off_grid {
        return Err(BenchError::BadGrid {
            stages: spec.stages,
            casts: spec.casts,
        });
    }
    if spec.stages < 2 || spec.casts == 0 {
        return Err(BenchError::BadGrid {
            stages: spec.stages,
            casts: spec.casts,
        });
    }
    for (field, (lo, hi), min) in [
        ("proc", spec.proc, 0),
        ("setup", spec.setup, 0),
        ("machines", spec.machines, 1),
        ("cast_size", spec.cast_size, 1),
        ("transport", spec.transport, 0),
    ] {
        if lo < min || hi < lo {
            return Err(BenchError::BadRange { field, lo, hi });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let machines: Vec<usize> = (0..spec.stages)
        .map(|_| draw(&mut rng, spec.machines) as usize)
        .collect();
    let transport: Vec<Time> = (1..spec.stages).map(|_| draw(&mut rng, spec.transport)).collect();
    let mut next = 1;
    let mut casts = Vec::with_capacity(spec.casts);
    for j in 0..spec.casts {
        let size = draw(&mut rng, spec.cast_size) as usize;
        casts.push(CastRecord {
            id: j + 1,
            charges: (next..next + size).collect(),
            setup: 0,
        });
        next += size;
    }
    for cast in &mut casts {
        cast.setup = draw(&mut rng, spec.setup);
    }
    let n = next - 1;
    let proc = (0..n)
        .map(|_| (0..spec.stages).map(|_| draw(&mut rng, spec.proc)).collect())
        .collect();

    let meta = serde_json::json!({
        "generator": spec,
        "note": "processing-time range applied to every stage, casting included",
    });
    Ok(Instance::from_file(InstanceFile {
        stages: spec.stages,
        machines,
        transport,
        casts,
        proc,
        weights: Weights::default(),
        meta: Some(meta),
    })
    .expect("generated instance is valid"))
}

/// Average relative percentage deviation of `runs` from `best`.
pub fn arpd(runs: &[f64], best: f64) -> Result<f64, BenchError> {
    if best == 0.0 {
        return Err(BenchError::DivByZero);
    }
    if runs.is_empty() {
        return Ok(0.0);
    }
    Ok(runs.iter().map(|f| (f - best) / best * 100.0).sum::<f64>() / runs.len() as f64)
}

/// Population standard deviation of the relative percentage deviations.
pub fn rpd_sd(runs: &[f64], best: f64) -> Result<f64, BenchError> {
    let mean = arpd(runs, best)?;
    if runs.is_empty() {
        return Ok(0.0);
    }
    let var = runs
        .iter()
        .map(|f| ((f - best) / best * 100.0 - mean).powi(2))
        .sum::<f64>()
        / runs.len() as f64;
    Ok(var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Hierc,
    Idh,
    Ils,
    Vns,
}

impl Algo {
    pub const ALL: [Algo; 4] = [Algo::Hierc, Algo::Idh, Algo::Ils, Algo::Vns];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Hierc => "hierc",
            Algo::Idh => "idh",
            Algo::Ils => "ils",
            Algo::Vns => "vns",
        }
    }

    pub fn is_deterministic(self) -> bool {
        self == Algo::Idh
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected hierc, idh, ils or vns)"))
    }
}

/// Outcome of one algorithm run on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoRun {
    pub f: f64,
    pub c_max: i64,
    pub f_wait: f64,
    pub evaluations: u64,
    pub elapsed_ms: f64,
    pub stats: crate::hierc::RunStats,
    pub q_dump: Option<String>,
}

/// Runs `algo` once. IDH ignores the budget.
pub fn run_algo(inst: &Instance, algo: Algo, run: RunConfig, gamma: usize, search: SearchParams) -> AlgoRun {
    let t0 = Instant::now();
    let out = match algo {
        Algo::Idh => idh_run(inst, &run),
        Algo::Hierc => solve(inst, &HiercParams { run, gamma, search }),
        Algo::Ils => ils(inst, &run, None),
        Algo::Vns => vns(inst, &run, None),
    };
    let elapsed_ms = t0.elapsed().as_secs_f64() * 1e3;
    let q_dump = out
        .q_tables
        .as_ref()
        .map(|q| format!("{}{}{}", q.charge.to_csv(), q.cast.to_csv(), q.joint.to_csv()));
    AlgoRun {
        f: out.stats.best_f,
        c_max: out.stats.c_max,
        f_wait: out.stats.f_wait,
        evaluations: out.stats.evaluations,
        elapsed_ms,
        stats: out.stats,
        q_dump,
    }
}

/// `master ^ splitmix64(i)`.
pub fn split_seed(master: u64, i: u64) -> u64 {
    let mut z = i.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    master ^ (z ^ (z >> 31))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Best objective over all algorithms' runs on the instance.
    CrossAlgorithm,
    /// Best objective of the algorithm's own runs.
    PerAlgorithm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub grid: Vec<GenSpec>,
    pub algos: Vec<Algo>,
    pub runs: usize,
    pub lambda: f64,
    pub master_seed: u64,
    /// Replaces wall time by a fixed number of evaluations per run, making
    /// every run reproducible.
    pub eval_cap: Option<u64>,
    pub parallel: bool,
    pub reference: Reference,
    pub gamma: usize,
    pub search: SearchParams,
}

impl BenchConfig {
    pub fn new(grid: Vec<GenSpec>, algos: Vec<Algo>, runs: usize, lambda: f64) -> Self {
        Self {
            grid,
            algos,
            runs,
            lambda,
            master_seed: 0,
            eval_cap: None,
            parallel: true,
            reference: Reference::CrossAlgorithm,
            gamma: 5,
            search: SearchParams::default(),
        }
    }
}

/// One row of the raw results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub stages: usize,
    pub casts: usize,
    pub gen_seed: u64,
    pub algo: Algo,
    pub run: usize,
    pub seed: u64,
    pub budget_ms: f64,
    pub f: f64,
    pub c_max: i64,
    pub f_wait: f64,
    pub evaluations: u64,
    pub elapsed_ms: f64,
}

/// Aggregate per `(instance, algorithm)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub instance: String,
    pub algo: Algo,
    pub runs: usize,
    pub best_f: f64,
    pub mean_f: f64,
    pub reference_f: f64,
    pub arpd: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRecord>,
    /// Stats of every run, same order as `runs`.
    pub run_stats: Vec<crate::hierc::RunStats>,
    pub q_dumps: Vec<String>,
}

impl BenchReport {
    pub fn summary_for(&self, instance: &str, algo: Algo) -> Option<&SummaryRecord> {
        self.summary
            .iter()
            .find(|s| s.instance == instance && s.algo == algo)
    }

    /// Writes the raw runs to `path` and the summary next to it with a
    /// `_summary` suffix.
    pub fn write_csv(&self, path: &Path) -> Result<std::path::PathBuf, BenchError> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.runs {
            w.serialize(r)?;
        }
        w.flush()?;
        let summary_path = summary_path(path);
        let mut w = csv::Writer::from_path(&summary_path)?;
        for s in &self.summary {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(summary_path)
    }

    pub fn read_csv(path: &Path) -> Result<(Vec<RunRecord>, Vec<SummaryRecord>), BenchError> {
        let runs = csv::Reader::from_path(path)?
            .deserialize()
            .collect::<Result<Vec<RunRecord>, _>>()?;
        let summary = csv::Reader::from_path(summary_path(path))?
            .deserialize()
            .collect::<Result<Vec<SummaryRecord>, _>>()?;
        Ok((runs, summary))
    }
}

pub fn summary_path(path: &Path) -> std::path::PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    path.with_file_name(format!("{stem}_summary.csv"))
}

/// Aggregates raw run records into per-(instance, algorithm) summaries.
pub fn summarize(runs: &[RunRecord], reference: Reference) -> Result<Vec<SummaryRecord>, BenchError> {
    let mut keys: Vec<(String, Algo)> = Vec::new();
    for r in runs {
        if !keys.iter().any(|(i, a)| i == &r.instance && *a == r.algo) {
            keys.push((r.instance.clone(), r.algo));
        }
    }
    keys.into_iter()
        .map(|(instance, algo)| {
            let fs: Vec<f64> = runs
                .iter()
                .filter(|r| r.instance == instance && r.algo == algo)
                .map(|r| r.f)
                .collect();
            let best_f = fs.iter().copied().fold(f64::INFINITY, f64::min);
            let reference_f = match reference {
                Reference::CrossAlgorithm => runs
                    .iter()
                    .filter(|r| r.instance == instance)
                    .map(|r| r.f)
                    .fold(f64::INFINITY, f64::min),
                Reference::PerAlgorithm => best_f,
            };
            Ok(SummaryRecord {
                runs: fs.len(),
                mean_f: fs.iter().sum::<f64>() / fs.len() as f64,
                arpd: arpd(&fs, reference_f)?,
                sd: rpd_sd(&fs, reference_f)?,
                instance,
                algo,
                best_f,
                reference_f,
            })
        })
        .collect()
}

/// Runs every algorithm `runs` times on every generated instance.
pub fn bench(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    let instances = cfg
        .grid
        .iter()
        .map(|spec| generate(spec).map(|inst| (spec.clone(), inst)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut jobs = Vec::new();
    for (ii, _) in instances.iter().enumerate() {
        for &algo in &cfg.algos {
            let reps = if algo.is_deterministic() { 1 } else { cfg.runs };
            for r in 0..reps {
                jobs.push((ii, algo, r));
            }
        }
    }

    let exec = |&(ii, algo, r): &(usize, Algo, usize)| {
        let (spec, inst) = &instances[ii];
        let budget_ms = Budget::for_instance_ms(inst.cast_count(), inst.stages(), cfg.lambda);
        let seed = split_seed(cfg.master_seed, r as u64);
        let budget = match cfg.eval_cap {
            Some(max) => Budget::Evaluations {
                max,
                nominal_ms: budget_ms,
            },
            None => Budget::WallClock { total_ms: budget_ms },
        };
        let run = RunConfig {
            budget,
            seed,
            max_iterations: None,
            target_f: None,
        };
        let out = run_algo(inst, algo, run, cfg.gamma, cfg.search);
        let record = RunRecord {
            instance: spec.name(),
            stages: spec.stages,
            casts: spec.casts,
            gen_seed: spec.seed,
            algo,
            run: r,
            seed,
            budget_ms,
            f: out.f,
            c_max: out.c_max,
            f_wait: out.f_wait,
            evaluations: out.evaluations,
            elapsed_ms: out.elapsed_ms,
        };
        (record, out.stats, out.q_dump)
    };

    let results: Vec<_> = if cfg.parallel {
        jobs.par_iter().map(exec).collect()
    } else {
        jobs.iter().map(exec).collect()
    };

    let mut runs = Vec::with_capacity(results.len());
    let mut run_stats = Vec::new();
    let mut q_dumps = Vec::new();
    for (record, stats, q) in results {
        runs.push(record);
        run_stats.push(stats);
        q_dumps.extend(q);
    }
    let summary = summarize(&runs, cfg.reference)?;
    Ok(BenchReport {
        runs,
        summary,
        run_stats,
        q_dumps,
    })
}
