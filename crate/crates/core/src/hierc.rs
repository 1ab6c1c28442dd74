//! The hierarchical orchestrator: LPT start, the three cooperative loops in
//! sequence, and a renewal restart after `gamma` outer iterations without a
//! new best.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::decoder::Schedule;
use crate::local_search::{cast_qlsf, charge_qlsf, sqlsf, Candidate, SearchContext, SearchParams, SearchStats};
use crate::model::{Instance, ModelError, Solution};
use crate::qlearn::QTable;
use crate::renewal::{construct_u, d2r};

/// Budget and stopping rules common to every algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub budget: Budget,
    pub seed: u64,
    /// Outer-iteration cap.
    #[serde(default)]
    pub max_iterations: Option<u64>,
    /// Stop as soon as the best objective is at or below this value.
    #[serde(default)]
    pub target_f: Option<f64>,
}

impl RunConfig {
    pub fn wall_clock(total_ms: f64, seed: u64) -> Self {
        Self {
            budget: Budget::WallClock { total_ms },
            seed,
            max_iterations: None,
            target_f: None,
        }
    }

    pub fn evaluations(max: u64, nominal_ms: f64, seed: u64) -> Self {
        Self {
            budget: Budget::Evaluations { max, nominal_ms },
            seed,
            max_iterations: None,
            target_f: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiercParams {
    pub run: RunConfig,
    pub gamma: usize,
    pub search: SearchParams,
}

impl HiercParams {
    pub fn new(run: RunConfig) -> Self {
        Self {
            run,
            gamma: 5,
            search: SearchParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.gamma == 0 {
            return Err(ModelError::Invalid {
                field: "gamma",
                reason: "must be at least 1".to_string(),
            });
        }
        self.search.validate()
    }
}

/// Summary of one run, written as the stats JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub algo: String,
    pub best_f: f64,
    pub c_max: i64,
    pub f_wait: f64,
    pub cm: f64,
    pub iterations: u64,
    pub d2r_count: u64,
    pub evaluations: u64,
    /// `(ms, f)` at every improvement of the best solution.
    pub trajectory: Vec<(f64, f64)>,
    pub seed: u64,
    pub params: serde_json::Value,
    /// Best solution, one-based.
    pub u: Vec<usize>,
    pub v: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTables {
    pub charge: QTable,
    pub cast: QTable,
    pub joint: QTable,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub solution: Solution,
    pub schedule: Schedule,
    pub stats: RunStats,
    pub search: SearchStats,
    pub q_tables: Option<QTables>,
    /// Slowest single objective evaluation of the run.
    pub slowest_evaluation: std::time::Duration,
}

/// Casts by descending casting load, lower id first on ties; charges rebuilt
/// from the resulting casting timeline.
pub fn lpt_init(inst: &Instance) -> Solution {
    let mut v: Vec<usize> = (0..inst.cast_count()).collect();
    v.sort_by_key(|&j| (std::cmp::Reverse(inst.casting_load(j)), j));
    Solution::new(construct_u(inst, &v), v)
}

/// Tracks the best solution and the stopping rules shared by all algorithms.
pub(crate) struct Progress {
    pub best: Candidate,
    pub trajectory: Vec<(f64, f64)>,
    pub iterations: u64,
    pub d2r_count: u64,
    run: RunConfig,
}

impl Progress {
    pub fn new(ctx: &SearchContext<'_>, start: Candidate, run: RunConfig) -> Self {
        let trajectory = vec![(ctx.clock.elapsed_ms(), start.f())];
        Self {
            best: start,
            trajectory,
            iterations: 0,
            d2r_count: 0,
            run,
        }
    }

    /// Records `cand` if it beats the best; returns whether it did.
    pub fn offer(&mut self, ctx: &SearchContext<'_>, cand: &Candidate) -> bool {
        if cand.f() < self.best.f() {
            self.best = cand.clone();
            self.trajectory.push((ctx.clock.elapsed_ms(), cand.f()));
            true
        } else {
            false
        }
    }

    pub fn should_stop(&self, ctx: &SearchContext<'_>) -> bool {
        ctx.clock.expired()
            || self.run.max_iterations.is_some_and(|m| self.iterations >= m)
            || self.run.target_f.is_some_and(|t| self.best.f() <= t)
    }

    pub fn finish(
        self,
        ctx: &SearchContext<'_>,
        algo: &str,
        params: serde_json::Value,
        q_tables: Option<QTables>,
    ) -> RunOutput {
        let best = self.best;
        RunOutput {
            stats: RunStats {
                algo: algo.to_string(),
                best_f: best.f(),
                c_max: best.sched.c_max,
                f_wait: best.sched.f_wait,
                cm: best.cm,
                iterations: self.iterations,
                d2r_count: self.d2r_count,
                evaluations: ctx.clock.evaluations(),
                trajectory: self.trajectory,
                seed: self.run.seed,
                params,
                u: best.sol.u_one_based(),
                v: best.sol.v_one_based(),
            },
            solution: best.sol,
            schedule: best.sched,
            search: ctx.stats,
            q_tables,
            slowest_evaluation: ctx.clock.slowest_evaluation(),
        }
    }
}

pub fn solve(inst: &Instance, params: &HiercParams) -> RunOutput {
    let ctx = SearchContext::new(inst, params.search, params.run.budget, params.run.seed);
    run(ctx, params)
}

/// As [`solve`], writing one JSON line per evaluated candidate to `sink`.
pub fn solve_traced(inst: &Instance, params: &HiercParams, sink: Box<dyn Write + Send>) -> RunOutput {
    let ctx = SearchContext::new(inst, params.search, params.run.budget, params.run.seed).with_trace(sink);
    run(ctx, params)
}

fn run(mut ctx: SearchContext<'_>, params: &HiercParams) -> RunOutput {
    let inst = ctx.inst;
    let start = ctx.evaluate(lpt_init(inst));
    let mut gen = start.clone();
    let mut progress = Progress::new(&ctx, start, params.run);
    let mut count = 0;

    'outer: loop {
        while count < params.gamma {
            if progress.should_stop(&ctx) {
                break 'outer;
            }
            let c = charge_qlsf(&mut ctx, &gen);
            if c.f() < gen.f() {
                gen = c;
            }
            let c = cast_qlsf(&mut ctx, &gen);
            if c.f() < gen.f() {
                gen = c;
            }
            let c = sqlsf(&mut ctx, &gen);
            if c.f() < gen.f() {
                gen = c;
            }
            if progress.offer(&ctx, &gen) {
                count = 0;
            } else {
                count += 1;
            }
            progress.iterations += 1;
        }
        if progress.should_stop(&ctx) {
            break;
        }
        let (sol, _) = d2r(inst, &gen.sol, &mut ctx.rng);
        gen = ctx.evaluate(sol);
        progress.d2r_count += 1;
        count = 0;
    }

    let q_tables = QTables {
        charge: ctx.q_charge.clone(),
        cast: ctx.q_cast.clone(),
        joint: ctx.q_joint.clone(),
    };
    let params_json = serde_json::to_value(params).expect("params serialize");
    progress.finish(&ctx, "hierc", params_json, Some(q_tables))
}
