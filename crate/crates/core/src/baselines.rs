//! Reference algorithms sharing the decoder, operators and renewal moves:
//! the industrial dispatching heuristic, iterated local search and variable
//! neighborhood search.

use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decoder::{decode, Schedule};
use crate::hierc::{lpt_init, Progress, RunConfig, RunOutput};
use crate::local_search::{Candidate, SearchContext, SearchParams};
use crate::model::{Instance, Solution};
use crate::neighborhoods::{apply_move, sample_cast_move, sample_charge_move, CastOp, ChargeOp, Move};
use crate::renewal::{construct_u, d2r};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Idh,
    Ils,
    Vns,
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "idh" => Ok(Self::Idh),
            "ils" => Ok(Self::Ils),
            "vns" => Ok(Self::Vns),
            other => Err(format!("unknown baseline `{other}`")),
        }
    }
}

/// Industrial dispatching heuristic.
///
/// Casts are sorted longest first and then dispatched from the end of that
/// list, so the dispatch order is the reversed LPT order. Charges follow
/// their casting starts; the backward pass of the decoder then starts every
/// refining operation as late as possible.
pub fn idh(inst: &Instance) -> (Solution, Schedule) {
    let mut v = lpt_init(inst).v;
    v.reverse();
    let sol = Solution::new(construct_u(inst, &v), v);
    let (sched, _) = decode(inst, &sol);
    (sol, sched)
}

/// [`idh`] wrapped in the common run output; the budget is not consulted.
pub fn idh_run(inst: &Instance, run: &RunConfig) -> RunOutput {
    let mut ctx = context(inst, run);
    let (sol, _) = idh(inst);
    let cand = ctx.evaluate(sol);
    let progress = Progress::new(&ctx, cand, *run);
    progress.finish(&ctx, "idh", serde_json::to_value(run).unwrap(), None)
}

/// Samples one move of pool operator `op` (charge operators first, then the
/// cast operators) and returns the resulting solution.
fn pool_move<R: Rng + ?Sized>(inst: &Instance, sol: &Solution, op: usize, rng: &mut R) -> Option<Solution> {
    let n_charge = ChargeOp::ALL.len();
    if op < n_charge {
        let mv: Move = sample_charge_move(ChargeOp::from_index(op), inst.charge_count(), rng).ok()?;
        Some(Solution::new(apply_move(&sol.u, mv), sol.v.clone()))
    } else {
        let mv = sample_cast_move(CastOp::from_index(op - n_charge), inst.cast_count(), rng).ok()?;
        Some(Solution::new(sol.u.clone(), apply_move(&sol.v, mv)))
    }
}

const POOL: usize = 11;

fn tries_for(inst: &Instance, op: usize) -> usize {
    if op < ChargeOp::ALL.len() {
        inst.charge_count()
    } else {
        inst.cast_count()
    }
}

/// Random first-improvement descent over the whole pool, stopping after `N`
/// consecutive failures.
fn random_descent(ctx: &mut SearchContext<'_>, progress: &mut Progress, mut cur: Candidate) -> Candidate {
    let limit = ctx.inst.charge_count().max(1);
    let mut fails = 0;
    while fails < limit && !progress.should_stop(ctx) {
        let op = ctx.rng.gen_range(0..POOL);
        let Some(sol) = pool_move(ctx.inst, &cur.sol, op, &mut ctx.rng) else {
            fails += 1;
            continue;
        };
        let cand = ctx.evaluate(sol);
        if cand.f() < cur.f() {
            progress.offer(ctx, &cand);
            cur = cand;
            fails = 0;
        } else {
            fails += 1;
        }
    }
    cur
}

/// Variable neighborhood descent: cycle the pool in order, restarting from
/// the first operator after every improvement.
fn vnd(ctx: &mut SearchContext<'_>, progress: &mut Progress, mut cur: Candidate) -> Candidate {
    let mut op = 0;
    while op < POOL && !progress.should_stop(ctx) {
        let mut improved = false;
        for _ in 0..tries_for(ctx.inst, op) {
            if progress.should_stop(ctx) {
                break;
            }
            let Some(sol) = pool_move(ctx.inst, &cur.sol, op, &mut ctx.rng) else {
                break;
            };
            let cand = ctx.evaluate(sol);
            if cand.f() < cur.f() {
                progress.offer(ctx, &cand);
                cur = cand;
                improved = true;
                break;
            }
        }
        op = if improved { 0 } else { op + 1 };
    }
    cur
}

fn context<'a>(inst: &'a Instance, run: &RunConfig) -> SearchContext<'a> {
    SearchContext::new(inst, SearchParams::default(), run.budget, run.seed)
}

/// Iterated local search from `start` (LPT when `None`): descend, perturb
/// the incumbent with the renewal move, descend again, keep the better.
pub fn ils(inst: &Instance, run: &RunConfig, start: Option<Solution>) -> RunOutput {
    let mut ctx = context(inst, run);
    let first = ctx.evaluate(start.unwrap_or_else(|| lpt_init(inst)));
    let mut progress = Progress::new(&ctx, first.clone(), *run);
    let mut cur = random_descent(&mut ctx, &mut progress, first);
    while !progress.should_stop(&ctx) {
        let (sol, _) = d2r(inst, &cur.sol, &mut ctx.rng);
        progress.d2r_count += 1;
        let kicked = ctx.evaluate(sol);
        progress.offer(&ctx, &kicked);
        let cand = random_descent(&mut ctx, &mut progress, kicked);
        if cand.f() < cur.f() {
            cur = cand;
        }
        progress.iterations += 1;
    }
    progress.finish(&ctx, "ils", serde_json::to_value(run).unwrap(), None)
}

/// Basic VNS over the eleven-operator pool with a VND local search; a full
/// cycle without improvement triggers a renewal restart.
pub fn vns(inst: &Instance, run: &RunConfig, start: Option<Solution>) -> RunOutput {
    let mut ctx = context(inst, run);
    let first = ctx.evaluate(start.unwrap_or_else(|| lpt_init(inst)));
    let mut progress = Progress::new(&ctx, first.clone(), *run);
    let mut cur = vnd(&mut ctx, &mut progress, first);
    while !progress.should_stop(&ctx) {
        let mut k = 0;
        while k < POOL && !progress.should_stop(&ctx) {
            let Some(sol) = pool_move(inst, &cur.sol, k, &mut ctx.rng) else {
                k += 1;
                continue;
            };
            let shaken = ctx.evaluate(sol);
            progress.offer(&ctx, &shaken);
            let cand = vnd(&mut ctx, &mut progress, shaken);
            if cand.f() < cur.f() {
                cur = cand;
                k = 0;
            } else {
                k += 1;
            }
        }
        if progress.should_stop(&ctx) {
            break;
        }
        let (sol, _) = d2r(inst, &cur.sol, &mut ctx.rng);
        progress.d2r_count += 1;
        let kicked = ctx.evaluate(sol);
        progress.offer(&ctx, &kicked);
        cur = vnd(&mut ctx, &mut progress, kicked);
        progress.iterations += 1;
    }
    progress.finish(&ctx, "vns", serde_json::to_value(run).unwrap(), None)
}
