//! The three Q-learning local search loops and their move filters.
//!
//! All loops share one skeleton: pick an operator by epsilon-greedy on the
//! current state's row, keep sampling that operator on the incumbent until
//! the stall counter passes its limit, adopt any candidate with positive
//! reward, then move to the state named by the operator just used. The
//! returned solution is the best one seen, never worse than the input.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::{Budget, Clock};
use crate::coupling::{coupling_measure, CouplingParams};
use crate::decoder::{cast_timeline, decode, CastTimeline, DecodeTrace, Schedule};
use crate::model::{Instance, ModelError, Solution, Time};
use crate::neighborhoods::{apply_move, sample_cast_move, sample_charge_move, CastOp, ChargeOp, Move};
use crate::qlearn::{reward, select_action, EpsilonSchedule, JointIndex, QTable};

/// Tunables shared by the loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub alpha: f64,
    pub eps0: f64,
    pub eps_final: f64,
    /// Gaussian width of the coupling measure; `None` means `max(N/10, 1)`.
    pub sigma: Option<f64>,
    pub ep_charge: usize,
    pub ep_cast: usize,
    pub ep_joint: usize,
    /// Stall limits; `None` means `N`, `Z` and `Z` respectively.
    pub charge_stall: Option<usize>,
    pub cast_stall: Option<usize>,
    pub joint_stall: Option<usize>,
}

impl SearchParams {
    /// Rejects values the loops cannot run with.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |field: &'static str, reason: &str| {
            Err(ModelError::Invalid {
                field,
                reason: reason.to_string(),
            })
        };
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha", "must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.eps0) || !(0.0..=1.0).contains(&self.eps_final) {
            return bad("eps", "must lie in [0, 1]");
        }
        if self.eps_final > self.eps0 {
            return bad("eps", "final value exceeds initial value");
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return bad("sigma", "must be positive and finite");
            }
        }
        Ok(())
    }
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            eps0: 0.9,
            eps_final: 0.1,
            sigma: None,
            ep_charge: 10,
            ep_cast: 10,
            ep_joint: 10,
            charge_stall: None,
            cast_stall: None,
            joint_stall: None,
        }
    }
}

/// A decoded solution together with its coupling measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub sol: Solution,
    pub sched: Schedule,
    pub trace: DecodeTrace,
    pub cm: f64,
}

impl Candidate {
    pub fn f(&self) -> f64 {
        self.sched.f
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Charge moves skipped by the priority filter.
    pub filtered_moves: u64,
    /// Cast moves certified as makespan-improving before evaluation.
    pub speedup_hits: u64,
    /// Sampler failures (empty band, sequence too short).
    pub empty_moves: u64,
}

/// Mutable state of one run: clock, random stream and the three Q-tables.
pub struct SearchContext<'a> {
    pub inst: &'a Instance,
    pub params: SearchParams,
    pub coupling: CouplingParams,
    pub clock: Clock,
    pub rng: ChaCha8Rng,
    pub q_charge: QTable,
    pub q_cast: QTable,
    pub q_joint: QTable,
    pub stats: SearchStats,
    trace_sink: Option<Box<dyn Write + Send>>,
}

impl<'a> SearchContext<'a> {
    pub fn new(inst: &'a Instance, params: SearchParams, budget: Budget, seed: u64) -> Self {
        let coupling = params
            .sigma
            .map(CouplingParams::new)
            .unwrap_or_else(|| CouplingParams::default_for(inst));
        Self {
            inst,
            params,
            coupling,
            clock: Clock::start(budget),
            rng: ChaCha8Rng::seed_from_u64(seed),
            q_charge: QTable::new(ChargeOp::ALL.len()),
            q_cast: QTable::new(CastOp::ALL.len()),
            q_joint: QTable::new(JointIndex::SIZE),
            stats: SearchStats::default(),
            trace_sink: None,
        }
    }

    /// Writes one JSON line per adopted or rejected candidate.
    pub fn with_trace(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.trace_sink = Some(sink);
        self
    }

    pub fn evaluate(&mut self, sol: Solution) -> Candidate {
        let t0 = Instant::now();
        let (sched, trace) = decode(self.inst, &sol);
        let cm = coupling_measure(self.inst, &sol, self.coupling);
        self.clock.record_evaluation(t0.elapsed());
        Candidate {
            sol,
            sched,
            trace,
            cm,
        }
    }

    pub fn epsilon(&self) -> f64 {
        EpsilonSchedule::new(self.params.eps0, self.params.eps_final, self.clock.total_ms())
            .epsilon_at(self.clock.elapsed_ms())
    }

    fn log(&mut self, rec: &TraceRecord) {
        if let Some(sink) = self.trace_sink.as_mut() {
            // Tracing is diagnostic; a failed write must not abort the run.
            let _ = serde_json::to_writer(&mut *sink, rec).and_then(|_| {
                sink.write_all(b"\n").map_err(serde_json::Error::io)
            });
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub search: &'static str,
    pub t: f64,
    pub state: usize,
    pub action: usize,
    pub accepted: bool,
    pub f: f64,
    pub cm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid,
}

/// A charge move is invalid when it leaves two members of the same cast out
/// of their within-cast priority order in the resulting sequence.
pub fn validity_check(inst: &Instance, u: &[usize], mv: Move) -> Validity {
    let moved = apply_move(u, mv);
    validity_of(inst, u, &moved, mv)
}

fn validity_of(inst: &Instance, u: &[usize], moved: &[usize], mv: Move) -> Validity {
    let pairs = mv.pairs(u.len());
    let mut pos = None;
    for (p, q) in pairs {
        let (a, b) = (u[p], u[q]);
        if inst.cast_of(a) != inst.cast_of(b) {
            continue;
        }
        let pos = pos.get_or_insert_with(|| {
            let mut pos = vec![0; moved.len()];
            for (i, &k) in moved.iter().enumerate() {
                pos[k] = i;
            }
            pos
        });
        let priority_first = inst.rank_in_cast(a) < inst.rank_in_cast(b);
        if (pos[a] < pos[b]) != priority_first {
            return Validity::Invalid;
        }
    }
    Validity::Valid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Speedup {
    GuaranteedImprovingCmax,
    Unknown,
}

/// Completion of casting machine `k` recomputed from its critical cast:
/// start of the last zero-slack cast plus everything cast after it, with
/// the setups in between. Equals the machine's release time.
pub fn tail_load(inst: &Instance, timeline: &CastTimeline, machine: usize) -> Time {
    let seq = &timeline.cast_sequences[machine];
    let (from, mut t) = match timeline.key_cast[machine] {
        Some(key) => (key, timeline.cast_start[seq[key]]),
        None => (0, 0),
    };
    for (idx, &j) in seq.iter().enumerate().skip(from) {
        if idx > from || timeline.key_cast[machine].is_none() {
            t += inst.setup(j);
        }
        t += inst.casting_load(j);
    }
    t
}

/// Makespan certificate for a cast move, computed on the casting stage only
/// (refining stages do not depend on the cast order).
///
/// Returns `GuaranteedImprovingCmax` when a critical machine hosts one of
/// the moved casts, the tail loads of the hosting machines strictly drop,
/// and no other machine reaches the old makespan.
pub fn speedup_check(inst: &Instance, trace: &DecodeTrace, v: &[usize], mv: Move) -> Speedup {
    let pairs = mv.pairs(v.len());
    let Some(&(p, q)) = pairs.first() else {
        return Speedup::Unknown;
    };
    let (k1, k2) = (trace.cast_machine[v[p]], trace.cast_machine[v[q]]);
    let c_max = trace.machine_release.iter().copied().max().unwrap_or(0);
    let critical = |k: usize| trace.machine_release[k] == c_max;
    if !critical(k1) && !critical(k2) {
        return Speedup::Unknown;
    }
    let moved = apply_move(v, mv);
    let after = cast_timeline(inst, &moved, &trace.casting_arrival);
    let drops = |k: usize| tail_load(inst, &after, k) < trace.machine_release[k];
    let hosts_improve = if k1 == k2 { drops(k1) } else { drops(k1) && drops(k2) };
    if !hosts_improve {
        return Speedup::Unknown;
    }
    let others_below = (0..after.machine_release.len())
        .filter(|&k| k != k1 && k != k2)
        .all(|k| after.machine_release[k] < c_max);
    if others_below {
        Speedup::GuaranteedImprovingCmax
    } else {
        Speedup::Unknown
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Space {
    Charge,
    Cast,
    Joint,
}

impl Space {
    fn name(self) -> &'static str {
        match self {
            Space::Charge => "charge",
            Space::Cast => "cast",
            Space::Joint => "joint",
        }
    }
}

enum Proposal {
    Skip,
    Evaluate(Solution, Speedup),
}

fn propose(ctx: &mut SearchContext<'_>, inc: &Candidate, space: Space, action: usize) -> Proposal {
    let n = ctx.inst.charge_count();
    let z = ctx.inst.cast_count();
    match space {
        Space::Charge => {
            let Ok(mv) = sample_charge_move(ChargeOp::from_index(action), n, &mut ctx.rng) else {
                ctx.stats.empty_moves += 1;
                return Proposal::Skip;
            };
            let u = apply_move(&inc.sol.u, mv);
            if validity_of(ctx.inst, &inc.sol.u, &u, mv) == Validity::Invalid {
                ctx.stats.filtered_moves += 1;
                return Proposal::Skip;
            }
            Proposal::Evaluate(Solution::new(u, inc.sol.v.clone()), Speedup::Unknown)
        }
        Space::Cast => {
            let Ok(mv) = sample_cast_move(CastOp::from_index(action), z, &mut ctx.rng) else {
                ctx.stats.empty_moves += 1;
                return Proposal::Skip;
            };
            let verdict = speedup_check(ctx.inst, &inc.trace, &inc.sol.v, mv);
            if verdict == Speedup::GuaranteedImprovingCmax {
                ctx.stats.speedup_hits += 1;
            }
            Proposal::Evaluate(
                Solution::new(inc.sol.u.clone(), apply_move(&inc.sol.v, mv)),
                verdict,
            )
        }
        Space::Joint => {
            let (charge_op, cast_op) = JointIndex::unflatten(action);
            let cast_mv = sample_cast_move(cast_op, z, &mut ctx.rng).ok();
            let charge_mv = sample_charge_move(charge_op, n, &mut ctx.rng).ok();
            if cast_mv.is_none() && charge_mv.is_none() {
                ctx.stats.empty_moves += 1;
                return Proposal::Skip;
            }
            let v = cast_mv.map_or_else(|| inc.sol.v.clone(), |m| apply_move(&inc.sol.v, m));
            let u = charge_mv.map_or_else(|| inc.sol.u.clone(), |m| apply_move(&inc.sol.u, m));
            Proposal::Evaluate(Solution::new(u, v), Speedup::Unknown)
        }
    }
}

fn table<'c>(ctx: &'c mut SearchContext<'_>, space: Space) -> &'c mut QTable {
    match space {
        Space::Charge => &mut ctx.q_charge,
        Space::Cast => &mut ctx.q_cast,
        Space::Joint => &mut ctx.q_joint,
    }
}

fn run(ctx: &mut SearchContext<'_>, start: &Candidate, space: Space) -> Candidate {
    let p = ctx.params;
    let (episodes, stall) = match space {
        Space::Charge => (p.ep_charge, p.charge_stall.unwrap_or(ctx.inst.charge_count())),
        Space::Cast => (p.ep_cast, p.cast_stall.unwrap_or(ctx.inst.cast_count())),
        Space::Joint => (p.ep_joint, p.joint_stall.unwrap_or(ctx.inst.cast_count())),
    };
    let mut best = start.clone();
    if episodes == 0 {
        return best;
    }
    let mut inc = start.clone();
    let size = table(ctx, space).size();
    let mut state = ctx.rng.gen_range(0..size);
    let mut t = 0;
    while t < episodes && !ctx.clock.expired() {
        let eps = ctx.epsilon();
        let action = match space {
            Space::Charge => select_action(&ctx.q_charge, state, eps, &mut ctx.rng),
            Space::Cast => select_action(&ctx.q_cast, state, eps, &mut ctx.rng),
            Space::Joint => select_action(&ctx.q_joint, state, eps, &mut ctx.rng),
        };
        let best_before = best.f();
        let mut count = 0;
        while !ctx.clock.expired() {
            match propose(ctx, &inc, space, action) {
                Proposal::Skip => count += 1,
                Proposal::Evaluate(sol, verdict) => {
                    let cand = ctx.evaluate(sol);
                    if verdict == Speedup::GuaranteedImprovingCmax {
                        assert!(
                            cand.sched.c_max < inc.sched.c_max,
                            "makespan certificate contradicted by full decode"
                        );
                    }
                    let r = reward(cand.f() - inc.f(), cand.cm - inc.cm);
                    let rec = TraceRecord {
                        search: space.name(),
                        t: ctx.clock.elapsed_ms(),
                        state,
                        action,
                        accepted: r > 0.0,
                        f: cand.f(),
                        cm: cand.cm,
                    };
                    ctx.log(&rec);
                    if r > 0.0 {
                        table(ctx, space).update(state, action, r, p.alpha);
                        // resetting the stall counter on every rewarded move
                        // lets f-up/CM-up cycles run forever
                        if cand.f() < best.f() {
                            best = cand.clone();
                            count = 0;
                        } else {
                            count += 1;
                        }
                        inc = cand;
                    } else {
                        count += 1;
                    }
                }
            }
            if count > stall {
                break;
            }
        }
        // the period restarts only when the episode set a new best; the
        // incumbent may drift upward through CM-rewarded moves
        if best.f() < best_before {
            t = 0;
        } else {
            t += 1;
        }
        state = action;
    }
    best
}

/// Improves `u` with `v` fixed over the eight charge operators.
pub fn charge_qlsf(ctx: &mut SearchContext<'_>, start: &Candidate) -> Candidate {
    run(ctx, start, Space::Charge)
}

/// Improves `v` with `u` fixed over the three cast operators.
pub fn cast_qlsf(ctx: &mut SearchContext<'_>, start: &Candidate) -> Candidate {
    run(ctx, start, Space::Cast)
}

/// Improves both subsequences at once over the 24 joint operator pairs.
pub fn sqlsf(ctx: &mut SearchContext<'_>, start: &Candidate) -> Candidate {
    run(ctx, start, Space::Joint)
}
