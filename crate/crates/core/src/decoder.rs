//! Schedule construction from a permutation pair.
//!
//! Decoding runs in three passes:
//!
//! 1. forward list scheduling of the refining stages in charge order,
//! 2. cast dispatch at the casting stage, where each cast starts at the
//!    latest of its machine's setup-ready time and the earliest moment from
//!    which all of its members can be cast back to back without a break,
//! 3. a backward pass that right-shifts every non-casting operation as far
//!    as its successors allow, minimising waiting ahead of each stage.
//!
//! Machine choice is always "earliest available, lowest index on ties".
//! Stages after the first dispatch charges in order of arrival, ties broken
//! by their position in `u`.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::model::{Instance, Solution, Time};

/// Decoded timing of every operation.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// `start[k][i]`: start of charge `k` at stage `i`.
    pub start: Vec<Vec<Time>>,
    pub completion: Vec<Vec<Time>>,
    pub machine_of: Vec<Vec<usize>>,
    pub cast_start: Vec<Time>,
    pub cast_completion: Vec<Time>,
    pub c_max: Time,
    /// Sum of all inter-stage waits; `f_wait = wait_total / N`.
    pub wait_total: Time,
    pub f_wait: f64,
    pub f: f64,
}

/// Machine-level bookkeeping from the forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeTrace {
    /// `sequences[i][m]`: charges on machine `m` of refining stage `i`, in
    /// processing order. The casting stage is not included.
    pub sequences: Vec<Vec<Vec<usize>>>,
    /// Casts on each casting machine, in processing order.
    pub cast_sequences: Vec<Vec<usize>>,
    pub cast_machine: Vec<usize>,
    /// Earliest break-free start of each cast given its members' arrivals.
    pub cast_release: Vec<Time>,
    /// Arrival of each charge at the casting stage.
    pub casting_arrival: Vec<Time>,
    /// Final completion time `R_k` of every casting machine.
    pub machine_release: Vec<Time>,
    /// Position in `cast_sequences[k]` of the last cast that starts exactly
    /// at its release time; `None` if every cast on `k` is setup-bound.
    pub key_cast: Vec<Option<usize>>,
}

impl DecodeTrace {
    /// Casting machines attaining the makespan.
    pub fn critical_machines(&self) -> Vec<usize> {
        let c_max = self.machine_release.iter().copied().max().unwrap_or(0);
        (0..self.machine_release.len())
            .filter(|&k| self.machine_release[k] == c_max)
            .collect()
    }
}

/// Earliest-available machine, lowest index on ties.
fn pick_machine(avail: &[Time]) -> usize {
    let mut best = 0;
    for m in 1..avail.len() {
        if avail[m] < avail[best] {
            best = m;
        }
    }
    best
}

/// Forward decoding of all stages. Waiting statistics refer to the forward
/// schedule; call [`reverse_decode`] to minimise them.
pub fn forward_decode(inst: &Instance, sol: &Solution) -> (Schedule, DecodeTrace) {
    let n = inst.charge_count();
    let z = inst.cast_count();
    let s = inst.stages();
    let cs = inst.casting_stage();

    let mut start = vec![vec![0; s]; n];
    let mut completion = vec![vec![0; s]; n];
    let mut machine_of = vec![vec![0; s]; n];
    let mut sequences = Vec::with_capacity(cs);

    let mut pos_in_u = vec![0; n];
    for (p, &k) in sol.u.iter().enumerate() {
        pos_in_u[k] = p;
    }

    let mut order = sol.u.clone();
    for stage in 0..cs {
        if stage > 0 {
            order.sort_by_key(|&k| (completion[k][stage - 1], pos_in_u[k]));
        }
        let mut avail = vec![0; inst.machines(stage)];
        let mut seq = vec![Vec::new(); inst.machines(stage)];
        for &k in &order {
            let m = pick_machine(&avail);
            let arrival = if stage == 0 {
                0
            } else {
                completion[k][stage - 1] + inst.transport(stage)
            };
            let l = arrival.max(avail[m]);
            start[k][stage] = l;
            completion[k][stage] = l + inst.proc(k, stage);
            machine_of[k][stage] = m;
            avail[m] = completion[k][stage];
            seq[m].push(k);
        }
        sequences.push(seq);
    }

    let casting_arrival: Vec<Time> = (0..n)
        .map(|k| completion[k][cs - 1] + inst.transport(cs))
        .collect();
    let timeline = cast_timeline(inst, &sol.v, &casting_arrival);
    for j in 0..z {
        let mut t = timeline.cast_start[j];
        for &k in inst.cast_members(j) {
            start[k][cs] = t;
            t += inst.proc(k, cs);
            completion[k][cs] = t;
            machine_of[k][cs] = timeline.cast_machine[j];
        }
    }

    let c_max = timeline.machine_release.iter().copied().max().unwrap_or(0);
    let mut sched = Schedule {
        start,
        completion,
        machine_of,
        cast_start: timeline.cast_start,
        cast_completion: timeline.cast_completion,
        c_max,
        wait_total: 0,
        f_wait: 0.0,
        f: 0.0,
    };
    score(inst, &mut sched);
    let trace = DecodeTrace {
        sequences,
        cast_sequences: timeline.cast_sequences,
        cast_machine: timeline.cast_machine,
        cast_release: timeline.cast_release,
        casting_arrival,
        machine_release: timeline.machine_release,
        key_cast: timeline.key_cast,
    };
    (sched, trace)
}

/// Casting-stage timing for a given cast order and member arrivals.
#[derive(Debug, Clone, PartialEq)]
pub struct CastTimeline {
    pub cast_start: Vec<Time>,
    pub cast_completion: Vec<Time>,
    pub cast_machine: Vec<usize>,
    pub cast_release: Vec<Time>,
    pub cast_sequences: Vec<Vec<usize>>,
    pub machine_release: Vec<Time>,
    pub key_cast: Vec<Option<usize>>,
}

impl CastTimeline {
    pub fn c_max(&self) -> Time {
        self.machine_release.iter().copied().max().unwrap_or(0)
    }
}

/// Dispatches casts in `v` order onto the casting machines.
///
/// Only the casting stage depends on `v`, so this is all a cast move needs
/// to recompute the makespan when the refining stages are unchanged.
pub fn cast_timeline(inst: &Instance, v: &[usize], arrival: &[Time]) -> CastTimeline {
    let z = inst.cast_count();
    let cs = inst.casting_stage();
    let machines = inst.machines(cs);
    let mut cast_start = vec![0; z];
    let mut cast_completion = vec![0; z];
    let mut cast_machine = vec![0; z];
    let mut cast_release = vec![0; z];
    let mut cast_sequences = vec![Vec::new(); machines];
    let mut key_cast = vec![None; machines];
    let mut avail = vec![0; machines];

    for &j in v {
        let m = pick_machine(&avail);
        // Latest member-driven lower bound on the first casting start.
        let mut release = Time::MIN;
        let mut offset = 0;
        for &k in inst.cast_members(j) {
            release = release.max(arrival[k] - offset);
            offset += inst.proc(k, cs);
        }
        let l = release.max(avail[m] + inst.setup(j));
        cast_release[j] = release;
        cast_start[j] = l;
        cast_completion[j] = l + offset;
        cast_machine[j] = m;
        if l == release {
            key_cast[m] = Some(cast_sequences[m].len());
        }
        cast_sequences[m].push(j);
        avail[m] = cast_completion[j];
    }

    CastTimeline {
        cast_start,
        cast_completion,
        cast_machine,
        cast_release,
        cast_sequences,
        machine_release: avail,
        key_cast,
    }
}

/// Right-shifts every refining-stage operation as late as its successors
/// allow. Casting-stage timing and `c_max` are untouched.
pub fn reverse_decode(inst: &Instance, sched: &Schedule, trace: &DecodeTrace) -> Schedule {
    let mut out = sched.clone();
    let cs = inst.casting_stage();
    for stage in (0..cs).rev() {
        let t_next = inst.transport(stage + 1);
        for seq in &trace.sequences[stage] {
            let mut next_start: Option<Time> = None;
            for &k in seq.iter().rev() {
                let mut c = out.start[k][stage + 1] - t_next;
                if let Some(ns) = next_start {
                    c = c.min(ns);
                }
                debug_assert!(c >= out.completion[k][stage]);
                out.completion[k][stage] = c;
                out.start[k][stage] = c - inst.proc(k, stage);
                next_start = Some(out.start[k][stage]);
            }
        }
    }
    score(inst, &mut out);
    out
}

/// Recomputes `wait_total`, `f_wait` and `f` from the timing tables.
fn score(inst: &Instance, sched: &mut Schedule) {
    let n = inst.charge_count();
    let mut total = 0;
    for k in 0..n {
        for stage in 1..inst.stages() {
            total += sched.start[k][stage] - sched.completion[k][stage - 1] - inst.transport(stage);
        }
    }
    sched.wait_total = total;
    sched.f_wait = if n == 0 { 0.0 } else { total as f64 / n as f64 };
    let w = inst.weights();
    sched.f = w.psi1 * sched.c_max as f64 + w.psi2 * sched.f_wait;
}

/// Full decode: forward pass followed by the backward right-shift.
pub fn decode(inst: &Instance, sol: &Solution) -> (Schedule, DecodeTrace) {
    let (fwd, trace) = forward_decode(inst, sol);
    let sched = reverse_decode(inst, &fwd, &trace);
    audit::observe(inst, &sched);
    (sched, trace)
}

/// Objective values of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub f: f64,
    pub c_max: Time,
    pub f_wait: f64,
}

pub fn evaluate(inst: &Instance, sol: &Solution) -> Evaluation {
    let (sched, _) = decode(inst, sol);
    Evaluation {
        f: sched.f,
        c_max: sched.c_max,
        f_wait: sched.f_wait,
    }
}

/// A violated schedule invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    CastBreak { cast: usize, charge: usize },
    Overlap { stage: usize, machine: usize },
    Precedence { charge: usize, stage: usize },
    Duration { charge: usize, stage: usize },
}

/// Checks cast continuity, machine exclusivity, precedence and durations.
pub fn check_schedule(inst: &Instance, sched: &Schedule) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = inst.charge_count();
    let cs = inst.casting_stage();
    for k in 0..n {
        for stage in 0..inst.stages() {
            if sched.completion[k][stage] != sched.start[k][stage] + inst.proc(k, stage) {
                out.push(Violation::Duration { charge: k, stage });
            }
            if stage > 0
                && sched.start[k][stage]
                    < sched.completion[k][stage - 1] + inst.transport(stage)
            {
                out.push(Violation::Precedence { charge: k, stage });
            }
        }
    }
    for j in 0..inst.cast_count() {
        let members = inst.cast_members(j);
        if sched.start[members[0]][cs] != sched.cast_start[j] {
            out.push(Violation::CastBreak {
                cast: j,
                charge: members[0],
            });
        }
        for w in members.windows(2) {
            if sched.start[w[1]][cs] != sched.completion[w[0]][cs] {
                out.push(Violation::CastBreak {
                    cast: j,
                    charge: w[1],
                });
            }
        }
    }
    for stage in 0..inst.stages() {
        for m in 0..inst.machines(stage) {
            let mut iv: Vec<(Time, Time)> = (0..n)
                .filter(|&k| sched.machine_of[k][stage] == m)
                .map(|k| (sched.start[k][stage], sched.completion[k][stage]))
                .collect();
            iv.sort();
            if iv.windows(2).any(|w| w[1].0 < w[0].1) {
                out.push(Violation::Overlap { stage, machine: m });
            }
        }
    }
    out
}

/// Opt-in invariant checking of every schedule produced by [`decode`].
pub mod audit {
    use super::*;

    static ENABLED: AtomicBool = AtomicBool::new(false);
    static CHECKED: AtomicU64 = AtomicU64::new(0);
    static VIOLATIONS: AtomicU64 = AtomicU64::new(0);

    pub fn enable() {
        ENABLED.store(true, Ordering::SeqCst);
    }

    pub fn disable() {
        ENABLED.store(false, Ordering::SeqCst);
    }

    /// `(schedules checked, schedules with at least one violation)`.
    pub fn counts() -> (u64, u64) {
        (
            CHECKED.load(Ordering::SeqCst),
            VIOLATIONS.load(Ordering::SeqCst),
        )
    }

    pub fn reset() {
        CHECKED.store(0, Ordering::SeqCst);
        VIOLATIONS.store(0, Ordering::SeqCst);
    }

    pub(super) fn observe(inst: &Instance, sched: &Schedule) {
        if !ENABLED.load(Ordering::Relaxed) {
            return;
        }
        CHECKED.fetch_add(1, Ordering::Relaxed);
        if !check_schedule(inst, sched).is_empty() {
            VIOLATIONS.fetch_add(1, Ordering::Relaxed);
        }
    }
}

/// One bar of a Gantt chart, one-based identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GanttRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cast: Option<usize>,
    pub stage: usize,
    pub machine: usize,
    pub start: Time,
    pub end: Time,
}

/// Operation rows for every charge plus one row per cast on the casting
/// stage, sorted by `(stage, machine, start)`.
pub fn gantt_rows(inst: &Instance, sched: &Schedule) -> Vec<GanttRow> {
    let cs = inst.casting_stage();
    let mut rows = Vec::new();
    for k in 0..inst.charge_count() {
        for stage in 0..inst.stages() {
            rows.push(GanttRow {
                charge: Some(k + 1),
                cast: None,
                stage: stage + 1,
                machine: sched.machine_of[k][stage] + 1,
                start: sched.start[k][stage],
                end: sched.completion[k][stage],
            });
        }
    }
    for j in 0..inst.cast_count() {
        let first = inst.cast_members(j)[0];
        rows.push(GanttRow {
            charge: None,
            cast: Some(inst.cast_id(j)),
            stage: cs + 1,
            machine: sched.machine_of[first][cs] + 1,
            start: sched.cast_start[j],
            end: sched.cast_completion[j],
        });
    }
    rows.sort_by_key(|r| (r.stage, r.machine, r.start, r.cast.is_none(), r.charge));
    rows
}
