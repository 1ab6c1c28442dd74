//! Test-only instance generators and independent oracles.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use sccsp::model::{CastRecord, InstanceFile, Time, Weights};
use sccsp::{evaluate, Instance, Solution};

/// Size limits for random instances; every range is inclusive.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub charges: (usize, usize),
    pub stages: (usize, usize),
    pub casts: (usize, usize),
    pub machines: (usize, usize),
    pub proc: (Time, Time),
    pub transport: (Time, Time),
    pub setup: (Time, Time),
}

impl Shape {
    pub fn small() -> Self {
        Self {
            charges: (1, 8),
            stages: (2, 4),
            casts: (1, 4),
            machines: (1, 3),
            proc: (1, 20),
            transport: (0, 5),
            setup: (0, 10),
        }
    }
}

pub fn random_instance<R: Rng>(rng: &mut R, shape: Shape) -> Instance {
    let n = rng.gen_range(shape.charges.0..=shape.charges.1);
    let s = rng.gen_range(shape.stages.0..=shape.stages.1);
    let z = rng.gen_range(shape.casts.0..=shape.casts.1.min(n));
    // random split of a shuffled charge list into z nonempty casts
    let mut ids: Vec<usize> = (1..=n).collect();
    ids.shuffle(rng);
    let mut cuts: Vec<usize> = (1..n).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(z - 1).collect();
    cuts.sort_unstable();
    cuts.push(n);
    let mut casts = Vec::with_capacity(z);
    let mut lo = 0;
    for (j, &hi) in cuts.iter().enumerate() {
        casts.push(CastRecord {
            id: j + 1,
            charges: ids[lo..hi].to_vec(),
            setup: rng.gen_range(shape.setup.0..=shape.setup.1),
        });
        lo = hi;
    }
    casts.shuffle(rng);
    Instance::from_file(InstanceFile {
        stages: s,
        machines: (0..s)
            .map(|_| rng.gen_range(shape.machines.0..=shape.machines.1))
            .collect(),
        transport: (1..s)
            .map(|_| rng.gen_range(shape.transport.0..=shape.transport.1))
            .collect(),
        casts,
        proc: (0..n)
            .map(|_| (0..s).map(|_| rng.gen_range(shape.proc.0..=shape.proc.1)).collect())
            .collect(),
        weights: Weights::default(),
        meta: None,
    })
    .expect("random instance is valid")
}

pub fn random_solution<R: Rng>(rng: &mut R, inst: &Instance) -> Solution {
    let mut u: Vec<usize> = (0..inst.charge_count()).collect();
    let mut v: Vec<usize> = (0..inst.cast_count()).collect();
    u.shuffle(rng);
    v.shuffle(rng);
    Solution::new(u, v)
}

/// Random interleaving of the casts that keeps every cast's members in
/// priority order.
pub fn priority_consistent_solution<R: Rng>(rng: &mut R, inst: &Instance) -> Solution {
    let mut v: Vec<usize> = (0..inst.cast_count()).collect();
    v.shuffle(rng);
    let mut slots: Vec<usize> = (0..inst.cast_count())
        .flat_map(|j| std::iter::repeat(j).take(inst.cast_members(j).len()))
        .collect();
    slots.shuffle(rng);
    let mut next = vec![0; inst.cast_count()];
    let u = slots
        .into_iter()
        .map(|j| {
            next[j] += 1;
            inst.cast_members(j)[next[j] - 1]
        })
        .collect();
    Solution::new(u, v)
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for x in 0..used.len() {
            if !used[x] {
                used[x] = true;
                prefix.push(x);
                go(prefix, used, out);
                prefix.pop();
                used[x] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Minimum of `f` over every `(u, v)` pair.
pub fn exhaustive_optimum(inst: &Instance) -> f64 {
    let us = permutations(inst.charge_count());
    let vs = permutations(inst.cast_count());
    let mut best = f64::INFINITY;
    for v in &vs {
        for u in &us {
            best = best.min(evaluate(inst, &Solution::new(u.clone(), v.clone())).f);
        }
    }
    best
}

/// Minimum of `f` over every `u` with `v` fixed.
pub fn best_u_for(inst: &Instance, v: &[usize]) -> f64 {
    permutations(inst.charge_count())
        .into_iter()
        .map(|u| evaluate(inst, &Solution::new(u, v.to_vec())).f)
        .fold(f64::INFINITY, f64::min)
}

/// Minimum of `f` over every `v` with `u` fixed.
pub fn best_v_for(inst: &Instance, u: &[usize]) -> f64 {
    permutations(inst.cast_count())
        .into_iter()
        .map(|v| evaluate(inst, &Solution::new(u.to_vec(), v)).f)
        .fold(f64::INFINITY, f64::min)
}

/// Oracle timing tables, `[charge][stage]`.
#[derive(Debug, Clone)]
pub struct OracleSchedule {
    pub start: Vec<Vec<Time>>,
    pub completion: Vec<Vec<Time>>,
    pub machine: Vec<Vec<usize>>,
    pub c_max: Time,
    pub wait_total: Time,
}

/// Discrete-event simulation of the refining stages (FIFO queue per stage,
/// an arriving job takes the idle machine freed earliest), casts placed by
/// repeatedly shifting a cast later by its first break, then the refining
/// operations pushed right to a fixpoint.
pub fn oracle_decode(inst: &Instance, sol: &Solution) -> OracleSchedule {
    let n = inst.charge_count();
    let s = inst.stages();
    let cs = s - 1;
    let mut start = vec![vec![0; s]; n];
    let mut completion = vec![vec![0; s]; n];
    let mut machine = vec![vec![0; s]; n];
    let mut u_pos = vec![0; n];
    for (p, &k) in sol.u.iter().enumerate() {
        u_pos[k] = p;
    }

    for stage in 0..cs {
        let ready_at: Vec<Time> = (0..n)
            .map(|k| {
                if stage == 0 {
                    0
                } else {
                    completion[k][stage - 1] + inst.transport(stage)
                }
            })
            .collect();
        let ready = |k: usize| ready_at[k];
        let mut pending: Vec<usize> = (0..n).collect();
        pending.sort_by_key(|&k| (ready(k), u_pos[k]));
        let mut pending = std::collections::VecDeque::from(pending);
        let mut waiting = std::collections::VecDeque::new();
        let mut free_at = vec![0 as Time; inst.machines(stage)];
        let mut now: Time = 0;
        let mut done = 0;
        while done < n {
            while pending.front().is_some_and(|&k| ready(k) <= now) {
                waiting.push_back(pending.pop_front().unwrap());
            }
            loop {
                let idle = (0..free_at.len())
                    .filter(|&m| free_at[m] <= now)
                    .min_by_key(|&m| (free_at[m], m));
                match (idle, waiting.front()) {
                    (Some(m), Some(&k)) => {
                        waiting.pop_front();
                        start[k][stage] = now;
                        completion[k][stage] = now + inst.proc(k, stage);
                        machine[k][stage] = m;
                        free_at[m] = completion[k][stage];
                        done += 1;
                    }
                    _ => break,
                }
            }
            if done == n {
                break;
            }
            let mut next = Time::MAX;
            if let Some(&k) = pending.front() {
                next = next.min(ready(k));
            }
            if !waiting.is_empty() {
                next = next.min(free_at.iter().copied().filter(|&t| t > now).min().unwrap_or(Time::MAX));
            }
            now = next;
        }
    }

    let arrival = |k: usize, completion: &Vec<Vec<Time>>| completion[k][cs - 1] + inst.transport(cs);
    let mut free_at = vec![0 as Time; inst.machines(cs)];
    for &j in &sol.v {
        let m = (0..free_at.len()).min_by_key(|&m| (free_at[m], m)).unwrap();
        let members = inst.cast_members(j);
        let mut first = free_at[m] + inst.setup(j);
        loop {
            let mut t = first.max(arrival(members[0], &completion));
            first = t;
            let mut gap = None;
            for &k in members {
                let a = arrival(k, &completion);
                if a > t && gap.is_none() {
                    gap = Some(a - t);
                }
                t = t.max(a) + inst.proc(k, cs);
            }
            match gap {
                Some(d) => first += d,
                None => break,
            }
        }
        let mut t = first;
        for &k in members {
            start[k][cs] = t;
            t += inst.proc(k, cs);
            completion[k][cs] = t;
            machine[k][cs] = m;
        }
        free_at[m] = t;
    }
    let c_max = free_at.into_iter().max().unwrap_or(0);

    // successor on the same machine, from the forward order
    let mut next_on_machine = vec![vec![None; s]; n];
    for stage in 0..cs {
        for m in 0..inst.machines(stage) {
            let mut jobs: Vec<usize> = (0..n).filter(|&k| machine[k][stage] == m).collect();
            jobs.sort_by_key(|&k| (start[k][stage], completion[k][stage]));
            for w in jobs.windows(2) {
                next_on_machine[w[0]][stage] = Some(w[1]);
            }
        }
    }
    loop {
        let mut changed = false;
        for stage in 0..cs {
            for k in 0..n {
                let mut c = start[k][stage + 1] - inst.transport(stage + 1);
                if let Some(nx) = next_on_machine[k][stage] {
                    c = c.min(start[nx][stage]);
                }
                if c != completion[k][stage] {
                    completion[k][stage] = c;
                    start[k][stage] = c - inst.proc(k, stage);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut wait_total = 0;
    for k in 0..n {
        for stage in 1..s {
            wait_total += start[k][stage] - completion[k][stage - 1] - inst.transport(stage);
        }
    }
    OracleSchedule {
        start,
        completion,
        machine,
        c_max,
        wait_total,
    }
}

/// Direct evaluation of the coupling measure from its definition.
pub fn oracle_cm(inst: &Instance, sol: &Solution, sigma: f64) -> f64 {
    let mut virtual_seq = Vec::new();
    for &j in &sol.v {
        virtual_seq.extend_from_slice(inst.cast_members(j));
    }
    let n = sol.u.len() as f64;
    sol.u
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let pos = virtual_seq.iter().position(|x| x == k).unwrap() as f64;
            (-(pos - i as f64).powi(2) / (2.0 * sigma * sigma)).exp()
        })
        .sum::<f64>()
        / n
}
