//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero when a hard criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{
    exhaustive_optimum, oracle_cm, oracle_decode, priority_consistent_solution, random_instance, random_solution,
    Shape,
};
use sccsp::baselines::{ils, vns};
use sccsp::bench::{self, generate, Algo, BenchConfig, BenchReport, GenSpec};
use sccsp::budget::Budget;
use sccsp::coupling::{coupling_measure, virtual_sequence, CouplingParams};
use sccsp::decoder::{audit, decode, forward_decode};
use sccsp::hierc::{solve, HiercParams, RunConfig};
use sccsp::local_search::{
    cast_qlsf, charge_qlsf, speedup_check, sqlsf, validity_check, SearchContext, SearchParams, Speedup, Validity,
};
use sccsp::model::{CastRecord, InstanceFile, Weights};
use sccsp::neighborhoods::{apply_move, sample_cast_move, sample_charge_move, CastOp, ChargeOp};
use sccsp::qlearn::{reward, EpsilonSchedule};
use sccsp::{evaluate, Instance, Solution};

struct Outcome {
    pass: bool,
    /// Soft criteria are reported but never fail the suite.
    soft: bool,
    detail: String,
}

fn hard(pass: bool, detail: String) -> Outcome {
    Outcome {
        pass,
        soft: false,
        detail,
    }
}

const EPS: f64 = 1e-9;

fn decoder_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let inst = random_instance(&mut rng, Shape::small());
        let sol = random_solution(&mut rng, &inst);
        let (sched, _) = decode(&inst, &sol);
        let oracle = oracle_decode(&inst, &sol);
        if sched.c_max != oracle.c_max || sched.wait_total != oracle.wait_total {
            mismatches += 1;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    hard(
        mismatches == 0 && secs < 60.0,
        format!("{mismatches} mismatches in 1000 pairs, {secs:.2} s"),
    )
}

fn exhaustive_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let shape = Shape {
        charges: (3, 5),
        casts: (2, 2),
        stages: (2, 4),
        machines: (1, 3),
        ..Shape::small()
    };
    let mut worst = 100;
    for _ in 0..20 {
        let inst = random_instance(&mut rng, shape);
        let opt = exhaustive_optimum(&inst);
        let mut hits = 0;
        for seed in 0..100 {
            let mut run = RunConfig::wall_clock(2_000.0, seed);
            run.target_f = Some(opt + EPS);
            let out = solve(&inst, &HiercParams::new(run));
            if out.stats.best_f <= opt + EPS {
                hits += 1;
            }
        }
        worst = worst.min(hits);
    }
    hard(worst >= 95, format!("worst instance reached the optimum in {worst}/100 runs"))
}

fn desk_grid() -> Vec<GenSpec> {
    let mut grid = Vec::new();
    for stages in [3, 4] {
        for casts in [4, 6] {
            for seed in [1, 2] {
                grid.push(GenSpec {
                    off_grid: true,
                    ..GenSpec::new(stages, casts, seed)
                });
            }
        }
    }
    grid
}

/// Largest desk run gets `6 * 4 * 50` ms = 1.2 s.
const DESK_LAMBDA: f64 = 50.0;

fn desk_benchmark() -> BenchReport {
    let mut cfg = BenchConfig::new(desk_grid(), Algo::ALL.to_vec(), 10, DESK_LAMBDA);
    cfg.master_seed = 2024;
    bench::bench(&cfg).expect("desk benchmark")
}

fn invariants(checked: u64, violations: u64) -> Outcome {
    hard(
        checked > 0 && violations == 0,
        format!("{violations} violating schedules out of {checked} decoded during the desk benchmark"),
    )
}

fn coupling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut wrong = 0;
    let mut aligned = 0;
    for i in 0..10_000 {
        let inst = random_instance(&mut rng, Shape::small());
        let mut sol = random_solution(&mut rng, &inst);
        let vs = virtual_sequence(&inst, &sol.v);
        match i % 3 {
            0 => sol.u = vs.clone(),
            1 if sol.u.len() >= 2 => {
                sol.u = vs.clone();
                let a = rng.gen_range(0..sol.u.len());
                let b = (a + 1 + rng.gen_range(0..sol.u.len() - 1)) % sol.u.len();
                sol.u.swap(a, b);
            }
            _ => {}
        }
        let cm = coupling_measure(&inst, &sol, CouplingParams::default_for(&inst));
        if sol.u == vs {
            aligned += 1;
        }
        if (cm == 1.0) != (sol.u == vs) {
            wrong += 1;
        }
    }
    let inst = Instance::from_file(InstanceFile {
        stages: 2,
        machines: vec![1, 1],
        transport: vec![0],
        casts: vec![
            CastRecord {
                id: 1,
                charges: vec![1, 2],
                setup: 0,
            },
            CastRecord {
                id: 2,
                charges: vec![3],
                setup: 0,
            },
        ],
        proc: vec![vec![1, 1]; 3],
        weights: Weights::default(),
        meta: None,
    })
    .unwrap();
    let sol = Solution::from_one_based(&[2, 1, 3], &[1, 2]);
    let worked = coupling_measure(&inst, &sol, CouplingParams::new(1.0));
    let expected = oracle_cm(&inst, &sol, 1.0);
    let ok = wrong == 0 && (worked - expected).abs() < 1e-6 && (worked - 0.7377).abs() < 5e-5;
    hard(
        ok,
        format!("{wrong} iff failures over 10000 pairs ({aligned} aligned); worked example {worked:.6}"),
    )
}

fn reward_table() -> Outcome {
    let cases = [
        (-1.0, 0.5, 1.5),
        (-1e-9, 1e-12, 1.5),
        (-1.0, 0.0, 1.0),
        (-1.0, -0.5, 1.0),
        (0.0, 0.5, 0.2),
        (3.0, 1e-12, 0.2),
        (0.0, 0.0, 0.0),
        (2.0, -0.1, 0.0),
        (0.0, -0.1, 0.0),
    ];
    let bad = cases
        .iter()
        .filter(|&&(df, dcm, r)| reward(df, dcm).to_bits() != f64::to_bits(r))
        .count();
    hard(bad == 0, format!("{bad} of {} quadrant/boundary cases differ", cases.len()))
}

fn speedup_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let shape = Shape {
        charges: (4, 14),
        casts: (3, 7),
        setup: (0, 30),
        ..Shape::small()
    };
    let (mut moves, mut certified, mut false_positives) = (0, 0, 0);
    while moves < 2000 {
        let inst = random_instance(&mut rng, shape);
        let sol = random_solution(&mut rng, &inst);
        let (sched, trace) = forward_decode(&inst, &sol);
        let op = CastOp::from_index(rng.gen_range(0..3));
        let Ok(mv) = sample_cast_move(op, inst.cast_count(), &mut rng) else {
            continue;
        };
        moves += 1;
        if speedup_check(&inst, &trace, &sol.v, mv) == Speedup::GuaranteedImprovingCmax {
            certified += 1;
            let moved = Solution::new(sol.u.clone(), apply_move(&sol.v, mv));
            if decode(&inst, &moved).0.c_max >= sched.c_max {
                false_positives += 1;
            }
        }
    }
    hard(
        false_positives == 0 && certified > 0,
        format!("{certified} certificates over {moves} cast moves, {false_positives} false positives"),
    )
}

fn validity_audit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let shape = Shape {
        charges: (6, 20),
        casts: (1, 5),
        ..Shape::small()
    };
    let (mut filtered, mut improving) = (0, 0);
    let mut example = None;
    while filtered < 1000 {
        let inst = random_instance(&mut rng, shape);
        let sol = priority_consistent_solution(&mut rng, &inst);
        let op = ChargeOp::from_index(rng.gen_range(0..8));
        let Ok(mv) = sample_charge_move(op, inst.charge_count(), &mut rng) else {
            continue;
        };
        if validity_check(&inst, &sol.u, mv) != Validity::Invalid {
            continue;
        }
        filtered += 1;
        let before = evaluate(&inst, &sol).f;
        let after = evaluate(&inst, &Solution::new(apply_move(&sol.u, mv), sol.v.clone())).f;
        if after < before {
            improving += 1;
            example.get_or_insert(format!("{op:?} {mv:?} on n={}: {before:.2} -> {after:.2}", inst.charge_count()));
        }
    }
    let mut detail = format!("{improving}/{filtered} filtered moves strictly improve f");
    if let Some(e) = example {
        detail.push_str(&format!("; first: {e}"));
    }
    Outcome {
        pass: improving == 0,
        soft: true,
        detail,
    }
}

fn no_worse_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let budget = Budget::Evaluations {
        max: 200,
        nominal_ms: 100.0,
    };
    let (mut calls, mut worse) = (0, 0);
    for case in 0..2000u64 {
        let inst = random_instance(&mut rng, Shape::small());
        let sol = random_solution(&mut rng, &inst);
        let mut ctx = SearchContext::new(&inst, SearchParams::default(), budget, case);
        let start = ctx.evaluate(sol.clone());
        let mut outs = vec![
            charge_qlsf(&mut ctx, &start).f(),
            cast_qlsf(&mut ctx, &start).f(),
            sqlsf(&mut ctx, &start).f(),
        ];
        let run = RunConfig::evaluations(200, 100.0, case);
        outs.push(ils(&inst, &run, Some(sol.clone())).stats.best_f);
        outs.push(vns(&inst, &run, Some(sol)).stats.best_f);
        calls += outs.len();
        worse += outs.iter().filter(|&&f| f > start.f()).count();
    }
    hard(worse == 0, format!("{worse} of {calls} invocations returned a worse solution"))
}

fn determinism() -> Outcome {
    let spec = GenSpec::new(3, 10, 9);
    let inst = generate(&spec).unwrap();
    let params = HiercParams::new(RunConfig::evaluations(3_000, 300.0, 77));
    let a = solve(&inst, &params);
    let b = solve(&inst, &params);
    let dump = |o: &sccsp::hierc::RunOutput| {
        let q = o.q_tables.as_ref().unwrap();
        format!("{}{}{}", q.charge.to_csv(), q.cast.to_csv(), q.joint.to_csv())
    };
    let repeat_ok = a.stats == b.stats && dump(&a) == dump(&b) && a.solution == b.solution;

    let mut cfg = BenchConfig::new(
        vec![GenSpec {
            off_grid: true,
            ..GenSpec::new(3, 4, 9)
        }],
        Algo::ALL.to_vec(),
        4,
        20.0,
    );
    cfg.eval_cap = Some(1_500);
    cfg.parallel = false;
    let serial = bench::bench(&cfg).unwrap();
    cfg.parallel = true;
    let parallel = bench::bench(&cfg).unwrap();
    let f = |r: &BenchReport| r.runs.iter().map(|x| (x.algo, x.run, x.f.to_bits())).collect::<Vec<_>>();
    let harness_ok = f(&serial) == f(&parallel)
        && serial.run_stats == parallel.run_stats
        && serial.q_dumps == parallel.q_dumps;
    hard(
        repeat_ok && harness_ok,
        format!("repeat identical: {repeat_ok}; serial vs concurrent identical: {harness_ok} (evaluation-capped budget)"),
    )
}

fn direction_of_effect(report: &BenchReport) -> Outcome {
    let grid = desk_grid();
    let (mut below_idh, mut le_ils, mut le_vns) = (0, 0, 0);
    for spec in &grid {
        let name = spec.name();
        let arpd = |a: Algo| report.summary_for(&name, a).expect("summary row").arpd;
        let h = arpd(Algo::Hierc);
        below_idh += usize::from(h < arpd(Algo::Idh));
        le_ils += usize::from(h <= arpd(Algo::Ils));
        le_vns += usize::from(h <= arpd(Algo::Vns));
    }
    let n = grid.len();
    let pass = below_idh * 100 >= 95 * n && 2 * le_ils > n && 2 * le_vns > n;
    let mean = |a: Algo| {
        grid.iter()
            .map(|s| report.summary_for(&s.name(), a).unwrap().arpd)
            .sum::<f64>()
            / n as f64
    };
    hard(
        pass,
        format!(
            "HierC below IDH on {below_idh}/{n}, <= ILS on {le_ils}/{n}, <= VNS on {le_vns}/{n}; \
             mean ARPD hierc {:.3} idh {:.3} ils {:.3} vns {:.3}",
            mean(Algo::Hierc),
            mean(Algo::Idh),
            mean(Algo::Ils),
            mean(Algo::Vns)
        ),
    )
}

fn budget_compliance() -> Outcome {
    // slack for timer resolution and the bookkeeping after the last check
    let slack = Duration::from_millis(1);
    let (mut runs, mut over) = (0, 0);
    let mut worst = f64::NEG_INFINITY;
    for (stages, casts, lambda) in [(3, 10, 10.0), (4, 15, 5.0), (6, 30, 2.0)] {
        let inst = generate(&GenSpec::new(stages, casts, 11)).unwrap();
        let total_ms = Budget::for_instance_ms(casts, stages, lambda);
        for seed in 0..3 {
            let run = RunConfig::wall_clock(total_ms, seed);
            for algo in [Algo::Hierc, Algo::Ils, Algo::Vns] {
                let t0 = Instant::now();
                let out = match algo {
                    Algo::Hierc => solve(&inst, &HiercParams::new(run)),
                    Algo::Ils => ils(&inst, &run, None),
                    _ => vns(&inst, &run, None),
                };
                let wall = t0.elapsed();
                let limit = Duration::from_secs_f64(total_ms / 1e3) + out.slowest_evaluation + slack;
                runs += 1;
                worst = worst.max((wall.as_secs_f64() - limit.as_secs_f64()) * 1e3);
                if wall > limit {
                    over += 1;
                }
            }
        }
    }
    hard(
        over == 0,
        format!("{over} of {runs} runs exceeded T_total + one evaluation; worst margin {worst:+.3} ms"),
    )
}

fn epsilon_endpoints() -> Outcome {
    let mut ok = true;
    for (e0, ef, total) in [(0.9, 0.1, 6000.0), (1.0, 0.0, 1.0), (0.5, 0.5, 123.4), (0.9, 0.1, 4500.0)] {
        let s = EpsilonSchedule::new(e0, ef, total);
        ok &= s.epsilon_at(0.0) == e0 && s.epsilon_at(total) == ef;
        let mut prev = f64::INFINITY;
        for i in 0..=999 {
            let t = if i == 999 { total } else { total * i as f64 / 999.0 };
            let e = s.epsilon_at(t);
            ok &= e <= prev;
            prev = e;
        }
    }
    hard(ok, "endpoints exact and 1000-point sweeps nonincreasing".to_string())
}

fn timed(id: usize, f: fn() -> Outcome) -> (usize, Outcome) {
    let t0 = Instant::now();
    let out = f();
    eprintln!("  criterion {id} finished in {:.1} s", t0.elapsed().as_secs_f64());
    (id, out)
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    results.push(timed(1, decoder_oracle));
    results.push(timed(2, exhaustive_optimality));

    audit::reset();
    audit::enable();
    let t0 = Instant::now();
    let desk = desk_benchmark();
    audit::disable();
    let (checked, violations) = audit::counts();
    eprintln!("  desk benchmark finished in {:.1} s", t0.elapsed().as_secs_f64());
    results.push((3, invariants(checked, violations)));

    results.push(timed(4, coupling));
    results.push(timed(5, reward_table));
    results.push(timed(6, speedup_soundness));
    results.push(timed(7, validity_audit));
    results.push(timed(8, no_worse_contract));
    results.push(timed(9, determinism));
    results.push((10, direction_of_effect(&desk)));
    results.push(timed(11, budget_compliance));
    results.push(timed(12, epsilon_endpoints));

    results.sort_by_key(|(id, _)| *id);
    let mut failed = 0;
    for (id, o) in &results {
        let status = match (o.pass, o.soft) {
            (true, _) => "PASS",
            (false, true) => "FAIL (soft, not enforced)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2}: {status}: {}", o.detail);
        if !o.pass && !o.soft {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("acceptance: all hard criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} hard criteria failed");
        ExitCode::FAILURE
    }
}
