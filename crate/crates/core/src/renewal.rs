//! Perturbation of the cast order followed by charge-order reconstruction.

use rand::Rng;

use crate::model::{Instance, Solution, Time};
use crate::neighborhoods::MoveError;

/// Moves the tail after a random cut point `q` in `1..Z` to the front.
pub fn insert_f<R: Rng + ?Sized>(v: &[usize], rng: &mut R) -> Result<Vec<usize>, MoveError> {
    if v.len() < 2 {
        return Err(MoveError::TooSmall {
            op: "Insert_f",
            min: 2,
            n: v.len(),
        });
    }
    Ok(rotate_at(v, rng.gen_range(1..v.len())))
}

/// `v[q..] ++ v[..q]`.
pub fn rotate_at(v: &[usize], q: usize) -> Vec<usize> {
    let mut out = v[q..].to_vec();
    out.extend_from_slice(&v[..q]);
    out
}

/// Reverses `v[a..=b]` for a uniform pair `a < b` with `b - a > Z / 3`.
pub fn inter_r<R: Rng + ?Sized>(v: &[usize], rng: &mut R) -> Result<Vec<usize>, MoveError> {
    let z = v.len();
    let admissible = |a: usize, b: usize| 3 * (b - a) > z;
    if z < 2 || !admissible(0, z - 1) {
        return Err(MoveError::TooSmall {
            op: "Inter_r",
            min: 2,
            n: z,
        });
    }
    let (a, b) = loop {
        let a = rng.gen_range(0..z);
        let b = rng.gen_range(0..z);
        if a < b && admissible(a, b) {
            break (a, b);
        }
    };
    Ok(reverse_between(v, a, b))
}

pub fn reverse_between(v: &[usize], a: usize, b: usize) -> Vec<usize> {
    let mut out = v.to_vec();
    out[a..=b].reverse();
    out
}

/// Casting start of every charge when casts are dispatched in `v` order to
/// the first free caster, each after its setup, ignoring arrivals.
pub fn casting_starts(inst: &Instance, v: &[usize]) -> Vec<Time> {
    let cs = inst.casting_stage();
    let mut avail = vec![0; inst.machines(cs)];
    let mut start = vec![0; inst.charge_count()];
    for &j in v {
        let m = (0..avail.len()).min_by_key(|&m| (avail[m], m)).unwrap();
        let mut t = avail[m] + inst.setup(j);
        for &k in inst.cast_members(j) {
            start[k] = t;
            t += inst.proc(k, cs);
        }
        avail[m] = t;
    }
    start
}

/// Charges ordered by casting start, ties by cast position in `v` and then
/// within-cast priority.
pub fn construct_u(inst: &Instance, v: &[usize]) -> Vec<usize> {
    let start = casting_starts(inst, v);
    let mut cast_pos = vec![0; inst.cast_count()];
    for (p, &j) in v.iter().enumerate() {
        cast_pos[j] = p;
    }
    let mut u: Vec<usize> = (0..inst.charge_count()).collect();
    u.sort_by_key(|&k| (start[k], cast_pos[inst.cast_of(k)], inst.rank_in_cast(k)));
    u
}

/// Which perturbation [`d2r`] applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perturbation {
    InterR,
    InsertF,
    None,
}

/// Perturbs `v` with one of the two operators (even odds) and rebuilds `u`.
/// The result is returned regardless of its objective value.
pub fn d2r<R: Rng + ?Sized>(inst: &Instance, sol: &Solution, rng: &mut R) -> (Solution, Perturbation) {
    let (v, kind) = if rng.gen::<f64>() > 0.5 {
        (inter_r(&sol.v, rng).ok(), Perturbation::InterR)
    } else {
        (insert_f(&sol.v, rng).ok(), Perturbation::InsertF)
    };
    let (v, kind) = match v {
        Some(v) => (v, kind),
        None => (sol.v.clone(), Perturbation::None),
    };
    let u = construct_u(inst, &v);
    (Solution::new(u, v), kind)
}
