//! One-step Q-learning over neighborhood structures.
//!
//! States and actions share the same index set: a state is the structure
//! produced by the last operator applied, an action is the next operator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::neighborhoods::{CastOp, ChargeOp};

/// Square table `values[state][action]`, all zeros initially.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    size: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(size: usize) -> Self {
        assert!(size > 0);
        Self {
            size,
            values: vec![0.0; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.size + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.size..(state + 1) * self.size]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.values[state * self.size + action] = value;
    }

    /// Convex-combination update `Q <- (1 - alpha) Q + alpha r`.
    pub fn update(&mut self, state: usize, action: usize, reward: f64, alpha: f64) {
        debug_assert!(alpha > 0.0 && alpha <= 1.0);
        let q = self.get(state, action);
        // rounding may step one ulp outside the segment between q and reward
        let next = ((1.0 - alpha) * q + alpha * reward).clamp(q.min(reward), q.max(reward));
        self.set(state, action, next);
    }

    /// Greedy action, lowest index on ties.
    pub fn argmax(&self, state: usize) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for a in 1..row.len() {
            if row[a] > row[best] {
                best = a;
            }
        }
        best
    }

    /// Rows are states, columns are actions; full round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for s in 0..self.size {
            let line: Vec<String> = self.row(s).iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Epsilon-greedy selection over row `state`.
pub fn select_action<R: Rng + ?Sized>(q: &QTable, state: usize, eps: f64, rng: &mut R) -> usize {
    if rng.gen::<f64>() < eps {
        rng.gen_range(0..q.size())
    } else {
        q.argmax(state)
    }
}

/// Reward from the change in objective and in coupling measure.
pub fn reward(delta_f: f64, delta_cm: f64) -> f64 {
    match (delta_f < 0.0, delta_cm > 0.0) {
        (true, true) => 1.5,
        (true, false) => 1.0,
        (false, true) => 0.2,
        (false, false) => 0.0,
    }
}

/// Linear decay from `eps0` at time zero to `eps_final` at `t_total`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub eps0: f64,
    pub eps_final: f64,
    pub t_total: f64,
}

impl EpsilonSchedule {
    pub fn new(eps0: f64, eps_final: f64, t_total: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&eps0) && (0.0..=eps0).contains(&eps_final),
            "need 0 <= eps_final <= eps0 <= 1"
        );
        assert!(t_total > 0.0, "t_total must be positive");
        Self {
            eps0,
            eps_final,
            t_total,
        }
    }

    /// `t_current` is clamped into `[0, t_total]`.
    pub fn epsilon_at(&self, t_current: f64) -> f64 {
        let t = t_current.clamp(0.0, self.t_total);
        if t == 0.0 {
            return self.eps0;
        }
        if t == self.t_total {
            return self.eps_final;
        }
        let e = self.eps_final + (self.eps0 - self.eps_final) * (self.t_total - t) / self.t_total;
        e.clamp(self.eps_final, self.eps0)
    }
}

/// Flat index over `(charge structure, cast structure)` pairs: cast-major,
/// so index `c * 8 + h` is charge op `h` combined with cast op `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointIndex;

impl JointIndex {
    pub const SIZE: usize = 24;

    pub fn flatten(charge: ChargeOp, cast: CastOp) -> usize {
        cast.index() * ChargeOp::ALL.len() + charge.index()
    }

    pub fn unflatten(index: usize) -> (ChargeOp, CastOp) {
        assert!(index < Self::SIZE);
        (
            ChargeOp::from_index(index % ChargeOp::ALL.len()),
            CastOp::from_index(index / ChargeOp::ALL.len()),
        )
    }
}
