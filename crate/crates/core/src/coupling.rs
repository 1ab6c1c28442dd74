//! Coupling measure between the charge order and the cast order.
//!
//! The "virtual sequence" of a cast order is the concatenation of each
//! cast's members. The measure is the mean Gaussian membership of every
//! charge's actual position in `u` relative to its virtual position; it is
//! 1 exactly when `u` equals the virtual sequence.

use serde::{Deserialize, Serialize};

use crate::model::{Instance, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub sigma: f64,
}

impl CouplingParams {
    pub fn new(sigma: f64) -> Self {
        assert!(sigma > 0.0 && sigma.is_finite(), "sigma must be positive");
        Self { sigma }
    }

    /// `max(N / 10, 1)`.
    pub fn default_for(inst: &Instance) -> Self {
        Self::new((inst.charge_count() as f64 / 10.0).max(1.0))
    }
}

pub fn virtual_sequence(inst: &Instance, v: &[usize]) -> Vec<usize> {
    v.iter()
        .flat_map(|&j| inst.cast_members(j).iter().copied())
        .collect()
}

/// Gaussian membership of a charge with virtual position `pos` at position `j`.
pub fn membership(pos: usize, j: usize, params: CouplingParams) -> f64 {
    let d = pos as f64 - j as f64;
    (-(d * d) / (2.0 * params.sigma * params.sigma)).exp()
}

pub fn coupling_measure(inst: &Instance, sol: &Solution, params: CouplingParams) -> f64 {
    let n = sol.u.len();
    if n == 0 {
        return 1.0;
    }
    let mut pos = vec![0; inst.charge_count()];
    for (p, k) in virtual_sequence(inst, &sol.v).into_iter().enumerate() {
        pos[k] = p;
    }
    let total: f64 = sol
        .u
        .iter()
        .enumerate()
        .map(|(i, &k)| membership(pos[k], i, params))
        .sum();
    total / n as f64
}
