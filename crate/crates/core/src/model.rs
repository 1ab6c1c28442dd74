//! Problem instance and solution representation.
//!
//! Internally every index is zero-based: charge `k` is `0..n`, cast `j` is
//! `0..z`, stage `i` is `0..s` with stage `s - 1` being continuous casting.
//! The JSON format and the command line use one-based identifiers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Integer minutes.
pub type Time = i64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("charge {charge} appears more than once in `casts`")]
    DuplicateCharge { charge: usize },
    #[error("size mismatch in `{field}`: expected {expected}, found {found}")]
    SizeMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("negative time {value} in `{field}`")]
    NegativeTime { field: &'static str, value: Time },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("`{field}` is not a permutation of 1..={len}")]
    NotAPermutation { field: &'static str, len: usize },
}

/// Objective weights `f = psi1 * c_max + psi2 * f_wait`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub psi1: f64,
    pub psi2: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            psi1: 10.0,
            psi2: 1.0,
        }
    }
}

/// One cast as it appears in the instance file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CastRecord {
    pub id: usize,
    pub charges: Vec<usize>,
    pub setup: Time,
}

/// Wire form of an [`Instance`]. Field names are the canonical file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub stages: usize,
    pub machines: Vec<usize>,
    pub transport: Vec<Time>,
    pub casts: Vec<CastRecord>,
    pub proc: Vec<Vec<Time>>,
    #[serde(default)]
    pub weights: Weights,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

/// Immutable, validated problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    stages: usize,
    machines: Vec<usize>,
    /// `transport[i]` is the transfer time into stage `i`; `transport[0] == 0`.
    transport: Vec<Time>,
    casts: Vec<Vec<usize>>,
    cast_ids: Vec<usize>,
    setup: Vec<Time>,
    proc: Vec<Vec<Time>>,
    weights: Weights,
    cast_of: Vec<usize>,
    rank_in_cast: Vec<usize>,
    meta: Option<serde_json::Value>,
}

impl Instance {
    /// Validates and converts the wire form.
    pub fn from_file(file: InstanceFile) -> Result<Self, ModelError> {
        validate_instance(&file)?;
        let n = file.proc.len();
        let mut casts: Vec<(usize, Vec<usize>, Time)> = file
            .casts
            .into_iter()
            .map(|c| (c.id, c.charges.iter().map(|k| k - 1).collect(), c.setup))
            .collect();
        casts.sort_by_key(|c| c.0);

        let mut cast_of = vec![0; n];
        let mut rank_in_cast = vec![0; n];
        for (j, (_, members, _)) in casts.iter().enumerate() {
            for (b, &k) in members.iter().enumerate() {
                cast_of[k] = j;
                rank_in_cast[k] = b;
            }
        }
        let mut transport = Vec::with_capacity(file.stages);
        transport.push(0);
        transport.extend_from_slice(&file.transport);

        Ok(Self {
            stages: file.stages,
            machines: file.machines,
            transport,
            cast_ids: casts.iter().map(|c| c.0).collect(),
            setup: casts.iter().map(|c| c.2).collect(),
            casts: casts.into_iter().map(|c| c.1).collect(),
            proc: file.proc,
            weights: file.weights,
            cast_of,
            rank_in_cast,
            meta: file.meta,
        })
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            stages: self.stages,
            machines: self.machines.clone(),
            transport: self.transport[1..].to_vec(),
            casts: self
                .casts
                .iter()
                .enumerate()
                .map(|(j, members)| CastRecord {
                    id: self.cast_ids[j],
                    charges: members.iter().map(|k| k + 1).collect(),
                    setup: self.setup[j],
                })
                .collect(),
            proc: self.proc.clone(),
            weights: self.weights,
            meta: self.meta.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| ModelError::Invalid {
            field: "json",
            reason: e.to_string(),
        })?;
        Self::from_file(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance serializes")
    }

    /// Number of stages `S`.
    pub fn stages(&self) -> usize {
        self.stages
    }

    /// Index of the casting stage.
    pub fn casting_stage(&self) -> usize {
        self.stages - 1
    }

    pub fn machines(&self, stage: usize) -> usize {
        self.machines[stage]
    }

    /// Transfer time into `stage` (zero for the first stage).
    pub fn transport(&self, stage: usize) -> Time {
        self.transport[stage]
    }

    /// Number of charges `N`.
    pub fn charge_count(&self) -> usize {
        self.proc.len()
    }

    /// Number of casts `Z`.
    pub fn cast_count(&self) -> usize {
        self.casts.len()
    }

    /// Ordered members of cast `j` (within-cast processing priority).
    pub fn cast_members(&self, cast: usize) -> &[usize] {
        &self.casts[cast]
    }

    /// One-based identifier of cast `j` as written in the instance file.
    pub fn cast_id(&self, cast: usize) -> usize {
        self.cast_ids[cast]
    }

    pub fn setup(&self, cast: usize) -> Time {
        self.setup[cast]
    }

    pub fn proc(&self, charge: usize, stage: usize) -> Time {
        self.proc[charge][stage]
    }

    pub fn weights(&self) -> Weights {
        self.weights
    }

    /// Returns a copy with different objective weights.
    pub fn with_weights(&self, weights: Weights) -> Self {
        Self {
            weights,
            ..self.clone()
        }
    }

    pub fn cast_of(&self, charge: usize) -> usize {
        self.cast_of[charge]
    }

    /// Position of `charge` inside its cast.
    pub fn rank_in_cast(&self, charge: usize) -> usize {
        self.rank_in_cast[charge]
    }

    /// Total casting duration of a cast.
    pub fn casting_load(&self, cast: usize) -> Time {
        let s = self.casting_stage();
        self.casts[cast].iter().map(|&k| self.proc[k][s]).sum()
    }

    pub fn meta(&self) -> Option<&serde_json::Value> {
        self.meta.as_ref()
    }
}

/// Checks every structural invariant of an instance file.
pub fn validate_instance(file: &InstanceFile) -> Result<(), ModelError> {
    if file.stages < 2 {
        return Err(ModelError::Invalid {
            field: "stages",
            reason: format!("need at least 2 stages, got {}", file.stages),
        });
    }
    let s = file.stages;
    if file.machines.len() != s {
        return Err(ModelError::SizeMismatch {
            field: "machines",
            expected: s,
            found: file.machines.len(),
        });
    }
    if let Some(pos) = file.machines.iter().position(|&m| m == 0) {
        return Err(ModelError::Invalid {
            field: "machines",
            reason: format!("stage {} has no machine", pos + 1),
        });
    }
    if file.transport.len() != s - 1 {
        return Err(ModelError::SizeMismatch {
            field: "transport",
            expected: s - 1,
            found: file.transport.len(),
        });
    }
    if let Some(&t) = file.transport.iter().find(|&&t| t < 0) {
        return Err(ModelError::NegativeTime {
            field: "transport",
            value: t,
        });
    }
    if file.casts.is_empty() {
        return Err(ModelError::Invalid {
            field: "casts",
            reason: "at least one cast is required".into(),
        });
    }

    let n = file.proc.len();
    let mut seen_ids = vec![false; file.casts.len()];
    let mut seen = vec![false; n];
    let mut listed = 0;
    for cast in &file.casts {
        if cast.id == 0
            || cast.id > file.casts.len()
            || std::mem::replace(&mut seen_ids[cast.id - 1], true)
        {
            return Err(ModelError::Invalid {
                field: "casts.id",
                reason: format!("cast ids must be a permutation of 1..={}", file.casts.len()),
            });
        }
        if cast.charges.is_empty() {
            return Err(ModelError::Invalid {
                field: "casts.charges",
                reason: format!("cast {} is empty", cast.id),
            });
        }
        if cast.setup < 0 {
            return Err(ModelError::NegativeTime {
                field: "casts.setup",
                value: cast.setup,
            });
        }
        listed += cast.charges.len();
        for &k in &cast.charges {
            if k == 0 || k > n {
                return Err(ModelError::SizeMismatch {
                    field: "casts.charges",
                    expected: n,
                    found: k,
                });
            }
            if std::mem::replace(&mut seen[k - 1], true) {
                return Err(ModelError::DuplicateCharge { charge: k });
            }
        }
    }
    if listed != n {
        return Err(ModelError::SizeMismatch {
            field: "casts.charges",
            expected: n,
            found: listed,
        });
    }

    for row in &file.proc {
        if row.len() != s {
            return Err(ModelError::SizeMismatch {
                field: "proc",
                expected: s,
                found: row.len(),
            });
        }
        if let Some(&p) = row.iter().find(|&&p| p < 0) {
            return Err(ModelError::NegativeTime {
                field: "proc",
                value: p,
            });
        }
    }

    let w = file.weights;
    if !(w.psi1 > 0.0) || !w.psi1.is_finite() {
        return Err(ModelError::Invalid {
            field: "weights.psi1",
            reason: format!("must be positive, got {}", w.psi1),
        });
    }
    if !(w.psi2 >= 0.0) || !w.psi2.is_finite() {
        return Err(ModelError::Invalid {
            field: "weights.psi2",
            reason: format!("must be nonnegative, got {}", w.psi2),
        });
    }
    Ok(())
}

/// A pair `(u, v)`: charge permutation and cast permutation, zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Solution {
    pub u: Vec<usize>,
    pub v: Vec<usize>,
}

impl Solution {
    pub fn new(u: Vec<usize>, v: Vec<usize>) -> Self {
        Self { u, v }
    }

    /// Builds a solution from one-based identifiers.
    pub fn from_one_based(u: &[usize], v: &[usize]) -> Self {
        Self {
            u: u.iter().map(|k| k.wrapping_sub(1)).collect(),
            v: v.iter().map(|j| j.wrapping_sub(1)).collect(),
        }
    }

    pub fn u_one_based(&self) -> Vec<usize> {
        self.u.iter().map(|k| k + 1).collect()
    }

    pub fn v_one_based(&self) -> Vec<usize> {
        self.v.iter().map(|j| j + 1).collect()
    }
}

pub fn is_permutation(seq: &[usize], len: usize) -> bool {
    if seq.len() != len {
        return false;
    }
    let mut seen = vec![false; len];
    seq.iter()
        .all(|&x| x < len && !std::mem::replace(&mut seen[x], true))
}

pub fn validate_solution(inst: &Instance, sol: &Solution) -> Result<(), ModelError> {
    if !is_permutation(&sol.u, inst.charge_count()) {
        return Err(ModelError::NotAPermutation {
            field: "u",
            len: inst.charge_count(),
        });
    }
    if !is_permutation(&sol.v, inst.cast_count()) {
        return Err(ModelError::NotAPermutation {
            field: "v",
            len: inst.cast_count(),
        });
    }
    Ok(())
}
