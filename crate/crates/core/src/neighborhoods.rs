//! Charge and cast neighborhood operators.
//!
//! Charge operators come in three distance bands for Swap and Insert plus
//! two variable-scale Exchange moves. Positions are zero-based; bands are
//! decided on the distance `d = |i - j|` with exact rational thresholds
//! `n / 6` and `n / 2`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MoveError {
    #[error("no admissible move for {op} at size {n}")]
    EmptyBand { op: &'static str, n: usize },
    #[error("{op} needs at least {min} elements, got {n}")]
    TooSmall {
        op: &'static str,
        min: usize,
        n: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Band {
    Small,
    Medium,
    Large,
}

impl Band {
    /// Whether distance `d` on a sequence of length `n` falls in the band.
    pub fn contains(self, d: usize, n: usize) -> bool {
        match self {
            Band::Small => d > 0 && 6 * d <= n,
            Band::Medium => 6 * d > n && 2 * d <= n,
            Band::Large => 2 * d > n && d < n,
        }
    }
}

/// Classifies the distance between two distinct positions.
pub fn band_of(i: usize, j: usize, n: usize) -> Band {
    debug_assert!(i != j && i < n && j < n);
    let d = i.abs_diff(j);
    if Band::Small.contains(d, n) {
        Band::Small
    } else if Band::Medium.contains(d, n) {
        Band::Medium
    } else {
        Band::Large
    }
}

/// The eight charge operators, in action-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChargeOp {
    Sns,
    Mns,
    Lns,
    Ssi,
    Msi,
    Lsi,
    Ne1,
    Ne3,
}

impl ChargeOp {
    pub const ALL: [ChargeOp; 8] = [
        ChargeOp::Sns,
        ChargeOp::Mns,
        ChargeOp::Lns,
        ChargeOp::Ssi,
        ChargeOp::Msi,
        ChargeOp::Lsi,
        ChargeOp::Ne1,
        ChargeOp::Ne3,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            ChargeOp::Sns => "SNS",
            ChargeOp::Mns => "MNS",
            ChargeOp::Lns => "LNS",
            ChargeOp::Ssi => "SSI",
            ChargeOp::Msi => "MSI",
            ChargeOp::Lsi => "LSI",
            ChargeOp::Ne1 => "NE1",
            ChargeOp::Ne3 => "NE3",
        }
    }

    fn band(self) -> Option<Band> {
        match self {
            ChargeOp::Sns | ChargeOp::Ssi => Some(Band::Small),
            ChargeOp::Mns | ChargeOp::Msi => Some(Band::Medium),
            ChargeOp::Lns | ChargeOp::Lsi => Some(Band::Large),
            ChargeOp::Ne1 | ChargeOp::Ne3 => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CastOp {
    Swap,
    Insert,
    Exchange,
}

impl CastOp {
    pub const ALL: [CastOp; 3] = [CastOp::Swap, CastOp::Insert, CastOp::Exchange];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            CastOp::Swap => "Swap",
            CastOp::Insert => "Insert",
            CastOp::Exchange => "Exchange",
        }
    }
}

/// A concrete move on a permutation, zero-based positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    /// Exchange the elements at `i` and `j`.
    Swap { i: usize, j: usize },
    /// Remove the element at `from` and reinsert it right before the element
    /// that was at `before`.
    Insert { from: usize, before: usize },
    /// Exchange `(c - d, c + d)` for every `d` in `1..=radius` that fits.
    Exchange { center: usize, radius: usize },
}

impl Move {
    /// Position pairs whose elements are exchanged or reordered by the move.
    pub fn pairs(&self, n: usize) -> Vec<(usize, usize)> {
        match *self {
            Move::Swap { i, j } => vec![(i, j)],
            Move::Insert { from, before } => vec![(from, before)],
            Move::Exchange { center, radius } => (1..=radius)
                .filter(|&d| d <= center && center + d < n)
                .map(|d| (center - d, center + d))
                .collect(),
        }
    }
}

/// Applies a move, returning a new permutation.
pub fn apply_move(seq: &[usize], m: Move) -> Vec<usize> {
    let mut out = seq.to_vec();
    match m {
        Move::Swap { i, j } => out.swap(i, j),
        Move::Insert { from, before } => {
            let target = seq[before];
            let item = out.remove(from);
            let at = out.iter().position(|&x| x == target).expect("target present");
            out.insert(at, item);
        }
        Move::Exchange { .. } => {
            for (a, b) in m.pairs(seq.len()) {
                out.swap(a, b);
            }
        }
    }
    out
}

/// Uniform ordered pair `(a, b)`, `a != b`, whose distance lies in `band`.
///
/// Sizes below six leave the small band empty; it then covers every
/// distance so the small operators stay usable on tiny instances.
fn sample_band_pair<R: Rng + ?Sized>(
    band: Band,
    n: usize,
    rng: &mut R,
    op: &'static str,
) -> Result<(usize, usize), MoveError> {
    if n < 2 {
        return Err(MoveError::EmptyBand { op, n });
    }
    let admits = |d: usize| {
        band.contains(d, n) || (band == Band::Small && n < 6 && d > 0 && d < n)
    };
    if !(1..n).any(admits) {
        return Err(MoveError::EmptyBand { op, n });
    }
    loop {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && admits(a.abs_diff(b)) {
            return Ok((a, b));
        }
    }
}

pub fn sample_charge_move<R: Rng + ?Sized>(
    op: ChargeOp,
    n: usize,
    rng: &mut R,
) -> Result<Move, MoveError> {
    match op {
        ChargeOp::Sns | ChargeOp::Mns | ChargeOp::Lns => {
            let (i, j) = sample_band_pair(op.band().unwrap(), n, rng, op.name())?;
            Ok(Move::Swap { i, j })
        }
        ChargeOp::Ssi | ChargeOp::Msi | ChargeOp::Lsi => {
            let (before, from) = sample_band_pair(op.band().unwrap(), n, rng, op.name())?;
            Ok(Move::Insert { from, before })
        }
        ChargeOp::Ne1 | ChargeOp::Ne3 => {
            if n < 3 {
                return Err(MoveError::EmptyBand { op: op.name(), n });
            }
            let radius = if op == ChargeOp::Ne1 { 1 } else { 3 };
            Ok(Move::Exchange {
                center: rng.gen_range(1..n - 1),
                radius,
            })
        }
    }
}

pub fn sample_cast_move<R: Rng + ?Sized>(
    op: CastOp,
    z: usize,
    rng: &mut R,
) -> Result<Move, MoveError> {
    let min = if op == CastOp::Exchange { 3 } else { 2 };
    if z < min {
        return Err(MoveError::TooSmall {
            op: op.name(),
            min,
            n: z,
        });
    }
    Ok(match op {
        CastOp::Swap | CastOp::Insert => {
            let a = rng.gen_range(0..z);
            let mut b = rng.gen_range(0..z - 1);
            if b >= a {
                b += 1;
            }
            if op == CastOp::Swap {
                Move::Swap { i: a, j: b }
            } else {
                Move::Insert {
                    from: b,
                    before: a,
                }
            }
        }
        CastOp::Exchange => Move::Exchange {
            center: rng.gen_range(1..z - 1),
            radius: 1,
        },
    })
}

/// Samples and applies a cast operator.
pub fn apply_cast<R: Rng + ?Sized>(
    v: &[usize],
    op: CastOp,
    rng: &mut R,
) -> Result<Vec<usize>, MoveError> {
    let m = sample_cast_move(op, v.len(), rng)?;
    Ok(apply_move(v, m))
}
