//! Run budgets and the clock every search loop consults.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

/// How long a run may search.
///
/// `Evaluations` replaces wall time by a virtual clock that advances
/// `nominal_ms / max` per objective evaluation, which makes every
/// time-dependent decision (epsilon decay, trajectory stamps) reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Budget {
    WallClock { total_ms: f64 },
    Evaluations { max: u64, nominal_ms: f64 },
}

impl Budget {
    /// `T_total = Z * S * lambda` milliseconds.
    pub fn for_instance_ms(casts: usize, stages: usize, lambda: f64) -> f64 {
        casts as f64 * stages as f64 * lambda
    }

    pub fn total_ms(&self) -> f64 {
        match *self {
            Budget::WallClock { total_ms } => total_ms,
            Budget::Evaluations { nominal_ms, .. } => nominal_ms,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Clock {
    budget: Budget,
    started: Instant,
    evaluations: u64,
    slowest_evaluation: Duration,
}

impl Clock {
    pub fn start(budget: Budget) -> Self {
        Self {
            budget,
            started: Instant::now(),
            evaluations: 0,
            slowest_evaluation: Duration::ZERO,
        }
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    /// Budget length in (possibly virtual) milliseconds; always positive.
    pub fn total_ms(&self) -> f64 {
        self.budget.total_ms().max(f64::MIN_POSITIVE)
    }

    /// Elapsed (possibly virtual) milliseconds.
    pub fn elapsed_ms(&self) -> f64 {
        match self.budget {
            Budget::WallClock { .. } => self.started.elapsed().as_secs_f64() * 1e3,
            Budget::Evaluations { max, nominal_ms } => {
                if max == 0 {
                    nominal_ms
                } else {
                    nominal_ms * (self.evaluations.min(max) as f64 / max as f64)
                }
            }
        }
    }

    pub fn wall_elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    pub fn expired(&self) -> bool {
        match self.budget {
            Budget::WallClock { total_ms } => self.started.elapsed().as_secs_f64() * 1e3 >= total_ms,
            Budget::Evaluations { max, .. } => self.evaluations >= max,
        }
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn slowest_evaluation(&self) -> Duration {
        self.slowest_evaluation
    }

    pub(crate) fn record_evaluation(&mut self, took: Duration) {
        self.evaluations += 1;
        self.slowest_evaluation = self.slowest_evaluation.max(took);
    }
}
