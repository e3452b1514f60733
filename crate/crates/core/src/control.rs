//! Cooperative stopping for long-running solves.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

/// Why a solver stopped before using its whole budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Interrupt {
    Cancelled,
    TimeLimit,
}

/// A deadline and a cancellation flag, both optional. Solvers poll
/// [`Control::interrupted`] between iterations.
#[derive(Clone, Debug, Default)]
pub struct Control {
    pub deadline: Option<Instant>,
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Control {
    pub fn with_time_limit(limit: Option<Duration>) -> Self {
        Control {
            deadline: limit.map(|d| Instant::now() + d),
            cancel: None,
        }
    }

    pub fn with_cancel(mut self, flag: Arc<AtomicBool>) -> Self {
        self.cancel = Some(flag);
        self
    }

    pub fn interrupted(&self) -> Option<Interrupt> {
        if self
            .cancel
            .as_ref()
            .is_some_and(|c| c.load(Ordering::Relaxed))
        {
            return Some(Interrupt::Cancelled);
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Some(Interrupt::TimeLimit);
        }
        None
    }
}
