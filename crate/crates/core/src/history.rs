//! Per-iteration training records shared by the optimisers.

use std::fmt;

/// Why an optimisation run stopped abnormally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    /// σ was driven to the lower clamp where the window length bottoms out.
    SigmaFloor,
    /// σ exceeded its upper bound.
    SigmaCeiling,
    /// The loss or a gradient became non-finite.
    NonFinite,
    /// Too few windows survived inside the padded signal domain.
    LayoutCollapsed,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Failure::SigmaFloor => "sigma-floor",
            Failure::SigmaCeiling => "sigma-ceiling",
            Failure::NonFinite => "non-finite",
            Failure::LayoutCollapsed => "layout-collapsed",
        };
        f.write_str(s)
    }
}

/// One row of a training trajectory. Iteration 0 is the starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub iteration: usize,
    pub loss: f64,
    pub sigma: Option<f64>,
    /// Effective window length `⌊6σ⌋` for the Gaussian experiments.
    pub length: Option<usize>,
    pub accuracy: Option<f64>,
    /// Number of surviving windows for adaptive runs.
    pub windows: Option<usize>,
}

impl Record {
    pub fn new(iteration: usize, loss: f64) -> Self {
        Record {
            iteration,
            loss,
            sigma: None,
            length: None,
            accuracy: None,
            windows: None,
        }
    }
}

/// Window boundaries captured during adaptive training.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutSnapshot {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<Record>,
    pub snapshots: Vec<LayoutSnapshot>,
    pub failure: Option<Failure>,
    /// Set when the run stopped on its convergence criterion.
    pub converged: bool,
}

impl TrainHistory {
    pub fn push(&mut self, record: Record) {
        self.records.push(record);
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    /// Number of update iterations performed.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}
