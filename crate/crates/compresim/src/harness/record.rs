//! Per-run trajectory records.

use crate::wire::CommLedger;
use serde::{Deserialize, Serialize};

/// One logged point of a run: metrics plus a cumulative ledger snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    /// Communication rounds consumed per worker when the row was logged.
    pub round: u64,
    pub f: f64,
    pub grad_norm_sq: f64,
    /// Running average of `grad_norm_sq` over the logged rows so far.
    pub grad_norm_sq_avg: f64,
    pub up_scalars: u64,
    pub up_idx: u64,
    pub down_scalars: u64,
    pub down_idx: u64,
    pub up_bits: u64,
    pub down_bits: u64,
    pub queries: u64,
}

/// Internal run diagnostics checked by the verification suites.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Max over iterations of the accumulated-error recursion residual.
    pub max_recursion_residual: f64,
    /// Max over iterations of the worker-model divergence (0 when all copies
    /// stay identical).
    pub max_model_divergence: f64,
    /// Max gap between the server's incremental aggregate and the average of
    /// worker trackers (gradient-tracking algorithms only).
    pub max_tracker_gap: f64,
    /// Learning rate in effect at the first step.
    pub initial_gamma: f64,
    /// Compression rounds per iteration actually used (1 for single-shot
    /// algorithms).
    pub rounds_per_iteration: u64,
}

/// Adversarial bookkeeping for hard-instance runs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AdversaryLog {
    /// Running max of prog over all worker models, one entry per model update.
    pub prog_trajectory: Vec<usize>,
    /// prog over everything any worker ever held.
    pub final_prog: usize,
    /// Smallest global gradient norm over the recorded iterates.
    pub best_grad_norm: f64,
    /// The iterate attaining `best_grad_norm`.
    pub best_iterate: Vec<f64>,
    /// Per query round: whether any worker drew zeta = 1 (masked oracle).
    pub mask_hits: Vec<bool>,
    /// Per communication round: whether the cross-worker frontier coordinate
    /// survived compression (shared-randomness adversary).
    pub frontier_hits: Vec<bool>,
}

/// Full trajectory of one (algorithm, seed) run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub seed: u64,
    pub rows: Vec<MetricRow>,
    pub ledger: CommLedger,
    pub diverged: bool,
    pub wall_time_secs: f64,
    pub diagnostics: Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversaryLog>,
}

impl RunRecord {
    pub fn final_row(&self) -> Option<&MetricRow> {
        self.rows.last()
    }

    /// Exact trajectory equality: every logged metric value matches.
    pub fn same_trajectory(&self, other: &RunRecord) -> bool {
        self.rows.len() == other.rows.len()
            && self
                .rows
                .iter()
                .zip(other.rows.iter())
                .all(|(a, b)| a.round == b.round && a.f == b.f && a.grad_norm_sq == b.grad_norm_sq)
    }
}
