//! Adversarial trial runner for the chain-instance certificates.
//!
//! Runs a configured algorithm against a chain problem under one of the two
//! adversaries (coordinate-masked oracle, or shared-randomness sparsifiers
//! with an exact oracle), recording enough to certify the progress bounds
//! against the logged randomness.

use crate::compressor::RandomnessMode;
use crate::error::{Error, Result};
use crate::harness::record::RunRecord;
use crate::problem::zero_chain::{h_grad, L_0};
use crate::problem::{OracleSpec, Problem, ZeroChainProblem};
use crate::vector::RealVector;
use crate::wire::CostModel;
use serde::Serialize;

use super::{algorithm_by_name, AlgorithmConfig, RunContext};

/// Certified quantities extracted from one adversarial run.
#[derive(Debug, Clone, Serialize)]
pub struct HardInstanceReport {
    pub seed: u64,
    pub dim: usize,
    /// Running max of prog over everything any worker held, per model update.
    pub prog_trajectory: Vec<usize>,
    pub final_prog: usize,
    /// Whether the run escaped the chain (prog reached d).
    pub reached_end: bool,
    /// Smallest global gradient norm over the recorded iterates.
    pub best_grad_norm: f64,
    /// max-norm of the unscaled chain gradient at the best iterate.
    pub chain_grad_inf_at_best: f64,
    /// Gradient-norm floor L lambda / L_0 that applies while prog < d.
    pub grad_norm_floor: f64,
    /// Number of query rounds where at least one worker drew zeta = 1.
    pub mask_hits: usize,
    /// Total masked query rounds.
    pub mask_rounds: usize,
    /// 1 + number of communication rounds whose shared draw kept the
    /// cross-worker frontier coordinate.
    pub frontier_bound: usize,
    /// Total logged communication rounds.
    pub comm_rounds: usize,
}

/// Runs one adversarial trial and certifies the logged randomness bounds.
pub fn run_hard_instance_trial(
    problem: &Problem,
    oracle: OracleSpec,
    config: &AlgorithmConfig,
    seed: u64,
    cost_model: CostModel,
) -> Result<(RunRecord, HardInstanceReport)> {
    let chain = problem
        .as_any()
        .downcast_ref::<ZeroChainProblem>()
        .ok_or_else(|| {
            Error::Unsupported("hard-instance trials require a zero_chain problem".into())
        })?;
    let masked = matches!(oracle, OracleSpec::BernoulliMaskedFullgrad { .. });
    let shared =
        config.worker_compressor.randomness_mode() == RandomnessMode::SharedBroadcast;
    if !masked && !shared {
        return Err(Error::Unsupported(
            "mismatched adversary/problem pairing: need a masked oracle or shared-randomness compressors"
                .into(),
        ));
    }
    if masked && !matches!(oracle, OracleSpec::BernoulliMaskedFullgrad { p } if p > 0.0 && p <= 1.0)
    {
        return Err(Error::invalid("mask probability must be in (0, 1]"));
    }

    let lambda = chain.lambda();
    let ctx = RunContext {
        problem,
        oracle,
        config,
        cost_model,
        seed,
        metric_every: 1,
        record_adversary: true,
    };
    let record = algorithm_by_name(&config.name)?.run(&ctx)?;
    let adversary = record
        .adversary
        .as_ref()
        .expect("adversary log requested for hard-instance run");

    let best_iterate = RealVector::from_vec(adversary.best_iterate.clone());
    let chain_grad_inf_at_best = h_grad(&best_iterate.scale(1.0 / lambda)).norm_inf();
    let consts = problem.constants();
    let report = HardInstanceReport {
        seed,
        dim: problem.dim(),
        prog_trajectory: adversary.prog_trajectory.clone(),
        final_prog: adversary.final_prog,
        reached_end: adversary.final_prog >= problem.dim(),
        best_grad_norm: adversary.best_grad_norm,
        chain_grad_inf_at_best,
        grad_norm_floor: consts.smoothness * lambda / L_0,
        mask_hits: adversary.mask_hits.iter().filter(|h| **h).count(),
        mask_rounds: adversary.mask_hits.len(),
        frontier_bound: 1 + adversary.frontier_hits.iter().filter(|h| **h).count(),
        comm_rounds: adversary.frontier_hits.len(),
    };
    Ok((record, report))
}
