//! Unidirectional error-feedback SGD.
//!
//! Workers compress the learning-rate-scaled gradient plus their error
//! accumulator; the server averages the compressed messages and broadcasts
//! uncompressed. The learning rate multiplies before compression, so the
//! model update applies the averaged message directly.

use crate::error::Result;
use crate::harness::record::RunRecord;
use crate::vector::RealVector;
use crate::wire::WireCost;

use super::common::require_identity_server;
use super::{select_gamma_uncompressed, Algorithm, RunContext, Sim};

pub struct MemSgd;

impl Algorithm for MemSgd {
    fn name(&self) -> &'static str {
        "mem_sgd"
    }

    fn run(&self, ctx: &RunContext) -> Result<RunRecord> {
        require_identity_server(ctx, "mem_sgd")?;
        let consts = ctx.problem.constants();
        let budget = ctx.config.budget_t;
        let n = ctx.problem.workers();
        let schedule = ctx.config.gamma.resolve(|| {
            Ok(select_gamma_uncompressed(
                consts.smoothness,
                consts.sigma2.sqrt(),
                budget,
                n,
                consts.suboptimality,
            ))
        })?;
        let mut sim = Sim::new(ctx, schedule)?;
        let d = sim.dim();
        let cost_model = sim.cost_model;
        let inv_n = 1.0 / n as f64;

        let mut errors = vec![RealVector::zeros(d); n];
        // Independent accumulation of sum_s (gamma_s g_i^s - message_i^s),
        // tracked to confirm it stays equal to the error state.
        let mut error_checks = vec![RealVector::zeros(d); n];

        for t in 0..budget {
            let gamma = sim.gamma(t);
            let mut sum = RealVector::zeros(d);
            for i in 0..n {
                let g = sim.oracles[i].query(&sim.problem, &sim.models[i])?;
                let mut pending = g.scale(gamma);
                pending.add_assign(&errors[i]);
                let (message, cost) = sim.worker_comps[i].compress(&pending)?;
                sim.ledger.record_uplink(&cost, &cost_model);
                errors[i] = pending.sub(&message);
                error_checks[i].axpy(gamma, &g);
                error_checks[i].sub_assign(&message);
                let gap = error_checks[i].dist_sq(&errors[i]).sqrt();
                sim.diagnostics.max_tracker_gap = sim.diagnostics.max_tracker_gap.max(gap);
                sum.add_assign(&message);
            }
            sim.ledger.record_queries_per_worker(1);
            sum.scale_in_place(inv_n);
            sim.ledger
                .record_downlink(&WireCost::scalars(d as u64), &cost_model);
            sim.ledger.record_comm_rounds_per_worker(1);
            sim.apply_update(&sum);
            if !sim.step_done(t + 1, t + 1 == budget) {
                break;
            }
        }
        Ok(sim.into_record(self.name()))
    }
}
