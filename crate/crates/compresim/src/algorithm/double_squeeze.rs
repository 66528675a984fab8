//! Bidirectional error-feedback SGD.
//!
//! Workers compress gradient-plus-residual; the server compresses its own
//! average-plus-residual before broadcasting. The learning rate applies at
//! the model update.

use crate::error::Result;
use crate::harness::record::RunRecord;
use crate::vector::RealVector;

use super::{select_gamma_uncompressed, Algorithm, RunContext, Sim};

pub struct DoubleSqueeze;

impl Algorithm for DoubleSqueeze {
    fn name(&self) -> &'static str {
        "double_squeeze"
    }

    fn run(&self, ctx: &RunContext) -> Result<RunRecord> {
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

        let mut worker_residuals = vec![RealVector::zeros(d); n];
        let mut server_residual = RealVector::zeros(d);

        for t in 0..budget {
            let gamma = sim.gamma(t);
            let mut sum = RealVector::zeros(d);
            for i in 0..n {
                let g = sim.oracles[i].query(&sim.problem, &sim.models[i])?;
                let mut pending = g;
                pending.add_assign(&worker_residuals[i]);
                let (message, cost) = sim.worker_comps[i].compress(&pending)?;
                sim.ledger.record_uplink(&cost, &cost_model);
                worker_residuals[i] = pending.sub(&message);
                sum.add_assign(&message);
            }
            sim.ledger.record_queries_per_worker(1);
            sum.scale_in_place(inv_n);
            let mut pending = sum;
            pending.add_assign(&server_residual);
            let (broadcast, cost) = sim.server_comp.compress(&pending)?;
            sim.ledger.record_downlink(&cost, &cost_model);
            server_residual = pending.sub(&broadcast);
            // Residual identity stays definitional on every round.
            let gap = server_residual.dist_sq(&pending.sub(&broadcast)).sqrt();
            sim.diagnostics.max_tracker_gap = sim.diagnostics.max_tracker_gap.max(gap);
            sim.ledger.record_comm_rounds_per_worker(1);

            let step = broadcast.scale(gamma);
            sim.apply_update(&step);
            if !sim.step_done(t + 1, t + 1 == budget) {
                break;
            }
        }
        Ok(sim.into_record(self.name()))
    }
}
