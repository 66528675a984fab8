//! Unbiased-compression SGD without error feedback.

use crate::error::{Error, Result};
use crate::harness::record::RunRecord;
use crate::vector::RealVector;
use crate::wire::WireCost;

use super::common::require_identity_server;
use super::{select_gamma_uncompressed, Algorithm, RunContext, Sim};

pub struct Qsgd;

impl Algorithm for Qsgd {
    fn name(&self) -> &'static str {
        "qsgd"
    }

    fn run(&self, ctx: &RunContext) -> Result<RunRecord> {
        require_identity_server(ctx, "qsgd")?;
        let d = ctx.problem.dim();
        if ctx.config.worker_compressor.omega(d).is_none() {
            return Err(Error::Unsupported(
                "qsgd requires an unbiased worker compressor".into(),
            ));
        }
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
        let cost_model = sim.cost_model;
        let inv_n = 1.0 / n as f64;

        for t in 0..budget {
            let gamma = sim.gamma(t);
            let mut sum = RealVector::zeros(d);
            for i in 0..n {
                let g = sim.oracles[i].query(&sim.problem, &sim.models[i])?;
                let (message, cost) = sim.worker_comps[i].compress(&g)?;
                sim.ledger.record_uplink(&cost, &cost_model);
                sum.add_assign(&message);
            }
            sim.ledger.record_queries_per_worker(1);
            sum.scale_in_place(inv_n);
            sim.ledger
                .record_downlink(&WireCost::scalars(d as u64), &cost_model);
            sim.ledger.record_comm_rounds_per_worker(1);
            let step = sum.scale(gamma);
            sim.apply_update(&step);
            if !sim.step_done(t + 1, t + 1 == budget) {
                break;
            }
        }
        Ok(sim.into_record(self.name()))
    }
}
