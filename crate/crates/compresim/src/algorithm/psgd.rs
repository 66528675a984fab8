//! Parallel SGD: uncompressed synchronous baseline.

use crate::error::Result;
use crate::harness::record::RunRecord;
use crate::vector::RealVector;
use crate::wire::WireCost;

use super::common::{require_identity_server, require_identity_worker};
use super::{select_gamma_uncompressed, Algorithm, RunContext, Sim};

pub struct Psgd;

impl Algorithm for Psgd {
    fn name(&self) -> &'static str {
        "psgd"
    }

    fn run(&self, ctx: &RunContext) -> Result<RunRecord> {
        require_identity_worker(ctx, "psgd")?;
        require_identity_server(ctx, "psgd")?;
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
        let d = sim.dim() as u64;
        let cost_model = sim.cost_model;

        for t in 0..budget {
            let gamma = sim.gamma(t);
            let mut sum = RealVector::zeros(sim.dim());
            for i in 0..n {
                let g = sim.oracles[i].query(&sim.problem, &sim.models[i])?;
                sim.ledger.record_uplink(&WireCost::scalars(d), &cost_model);
                sum.add_assign(&g);
            }
            sim.ledger.record_queries_per_worker(1);
            sum.scale_in_place(1.0 / n as f64);
            sim.ledger
                .record_downlink(&WireCost::scalars(d), &cost_model);
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
