//! Gradient-tracking error feedback (unidirectional).
//!
//! Each worker maintains a tracker g_i updated by the compressed difference
//! to its fresh stochastic gradient; the server maintains the tracker
//! average incrementally and broadcasts it uncompressed.

use crate::error::Result;
use crate::harness::record::RunRecord;
use crate::vector::RealVector;
use crate::wire::WireCost;

use super::common::require_identity_server;
use super::{select_gamma_uncompressed, Algorithm, RunContext, Sim};

pub struct Ef21Sgd;

impl Algorithm for Ef21Sgd {
    fn name(&self) -> &'static str {
        "ef21_sgd"
    }

    fn run(&self, ctx: &RunContext) -> Result<RunRecord> {
        require_identity_server(ctx, "ef21_sgd")?;
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

        let mut trackers = vec![RealVector::zeros(d); n];
        let mut aggregate = RealVector::zeros(d);

        for t in 0..budget {
            let gamma = sim.gamma(t);
            let mut correction_sum = RealVector::zeros(d);
            for i in 0..n {
                let g = sim.oracles[i].query(&sim.problem, &sim.models[i])?;
                let diff = g.sub(&trackers[i]);
                let (correction, cost) = sim.worker_comps[i].compress(&diff)?;
                sim.ledger.record_uplink(&cost, &cost_model);
                trackers[i].add_assign(&correction);
                correction_sum.add_assign(&correction);
            }
            sim.ledger.record_queries_per_worker(1);
            aggregate.axpy(inv_n, &correction_sum);

            // Incremental aggregate vs the tracker average.
            let mut tracker_avg = RealVector::zeros(d);
            for tr in &trackers {
                tracker_avg.axpy(inv_n, tr);
            }
            let gap = tracker_avg.dist_sq(&aggregate).sqrt();
            sim.diagnostics.max_tracker_gap = sim.diagnostics.max_tracker_gap.max(gap);

            sim.ledger
                .record_downlink(&WireCost::scalars(d as u64), &cost_model);
            sim.ledger.record_comm_rounds_per_worker(1);
            let step = aggregate.scale(gamma);
            sim.apply_update(&step);
            if !sim.step_done(t + 1, t + 1 == budget) {
                break;
            }
        }
        Ok(sim.into_record(self.name()))
    }
}
