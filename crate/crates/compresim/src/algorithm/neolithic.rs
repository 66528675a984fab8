//! Accumulated-gradient optimizer with bidirectional recursive compression
//! and error compensation on both the workers and the server.
//!
//! Per outer iteration: every worker averages R fresh oracle draws, adds its
//! error accumulator, and ships the result through R compress-the-residual
//! rounds; the server aggregates the received chunk sums, adds its own error
//! accumulator, and broadcasts through another R compressed rounds. The
//! budget convention is K = floor(T / R) iterations so that per-worker
//! gradient queries and communication rounds both equal K * R.

use crate::error::{Error, Result};
use crate::fcc::fcc;
use crate::harness::record::RunRecord;
use crate::vector::RealVector;

use super::{select_gamma_neolithic, select_r, theta_for, Algorithm, RunContext, SelectionMode, Sim};

pub struct Neolithic;

impl Algorithm for Neolithic {
    fn name(&self) -> &'static str {
        "neolithic"
    }

    fn run(&self, ctx: &RunContext) -> Result<RunRecord> {
        let cfg = ctx.config;
        let d = ctx.problem.dim();
        let n = ctx.problem.workers();
        let consts = ctx.problem.constants();

        let delta_worker = cfg.worker_compressor.delta(d).ok_or_else(|| {
            Error::Unsupported(
                "neolithic requires a contractive worker compressor (wrap unbiased ones)".into(),
            )
        })?;
        let delta_server = cfg.server_compressor.delta(d).ok_or_else(|| {
            Error::Unsupported("neolithic requires a contractive server compressor".into())
        })?;
        let delta = delta_worker.min(delta_server);

        let budget = cfg.budget_t;
        let rounds = match cfg.rounds.mode {
            SelectionMode::Manual => {
                let r = cfg
                    .rounds
                    .value
                    .ok_or_else(|| Error::config("algorithm.R.value", "required in manual mode"))?;
                if r == 0 {
                    return Err(Error::config("algorithm.R.value", "must be positive"));
                }
                r as usize
            }
            SelectionMode::AutoTheory => select_r(
                delta,
                budget,
                consts.b2,
                consts.sigma2,
                consts.suboptimality,
                consts.smoothness,
            ),
        };
        let iterations = budget / rounds as u64;
        if iterations == 0 {
            return Err(Error::config(
                "budget.T",
                format!("budget T={budget} is below one iteration of R={rounds} rounds"),
            ));
        }

        let schedule = cfg.gamma.resolve(|| {
            let theta = theta_for(delta, rounds);
            select_gamma_neolithic(
                consts.smoothness,
                consts.sigma2.sqrt(),
                iterations,
                n,
                rounds,
                consts.suboptimality,
                theta,
                consts.b2,
            )
        })?;

        let mut sim = Sim::new(ctx, schedule)?;
        sim.diagnostics.rounds_per_iteration = rounds as u64;
        let cost_model = sim.cost_model;
        let inv_r = 1.0 / rounds as f64;
        let inv_n = 1.0 / n as f64;

        let mut worker_errors = vec![RealVector::zeros(d); n];
        let mut server_error = RealVector::zeros(d);

        for k in 0..iterations {
            let gamma = sim.gamma(k * rounds as u64);

            // Omega before this iteration's compressions.
            let mut omega_before = server_error.clone();
            for er in &worker_errors {
                omega_before.axpy(inv_n, er);
            }

            // Gradient accumulation: R fresh draws per worker.
            let mut grad_avg = RealVector::zeros(d);
            let mut chunk_sum_total = RealVector::zeros(d);
            for i in 0..n {
                let mut acc = RealVector::zeros(d);
                for _ in 0..rounds {
                    acc.add_assign(&sim.oracles[i].query(&sim.problem, &sim.models[i])?);
                }
                acc.scale_in_place(inv_r);
                grad_avg.add_assign(&acc);

                // Error compensate and ship through R compressed rounds.
                let mut message = acc;
                message.add_assign(&worker_errors[i]);
                let transcript = fcc(&message, &mut sim.worker_comps[i], rounds)?;
                sim.ledger
                    .record_uplink(&transcript.total_cost, &cost_model);
                worker_errors[i] = message.sub(&transcript.returned);
                chunk_sum_total.add_assign(&transcript.returned);
            }
            sim.ledger.record_queries_per_worker(rounds as u64);
            grad_avg.scale_in_place(inv_n);

            // Server error compensation and compressed broadcast.
            chunk_sum_total.scale_in_place(inv_n);
            let mut aggregate = chunk_sum_total;
            aggregate.add_assign(&server_error);
            let transcript = fcc(&aggregate, &mut sim.server_comp, rounds)?;
            sim.ledger
                .record_downlink(&transcript.total_cost, &cost_model);
            server_error = aggregate.sub(&transcript.returned);
            sim.ledger.record_comm_rounds_per_worker(rounds as u64);

            // All workers apply the broadcast chunk sum.
            let step = transcript.returned.scale(gamma);
            sim.apply_update(&step);

            // Accumulated-error recursion: the model displacement must equal
            // -gamma (avg gradient + Omega_k - Omega_{k+1}) exactly.
            let mut omega_after = server_error.clone();
            for er in &worker_errors {
                omega_after.axpy(inv_n, er);
            }
            let mut residual = grad_avg;
            residual.add_assign(&omega_before);
            residual.sub_assign(&omega_after);
            residual.scale_in_place(gamma);
            residual.sub_assign(&step);
            sim.diagnostics.max_recursion_residual = sim
                .diagnostics
                .max_recursion_residual
                .max(residual.norm());

            if !sim.step_done((k + 1) * rounds as u64, k + 1 == iterations) {
                break;
            }
        }
        Ok(sim.into_record(self.name()))
    }
}
