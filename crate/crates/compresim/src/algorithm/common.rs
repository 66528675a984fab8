//! Shared simulation scaffolding: worker model copies, oracle and compressor
//! states, metric logging, and the adversary bookkeeping used by
//! hard-instance runs.

use crate::compressor::{CompressorState, RandomnessMode};
use crate::error::{Error, Result};
use crate::harness::record::{AdversaryLog, Diagnostics, MetricRow, RunRecord};
use crate::problem::{OracleState, Problem};
use crate::progress::prog;
use crate::rng::RngStream;
use crate::vector::RealVector;
use crate::wire::{CommLedger, CostModel};
use std::time::Instant;

use super::RunContext;

/// Learning-rate schedule over communication rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSchedule {
    Constant(f64),
    /// initial / factor^floor(rounds / every)
    StairDecay {
        initial: f64,
        every: u64,
        factor: f64,
    },
}

impl GammaSchedule {
    pub fn at(&self, comm_rounds: u64) -> f64 {
        match self {
            GammaSchedule::Constant(g) => *g,
            GammaSchedule::StairDecay {
                initial,
                every,
                factor,
            } => initial / factor.powi((comm_rounds / every) as i32),
        }
    }

    pub fn initial(&self) -> f64 {
        self.at(0)
    }
}

struct AdversaryTracker {
    prog_trajectory: Vec<usize>,
    running_prog: usize,
    best_grad_norm: f64,
    best_iterate: RealVector,
}

/// Mutable state of one synchronous simulation.
///
/// All worker model copies receive identical updates; their equality at every
/// iteration boundary is asserted and the worst divergence is recorded.
pub struct Sim {
    pub problem: Problem,
    pub models: Vec<RealVector>,
    pub oracles: Vec<OracleState>,
    pub worker_comps: Vec<CompressorState>,
    pub server_comp: CompressorState,
    pub ledger: CommLedger,
    pub cost_model: CostModel,
    pub schedule: GammaSchedule,
    pub diagnostics: Diagnostics,
    metric_every: u64,
    rows: Vec<MetricRow>,
    grad_norm_sq_sum: f64,
    adversary: Option<AdversaryTracker>,
    diverged: bool,
    started: Instant,
    seed: u64,
}

impl Sim {
    pub fn new(ctx: &RunContext, schedule: GammaSchedule) -> Result<Sim> {
        let problem = ctx.problem.clone();
        let d = problem.dim();
        let n = problem.workers();
        let cfg = ctx.config;
        cfg.worker_compressor.validate(d)?;
        cfg.server_compressor.validate(d)?;
        ctx.oracle.validate(&problem)?;
        if cfg.budget_t == 0 {
            return Err(Error::config("budget.T", "must be positive"));
        }
        if ctx.metric_every == 0 {
            return Err(Error::config("budget.metric_every", "must be positive"));
        }

        let models = vec![problem.x0(); n];
        let mut oracles: Vec<OracleState> = (0..n)
            .map(|i| {
                OracleState::new(
                    ctx.oracle,
                    i,
                    RngStream::new(ctx.seed, &format!("worker/{i}/oracle")),
                )
            })
            .collect();
        let shared = cfg.worker_compressor.randomness_mode() == RandomnessMode::SharedBroadcast;
        let mut worker_comps: Vec<CompressorState> = (0..n)
            .map(|i| {
                let label = if shared {
                    "shared-broadcast/comp".to_string()
                } else {
                    format!("worker/{i}/comp")
                };
                cfg.worker_compressor.build(RngStream::new(ctx.seed, &label))
            })
            .collect();
        let server_comp = cfg
            .server_compressor
            .build(RngStream::new(ctx.seed, "server/comp"));

        let adversary = ctx.record_adversary.then(|| {
            for o in oracles.iter_mut() {
                o.enable_zeta_log();
            }
            for c in worker_comps.iter_mut() {
                c.enable_event_log();
            }
            AdversaryTracker {
                prog_trajectory: Vec::new(),
                running_prog: prog(&problem.x0(), 0.0),
                best_grad_norm: f64::INFINITY,
                best_iterate: problem.x0(),
            }
        });

        Ok(Sim {
            problem,
            models,
            oracles,
            worker_comps,
            server_comp,
            ledger: CommLedger::new(),
            cost_model: ctx.cost_model,
            schedule,
            diagnostics: Diagnostics {
                initial_gamma: schedule.initial(),
                rounds_per_iteration: 1,
                ..Default::default()
            },
            metric_every: ctx.metric_every,
            rows: Vec::new(),
            grad_norm_sq_sum: 0.0,
            adversary: None,
            diverged: false,
            started: Instant::now(),
            seed: ctx.seed,
        }
        .with_adversary(adversary))
    }

    fn with_adversary(mut self, adversary: Option<AdversaryTracker>) -> Sim {
        self.adversary = adversary;
        self
    }

    pub fn workers(&self) -> usize {
        self.models.len()
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn gamma(&self, comm_rounds: u64) -> f64 {
        self.schedule.at(comm_rounds)
    }

    /// Applies `x_i -= step` to every worker copy.
    pub fn apply_update(&mut self, step: &RealVector) {
        for model in &mut self.models {
            model.sub_assign(step);
        }
    }

    /// Bookkeeping after one model update. `comm_rounds` is the cumulative
    /// per-worker communication-round count. Returns false when the run must
    /// stop (numeric blow-up).
    pub fn step_done(&mut self, comm_rounds: u64, is_final: bool) -> bool {
        self.check_consistency();
        if let Some(tracker) = self.adversary.as_mut() {
            let p = prog(&self.models[0], 0.0);
            tracker.running_prog = tracker.running_prog.max(p);
            tracker.prog_trajectory.push(tracker.running_prog);
            let g = self.problem.global_grad(&self.models[0]).norm();
            if g < tracker.best_grad_norm {
                tracker.best_grad_norm = g;
                tracker.best_iterate = self.models[0].clone();
            }
        }
        if !self.models[0].is_finite() {
            self.diverged = true;
            return false;
        }
        if comm_rounds % self.metric_every == 0 || is_final {
            let f = self.problem.global_value(&self.models[0]);
            let gns = self.problem.global_grad(&self.models[0]).norm_sq();
            if !f.is_finite() || !gns.is_finite() {
                self.diverged = true;
                return false;
            }
            self.grad_norm_sq_sum += gns;
            let rows_logged = self.rows.len() as f64 + 1.0;
            self.rows.push(MetricRow {
                round: comm_rounds,
                f,
                grad_norm_sq: gns,
                grad_norm_sq_avg: self.grad_norm_sq_sum / rows_logged,
                up_scalars: self.ledger.uplink_scalars,
                up_idx: self.ledger.uplink_index_ints,
                down_scalars: self.ledger.downlink_scalars,
                down_idx: self.ledger.downlink_index_ints,
                up_bits: self.ledger.uplink_bits,
                down_bits: self.ledger.downlink_bits,
                queries: self.ledger.grad_queries_per_worker,
            });
        }
        true
    }

    fn check_consistency(&mut self) {
        let reference = &self.models[0];
        let mut worst = 0.0f64;
        for other in self.models.iter().skip(1) {
            if other.as_slice() != reference.as_slice() {
                for (a, b) in reference.iter().zip(other.iter()) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        self.diagnostics.max_model_divergence = self.diagnostics.max_model_divergence.max(worst);
    }

    /// Consumes the simulation into its record, extracting adversary logs.
    pub fn into_record(mut self, algorithm: &str) -> RunRecord {
        let adversary = self.adversary.take().map(|tracker| {
            let zeta_logs: Vec<Vec<bool>> = self
                .oracles
                .iter_mut()
                .map(|o| o.take_zeta_log())
                .collect();
            let query_rounds = zeta_logs.iter().map(|l| l.len()).max().unwrap_or(0);
            let mask_hits = (0..query_rounds)
                .map(|t| zeta_logs.iter().any(|l| l.get(t).copied().unwrap_or(false)))
                .collect();

            let event_logs: Vec<Vec<crate::compressor::CompressEvent>> = self
                .worker_comps
                .iter_mut()
                .map(|c| c.take_events())
                .collect();
            let comm_rounds = event_logs.iter().map(|l| l.len()).max().unwrap_or(0);
            let frontier_hits = (0..comm_rounds)
                .map(|t| {
                    let frontier = event_logs
                        .iter()
                        .filter_map(|l| l.get(t))
                        .map(|e| e.input_prog)
                        .max()
                        .unwrap_or(0);
                    frontier > 0
                        && event_logs
                            .iter()
                            .filter_map(|l| l.get(t))
                            .any(|e| e.input_prog == frontier && e.frontier_kept)
                })
                .collect();

            AdversaryLog {
                final_prog: tracker.running_prog,
                prog_trajectory: tracker.prog_trajectory,
                best_grad_norm: tracker.best_grad_norm,
                best_iterate: tracker.best_iterate.as_slice().to_vec(),
                mask_hits,
                frontier_hits,
            }
        });

        RunRecord {
            algorithm: algorithm.to_string(),
            seed: self.seed,
            rows: self.rows,
            ledger: self.ledger,
            diverged: self.diverged,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
            diagnostics: self.diagnostics,
            adversary,
        }
    }
}

/// Requires the worker compressor of `ctx` to be the identity.
pub fn require_identity_worker(ctx: &RunContext, algorithm: &str) -> Result<()> {
    if ctx.config.worker_compressor != crate::compressor::CompressorSpec::Identity {
        return Err(Error::Unsupported(format!(
            "{algorithm} is uncompressed; use identity compressors"
        )));
    }
    Ok(())
}

/// Requires the server compressor of `ctx` to be the identity.
pub fn require_identity_server(ctx: &RunContext, algorithm: &str) -> Result<()> {
    if !ctx.config.unidirectional() {
        return Err(Error::Unsupported(format!(
            "{algorithm} is unidirectional; the server compressor must be identity"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stair_decay_divides_at_boundaries() {
        let s = GammaSchedule::StairDecay {
            initial: 1.0,
            every: 2500,
            factor: 10.0,
        };
        assert_eq!(s.at(0), 1.0);
        assert_eq!(s.at(2499), 1.0);
        assert_eq!(s.at(2500), 0.1);
        assert_eq!(s.at(7500), 0.001);
    }
}
