//! Experiment orchestration: multi-trial runs, aggregation, CSV/JSON output,
//! and the verification suites.

pub mod config;
pub mod record;
pub mod verify;

use crate::algorithm::{algorithm_by_name, RunContext};
use crate::error::{Error, Result};
use crate::problem::Problem;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub use config::{AlgorithmEntry, BudgetConfig, CompressorsConfig, ProblemConfig, RunConfig};
pub use record::{MetricRow, RunRecord};

/// Exact per-trial CSV header.
pub const TRIAL_CSV_HEADER: &str =
    "round,f,grad_norm_sq,up_scalars,up_idx,down_scalars,down_idx,up_bits,down_bits,queries";

/// Aggregate statistics of one algorithm across trials.
#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub algorithm: String,
    pub n_trials: usize,
    pub diverged_trials: usize,
    pub rounds: Vec<u64>,
    pub f_mean: Vec<f64>,
    pub grad_norm_sq_mean: Vec<f64>,
    pub grad_norm_sq_std: Vec<f64>,
    /// Mean (across trials) of the running-average gradient measure.
    pub grad_norm_sq_avg_mean: Vec<f64>,
    pub final_f_mean: f64,
    pub final_grad_norm_sq_mean: f64,
    pub final_grad_norm_sq_std: f64,
    /// Per-round ledger means, in trial-CSV column order.
    pub ledger_mean: Vec<[f64; 7]>,
    pub transient_crossing: Option<u64>,
}

impl TrialSummary {
    /// Aggregates non-diverged records; diverged ones are counted apart.
    pub fn from_records(algorithm: &str, records: &[RunRecord]) -> Result<TrialSummary> {
        let usable: Vec<&RunRecord> = records.iter().filter(|r| !r.diverged).collect();
        let diverged_trials = records.len() - usable.len();
        let first = usable
            .first()
            .ok_or_else(|| Error::invalid(format!("all {algorithm} trials diverged")))?;
        let rounds: Vec<u64> = first.rows.iter().map(|r| r.round).collect();
        for r in &usable {
            let grid: Vec<u64> = r.rows.iter().map(|row| row.round).collect();
            if grid != rounds {
                return Err(Error::invalid(
                    "trials logged on different round grids; cannot aggregate",
                ));
            }
        }
        let n = usable.len() as f64;
        let points = rounds.len();
        let mut f_mean = vec![0.0; points];
        let mut gns_mean = vec![0.0; points];
        let mut gns_sq = vec![0.0; points];
        let mut gns_avg_mean = vec![0.0; points];
        let mut ledger_mean = vec![[0.0f64; 7]; points];
        for r in &usable {
            for (idx, row) in r.rows.iter().enumerate() {
                f_mean[idx] += row.f;
                gns_mean[idx] += row.grad_norm_sq;
                gns_sq[idx] += row.grad_norm_sq * row.grad_norm_sq;
                gns_avg_mean[idx] += row.grad_norm_sq_avg;
                let cols = [
                    row.up_scalars as f64,
                    row.up_idx as f64,
                    row.down_scalars as f64,
                    row.down_idx as f64,
                    row.up_bits as f64,
                    row.down_bits as f64,
                    row.queries as f64,
                ];
                for (acc, v) in ledger_mean[idx].iter_mut().zip(cols) {
                    *acc += v;
                }
            }
        }
        for idx in 0..points {
            f_mean[idx] /= n;
            gns_mean[idx] /= n;
            gns_avg_mean[idx] /= n;
            for acc in ledger_mean[idx].iter_mut() {
                *acc /= n;
            }
        }
        let gns_std: Vec<f64> = (0..points)
            .map(|idx| (gns_sq[idx] / n - gns_mean[idx] * gns_mean[idx]).max(0.0).sqrt())
            .collect();
        let last = points - 1;
        Ok(TrialSummary {
            algorithm: algorithm.to_string(),
            n_trials: records.len(),
            diverged_trials,
            final_f_mean: f_mean[last],
            final_grad_norm_sq_mean: gns_mean[last],
            final_grad_norm_sq_std: gns_std[last],
            rounds,
            f_mean,
            grad_norm_sq_mean: gns_mean,
            grad_norm_sq_std: gns_std,
            grad_norm_sq_avg_mean: gns_avg_mean,
            ledger_mean,
            transient_crossing: None,
        })
    }
}

/// Smallest logged round after which `algo`'s mean gradient measure stays
/// within a factor (1 + tau) of the reference for the rest of the run.
///
/// Series are aligned on their common round grid. Returns 0 when the band
/// holds everywhere, None when it fails at the last point.
pub fn estimate_transient_crossing(
    algo: &TrialSummary,
    reference: &TrialSummary,
    tau: f64,
) -> Option<u64> {
    let ref_by_round: BTreeMap<u64, f64> = reference
        .rounds
        .iter()
        .copied()
        .zip(reference.grad_norm_sq_mean.iter().copied())
        .collect();
    let aligned: Vec<(u64, f64, f64)> = algo
        .rounds
        .iter()
        .copied()
        .zip(algo.grad_norm_sq_mean.iter().copied())
        .filter_map(|(round, v)| ref_by_round.get(&round).map(|rv| (round, v, *rv)))
        .collect();
    if aligned.is_empty() {
        return None;
    }
    // Longest suffix on which the band holds; its first round is the crossing.
    let mut crossing: Option<u64> = None;
    for (round, v, rv) in aligned.iter().rev() {
        if *v <= (1.0 + tau) * rv {
            crossing = Some(*round);
        } else {
            break;
        }
    }
    if crossing == Some(aligned[0].0) {
        crossing = Some(0);
    }
    crossing
}

/// Full experiment output.
#[derive(Debug, Serialize)]
pub struct ExperimentResult {
    pub summaries: BTreeMap<String, TrialSummary>,
    #[serde(skip)]
    pub records: BTreeMap<String, Vec<RunRecord>>,
}

/// Runs every configured algorithm for `n_trials` seeds and aggregates.
///
/// When `out_dir` is given, writes one CSV per trial, one aggregate CSV per
/// algorithm, and a JSON summary.
pub fn run_experiment(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<ExperimentResult> {
    cfg.validate()?;
    let problem = cfg.problem.build()?;
    let oracle = cfg.oracle();
    oracle.validate(&problem)?;

    let mut summaries = BTreeMap::new();
    let mut all_records = BTreeMap::new();
    for entry in cfg.entries() {
        let algo_cfg = cfg.algorithm_config(entry);
        let algorithm = algorithm_by_name(&algo_cfg.name)?;
        let seeds: Vec<u64> = (0..cfg.budget.n_trials)
            .map(|t| cfg.budget.base_seed + t)
            .collect();
        let records: Result<Vec<RunRecord>> = seeds
            .par_iter()
            .map(|seed| {
                let ctx = RunContext {
                    problem: &problem,
                    oracle,
                    config: &algo_cfg,
                    cost_model: cfg.cost_model,
                    seed: *seed,
                    metric_every: cfg.budget.metric_every,
                    record_adversary: false,
                };
                algorithm.run(&ctx)
            })
            .collect();
        let records = records?;
        for r in &records {
            if r.diverged {
                eprintln!(
                    "warning: {} trial with seed {} diverged (non-finite objective); excluded from means",
                    algo_cfg.name, r.seed
                );
            }
        }
        let summary = TrialSummary::from_records(&algo_cfg.name, &records)?;
        summaries.insert(algo_cfg.name.clone(), summary);
        all_records.insert(algo_cfg.name.clone(), records);
    }

    // Transient crossing against the uncompressed reference when present.
    if let Some(reference) = summaries.get("psgd").cloned() {
        for (name, summary) in summaries.iter_mut() {
            summary.transient_crossing = if name == "psgd" {
                Some(0)
            } else {
                estimate_transient_crossing(summary, &reference, 0.5)
            };
        }
    }

    let result = ExperimentResult {
        summaries,
        records: all_records,
    };
    if let Some(dir) = out_dir {
        write_artifacts(cfg, &result, dir)?;
    }
    Ok(result)
}

fn write_artifacts(cfg: &RunConfig, result: &ExperimentResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, records) in &result.records {
        for (trial, record) in records.iter().enumerate() {
            let path = dir.join(format!("{name}_trial{trial:03}.csv"));
            write_trial_csv(record, &path)?;
        }
        let summary = &result.summaries[name];
        write_aggregate_csv(summary, &dir.join(format!("{name}_mean.csv")))?;
    }
    let summary_json = SummaryJson {
        config: cfg,
        algorithms: result
            .summaries
            .iter()
            .map(|(name, s)| {
                (
                    name.clone(),
                    AlgorithmSummaryJson {
                        final_grad_norm_sq_mean: s.final_grad_norm_sq_mean,
                        final_grad_norm_sq_std: s.final_grad_norm_sq_std,
                        final_f_mean: s.final_f_mean,
                        final_grad_norm_sq_avg_mean: *s
                            .grad_norm_sq_avg_mean
                            .last()
                            .unwrap_or(&f64::NAN),
                        transient_crossing: s.transient_crossing,
                        diverged_trials: s.diverged_trials,
                        n_trials: s.n_trials,
                    },
                )
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&summary_json)
        .map_err(|e| Error::invalid(format!("summary serialization failed: {e}")))?;
    std::fs::write(dir.join("summary.json"), json + "\n")?;
    Ok(())
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    config: &'a RunConfig,
    algorithms: BTreeMap<String, AlgorithmSummaryJson>,
}

#[derive(Serialize)]
struct AlgorithmSummaryJson {
    final_grad_norm_sq_mean: f64,
    final_grad_norm_sq_std: f64,
    final_f_mean: f64,
    final_grad_norm_sq_avg_mean: f64,
    transient_crossing: Option<u64>,
    diverged_trials: usize,
    n_trials: usize,
}

/// Writes one run's trajectory with the exact contract header.
pub fn write_trial_csv(record: &RunRecord, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{TRIAL_CSV_HEADER}")?;
    for row in &record.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.round,
            row.f,
            row.grad_norm_sq,
            row.up_scalars,
            row.up_idx,
            row.down_scalars,
            row.down_idx,
            row.up_bits,
            row.down_bits,
            row.queries
        )?;
    }
    Ok(())
}

fn write_aggregate_csv(summary: &TrialSummary, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "round,f_mean,grad_norm_sq_mean,grad_norm_sq_std,grad_norm_sq_avg_mean,up_scalars,up_idx,down_scalars,down_idx,up_bits,down_bits,queries"
    )?;
    for idx in 0..summary.rounds.len() {
        let l = summary.ledger_mean[idx];
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            summary.rounds[idx],
            summary.f_mean[idx],
            summary.grad_norm_sq_mean[idx],
            summary.grad_norm_sq_std[idx],
            summary.grad_norm_sq_avg_mean[idx],
            l[0],
            l[1],
            l[2],
            l[3],
            l[4],
            l[5],
            l[6]
        )?;
    }
    Ok(())
}

/// Parses a trial CSV written by [`write_trial_csv`]; test and tooling aid.
pub fn read_trial_csv(path: &Path) -> Result<Vec<MetricRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::invalid("empty CSV"))?;
    if header != TRIAL_CSV_HEADER {
        return Err(Error::invalid(format!("unexpected CSV header: {header}")));
    }
    let mut rows = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::invalid(format!("bad CSV row: {line}")));
        }
        let parse_u =
            |s: &str| -> Result<u64> { s.parse().map_err(|_| Error::invalid("bad integer")) };
        let parse_f =
            |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::invalid("bad float")) };
        rows.push(MetricRow {
            round: parse_u(fields[0])?,
            f: parse_f(fields[1])?,
            grad_norm_sq: parse_f(fields[2])?,
            grad_norm_sq_avg: f64::NAN,
            up_scalars: parse_u(fields[3])?,
            up_idx: parse_u(fields[4])?,
            down_scalars: parse_u(fields[5])?,
            down_idx: parse_u(fields[6])?,
            up_bits: parse_u(fields[7])?,
            down_bits: parse_u(fields[8])?,
            queries: parse_u(fields[9])?,
        });
    }
    Ok(rows)
}

/// Convenience: run one algorithm on a prebuilt problem (tests, suites).
pub fn run_single(
    problem: &Problem,
    oracle: crate::problem::OracleSpec,
    algo_cfg: &crate::algorithm::AlgorithmConfig,
    seed: u64,
    metric_every: u64,
) -> Result<RunRecord> {
    let ctx = RunContext {
        problem,
        oracle,
        config: algo_cfg,
        cost_model: Default::default(),
        seed,
        metric_every,
        record_adversary: false,
    };
    algorithm_by_name(&algo_cfg.name)?.run(&ctx)
}
