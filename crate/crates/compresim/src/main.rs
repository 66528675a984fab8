use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use compresim::algorithm::run_hard_instance_trial;
use compresim::harness::{self, verify, RunConfig};
use compresim::problem::Problem;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "compresim",
    version,
    about = "Deterministic simulator for distributed SGD under communication compression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory for per-trial CSVs, aggregate CSVs and summary.json.
        #[arg(long)]
        out: PathBuf,
        /// Override budget.base_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override budget.n_trials.
        #[arg(long)]
        trials: Option<u64>,
        /// Worker threads for trial execution (default: all cores).
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Run a verification suite: compressors|fcc|zero_chain|gradients|recursion|all.
    Verify { suite: String },
    /// Run adversarial chain-instance trials from a config.
    HardInstance {
        config: PathBuf,
        /// Write the per-seed reports as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override budget.n_trials (number of seeds).
        #[arg(long)]
        trials: Option<u64>,
        /// Override budget.base_seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Finite-difference gradient check for a problem: least_squares|logistic|zero_chain.
    Gradcheck { problem: String },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            seed,
            trials,
            parallel,
        } => {
            configure_parallelism(parallel)?;
            let mut cfg = RunConfig::from_path(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(seed) = seed {
                cfg.budget.base_seed = seed;
            }
            if let Some(trials) = trials {
                cfg.budget.n_trials = trials;
            }
            let result = harness::run_experiment(&cfg, Some(&out))?;
            println!(
                "{:<16} {:>15} {:>14} {:>10} {:>9}",
                "algorithm", "final E|grad|^2", "std", "crossing", "diverged"
            );
            for (name, s) in &result.summaries {
                println!(
                    "{:<16} {:>15.6e} {:>14.6e} {:>10} {:>9}",
                    name,
                    s.final_grad_norm_sq_mean,
                    s.final_grad_norm_sq_std,
                    s.transient_crossing
                        .map_or("-".to_string(), |c| c.to_string()),
                    s.diverged_trials
                );
            }
            println!("artifacts written to {}", out.display());
            Ok(())
        }
        Command::Verify { suite } => {
            let checks = verify::suite(&suite)?;
            let mut failed = 0;
            for check in &checks {
                let status = if check.pass { "PASS" } else { "FAIL" };
                println!("[{status}] {} ({})", check.name, check.margin);
                failed += (!check.pass) as u32;
            }
            println!("{} checks, {} failed", checks.len(), failed);
            if failed > 0 {
                std::process::exit(1);
            }
            Ok(())
        }
        Command::HardInstance {
            config,
            out,
            trials,
            seed,
            parallel,
        } => {
            configure_parallelism(parallel)?;
            let mut cfg = RunConfig::from_path(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(seed) = seed {
                cfg.budget.base_seed = seed;
            }
            if let Some(trials) = trials {
                cfg.budget.n_trials = trials;
            }
            run_hard_instances(&cfg, out.as_deref())
        }
        Command::Gradcheck { problem } => gradcheck(&problem),
    }
}

fn configure_parallelism(parallel: Option<usize>) -> Result<()> {
    if let Some(threads) = parallel {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn run_hard_instances(cfg: &RunConfig, out: Option<&std::path::Path>) -> Result<()> {
    use rayon::prelude::*;
    cfg.validate()?;
    let entries = cfg.entries();
    if entries.len() != 1 {
        bail!("hard-instance runs take exactly one [algorithm]");
    }
    let algo_cfg = cfg.algorithm_config(entries[0]);
    let problem = cfg.problem.build()?;
    let oracle = cfg.oracle();
    let seeds: Vec<u64> = (0..cfg.budget.n_trials)
        .map(|t| cfg.budget.base_seed + t)
        .collect();
    let reports = seeds
        .par_iter()
        .map(|seed| {
            run_hard_instance_trial(&problem, oracle, &algo_cfg, *seed, cfg.cost_model)
                .map(|(_, report)| report)
        })
        .collect::<compresim::Result<Vec<_>>>()?;

    let masked = reports.iter().any(|r| r.mask_rounds > 0);
    let mut violations = 0usize;
    let mut prog_sum = 0usize;
    for r in &reports {
        prog_sum += r.final_prog;
        if masked && r.final_prog > r.mask_hits {
            violations += 1;
        }
        if !masked && r.final_prog > r.frontier_bound {
            violations += 1;
        }
        if !r.reached_end && r.best_grad_norm < r.grad_norm_floor * (1.0 - 1e-9) {
            violations += 1;
        }
    }
    let mean_prog = prog_sum as f64 / reports.len() as f64;
    println!(
        "{} seeds: mean final prog {:.2} (d = {}), escaped chain on {} seed(s), bound violations: {}",
        reports.len(),
        mean_prog,
        reports[0].dim,
        reports.iter().filter(|r| r.reached_end).count(),
        violations
    );
    if masked {
        let mean_hits: f64 =
            reports.iter().map(|r| r.mask_hits as f64).sum::<f64>() / reports.len() as f64;
        println!("masked-oracle certificate: mean frontier unlocks {mean_hits:.2} per run");
    } else {
        let mean_bound: f64 =
            reports.iter().map(|r| r.frontier_bound as f64).sum::<f64>() / reports.len() as f64;
        println!("shared-randomness certificate: mean progress bound {mean_bound:.2} per run");
    }
    if let Some(path) = out {
        let json = serde_json::to_string_pretty(&reports)?;
        std::fs::write(path, json + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        println!("reports written to {}", path.display());
    }
    if violations > 0 {
        std::process::exit(1);
    }
    Ok(())
}

fn gradcheck(problem_name: &str) -> Result<()> {
    use compresim::gradcheck::fd_gradient_check;
    use compresim::rng::RngStream;
    use compresim::vector::RealVector;

    let problem: Problem = match problem_name {
        "least_squares" => Problem::new(compresim::problem::gen_least_squares(7, 30, 32, 1000)),
        "logistic" => Problem::new(compresim::problem::gen_logistic(7, 30, 32, 1000)),
        "zero_chain" => Problem::new(compresim::problem::gen_zero_chain(
            1.0,
            30,
            Default::default(),
            4,
            compresim::problem::zero_chain::L_0,
        )?),
        other => bail!("unknown problem `{other}`"),
    };
    let mut rng = RngStream::new(0x97AD, "gradcheck");
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let x = RealVector::from_vec((0..problem.dim()).map(|_| rng.normal()).collect());
        let err = fd_gradient_check(
            |v| problem.global_value(v),
            |v| problem.global_grad(v),
            &x,
            1e-5,
        )?;
        worst = worst.max(err);
        let worker = trial % problem.workers();
        let err = fd_gradient_check(
            |v| problem.local_value(worker, v),
            |v| problem.local_grad(worker, v),
            &x,
            1e-5,
        )?;
        worst = worst.max(err);
    }
    let pass = worst <= 1e-5;
    println!(
        "[{}] {problem_name}: worst relative fd error {worst:.2e} (tolerance 1e-5)",
        if pass { "PASS" } else { "FAIL" }
    );
    if !pass {
        std::process::exit(1);
    }
    Ok(())
}
