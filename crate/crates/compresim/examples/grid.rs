use compresim::algorithm::{AlgorithmConfig, GammaConfig, RoundsConfig, RunContext, SelectionMode};
use compresim::compressor::{CompressorSpec, RandomnessMode};
use compresim::harness::TrialSummary;
use compresim::problem::{gen_least_squares, OracleSpec, Problem};
use rayon::prelude::*;

fn main() {
    let gamma: f64 = std::env::args().nth(1).map(|g| g.parse().unwrap()).unwrap_or(0.02);
    let t_budget: u64 = std::env::args().nth(2).map(|t| t.parse().unwrap()).unwrap_or(4000);
    let rand1 = CompressorSpec::RandK { k: 1, randomness_mode: RandomnessMode::Independent };
    for name in ["psgd", "neolithic"] {
        for n in [1usize, 4, 16] {
            let problem = {
                let one = gen_least_squares(2024, 30, 1, 1000);
                let _ = &one;
                // n workers sharing one dataset: heterogeneity-free.
                let mut rng = compresim::rng::RngStream::new(2024, "ls/worker/0");
                let x_star = compresim::vector::RealVector::from_vec((0..30).map(|_| rng.normal()).collect());
                let mut rows = vec![0.0; 1000 * 30];
                for v in &mut rows { *v = rng.normal(); }
                let mut b = vec![0.0; 1000];
                for (ri, bv) in b.iter_mut().enumerate() {
                    let row = &rows[ri * 30..(ri + 1) * 30];
                    let clean: f64 = row.iter().zip(x_star.iter()).map(|(a, v)| a * v).sum();
                    *bv = clean + 0.1 * rng.normal();
                }
                Problem::new(compresim::problem::least_squares::from_data(
                    vec![rows; n], vec![b; n], vec![x_star; n], 30))
            };
            let (wc, sc, r) = if name == "psgd" {
                (CompressorSpec::Identity, CompressorSpec::Identity, 1)
            } else {
                (rand1.clone(), rand1.clone(), 4)
            };
            let cfg = AlgorithmConfig {
                name: name.into(),
                gamma: GammaConfig { mode: SelectionMode::Manual, value: Some(gamma), decay_every: None, decay_factor: None },
                rounds: RoundsConfig { mode: SelectionMode::Manual, value: Some(r) },
                worker_compressor: wc,
                server_compressor: sc,
                budget_t: t_budget,
            };
            let records: Vec<_> = (0u64..10).into_par_iter().map(|t| {
                let ctx = RunContext {
                    problem: &problem, oracle: OracleSpec::Minibatch { batch: 1 },
                    config: &cfg, cost_model: Default::default(),
                    seed: 900 + t, metric_every: t_budget, record_adversary: false,
                };
                compresim::algorithm::algorithm_by_name(name).unwrap().run(&ctx).unwrap()
            }).collect();
            let s = TrialSummary::from_records(name, &records).unwrap();
            println!("{name:<10} n={n:<3} final={:.4e} +- {:.2e}", s.final_grad_norm_sq_mean, s.final_grad_norm_sq_std);
        }
    }
}
