//! On-demand verification suites with pinned statistical thresholds.
//!
//! Each suite returns per-check margins; a margin at or below 1 passes for
//! ratio-style checks. The acceptance tests drive these same functions.

use crate::algorithm::{AlgorithmConfig, GammaConfig, RoundsConfig, SelectionMode};
use crate::compressor::{
    scale_unbiased_to_contractive, CompressorSpec, RandomnessMode,
};
use crate::error::{Error, Result};
use crate::fcc::fcc;
use crate::gradcheck::fd_gradient_check;
use crate::harness::run_single;
use crate::problem::zero_chain::{
    chain_grad, h1_grad, h1_value, h2_grad, h2_value, h_grad, h_value,
    ChainComponent, G_INF, L_0,
};
use crate::problem::{gen_least_squares, gen_logistic, OracleSpec, Problem};
use crate::progress::prog;
use crate::rng::RngStream;
use crate::vector::RealVector;
use rayon::prelude::*;

/// One verification check outcome.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub margin: String,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, margin: impl Into<String>) -> Check {
        Check {
            name: name.into(),
            margin: margin.into(),
            pass,
        }
    }
}

pub fn suite(which: &str) -> Result<Vec<Check>> {
    match which {
        "compressors" => Ok(compressor_suite()),
        "fcc" => Ok(fcc_suite()),
        "zero_chain" => Ok(zero_chain_suite()),
        "gradients" => Ok(gradient_suite()),
        "recursion" => recursion_suite(),
        "all" => {
            let mut checks = compressor_suite();
            checks.extend(fcc_suite());
            checks.extend(zero_chain_suite());
            checks.extend(gradient_suite());
            checks.extend(recursion_suite()?);
            Ok(checks)
        }
        other => Err(Error::invalid(format!(
            "unknown suite `{other}`; expected compressors|fcc|zero_chain|gradients|recursion|all"
        ))),
    }
}

fn normal_vec(rng: &mut RngStream, d: usize, scale: f64) -> RealVector {
    RealVector::from_vec((0..d).map(|_| scale * rng.normal()).collect())
}

/// Monte-Carlo statistics of one compressor run against many inputs.
struct KindStats {
    /// Worst per-coordinate |mean - x| / (4 SE) over all inputs.
    worst_mean_z4: f64,
    /// Pooled mean of ||C(x)-x||^2 / ||x||^2 over all draws.
    ratio_mean: f64,
    /// 3-sigma half-width of the pooled ratio mean.
    ratio_ci3: f64,
    /// Max single-draw ratio (deterministic bound checks).
    ratio_max: f64,
    /// Max |y_j| over coordinates outside the support... zero when sparsifier
    /// outputs are exactly zero off-support.
    off_support_max: f64,
}

fn kind_stats(spec: &CompressorSpec, d: usize, n_inputs: usize, n_draws: usize, seed: u64) -> KindStats {
    let inputs: Vec<RealVector> = {
        let mut rng = RngStream::new(seed, "verify/inputs");
        (0..n_inputs).map(|_| normal_vec(&mut rng, d, 1.0)).collect()
    };
    let per_input: Vec<(f64, f64, f64, f64, f64, usize)> = inputs
        .par_iter()
        .enumerate()
        .map(|(idx, x)| {
            let mut state = spec.build(RngStream::new(seed, &format!("verify/draws/{idx}")));
            let norm_sq = x.norm_sq();
            let mut sums = vec![0.0f64; d];
            let mut sums_sq = vec![0.0f64; d];
            let mut ratio_sum = 0.0;
            let mut ratio_sq = 0.0;
            let mut ratio_max = 0.0f64;
            let mut off_support = 0.0f64;
            for _ in 0..n_draws {
                let (y, _) = state.compress(x).expect("valid spec");
                let ratio = y.dist_sq(x) / norm_sq;
                ratio_sum += ratio;
                ratio_sq += ratio * ratio;
                ratio_max = ratio_max.max(ratio);
                for j in 0..d {
                    sums[j] += y[j];
                    sums_sq[j] += y[j] * y[j];
                    if y[j] != 0.0 && y[j] != x[j] && spec.is_sparsifier_unscaled() {
                        off_support = off_support.max(y[j].abs());
                    }
                }
            }
            let n = n_draws as f64;
            let mut worst_z4 = 0.0f64;
            for j in 0..d {
                let mean = sums[j] / n;
                let var = (sums_sq[j] / n - mean * mean).max(0.0);
                let se = (var / n).sqrt();
                let diff = (mean - x[j]).abs();
                let z4 = if se == 0.0 {
                    // Deterministic coordinate: only summation rounding left.
                    if diff <= x[j].abs() * 1e-12 + 1e-15 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    diff / (4.0 * se)
                };
                worst_z4 = worst_z4.max(z4);
            }
            (worst_z4, ratio_sum, ratio_sq, ratio_max, off_support, n_draws)
        })
        .collect();

    let mut worst_mean_z4 = 0.0f64;
    let mut ratio_sum = 0.0;
    let mut ratio_sq = 0.0;
    let mut ratio_max = 0.0f64;
    let mut off_support_max = 0.0f64;
    let mut count = 0usize;
    for (z4, rs, rq, rm, os, n) in per_input {
        worst_mean_z4 = worst_mean_z4.max(z4);
        ratio_sum += rs;
        ratio_sq += rq;
        ratio_max = ratio_max.max(rm);
        off_support_max = off_support_max.max(os);
        count += n;
    }
    let n = count as f64;
    let ratio_mean = ratio_sum / n;
    let ratio_var = (ratio_sq / n - ratio_mean * ratio_mean).max(0.0);
    KindStats {
        worst_mean_z4,
        ratio_mean,
        ratio_ci3: 3.0 * (ratio_var / n).sqrt(),
        ratio_max,
        off_support_max,
    }
}

impl CompressorSpec {
    /// Sparsifiers whose kept values equal the input values.
    fn is_sparsifier_unscaled(&self) -> bool {
        matches!(
            self,
            CompressorSpec::RandK { .. } | CompressorSpec::TopK { .. }
        )
    }
}

/// Compressor class contracts at d=64: unbiased means within 4 SE per
/// coordinate over 20,000 draws, contraction within 2% slack, rand-k ratio
/// within its 3-sigma CI of 1 - k/d.
pub fn compressor_suite() -> Vec<Check> {
    compressor_contract_checks(64, 50, 20_000, 0xACC0)
}

pub fn compressor_contract_checks(
    d: usize,
    n_inputs: usize,
    n_draws: usize,
    seed: u64,
) -> Vec<Check> {
    let mut checks = Vec::new();
    let rand_k = CompressorSpec::RandK {
        k: d / 8,
        randomness_mode: RandomnessMode::Independent,
    };
    let rand_k_scaled = CompressorSpec::RandKScaled {
        k: d / 8,
        randomness_mode: RandomnessMode::Independent,
    };
    let top_k = CompressorSpec::TopK { k: d / 8 };
    let quant = CompressorSpec::StochQuant { levels: 4 };
    let wrapper = scale_unbiased_to_contractive(&rand_k_scaled, d).expect("unbiased spec");

    let kinds: Vec<(&str, CompressorSpec)> = vec![
        ("identity", CompressorSpec::Identity),
        ("rand_k", rand_k),
        ("rand_k_scaled", rand_k_scaled),
        ("top_k", top_k),
        ("stoch_quant", quant),
        ("scaled_wrapper", wrapper),
    ];

    for (name, spec) in &kinds {
        let stats = kind_stats(spec, d, n_inputs, n_draws, seed);
        if spec.omega(d).is_some() {
            checks.push(Check::new(
                format!("unbiased mean within 4 SE per coordinate [{name}]"),
                stats.worst_mean_z4 <= 1.0,
                format!("worst |mean-x|/(4 SE) = {:.3}", stats.worst_mean_z4),
            ));
        }
        if let Some(delta) = spec.delta(d) {
            let bound = (1.0 - delta) * 1.02;
            let pass = if bound == 0.0 {
                stats.ratio_mean == 0.0
            } else {
                stats.ratio_mean <= bound
            };
            checks.push(Check::new(
                format!("contraction E||C(x)-x||^2/||x||^2 <= (1-delta)(1.02) [{name}]"),
                pass,
                format!("mean ratio {:.5} vs bound {:.5}", stats.ratio_mean, bound),
            ));
            if matches!(spec, CompressorSpec::TopK { .. }) {
                checks.push(Check::new(
                    "top-k contraction holds deterministically on every draw",
                    stats.ratio_max <= 1.0 - delta + 1e-12,
                    format!("max draw ratio {:.5} vs {:.5}", stats.ratio_max, 1.0 - delta),
                ));
            }
            if matches!(spec, CompressorSpec::RandK { .. }) {
                let target = 1.0 - delta;
                let gap = (stats.ratio_mean - target).abs();
                checks.push(Check::new(
                    "rand-k ratio matches 1 - k/d within 3-sigma CI",
                    gap <= stats.ratio_ci3,
                    format!("|{:.6} - {target:.6}| = {gap:.2e} vs CI {:.2e}", stats.ratio_mean, stats.ratio_ci3),
                ));
            }
        }
        if spec.is_sparsifier_unscaled() {
            checks.push(Check::new(
                format!("sparsifier off-support coordinates exactly zero [{name}]"),
                stats.off_support_max == 0.0,
                format!("max off-support magnitude {}", stats.off_support_max),
            ));
        }
    }

    checks.extend(lemma_scaling_checks(seed));
    checks.push(shared_randomness_check(seed));
    checks
}

/// Scaled-unbiased-to-contractive closure: the 1/4-scaled rand-k-scaled at
/// d=4,k=1 acts exactly as unscaled rand-1 and passes its contraction test.
pub fn lemma_scaling_checks(seed: u64) -> Vec<Check> {
    let d = 4;
    let inner = CompressorSpec::RandKScaled {
        k: 1,
        randomness_mode: RandomnessMode::Independent,
    };
    let wrapped = scale_unbiased_to_contractive(&inner, d).expect("unbiased");
    let plain = CompressorSpec::RandK {
        k: 1,
        randomness_mode: RandomnessMode::Independent,
    };
    let mut checks = Vec::new();
    checks.push(Check::new(
        "wrapper reports delta = 1/(1+omega)",
        wrapped.delta(d) == Some(0.25),
        format!("delta = {:?}", wrapped.delta(d)),
    ));

    let mut a = wrapped.build(RngStream::new(seed, "lemma-scaling"));
    let mut b = plain.build(RngStream::new(seed, "lemma-scaling"));
    let mut rng = RngStream::new(seed, "lemma-scaling/inputs");
    let mut equal = true;
    for _ in 0..1000 {
        let x = normal_vec(&mut rng, d, 1.0);
        let (ya, _) = a.compress(&x).expect("wrapped");
        let (yb, _) = b.compress(&x).expect("plain");
        equal &= ya.as_slice() == yb.as_slice();
    }
    checks.push(Check::new(
        "composed wrapper action equals unscaled rand-1 on every draw",
        equal,
        if equal { "exact match over 1000 draws" } else { "mismatch" }.to_string(),
    ));

    let stats = kind_stats(&wrapped, d, 20, 20_000, seed ^ 0x11);
    let bound = (1.0 - 0.25) * 1.02;
    checks.push(Check::new(
        "wrapper passes the delta = 1/4 contraction test",
        stats.ratio_mean <= bound,
        format!("mean ratio {:.5} vs bound {:.5}", stats.ratio_mean, bound),
    ));
    checks
}

fn shared_randomness_check(seed: u64) -> Check {
    let spec = CompressorSpec::RandK {
        k: 2,
        randomness_mode: RandomnessMode::SharedBroadcast,
    };
    let mut a = spec.build(RngStream::new(seed, "bcast"));
    let mut b = spec.build(RngStream::new(seed, "bcast"));
    let mut rng = RngStream::new(seed, "bcast/inputs");
    let mut agree = true;
    for _ in 0..1000 {
        let x = normal_vec(&mut rng, 12, 1.0);
        let (ya, _) = a.compress(&x).expect("a");
        let (yb, _) = b.compress(&x).expect("b");
        agree &= ya.as_slice() == yb.as_slice() && a.draw_index() == b.draw_index();
    }
    Check::new(
        "shared-broadcast states pick identical index sets for 1000 draws",
        agree,
        if agree { "lock-step" } else { "diverged" }.to_string(),
    )
}

/// Residual decay of the recursive compression protocol.
pub fn fcc_suite() -> Vec<Check> {
    fcc_decay_checks(50_000, 0xFCC0)
}

pub fn fcc_decay_checks(n_trials: usize, seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();
    let d = 10;
    let ones = RealVector::from_vec(vec![1.0; d]);
    let checkpoints = [1usize, 5, 10, 20, 40];

    // rand-1: mean error at R equals 10 * 0.9^R exactly; Monte-Carlo within 3 sigma.
    let spec = CompressorSpec::RandK {
        k: 1,
        randomness_mode: RandomnessMode::Independent,
    };
    let stats: Vec<(f64, f64)> = (0..n_trials)
        .into_par_iter()
        .fold(
            || vec![(0.0f64, 0.0f64); checkpoints.len()],
            |mut acc, trial| {
                let mut state = spec.build(RngStream::new(seed, &format!("fcc/{trial}")));
                let mut current = RealVector::zeros(d);
                let mut slot = 0;
                for r in 1..=40usize {
                    let residual = ones.sub(&current);
                    let (chunk, _) = state.compress(&residual).expect("rand-1");
                    current.add_assign(&chunk);
                    if slot < checkpoints.len() && r == checkpoints[slot] {
                        let err = current.dist_sq(&ones);
                        acc[slot].0 += err;
                        acc[slot].1 += err * err;
                        slot += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![(0.0f64, 0.0f64); checkpoints.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.0 += y.0;
                    x.1 += y.1;
                }
                a
            },
        );
    let n = n_trials as f64;
    for (slot, r) in checkpoints.iter().enumerate() {
        let mean = stats[slot].0 / n;
        let var = (stats[slot].1 / n - mean * mean).max(0.0);
        let ci = 3.0 * (var / n).sqrt();
        let target = 10.0 * 0.9f64.powi(*r as i32);
        let gap = (mean - target).abs();
        checks.push(Check::new(
            format!("rand-1 FCC mean error at R={r} within 3-sigma of 10(0.9)^R"),
            gap <= ci,
            format!("|{mean:.4} - {target:.4}| = {gap:.2e} vs CI {ci:.2e}"),
        ));
    }

    // top-1 is deterministic: error after R rounds obeys the bound on every trial.
    let top = CompressorSpec::TopK { k: 1 };
    let mut worst_excess = f64::NEG_INFINITY;
    for trial in 0..100 {
        let mut state = top.build(RngStream::new(seed, &format!("fcc-top/{trial}")));
        let mut current = RealVector::zeros(d);
        for r in 1..=40usize {
            let residual = ones.sub(&current);
            let (chunk, _) = state.compress(&residual).expect("top-1");
            current.add_assign(&chunk);
            let bound = 10.0 * 0.9f64.powi(r as i32);
            worst_excess = worst_excess.max(current.dist_sq(&ones) - bound);
        }
    }
    checks.push(Check::new(
        "top-1 deterministic FCC error within the decay bound on every trial",
        worst_excess <= 1e-12,
        format!("worst error-minus-bound = {worst_excess:.2e}"),
    ));

    // Single-round protocol reduces to one plain compression.
    let quant = CompressorSpec::StochQuant { levels: 2 };
    let mut via_fcc = quant.build(RngStream::new(seed, "fcc-reduce"));
    let mut direct = quant.build(RngStream::new(seed, "fcc-reduce"));
    let mut rng = RngStream::new(seed, "fcc-reduce/in");
    let mut reduce_ok = true;
    for _ in 0..100 {
        let x = normal_vec(&mut rng, d, 2.0);
        let t = fcc(&x, &mut via_fcc, 1).expect("fcc");
        let (y, _) = direct.compress(&x).expect("direct");
        reduce_ok &= t.returned.as_slice() == y.as_slice() && t.chunks.len() == 1;
    }
    checks.push(Check::new(
        "R=1 reduces to a single standard compression",
        reduce_ok,
        if reduce_ok { "exact" } else { "mismatch" }.to_string(),
    ));

    // General contractive decay with slack: wrapped quantizer.
    let wrapped = scale_unbiased_to_contractive(&quant, d).expect("unbiased");
    let delta = wrapped.delta(d).expect("contractive");
    let trials = 20_000;
    let mut acc = vec![0.0f64; 10];
    for trial in 0..trials {
        let mut state = wrapped.build(RngStream::new(seed, &format!("fcc-wrap/{trial}")));
        let mut current = RealVector::zeros(d);
        for (r, slot) in acc.iter_mut().enumerate() {
            let residual = ones.sub(&current);
            let (chunk, _) = state.compress(&residual).expect("wrapped");
            current.add_assign(&chunk);
            let _ = r;
            *slot += current.dist_sq(&ones);
        }
    }
    let mut worst_ratio = 0.0f64;
    for (r, slot) in acc.iter().enumerate() {
        let mean = slot / trials as f64;
        let bound = (1.0 - delta).powi(r as i32 + 1) * ones.norm_sq() * 1.05;
        worst_ratio = worst_ratio.max(mean / bound);
    }
    checks.push(Check::new(
        "scaled-quantizer FCC decay within (1-delta)^R bound (5% slack)",
        worst_ratio <= 1.0,
        format!("worst mean/bound = {worst_ratio:.3}"),
    ));

    checks
}

/// Chain-function properties at the pinned constants.
pub fn zero_chain_suite() -> Vec<Check> {
    zero_chain_checks(20, 0x2C0)
}

pub fn zero_chain_checks(d: usize, seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut rng = RngStream::new(seed, "zc/points");

    // 1000 random truncated points: chain growth, gradient floor, averaging.
    let mut chain_ok = true;
    let mut floor_ok = true;
    let mut avg_worst = 0.0f64;
    for _ in 0..1000 {
        let cut = rng.below(d); // prog < d, so the last coordinate stays 0
        let mut x = RealVector::zeros(d);
        for j in 0..cut {
            x[j] = 2.0 * rng.normal();
        }
        let p = prog(&x, 0.0);
        chain_ok &= prog(&h_grad(&x), 0.0) <= p + 1;
        chain_ok &= prog(&h1_grad(&x), 0.0) <= p + 1;
        chain_ok &= prog(&h2_grad(&x), 0.0) <= p + 1;
        floor_ok &= h_grad(&x).norm_inf() >= 1.0;
        avg_worst = avg_worst.max((0.5 * (h1_value(&x) + h2_value(&x)) - h_value(&x)).abs());
    }
    checks.push(Check::new(
        "prog(grad h) <= prog(x) + 1 on 1000 truncated points (h, h1, h2)",
        chain_ok,
        if chain_ok { "holds" } else { "violated" }.to_string(),
    ));
    checks.push(Check::new(
        "gradient max-norm >= 1 whenever the last coordinate is zero",
        floor_ok,
        if floor_ok { "holds" } else { "violated" }.to_string(),
    ));
    checks.push(Check::new(
        "(h1 + h2)/2 equals h to 1e-12",
        avg_worst <= 1e-12,
        format!("worst |avg - h| = {avg_worst:.2e}"),
    ));

    // Parity stalling on constructed points of each parity.
    let mut parity_ok = true;
    for trial in 0..1000 {
        let target = 1 + (trial % (d - 1));
        let mut x = RealVector::zeros(d);
        for j in 0..target {
            x[j] = 2.0 * rng.normal();
        }
        x[target - 1] = 1.0 + rng.uniform();
        let p = prog(&x, 0.0);
        if p % 2 == 1 {
            parity_ok &= prog(&h1_grad(&x), 0.0) <= p;
        } else {
            parity_ok &= prog(&h2_grad(&x), 0.0) <= p;
        }
    }
    checks.push(Check::new(
        "odd prog stalls the even-link component and vice versa",
        parity_ok,
        if parity_ok { "holds" } else { "violated" }.to_string(),
    ));

    // Gradient bound on 10,000 points with coordinates in [-10, 10].
    let mut ginf_worst = 0.0f64;
    for _ in 0..10_000 {
        let x = RealVector::from_vec((0..d).map(|_| 20.0 * rng.uniform() - 10.0).collect());
        ginf_worst = ginf_worst.max(h_grad(&x).norm_inf());
    }
    checks.push(Check::new(
        "max-norm of grad h bounded by 23 on 10,000 points",
        ginf_worst <= G_INF,
        format!("worst = {ginf_worst:.3} vs {G_INF}"),
    ));

    // Smoothness ratio on 10,000 pairs over all three components.
    let mut ratio_worst = 0.0f64;
    for trial in 0..10_000 {
        let x = normal_vec(&mut rng, d, 2.0);
        let y = if trial % 2 == 0 {
            normal_vec(&mut rng, d, 2.0)
        } else {
            let mut y = x.clone();
            for j in 0..d {
                y[j] += 0.05 * rng.normal();
            }
            y
        };
        let dist = x.dist_sq(&y).sqrt();
        if dist == 0.0 {
            continue;
        }
        for component in [
            ChainComponent::Full,
            ChainComponent::EvenLinks,
            ChainComponent::OddLinks,
        ] {
            let gap = chain_grad(component, &x)
                .dist_sq(&chain_grad(component, &y))
                .sqrt();
            ratio_worst = ratio_worst.max(gap / dist);
        }
    }
    checks.push(Check::new(
        "gradient-difference ratio bounded by 152 on 10,000 pairs",
        ratio_worst <= L_0,
        format!("worst = {ratio_worst:.2} vs {L_0}"),
    ));

    // Range bound: suboptimality at the zero start within 12 d, with inf
    // estimated by the min over a large random sample.
    let mut min_seen = f64::INFINITY;
    for _ in 0..10_000 {
        min_seen = min_seen.min(h_value(&normal_vec(&mut rng, d, 3.0)));
    }
    let spread = h_value(&RealVector::zeros(d)) - min_seen;
    checks.push(Check::new(
        "suboptimality at the zero start within 12 d (sampled inf)",
        spread <= 12.0 * d as f64,
        format!("h(0) - min = {spread:.1} vs {}", 12.0 * d as f64),
    ));

    checks
}

/// Finite-difference validation of every analytic gradient.
pub fn gradient_suite() -> Vec<Check> {
    gradient_checks(0x96AD)
}

pub fn gradient_checks(seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut rng = RngStream::new(seed, "gradcheck/points");

    let ls = Problem::new(gen_least_squares(seed, 30, 32, 1000));
    checks.push(problem_fd_check("least_squares", &ls, 20, &mut rng));
    let lg = Problem::new(gen_logistic(seed, 30, 32, 1000));
    checks.push(problem_fd_check("logistic", &lg, 20, &mut rng));

    for (name, value, grad) in [
        (
            "h",
            h_value as fn(&RealVector) -> f64,
            h_grad as fn(&RealVector) -> RealVector,
        ),
        ("h1", h1_value, h1_grad),
        ("h2", h2_value, h2_grad),
    ] {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let x = normal_vec(&mut rng, 10, 1.5);
            worst = worst.max(fd_gradient_check(value, grad, &x, 1e-5).expect("finite"));
        }
        checks.push(Check::new(
            format!("fd gradient check <= 1e-5 [{name}]"),
            worst <= 1e-5,
            format!("worst rel error {worst:.2e}"),
        ));
    }
    checks
}

fn problem_fd_check(name: &str, problem: &Problem, points: usize, rng: &mut RngStream) -> Check {
    let d = problem.dim();
    let mut worst = 0.0f64;
    for trial in 0..points {
        let x = normal_vec(rng, d, 1.0);
        let err = fd_gradient_check(
            |v| problem.global_value(v),
            |v| problem.global_grad(v),
            &x,
            1e-5,
        )
        .expect("finite objective");
        worst = worst.max(err);
        // Spot-check two local objectives per point.
        for i in [trial % problem.workers(), problem.workers() / 2] {
            let err = fd_gradient_check(
                |v| problem.local_value(i, v),
                |v| problem.local_grad(i, v),
                &x,
                1e-5,
            )
            .expect("finite objective");
            worst = worst.max(err);
        }
    }
    Check::new(
        format!("fd gradient check <= 1e-5 [{name}]"),
        worst <= 1e-5,
        format!("worst rel error {worst:.2e}"),
    )
}

/// Accumulated-error recursion on a long compressed run.
pub fn recursion_suite() -> Result<Vec<Check>> {
    recursion_checks(2000, 0x6EC)
}

pub fn recursion_checks(iterations: u64, seed: u64) -> Result<Vec<Check>> {
    let problem = Problem::new(gen_least_squares(seed, 30, 32, 1000));
    let rand1 = CompressorSpec::RandK {
        k: 1,
        randomness_mode: RandomnessMode::Independent,
    };
    let rounds = 4u64;
    let cfg = AlgorithmConfig {
        name: "neolithic".into(),
        gamma: GammaConfig {
            mode: SelectionMode::Manual,
            value: Some(0.05),
            decay_every: None,
            decay_factor: None,
        },
        rounds: RoundsConfig {
            mode: SelectionMode::Manual,
            value: Some(rounds),
        },
        worker_compressor: rand1.clone(),
        server_compressor: rand1,
        budget_t: iterations * rounds,
    };
    let record = run_single(
        &problem,
        OracleSpec::Minibatch { batch: 1 },
        &cfg,
        seed,
        1000,
    )?;
    let mut checks = Vec::new();
    checks.push(Check::new(
        format!("recursion residual <= 1e-9 over {iterations} iterations"),
        record.diagnostics.max_recursion_residual <= 1e-9,
        format!("max residual {:.2e}", record.diagnostics.max_recursion_residual),
    ));
    checks.push(Check::new(
        "all worker model copies identical at every iteration boundary",
        record.diagnostics.max_model_divergence == 0.0,
        format!("max divergence {}", record.diagnostics.max_model_divergence),
    ));
    checks.push(Check::new(
        "run not diverged",
        !record.diverged,
        format!("diverged = {}", record.diverged),
    ));
    Ok(checks)
}
