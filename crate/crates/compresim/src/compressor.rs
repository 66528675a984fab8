//! Compression operators.
//!
//! Each operator kind lives behind the [`Compress`] trait and is selected at
//! runtime from a serializable [`CompressorSpec`] (the form used in run
//! configs). A spec reports its class parameters: `omega` for unbiased
//! operators (relative variance bound) and `delta` for contractive ones
//! (residual contraction factor).
//!
//! Sparsifier randomness can run in one of two modes: `independent` (each
//! endpoint has its own stream) or `shared_broadcast` (all endpoints derive
//! their state from one broadcast stream and advance in lock-step, so they
//! select identical coordinate sets on every draw).

use crate::error::{Error, Result};
use crate::progress::prog;
use crate::rng::RngStream;
use crate::vector::RealVector;
use crate::wire::WireCost;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RandomnessMode {
    #[default]
    Independent,
    SharedBroadcast,
}

/// Declarative description of one compression operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompressorSpec {
    Identity,
    /// Keep k uniformly chosen coordinates (without replacement), zero the rest.
    RandK {
        k: usize,
        #[serde(default)]
        randomness_mode: RandomnessMode,
    },
    /// rand-k with values multiplied by d/k, making the operator unbiased.
    RandKScaled {
        k: usize,
        #[serde(default)]
        randomness_mode: RandomnessMode,
    },
    /// Keep the k largest-magnitude coordinates; ties break to the lower index.
    TopK { k: usize },
    /// Stochastic quantization with `levels` uniform levels per sign.
    StochQuant { levels: u32 },
    /// inner unbiased operator scaled by `scale`; with scale = 1/(1+omega) the
    /// result is contractive with delta = 1/(1+omega).
    ScaledContractiveWrapper {
        inner: Box<CompressorSpec>,
        scale: f64,
    },
}

impl CompressorSpec {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            CompressorSpec::Identity => Ok(()),
            CompressorSpec::RandK { k, .. }
            | CompressorSpec::RandKScaled { k, .. }
            | CompressorSpec::TopK { k } => {
                if *k == 0 || *k > d {
                    Err(Error::invalid(format!(
                        "sparsifier k must satisfy 1 <= k <= d, got k={k}, d={d}"
                    )))
                } else {
                    Ok(())
                }
            }
            CompressorSpec::StochQuant { levels } => {
                if *levels == 0 {
                    Err(Error::invalid("quantizer levels must be positive"))
                } else {
                    Ok(())
                }
            }
            CompressorSpec::ScaledContractiveWrapper { inner, scale } => {
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::invalid("wrapper scale must be positive and finite"));
                }
                inner.validate(d)
            }
        }
    }

    /// Relative-variance bound for unbiased kinds; None for biased kinds.
    pub fn omega(&self, d: usize) -> Option<f64> {
        match self {
            CompressorSpec::Identity => Some(0.0),
            CompressorSpec::RandKScaled { k, .. } => Some(d as f64 / *k as f64 - 1.0),
            CompressorSpec::StochQuant { levels } => {
                let s = *levels as f64;
                let df = d as f64;
                Some((df / (s * s)).min(df.sqrt() / s))
            }
            _ => None,
        }
    }

    /// Contraction factor for contractive kinds; None when not contractive.
    pub fn delta(&self, d: usize) -> Option<f64> {
        match self {
            CompressorSpec::Identity => Some(1.0),
            CompressorSpec::RandK { k, .. } | CompressorSpec::TopK { k } => {
                Some(*k as f64 / d as f64)
            }
            CompressorSpec::ScaledContractiveWrapper { inner, scale } => {
                // E||sC(x)-x||^2 = (s^2(1+omega) - 2s + 1)||x||^2 for unbiased C.
                let omega = inner.omega(d)?;
                let delta = 2.0 * scale - scale * scale * (1.0 + omega);
                (delta > 0.0 && delta <= 1.0).then_some(delta)
            }
            _ => None,
        }
    }

    pub fn is_unbiased(&self, d: usize) -> bool {
        self.omega(d).is_some()
    }

    pub fn is_contractive(&self, d: usize) -> bool {
        self.delta(d).is_some()
    }

    pub fn randomness_mode(&self) -> RandomnessMode {
        match self {
            CompressorSpec::RandK {
                randomness_mode, ..
            }
            | CompressorSpec::RandKScaled {
                randomness_mode, ..
            } => *randomness_mode,
            CompressorSpec::ScaledContractiveWrapper { inner, .. } => inner.randomness_mode(),
            _ => RandomnessMode::Independent,
        }
    }

    /// Whether the operator consumes randomness at all.
    pub fn is_deterministic(&self) -> bool {
        match self {
            CompressorSpec::Identity | CompressorSpec::TopK { .. } => true,
            CompressorSpec::ScaledContractiveWrapper { inner, .. } => inner.is_deterministic(),
            _ => false,
        }
    }

    /// Instantiates the operator kernel for this spec.
    pub fn build_kernel(&self) -> Box<dyn Compress> {
        match self {
            CompressorSpec::Identity => Box::new(IdentityOp),
            CompressorSpec::RandK { k, .. } => Box::new(RandKOp {
                k: *k,
                scaled: false,
            }),
            CompressorSpec::RandKScaled { k, .. } => Box::new(RandKOp {
                k: *k,
                scaled: true,
            }),
            CompressorSpec::TopK { k } => Box::new(TopKOp { k: *k }),
            CompressorSpec::StochQuant { levels } => Box::new(StochQuantOp { levels: *levels }),
            CompressorSpec::ScaledContractiveWrapper { inner, scale } => Box::new(ScaledOp {
                inner: inner.build_kernel(),
                scale: *scale,
            }),
        }
    }

    /// Full per-endpoint state: kernel plus its randomness stream.
    pub fn build(&self, rng: RngStream) -> CompressorState {
        CompressorState {
            spec: self.clone(),
            kernel: self.build_kernel(),
            rng,
            events: None,
        }
    }
}

/// Wraps an unbiased spec into its 1/(1+omega)-scaled contractive form.
pub fn scale_unbiased_to_contractive(spec: &CompressorSpec, d: usize) -> Result<CompressorSpec> {
    let omega = spec.omega(d).ok_or_else(|| {
        Error::invalid("scaling to contractive requires an unbiased compressor spec")
    })?;
    Ok(CompressorSpec::ScaledContractiveWrapper {
        inner: Box::new(spec.clone()),
        scale: 1.0 / (1.0 + omega),
    })
}

/// One compression operator kernel.
pub trait Compress: Send + Sync {
    fn compress(&self, x: &RealVector, rng: &mut RngStream) -> Result<(RealVector, WireCost)>;
}

struct IdentityOp;

impl Compress for IdentityOp {
    fn compress(&self, x: &RealVector, _rng: &mut RngStream) -> Result<(RealVector, WireCost)> {
        Ok((x.clone(), WireCost::scalars(x.dim() as u64)))
    }
}

struct RandKOp {
    k: usize,
    scaled: bool,
}

impl Compress for RandKOp {
    fn compress(&self, x: &RealVector, rng: &mut RngStream) -> Result<(RealVector, WireCost)> {
        let d = x.dim();
        if self.k > d {
            return Err(Error::invalid(format!("rand-k with k={} > d={d}", self.k)));
        }
        let chosen = rng.choose_without_replacement(d, self.k);
        let factor = if self.scaled {
            d as f64 / self.k as f64
        } else {
            1.0
        };
        let mut y = RealVector::zeros(d);
        for &j in &chosen {
            y[j] = x[j] * factor;
        }
        Ok((y, WireCost::sparsified(self.k as u64)))
    }
}

struct TopKOp {
    k: usize,
}

impl Compress for TopKOp {
    fn compress(&self, x: &RealVector, _rng: &mut RngStream) -> Result<(RealVector, WireCost)> {
        let d = x.dim();
        if self.k > d {
            return Err(Error::invalid(format!("top-k with k={} > d={d}", self.k)));
        }
        let mut order: Vec<usize> = (0..d).collect();
        // Larger magnitude first; equal magnitudes keep the lower index.
        order.sort_by(|&a, &b| {
            x[b].abs()
                .partial_cmp(&x[a].abs())
                .expect("finite coordinates")
                .then(a.cmp(&b))
        });
        let mut y = RealVector::zeros(d);
        for &j in order.iter().take(self.k) {
            y[j] = x[j];
        }
        Ok((y, WireCost::sparsified(self.k as u64)))
    }
}

struct StochQuantOp {
    levels: u32,
}

impl Compress for StochQuantOp {
    fn compress(&self, x: &RealVector, rng: &mut RngStream) -> Result<(RealVector, WireCost)> {
        let d = x.dim();
        let s = self.levels as f64;
        let norm = x.norm();
        // Zero input: only the norm scalar goes on the wire.
        if norm == 0.0 {
            return Ok((RealVector::zeros(d), WireCost::bits(32)));
        }
        let mut y = RealVector::zeros(d);
        for j in 0..d {
            let a = x[j].abs() / norm;
            let scaled = s * a;
            let mut level = scaled.floor();
            // Randomized rounding keeps E[level/s] = a.
            if rng.uniform() < scaled - level {
                level += 1.0;
            }
            y[j] = norm * x[j].signum() * (level / s);
        }
        let payload = (d as f64 * (s.log2() + 1.0)).ceil() as u64;
        Ok((y, WireCost::bits(32 + payload)))
    }
}

struct ScaledOp {
    inner: Box<dyn Compress>,
    scale: f64,
}

impl Compress for ScaledOp {
    fn compress(&self, x: &RealVector, rng: &mut RngStream) -> Result<(RealVector, WireCost)> {
        let (mut y, cost) = self.inner.compress(x, rng)?;
        y.scale_in_place(self.scale);
        Ok((y, cost))
    }
}

/// Logged per-compression event, used by the hard-instance certificates.
#[derive(Debug, Clone, Copy)]
pub struct CompressEvent {
    /// prog of the input vector (exact-zero tolerance).
    pub input_prog: usize,
    /// Whether the input's last nonzero coordinate survived compression.
    pub frontier_kept: bool,
}

/// A compressor kernel bound to one endpoint's randomness stream.
pub struct CompressorState {
    spec: CompressorSpec,
    kernel: Box<dyn Compress>,
    rng: RngStream,
    events: Option<Vec<CompressEvent>>,
}

impl CompressorState {
    pub fn spec(&self) -> &CompressorSpec {
        &self.spec
    }

    pub fn draw_index(&self) -> u64 {
        self.rng.draw_index()
    }

    /// Start recording per-call frontier events.
    pub fn enable_event_log(&mut self) {
        self.events = Some(Vec::new());
    }

    pub fn take_events(&mut self) -> Vec<CompressEvent> {
        self.events.take().unwrap_or_default()
    }

    pub fn compress(&mut self, x: &RealVector) -> Result<(RealVector, WireCost)> {
        self.spec.validate(x.dim())?;
        let record_prog = self.events.as_ref().map(|_| prog(x, 0.0));
        let (y, cost) = self.kernel.compress(x, &mut self.rng)?;
        if let (Some(events), Some(p)) = (self.events.as_mut(), record_prog) {
            events.push(CompressEvent {
                input_prog: p,
                frontier_kept: p > 0 && y[p - 1] != 0.0,
            });
        }
        Ok((y, cost))
    }
}

/// Empirical check of the compressor class parameters.
#[derive(Debug, Clone, Copy)]
pub struct ContractEstimate {
    /// Max over inputs of the mean relative squared compression error.
    pub omega_hat: f64,
    /// 1 - omega_hat: empirical contraction factor.
    pub delta_hat: f64,
    /// Max over inputs of ||mean C(x) - x|| / ||x||.
    pub max_bias: f64,
}

/// Monte-Carlo estimate of the class parameters over a set of test vectors.
///
/// Zero test vectors are skipped; `n_draws` independent compressions are
/// averaged per input.
pub fn estimate_contract_params(
    spec: &CompressorSpec,
    samples: &[RealVector],
    n_draws: usize,
    seed: u64,
) -> Result<ContractEstimate> {
    if n_draws < 1000 {
        return Err(Error::invalid("estimate requires at least 1000 draws"));
    }
    let mut state = spec.build(RngStream::new(seed, "contract-estimate"));
    let mut omega_hat = 0.0f64;
    let mut max_bias = 0.0f64;
    let mut any = false;
    for x in samples {
        let norm_sq = x.norm_sq();
        if norm_sq == 0.0 {
            continue;
        }
        any = true;
        let mut err_acc = 0.0;
        let mut mean_out = RealVector::zeros(x.dim());
        for _ in 0..n_draws {
            let (y, _) = state.compress(x)?;
            err_acc += y.dist_sq(x);
            mean_out.add_assign(&y);
        }
        mean_out.scale_in_place(1.0 / n_draws as f64);
        omega_hat = omega_hat.max(err_acc / n_draws as f64 / norm_sq);
        max_bias = max_bias.max(mean_out.sub(x).norm() / norm_sq.sqrt());
    }
    if !any {
        return Err(Error::invalid("all test vectors were zero"));
    }
    Ok(ContractEstimate {
        omega_hat,
        delta_hat: 1.0 - omega_hat,
        max_bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(coords: &[f64]) -> RealVector {
        RealVector::from_vec(coords.to_vec())
    }

    fn state(spec: &CompressorSpec, label: &str) -> CompressorState {
        spec.build(RngStream::new(11, label))
    }

    #[test]
    fn identity_reports_both_classes() {
        let spec = CompressorSpec::Identity;
        assert_eq!(spec.omega(8), Some(0.0));
        assert_eq!(spec.delta(8), Some(1.0));
        let (y, cost) = state(&spec, "id").compress(&v(&[1.0, -2.0])).unwrap();
        assert_eq!(y.as_slice(), &[1.0, -2.0]);
        assert_eq!(cost, WireCost::scalars(2));
    }

    #[test]
    fn top_k_keeps_largest_and_breaks_ties_low() {
        let spec = CompressorSpec::TopK { k: 1 };
        let (y, cost) = state(&spec, "t").compress(&v(&[3.0, -1.0, 2.0])).unwrap();
        assert_eq!(y.as_slice(), &[3.0, 0.0, 0.0]);
        assert_eq!(cost, WireCost::sparsified(1));
        // Tie between |2| at indices 0 and 2: lower index wins.
        let (y, _) = state(&spec, "t2").compress(&v(&[2.0, 1.0, -2.0])).unwrap();
        assert_eq!(y.as_slice(), &[2.0, 0.0, 0.0]);
    }

    #[test]
    fn rand_k_scaled_enumerates_to_unbiased_mean() {
        // d=2, k=1: outcomes [2x1, 0] or [0, 2x2] each with prob 1/2.
        let spec = CompressorSpec::RandKScaled {
            k: 1,
            randomness_mode: RandomnessMode::Independent,
        };
        let x = v(&[1.0, 1.0]);
        let mut st = state(&spec, "rk");
        let mut seen = [false, false];
        let mut sum = RealVector::zeros(2);
        let n = 4000;
        for _ in 0..n {
            let (y, _) = st.compress(&x).unwrap();
            if y[0] != 0.0 {
                assert_eq!(y.as_slice(), &[2.0, 0.0]);
                seen[0] = true;
            } else {
                assert_eq!(y.as_slice(), &[0.0, 2.0]);
                seen[1] = true;
            }
            sum.add_assign(&y);
        }
        assert!(seen[0] && seen[1]);
        sum.scale_in_place(1.0 / n as f64);
        assert!((sum[0] - 1.0).abs() < 0.1 && (sum[1] - 1.0).abs() < 0.1);
    }

    #[test]
    fn sparsifier_support_is_exact_zero() {
        let spec = CompressorSpec::RandK {
            k: 3,
            randomness_mode: RandomnessMode::Independent,
        };
        let x = v(&[0.3, -0.7, 1.9, 2.2, -4.1, 0.05, 1.0, -1.0]);
        let mut st = state(&spec, "supp");
        for _ in 0..200 {
            let (y, _) = st.compress(&x).unwrap();
            let kept = y.iter().filter(|c| **c != 0.0).count();
            assert!(kept <= 3);
            for j in 0..8 {
                assert!(y[j] == 0.0 || y[j] == x[j]);
            }
        }
    }

    #[test]
    fn stoch_quant_one_level_enumeration() {
        // s=1, x=[3,4]: ||x||=5, y1 in {0,5} with P(5)=3/5, y2 in {0,5} with P(5)=4/5.
        let spec = CompressorSpec::StochQuant { levels: 1 };
        let x = v(&[3.0, 4.0]);
        let mut st = state(&spec, "q");
        let n = 40000;
        let (mut hits1, mut hits2) = (0u32, 0u32);
        for _ in 0..n {
            let (y, cost) = st.compress(&x).unwrap();
            assert!(y[0] == 0.0 || y[0] == 5.0);
            assert!(y[1] == 0.0 || y[1] == 5.0);
            assert_eq!(cost, WireCost::bits(32 + 2));
            hits1 += (y[0] == 5.0) as u32;
            hits2 += (y[1] == 5.0) as u32;
        }
        let (p1, p2) = (hits1 as f64 / n as f64, hits2 as f64 / n as f64);
        assert!((p1 - 0.6).abs() < 0.01, "p1 = {p1}");
        assert!((p2 - 0.8).abs() < 0.01, "p2 = {p2}");
    }

    #[test]
    fn stoch_quant_zero_input_costs_norm_only() {
        let spec = CompressorSpec::StochQuant { levels: 4 };
        let (y, cost) = state(&spec, "qz").compress(&v(&[0.0, 0.0, 0.0])).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 0.0, 0.0]);
        assert_eq!(cost, WireCost::bits(32));
    }

    #[test]
    fn lemma_scaling_composes_to_unscaled_rand_k() {
        // rand_k_scaled(d=4,k=1) has omega=3; wrapped by 1/4 it must act as
        // unscaled rand-1 on every draw and report delta = 1/4.
        let inner = CompressorSpec::RandKScaled {
            k: 1,
            randomness_mode: RandomnessMode::Independent,
        };
        assert_eq!(inner.omega(4), Some(3.0));
        let wrapped = scale_unbiased_to_contractive(&inner, 4).unwrap();
        assert_eq!(wrapped.delta(4), Some(0.25));

        let plain = CompressorSpec::RandK {
            k: 1,
            randomness_mode: RandomnessMode::Independent,
        };
        let mut a = wrapped.build(RngStream::new(5, "same"));
        let mut b = plain.build(RngStream::new(5, "same"));
        let x = v(&[1.0, -2.0, 3.5, 0.25]);
        for _ in 0..100 {
            let (ya, _) = a.compress(&x).unwrap();
            let (yb, _) = b.compress(&x).unwrap();
            assert_eq!(ya.as_slice(), yb.as_slice());
        }
    }

    #[test]
    fn scale_identity_is_noop() {
        let wrapped = scale_unbiased_to_contractive(&CompressorSpec::Identity, 6).unwrap();
        assert_eq!(wrapped.delta(6), Some(1.0));
    }

    #[test]
    fn quantizer_omega_bound_and_scale() {
        let spec = CompressorSpec::StochQuant { levels: 4 };
        assert_eq!(spec.omega(16), Some(1.0));
        let wrapped = scale_unbiased_to_contractive(&spec, 16).unwrap();
        assert_eq!(wrapped.delta(16), Some(0.5));
    }

    #[test]
    fn shared_broadcast_states_agree() {
        let spec = CompressorSpec::RandK {
            k: 2,
            randomness_mode: RandomnessMode::SharedBroadcast,
        };
        let mut a = spec.build(RngStream::new(99, "broadcast"));
        let mut b = spec.build(RngStream::new(99, "broadcast"));
        let x = v(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        for _ in 0..1000 {
            let (ya, _) = a.compress(&x).unwrap();
            let (yb, _) = b.compress(&x).unwrap();
            assert_eq!(ya.as_slice(), yb.as_slice());
            assert_eq!(a.draw_index(), b.draw_index());
        }
    }

    #[test]
    fn dimension_and_k_validation() {
        let spec = CompressorSpec::RandK {
            k: 5,
            randomness_mode: RandomnessMode::Independent,
        };
        assert!(state(&spec, "bad").compress(&v(&[1.0, 2.0])).is_err());
        assert!(spec.validate(4).is_err());
        assert!(spec.validate(5).is_ok());
    }

    #[test]
    fn estimator_on_identity() {
        let samples = vec![v(&[1.0, 2.0]), v(&[0.0, 0.0]), v(&[-3.0, 0.5])];
        let est =
            estimate_contract_params(&CompressorSpec::Identity, &samples, 1000, 123).unwrap();
        assert_eq!(est.omega_hat, 0.0);
        assert_eq!(est.delta_hat, 1.0);
        assert_eq!(est.max_bias, 0.0);
    }

    #[test]
    fn estimator_rejects_too_few_draws() {
        let samples = vec![v(&[1.0])];
        assert!(estimate_contract_params(&CompressorSpec::Identity, &samples, 10, 1).is_err());
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = CompressorSpec::RandK {
            k: 1,
            randomness_mode: RandomnessMode::SharedBroadcast,
        };
        #[derive(Serialize, Deserialize)]
        struct Holder {
            worker: CompressorSpec,
        }
        let text = toml::to_string(&Holder {
            worker: spec.clone(),
        })
        .unwrap();
        let parsed: Holder = toml::from_str(&text).unwrap();
        assert_eq!(parsed.worker, spec);
        let parsed: Holder = toml::from_str("worker = { kind = \"top_k\", k = 3 }").unwrap();
        assert_eq!(parsed.worker, CompressorSpec::TopK { k: 3 });
    }
}
