//! The optimizer family.
//!
//! Each algorithm lives behind the [`Algorithm`] trait and is looked up by
//! name at runtime (`psgd`, `neolithic`, `mem_sgd`, `double_squeeze`,
//! `ef21_sgd`, `qsgd`). All of them run against the same budget convention:
//! per worker, gradient queries == communication rounds == T at run end.

pub mod common;
pub mod double_squeeze;
pub mod ef21_sgd;
pub mod hard_instance;
pub mod mem_sgd;
pub mod neolithic;
pub mod psgd;
pub mod qsgd;

use crate::compressor::CompressorSpec;
use crate::error::{Error, Result};
use crate::harness::record::RunRecord;
use crate::problem::{OracleSpec, Problem};
use crate::wire::CostModel;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::LazyLock;

pub use common::{GammaSchedule, Sim};
pub use hard_instance::{run_hard_instance_trial, HardInstanceReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    #[default]
    AutoTheory,
    Manual,
}

/// Learning-rate selection: theory formula or manual value with optional
/// stair decay (divide by `decay_factor` every `decay_every` communication
/// rounds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaConfig {
    pub mode: SelectionMode,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub decay_every: Option<u64>,
    #[serde(default)]
    pub decay_factor: Option<f64>,
}

impl Default for GammaConfig {
    fn default() -> Self {
        GammaConfig {
            mode: SelectionMode::AutoTheory,
            value: None,
            decay_every: None,
            decay_factor: None,
        }
    }
}

impl GammaConfig {
    pub fn resolve(&self, auto_value: impl FnOnce() -> Result<f64>) -> Result<GammaSchedule> {
        match self.mode {
            SelectionMode::AutoTheory => Ok(GammaSchedule::Constant(auto_value()?)),
            SelectionMode::Manual => {
                let initial = self.value.ok_or_else(|| {
                    Error::config("algorithm.gamma.value", "required in manual mode")
                })?;
                if !(initial > 0.0 && initial.is_finite()) {
                    return Err(Error::config("algorithm.gamma.value", "must be positive"));
                }
                match (self.decay_every, self.decay_factor) {
                    (None, None) => Ok(GammaSchedule::Constant(initial)),
                    (Some(every), factor) => {
                        if every == 0 {
                            return Err(Error::config(
                                "algorithm.gamma.decay_every",
                                "must be positive",
                            ));
                        }
                        let factor = factor.unwrap_or(10.0);
                        if factor <= 1.0 {
                            return Err(Error::config(
                                "algorithm.gamma.decay_factor",
                                "must exceed 1",
                            ));
                        }
                        Ok(GammaSchedule::StairDecay {
                            initial,
                            every,
                            factor,
                        })
                    }
                    (None, Some(_)) => Err(Error::config(
                        "algorithm.gamma.decay_every",
                        "required when decay_factor is set",
                    )),
                }
            }
        }
    }
}

/// Compression-round selection for the accumulated-compression algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct RoundsConfig {
    pub mode: SelectionMode,
    #[serde(default)]
    pub value: Option<u64>,
}

/// One algorithm's full runtime configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub name: String,
    #[serde(default)]
    pub gamma: GammaConfig,
    #[serde(default, rename = "R")]
    pub rounds: RoundsConfig,
    pub worker_compressor: CompressorSpec,
    pub server_compressor: CompressorSpec,
    pub budget_t: u64,
}

impl AlgorithmConfig {
    pub fn unidirectional(&self) -> bool {
        self.server_compressor == CompressorSpec::Identity
    }
}

/// Everything one trial needs.
pub struct RunContext<'a> {
    pub problem: &'a Problem,
    pub oracle: OracleSpec,
    pub config: &'a AlgorithmConfig,
    pub cost_model: CostModel,
    /// Trial seed; all per-trial randomness streams derive from it.
    pub seed: u64,
    /// Log metrics at communication rounds divisible by this (the final round
    /// is always logged). 1 logs every model update.
    pub metric_every: u64,
    /// Record the adversarial bookkeeping (hard-instance runs).
    pub record_adversary: bool,
}

/// Compression rounds from the theory:
/// R = ceil(max(ln(delta T max(b2, sigma2 delta) / (Delta L)), ln 8) / delta).
///
/// The floor at ceil(ln 8 / delta) keeps theta = 4(1-delta)^R below 1/2.
pub fn select_r(delta: f64, t: u64, b2: f64, sigma2: f64, subopt: f64, smoothness: f64) -> usize {
    debug_assert!(delta > 0.0 && delta <= 1.0);
    let arg = delta * t as f64 * b2.max(sigma2 * delta) / (subopt * smoothness);
    let ln_term = if arg > 0.0 {
        arg.ln()
    } else {
        f64::NEG_INFINITY
    };
    let ln8 = 8.0f64.ln();
    let r = (ln_term.max(ln8) / delta).ceil();
    (r as usize).max(1)
}

/// theta = 4 (1 - delta)^R, the per-iteration error contraction.
pub fn theta_for(delta: f64, r: usize) -> f64 {
    4.0 * (1.0 - delta).powi(r as i32)
}

/// Theory learning rate for the accumulated-compression algorithm.
#[allow(clippy::too_many_arguments)]
pub fn select_gamma_neolithic(
    smoothness: f64,
    sigma: f64,
    k: u64,
    n: usize,
    r: usize,
    subopt: f64,
    theta: f64,
    b2: f64,
) -> Result<f64> {
    if theta >= 1.0 {
        return Err(Error::invalid("R too small for contraction"));
    }
    let l = smoothness;
    let kp1 = (k + 1) as f64;
    let noise_term = sigma * (kp1 * l / (2.0 * n as f64 * r as f64 * subopt)).sqrt();
    let bias_term = (32.0 * kp1 * l * l * theta * (b2 + sigma * sigma / r as f64)
        / (3.0 * (1.0 - theta) * subopt))
        .cbrt();
    let gamma = 1.0 / (11.0 * l + noise_term + bias_term);
    if gamma > 1.0 / (2.0 * l) {
        return Err(Error::invalid("learning rate exceeds 1/(2L)"));
    }
    if gamma > (1.0 / (11.0 * l)) * ((1.0 - theta) / theta).sqrt() {
        return Err(Error::invalid(
            "learning rate violates the contraction precondition",
        ));
    }
    Ok(gamma)
}

/// Theory learning rate with the compression-error term removed; used by the
/// baselines in auto mode.
pub fn select_gamma_uncompressed(
    smoothness: f64,
    sigma: f64,
    t: u64,
    n: usize,
    subopt: f64,
) -> f64 {
    let l = smoothness;
    let noise_term = sigma * ((t + 1) as f64 * l / (2.0 * n as f64 * subopt)).sqrt();
    1.0 / (11.0 * l + noise_term)
}

/// One optimizer variant, selectable by name.
pub trait Algorithm: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, ctx: &RunContext) -> Result<RunRecord>;
}

static REGISTRY: LazyLock<BTreeMap<&'static str, Box<dyn Algorithm>>> = LazyLock::new(|| {
    let mut map: BTreeMap<&'static str, Box<dyn Algorithm>> = BTreeMap::new();
    for algo in [
        Box::new(psgd::Psgd) as Box<dyn Algorithm>,
        Box::new(neolithic::Neolithic),
        Box::new(mem_sgd::MemSgd),
        Box::new(double_squeeze::DoubleSqueeze),
        Box::new(ef21_sgd::Ef21Sgd),
        Box::new(qsgd::Qsgd),
    ] {
        map.insert(algo.name(), algo);
    }
    map
});

pub fn algorithm_by_name(name: &str) -> Result<&'static dyn Algorithm> {
    REGISTRY
        .get(name)
        .map(|b| b.as_ref())
        .ok_or_else(|| Error::config("algorithm.name", format!("unknown algorithm `{name}`")))
}

pub fn algorithm_names() -> Vec<&'static str> {
    REGISTRY.keys().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_knows_all_variants() {
        let names = algorithm_names();
        for expected in [
            "double_squeeze",
            "ef21_sgd",
            "mem_sgd",
            "neolithic",
            "psgd",
            "qsgd",
        ] {
            assert!(names.contains(&expected), "missing {expected}");
            assert_eq!(algorithm_by_name(expected).unwrap().name(), expected);
        }
        assert!(algorithm_by_name("nope").is_err());
    }

    #[test]
    fn select_r_examples() {
        // ln-term below ln 8: R = ceil(ln 8 / delta).
        assert_eq!(select_r(0.1, 10, 0.0, 0.0, 1.0, 1.0), 21);
        assert_eq!(select_r(1.0, 10, 0.0, 0.0, 1.0, 1.0), 3);
        // Large heterogeneity pushes R above the floor.
        let r = select_r(0.1, 100_000, 100.0, 0.0, 1.0, 1.0);
        assert!(r > 21);
        let expect = ((0.1f64 * 100_000.0 * 100.0).ln() / 0.1).ceil() as usize;
        assert_eq!(r, expect);
    }

    #[test]
    fn auto_r_keeps_theta_below_half() {
        for delta in [0.01, 0.05, 0.1, 0.3, 0.5, 0.9, 1.0] {
            for t in [10u64, 1000, 1_000_000] {
                for b2 in [0.0, 1.0, 1e6] {
                    let r = select_r(delta, t, b2, 2.0, 1.0, 1.0);
                    assert!(
                        theta_for(delta, r) < 0.5,
                        "theta >= 1/2 at delta={delta}, t={t}, b2={b2}"
                    );
                }
            }
        }
    }

    #[test]
    fn gamma_degenerates_to_eleven_l() {
        // sigma = 0 and theta -> 0 leave only the smoothness term.
        let g = select_gamma_neolithic(2.0, 0.0, 100, 4, 10, 1.0, 1e-300, 0.0).unwrap();
        assert!((g - 1.0 / 22.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_worked_example_matches_independent_recomputation() {
        // L=1, sigma=1, K=99, n=4, R=10, Delta=1, theta=0.1, b2=0:
        //   eta2 = sqrt(100/80) = 1.1180339887498949
        //   eta3 = (32*100*0.1*(1/10) / 2.7)^(1/3) = (32/2.7)^(1/3) = 2.2799...
        //   gamma = 1/(11 + eta2 + eta3) = 0.069452...
        let g = select_gamma_neolithic(1.0, 1.0, 99, 4, 10, 1.0, 0.1, 0.0).unwrap();
        let eta2 = (100.0f64 / 80.0).sqrt();
        let eta3 = (32.0f64 / 2.7).cbrt();
        let expect = 1.0 / (11.0 + eta2 + eta3);
        assert!((g - expect).abs() < 1e-12, "{g} vs {expect}");
        assert!((g - 0.069452).abs() < 1e-5);
    }

    #[test]
    fn gamma_never_exceeds_eleven_l_inverse() {
        for theta in [0.01, 0.1, 0.49] {
            let g = select_gamma_neolithic(1.0, 3.0, 500, 8, 20, 2.0, theta, 5.0).unwrap();
            assert!(g <= 1.0 / 11.0);
        }
    }

    #[test]
    fn gamma_rejects_no_contraction() {
        assert!(select_gamma_neolithic(1.0, 1.0, 10, 2, 2, 1.0, 1.0, 0.0).is_err());
        assert!(select_gamma_neolithic(1.0, 1.0, 10, 2, 2, 1.0, 1.5, 0.0).is_err());
    }

    #[test]
    fn gamma_config_resolution() {
        let manual = GammaConfig {
            mode: SelectionMode::Manual,
            value: Some(0.25),
            decay_every: Some(100),
            decay_factor: Some(10.0),
        };
        let schedule = manual.resolve(|| unreachable!()).unwrap();
        assert_eq!(schedule.at(0), 0.25);
        assert_eq!(schedule.at(99), 0.25);
        assert_eq!(schedule.at(100), 0.025);
        assert_eq!(schedule.at(250), 0.0025);

        let auto = GammaConfig::default();
        let schedule = auto.resolve(|| Ok(0.5)).unwrap();
        assert_eq!(schedule.at(12345), 0.5);

        let bad = GammaConfig {
            mode: SelectionMode::Manual,
            value: None,
            decay_every: None,
            decay_factor: None,
        };
        assert!(bad.resolve(|| unreachable!()).is_err());
    }
}
