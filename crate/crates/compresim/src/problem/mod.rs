//! Distributed objectives and stochastic gradient oracles.
//!
//! A [`Problem`] bundles per-worker objectives with the constants the theory
//! consumes (smoothness L, suboptimality bound, oracle variance, gradient
//! dissimilarity). Generators are addressable by name from run configs:
//! `least_squares`, `logistic`, and `zero_chain`.

pub mod least_squares;
pub mod logistic;
pub mod zero_chain;

use crate::error::{Error, Result};
use crate::progress::prog;
use crate::rng::RngStream;
use crate::vector::RealVector;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub use least_squares::{gen_least_squares, LeastSquaresProblem};
pub use logistic::{gen_logistic, LogisticProblem};
pub use zero_chain::{gen_zero_chain, Assignment, ZeroChainProblem};

/// Problem constants consumed by learning-rate and round selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Lipschitz constant of every local gradient.
    pub smoothness: f64,
    /// Bound on f(x0) - inf f.
    pub suboptimality: f64,
    /// Oracle variance bound.
    pub sigma2: f64,
    /// Gradient dissimilarity bound.
    pub b2: f64,
}

/// One distributed objective: n workers, each with a local function.
pub trait Objective: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn workers(&self) -> usize;
    fn local_value(&self, worker: usize, x: &RealVector) -> f64;
    fn local_grad(&self, worker: usize, x: &RealVector) -> RealVector;

    fn global_value(&self, x: &RealVector) -> f64 {
        let n = self.workers();
        (0..n).map(|i| self.local_value(i, x)).sum::<f64>() / n as f64
    }

    fn global_grad(&self, x: &RealVector) -> RealVector {
        let n = self.workers();
        let mut acc = RealVector::zeros(self.dim());
        for i in 0..n {
            acc.add_assign(&self.local_grad(i, x));
        }
        acc.scale_in_place(1.0 / n as f64);
        acc
    }

    /// Local dataset size, for datapoint-sampling oracles.
    fn num_datapoints(&self, _worker: usize) -> Option<usize> {
        None
    }

    /// Gradient of one local datapoint's loss; Err for analytic-only problems.
    fn datapoint_grad(&self, _worker: usize, _x: &RealVector, _index: usize) -> Result<RealVector> {
        Err(Error::Unsupported(
            "problem has no per-datapoint gradients".into(),
        ))
    }

    /// Whether the coordinate-masked adversarial oracle applies.
    fn supports_masked_oracle(&self) -> bool {
        false
    }

    fn x0(&self) -> RealVector {
        RealVector::zeros(self.dim())
    }

    fn constants(&self) -> Constants;

    /// Concrete-type access for instance-specific inspection.
    fn as_any(&self) -> &dyn std::any::Any;
}

/// Shared handle to an immutable objective.
#[derive(Clone)]
pub struct Problem {
    inner: Arc<dyn Objective>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.inner.name())
            .field("dim", &self.inner.dim())
            .field("workers", &self.inner.workers())
            .finish()
    }
}

impl Problem {
    pub fn new(obj: impl Objective + 'static) -> Self {
        Problem {
            inner: Arc::new(obj),
        }
    }

    pub fn objective(&self) -> &dyn Objective {
        self.inner.as_ref()
    }
}

impl std::ops::Deref for Problem {
    type Target = dyn Objective;
    fn deref(&self) -> &Self::Target {
        self.inner.as_ref()
    }
}

/// Stochastic gradient oracle attached to each worker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    /// Full local gradient; zero variance.
    Exact,
    /// Mean gradient of `batch` uniformly sampled local datapoints.
    Minibatch { batch: usize },
    /// Full gradient with coordinates beyond prog(x) multiplied by zeta/p,
    /// zeta ~ Bernoulli(p) drawn once per query.
    BernoulliMaskedFullgrad { p: f64 },
}

impl OracleSpec {
    pub fn validate(&self, problem: &Problem) -> Result<()> {
        match self {
            OracleSpec::Exact => Ok(()),
            OracleSpec::Minibatch { batch } => {
                if *batch == 0 {
                    return Err(Error::invalid("minibatch size must be positive"));
                }
                if problem.num_datapoints(0).is_none() {
                    return Err(Error::Unsupported(
                        "minibatch oracle requires a datapoint-based problem".into(),
                    ));
                }
                Ok(())
            }
            OracleSpec::BernoulliMaskedFullgrad { p } => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(Error::invalid("mask probability must be in (0, 1]"));
                }
                if !problem.supports_masked_oracle() {
                    return Err(Error::Unsupported(
                        "masked oracle requires an analytic gradient".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Per-worker oracle state: the spec plus this worker's randomness stream.
pub struct OracleState {
    spec: OracleSpec,
    worker: usize,
    rng: RngStream,
    /// Bernoulli draws, recorded when the adversary log is enabled.
    zeta_log: Option<Vec<bool>>,
}

impl OracleState {
    pub fn new(spec: OracleSpec, worker: usize, rng: RngStream) -> Self {
        OracleState {
            spec,
            worker,
            rng,
            zeta_log: None,
        }
    }

    pub fn enable_zeta_log(&mut self) {
        self.zeta_log = Some(Vec::new());
    }

    pub fn take_zeta_log(&mut self) -> Vec<bool> {
        self.zeta_log.take().unwrap_or_default()
    }

    /// One stochastic gradient query at x.
    pub fn query(&mut self, problem: &Problem, x: &RealVector) -> Result<RealVector> {
        match self.spec {
            OracleSpec::Exact => Ok(problem.local_grad(self.worker, x)),
            OracleSpec::Minibatch { batch } => {
                let m = problem.num_datapoints(self.worker).ok_or_else(|| {
                    Error::Unsupported("minibatch oracle requires a datapoint-based problem".into())
                })?;
                let mut acc = RealVector::zeros(problem.dim());
                for _ in 0..batch {
                    let idx = self.rng.below(m);
                    acc.add_assign(&problem.datapoint_grad(self.worker, x, idx)?);
                }
                acc.scale_in_place(1.0 / batch as f64);
                Ok(acc)
            }
            OracleSpec::BernoulliMaskedFullgrad { p } => {
                if !problem.supports_masked_oracle() {
                    return Err(Error::Unsupported(
                        "masked oracle requires an analytic gradient".into(),
                    ));
                }
                let mut g = problem.local_grad(self.worker, x);
                let zeta = self.rng.bernoulli(p);
                if let Some(log) = self.zeta_log.as_mut() {
                    log.push(zeta);
                }
                let factor = if zeta { 1.0 / p } else { 0.0 };
                let frontier = prog(x, 0.0);
                for j in frontier..g.dim() {
                    g[j] *= factor;
                }
                Ok(g)
            }
        }
    }
}

/// Max over probe points of (1/n) sum_i ||grad_i(x) - grad(x)||^2.
///
/// Probes are x0 plus `n_probes` standard-normal points; the max keeps the
/// estimate conservative for a uniform-in-x bound.
pub fn estimate_b2(problem: &Problem, n_probes: usize, rng: &mut RngStream) -> f64 {
    let n = problem.workers();
    let mut worst = 0.0f64;
    for probe in 0..=n_probes {
        let x = if probe == 0 {
            problem.x0()
        } else {
            RealVector::from_vec((0..problem.dim()).map(|_| rng.normal()).collect())
        };
        let global = problem.global_grad(&x);
        let mut acc = 0.0;
        for i in 0..n {
            acc += problem.local_grad(i, &x).dist_sq(&global);
        }
        worst = worst.max(acc / n as f64);
    }
    worst
}

/// Max over probe points of the worker-averaged empirical oracle variance.
pub fn estimate_sigma2(
    problem: &Problem,
    oracle: &OracleSpec,
    n_probes: usize,
    draws_per_probe: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    oracle.validate(problem)?;
    let n = problem.workers();
    let mut states: Vec<OracleState> = (0..n)
        .map(|i| {
            OracleState::new(
                *oracle,
                i,
                RngStream::new(rng.seed(), &format!("sigma2-probe/{i}")),
            )
        })
        .collect();
    let mut worst = 0.0f64;
    for probe in 0..=n_probes {
        let x = if probe == 0 {
            problem.x0()
        } else {
            RealVector::from_vec((0..problem.dim()).map(|_| rng.normal()).collect())
        };
        let mut acc = 0.0;
        for (i, state) in states.iter_mut().enumerate() {
            let mean = problem.local_grad(i, &x);
            let mut var = 0.0;
            for _ in 0..draws_per_probe {
                var += state.query(problem, &x)?.dist_sq(&mean);
            }
            acc += var / draws_per_probe as f64;
        }
        worst = worst.max(acc / n as f64);
    }
    Ok(worst)
}

/// Max pairwise local gradient-difference ratio over probe pairs.
pub fn estimate_smoothness(problem: &Problem, n_probes: usize, rng: &mut RngStream) -> f64 {
    let d = problem.dim();
    let probes: Vec<RealVector> = (0..n_probes.max(2))
        .map(|_| RealVector::from_vec((0..d).map(|_| rng.normal()).collect()))
        .collect();
    let mut worst = 0.0f64;
    for a in 0..probes.len() {
        for b in (a + 1)..probes.len() {
            let dist = probes[a].dist_sq(&probes[b]).sqrt();
            if dist == 0.0 {
                continue;
            }
            for i in 0..problem.workers() {
                let ga = problem.local_grad(i, &probes[a]);
                let gb = problem.local_grad(i, &probes[b]);
                worst = worst.max(ga.dist_sq(&gb).sqrt() / dist);
            }
        }
    }
    worst
}

/// Largest eigenvalue of a symmetric PSD matrix (row-major d x d) by power
/// iteration.
pub(crate) fn power_iteration_lambda_max(matrix: &[f64], d: usize, iterations: usize) -> f64 {
    debug_assert_eq!(matrix.len(), d * d);
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let mut w = vec![0.0; d];
        for r in 0..d {
            let row = &matrix[r * d..(r + 1) * d];
            w[r] = row.iter().zip(v.iter()).map(|(m, x)| m * x).sum();
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for x in &mut w {
            *x /= norm;
        }
        lambda = norm;
        v = w;
    }
    lambda
}
