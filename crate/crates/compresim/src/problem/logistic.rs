//! Synthetic distributed logistic regression.
//!
//! Worker i holds M feature vectors drawn from N(0, I_d) with binary labels
//! sampled from the logistic model at the worker's own random solution x_i*.
//! The local objective is the mean logistic loss.

use crate::error::Result;
use crate::problem::{power_iteration_lambda_max, Constants, Objective};
use crate::rng::RngStream;
use crate::vector::RealVector;

struct WorkerData {
    /// M x d feature matrix, row-major.
    features: Vec<f64>,
    labels: Vec<f64>,
    x_star: RealVector,
}

pub struct LogisticProblem {
    d: usize,
    n: usize,
    m: usize,
    workers: Vec<WorkerData>,
    constants: Constants,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + exp(z)) without overflow.
fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticProblem {
    pub fn samples_per_worker(&self) -> usize {
        self.m
    }

    pub fn local_solution(&self, worker: usize) -> &RealVector {
        &self.workers[worker].x_star
    }
}

impl Objective for LogisticProblem {
    fn as_any(&self) -> &dyn std::any::Any {
        self
    }

    fn name(&self) -> &'static str {
        "logistic"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn workers(&self) -> usize {
        self.n
    }

    fn local_value(&self, worker: usize, x: &RealVector) -> f64 {
        let w = &self.workers[worker];
        let mut total = 0.0;
        for idx in 0..self.m {
            let row = &w.features[idx * self.d..(idx + 1) * self.d];
            let margin: f64 = row.iter().zip(x.iter()).map(|(h, v)| h * v).sum();
            total += log1p_exp(-w.labels[idx] * margin);
        }
        total / self.m as f64
    }

    fn local_grad(&self, worker: usize, x: &RealVector) -> RealVector {
        let w = &self.workers[worker];
        let mut g = RealVector::zeros(self.d);
        for idx in 0..self.m {
            let row = &w.features[idx * self.d..(idx + 1) * self.d];
            let y = w.labels[idx];
            let margin: f64 = row.iter().zip(x.iter()).map(|(h, v)| h * v).sum();
            let weight = -y * sigmoid(-y * margin);
            for (gv, h) in g.as_mut_slice().iter_mut().zip(row.iter()) {
                *gv += weight * h;
            }
        }
        g.scale_in_place(1.0 / self.m as f64);
        g
    }

    fn num_datapoints(&self, _worker: usize) -> Option<usize> {
        Some(self.m)
    }

    fn datapoint_grad(&self, worker: usize, x: &RealVector, index: usize) -> Result<RealVector> {
        let w = &self.workers[worker];
        let row = &w.features[index * self.d..(index + 1) * self.d];
        let y = w.labels[index];
        let margin: f64 = row.iter().zip(x.iter()).map(|(h, v)| h * v).sum();
        let weight = -y * sigmoid(-y * margin);
        Ok(RealVector::from_vec(row.iter().map(|h| weight * h).collect()))
    }

    fn constants(&self) -> Constants {
        self.constants
    }
}

/// Generates the synthetic instance: features h ~ N(0, I_d), labels +1 with
/// probability sigmoid(h . x_i*), else -1.
pub fn gen_logistic(seed: u64, d: usize, n: usize, m: usize) -> LogisticProblem {
    let mut workers = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = RngStream::new(seed, &format!("logistic/worker/{i}"));
        let x_star = RealVector::from_vec((0..d).map(|_| rng.normal()).collect());
        let mut features = vec![0.0; m * d];
        for v in &mut features {
            *v = rng.normal();
        }
        let mut labels = vec![0.0; m];
        for (idx, label) in labels.iter_mut().enumerate() {
            let row = &features[idx * d..(idx + 1) * d];
            let margin: f64 = row.iter().zip(x_star.iter()).map(|(h, v)| h * v).sum();
            *label = if rng.uniform() < sigmoid(margin) {
                1.0
            } else {
                -1.0
            };
        }
        workers.push(WorkerData {
            features,
            labels,
            x_star,
        });
    }

    // L = max_i lambda_max(H_i^T H_i) / (4M).
    let mut smoothness = 0.0f64;
    for w in &workers {
        let mut gram = vec![0.0; d * d];
        for idx in 0..m {
            let row = &w.features[idx * d..(idx + 1) * d];
            for r in 0..d {
                for c in 0..d {
                    gram[r * d + c] += row[r] * row[c];
                }
            }
        }
        let lambda = power_iteration_lambda_max(&gram, d, 200);
        smoothness = smoothness.max(lambda / (4.0 * m as f64));
    }

    let mut problem = LogisticProblem {
        d,
        n,
        m,
        workers,
        constants: Constants {
            smoothness,
            suboptimality: 0.0,
            sigma2: 0.0,
            b2: 0.0,
        },
    };

    // Single-datapoint variance at x0 = 0, exact over the dataset.
    let x0 = RealVector::zeros(d);
    let mut sigma2 = 0.0f64;
    for i in 0..n {
        let mean = problem.local_grad(i, &x0);
        let mut second_moment = 0.0;
        for idx in 0..m {
            second_moment += problem.datapoint_grad(i, &x0, idx).unwrap().norm_sq();
        }
        sigma2 = sigma2.max(second_moment / m as f64 - mean.norm_sq());
    }
    problem.constants.sigma2 = sigma2;

    let mut rng = RngStream::new(seed, "logistic/b2-probe");
    let mut b2 = 0.0f64;
    for probe in 0..11 {
        let x = if probe == 0 {
            x0.clone()
        } else {
            RealVector::from_vec((0..d).map(|_| rng.normal()).collect())
        };
        let global = problem.global_grad(&x);
        let mut acc = 0.0;
        for i in 0..n {
            acc += problem.local_grad(i, &x).dist_sq(&global);
        }
        b2 = b2.max(acc / n as f64);
    }
    problem.constants.b2 = b2;
    // ln(2) at x0 = 0 bounds the suboptimality from above.
    problem.constants.suboptimality = problem.global_value(&x0);
    problem
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::fd_gradient_check;
    use crate::problem::{OracleSpec, OracleState, Problem};

    #[test]
    fn value_at_origin_is_ln_two() {
        let p = gen_logistic(31, 5, 3, 40);
        let x0 = RealVector::zeros(5);
        for i in 0..3 {
            assert!((p.local_value(i, &x0) - std::f64::consts::LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_pass_finite_differences() {
        let p = gen_logistic(32, 5, 2, 30);
        let mut rng = RngStream::new(9, "lg/fd");
        for _ in 0..5 {
            let x = RealVector::from_vec((0..5).map(|_| rng.normal()).collect());
            for i in 0..2 {
                let err = fd_gradient_check(
                    |v| p.local_value(i, v),
                    |v| p.local_grad(i, v),
                    &x,
                    1e-5,
                )
                .unwrap();
                assert!(err <= 1e-5, "worker {i} fd error {err}");
            }
        }
    }

    #[test]
    fn single_datapoint_oracle_is_unbiased_at_origin() {
        let p = Problem::new(gen_logistic(33, 4, 2, 25));
        let x0 = RealVector::zeros(4);
        let exact = p.local_grad(0, &x0);
        let spec = OracleSpec::Minibatch { batch: 1 };
        let mut o = OracleState::new(spec, 0, RngStream::new(2, "lg/mb"));
        let trials = 50000;
        let mut mean = RealVector::zeros(4);
        let mut sq = RealVector::zeros(4);
        for _ in 0..trials {
            let g = o.query(&p, &x0).unwrap();
            for j in 0..4 {
                sq[j] += g[j] * g[j];
            }
            mean.add_assign(&g);
        }
        mean.scale_in_place(1.0 / trials as f64);
        for j in 0..4 {
            let var = sq[j] / trials as f64 - mean[j] * mean[j];
            let se = (var / trials as f64).sqrt();
            assert!(
                (mean[j] - exact[j]).abs() <= 4.0 * se.max(1e-12),
                "coordinate {j}: {} vs {} (se {se})",
                mean[j],
                exact[j]
            );
        }
    }

    #[test]
    fn labels_are_plus_minus_one() {
        let p = gen_logistic(34, 3, 2, 100);
        for w in &p.workers {
            assert!(w.labels.iter().all(|y| *y == 1.0 || *y == -1.0));
        }
    }
}
