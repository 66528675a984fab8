//! Synthetic distributed least squares.
//!
//! Worker i holds an M x d design matrix with standard-normal entries and
//! measurements b_i = A_i x_i* + noise, each worker with its own random local
//! solution x_i*. The local objective is ||A_i x - b_i||^2 / (2M); the
//! per-sample normalization makes single-row gradients unbiased estimators of
//! the full local gradient.

use crate::error::Result;
use crate::problem::{power_iteration_lambda_max, Constants, Objective};
use crate::rng::RngStream;
use crate::vector::RealVector;

struct WorkerData {
    /// M x d design matrix, row-major.
    rows: Vec<f64>,
    targets: Vec<f64>,
    /// Gram matrix A^T A / M, row-major d x d.
    gram: Vec<f64>,
    /// A^T b / M.
    cross: RealVector,
    /// ||b||^2 / M.
    offset: f64,
    x_star: RealVector,
}

pub struct LeastSquaresProblem {
    d: usize,
    n: usize,
    m: usize,
    workers: Vec<WorkerData>,
    gram_mean: Vec<f64>,
    cross_mean: RealVector,
    offset_mean: f64,
    constants: Constants,
}

impl LeastSquaresProblem {
    pub fn samples_per_worker(&self) -> usize {
        self.m
    }

    pub fn local_solution(&self, worker: usize) -> &RealVector {
        &self.workers[worker].x_star
    }

    /// Mean of the local solutions, the natural near-minimizer of the
    /// averaged objective.
    pub fn mean_solution(&self) -> RealVector {
        let mut acc = RealVector::zeros(self.d);
        for w in &self.workers {
            acc.add_assign(&w.x_star);
        }
        acc.scale_in_place(1.0 / self.n as f64);
        acc
    }
}

fn grad_from_gram(gram: &[f64], cross: &RealVector, x: &RealVector) -> RealVector {
    let d = x.dim();
    let mut g = RealVector::zeros(d);
    for r in 0..d {
        let row = &gram[r * d..(r + 1) * d];
        let mut acc = 0.0;
        for (h, xv) in row.iter().zip(x.iter()) {
            acc += h * xv;
        }
        g[r] = acc - cross[r];
    }
    g
}

fn value_from_gram(gram: &[f64], cross: &RealVector, offset: f64, x: &RealVector) -> f64 {
    let d = x.dim();
    let mut quad = 0.0;
    for r in 0..d {
        let row = &gram[r * d..(r + 1) * d];
        let mut acc = 0.0;
        for (h, xv) in row.iter().zip(x.iter()) {
            acc += h * xv;
        }
        quad += x[r] * acc;
    }
    0.5 * (quad - 2.0 * cross.dot(x) + offset)
}

impl Objective for LeastSquaresProblem {
    fn as_any(&self) -> &dyn std::any::Any {
        self
    }

    fn name(&self) -> &'static str {
        "least_squares"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn workers(&self) -> usize {
        self.n
    }

    fn local_value(&self, worker: usize, x: &RealVector) -> f64 {
        let w = &self.workers[worker];
        value_from_gram(&w.gram, &w.cross, w.offset, x)
    }

    fn local_grad(&self, worker: usize, x: &RealVector) -> RealVector {
        let w = &self.workers[worker];
        grad_from_gram(&w.gram, &w.cross, x)
    }

    fn global_value(&self, x: &RealVector) -> f64 {
        value_from_gram(&self.gram_mean, &self.cross_mean, self.offset_mean, x)
    }

    fn global_grad(&self, x: &RealVector) -> RealVector {
        grad_from_gram(&self.gram_mean, &self.cross_mean, x)
    }

    fn num_datapoints(&self, _worker: usize) -> Option<usize> {
        Some(self.m)
    }

    fn datapoint_grad(&self, worker: usize, x: &RealVector, index: usize) -> Result<RealVector> {
        let w = &self.workers[worker];
        let row = &w.rows[index * self.d..(index + 1) * self.d];
        let residual = row.iter().zip(x.iter()).map(|(a, v)| a * v).sum::<f64>() - w.targets[index];
        Ok(RealVector::from_vec(
            row.iter().map(|a| a * residual).collect(),
        ))
    }

    fn constants(&self) -> Constants {
        self.constants
    }
}

/// Builds the instance from explicit data; used for tests with designed
/// matrices and by the generator below.
pub fn from_data(
    designs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    solutions: Vec<RealVector>,
    d: usize,
) -> LeastSquaresProblem {
    let n = designs.len();
    let m = targets[0].len();
    let mut workers = Vec::with_capacity(n);
    let mut gram_mean = vec![0.0; d * d];
    let mut cross_mean = RealVector::zeros(d);
    let mut offset_mean = 0.0;

    for (rows, targets) in designs.into_iter().zip(targets.into_iter()) {
        let mut gram = vec![0.0; d * d];
        let mut cross = RealVector::zeros(d);
        let mut offset = 0.0;
        for row_idx in 0..m {
            let row = &rows[row_idx * d..(row_idx + 1) * d];
            let b = targets[row_idx];
            offset += b * b;
            for r in 0..d {
                cross[r] += row[r] * b;
                for c in 0..d {
                    gram[r * d + c] += row[r] * row[c];
                }
            }
        }
        let inv_m = 1.0 / m as f64;
        for v in &mut gram {
            *v *= inv_m;
        }
        cross.scale_in_place(inv_m);
        offset *= inv_m;
        for (acc, v) in gram_mean.iter_mut().zip(gram.iter()) {
            *acc += v;
        }
        cross_mean.add_assign(&cross);
        offset_mean += offset;
        workers.push(WorkerData {
            rows,
            targets,
            gram,
            cross,
            offset,
            x_star: RealVector::zeros(d),
        });
    }
    for v in &mut gram_mean {
        *v /= n as f64;
    }
    cross_mean.scale_in_place(1.0 / n as f64);
    offset_mean /= n as f64;
    for (w, sol) in workers.iter_mut().zip(solutions.into_iter()) {
        w.x_star = sol;
    }

    let mut problem = LeastSquaresProblem {
        d,
        n,
        m,
        workers,
        gram_mean,
        cross_mean,
        offset_mean,
        constants: Constants {
            smoothness: 0.0,
            suboptimality: 0.0,
            sigma2: 0.0,
            b2: 0.0,
        },
    };
    problem.constants = derive_constants(&problem);
    problem
}

fn derive_constants(problem: &LeastSquaresProblem) -> Constants {
    let d = problem.d;
    // L = max_i lambda_max(A_i^T A_i) / M.
    let smoothness = problem
        .workers
        .iter()
        .map(|w| power_iteration_lambda_max(&w.gram, d, 200))
        .fold(0.0f64, f64::max);

    // Single-row gradient variance at x0 = 0, exact over the dataset.
    let x0 = RealVector::zeros(d);
    let mut sigma2 = 0.0f64;
    for i in 0..problem.n {
        let mean = problem.local_grad(i, &x0);
        let mut second_moment = 0.0;
        for idx in 0..problem.m {
            second_moment += problem
                .datapoint_grad(i, &x0, idx)
                .expect("least squares has datapoints")
                .norm_sq();
        }
        sigma2 = sigma2.max(second_moment / problem.m as f64 - mean.norm_sq());
    }

    // Dissimilarity probed at x0 and 10 random points.
    let mut rng = RngStream::new(0xb2, "ls/b2-probe");
    let mut b2 = 0.0f64;
    for probe in 0..11 {
        let x = if probe == 0 {
            x0.clone()
        } else {
            RealVector::from_vec((0..d).map(|_| rng.normal()).collect())
        };
        let global = problem.global_grad(&x);
        let mut acc = 0.0;
        for i in 0..problem.n {
            acc += problem.local_grad(i, &x).dist_sq(&global);
        }
        b2 = b2.max(acc / problem.n as f64);
    }

    let suboptimality = problem.global_value(&x0) - min_value_estimate(problem);
    Constants {
        smoothness,
        suboptimality,
        sigma2,
        b2,
    }
}

/// Lower estimate of min f via gradient descent on the averaged quadratic.
fn min_value_estimate(problem: &LeastSquaresProblem) -> f64 {
    let mut x = problem.mean_solution();
    let step = 1.0 / power_iteration_lambda_max(&problem.gram_mean, problem.d, 200).max(1e-12);
    for _ in 0..2000 {
        let g = problem.global_grad(&x);
        if g.norm_sq() < 1e-24 {
            break;
        }
        x.axpy(-step, &g);
    }
    problem.global_value(&x)
}

/// Generates the synthetic instance: per worker, x_i* ~ N(0, I_d), design
/// entries i.i.d. standard normal, targets b = A x_i* + noise with noise
/// variance 0.01.
pub fn gen_least_squares(seed: u64, d: usize, n: usize, m: usize) -> LeastSquaresProblem {
    let noise_std = 0.01f64.sqrt();
    let mut designs = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    let mut solutions = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = RngStream::new(seed, &format!("ls/worker/{i}"));
        let x_star = RealVector::from_vec((0..d).map(|_| rng.normal()).collect());
        let mut rows = vec![0.0; m * d];
        for v in &mut rows {
            *v = rng.normal();
        }
        let mut b = vec![0.0; m];
        for (row_idx, bv) in b.iter_mut().enumerate() {
            let row = &rows[row_idx * d..(row_idx + 1) * d];
            let clean: f64 = row.iter().zip(x_star.iter()).map(|(a, v)| a * v).sum();
            *bv = clean + noise_std * rng.normal();
        }
        designs.push(rows);
        targets.push(b);
        solutions.push(x_star);
    }
    from_data(designs, targets, solutions, d)
}

/// Same dataset replicated on every worker: zero gradient dissimilarity but
/// positive oracle variance (workers sample rows independently). Isolates the
/// noise-averaging effect of the worker count.
pub fn gen_least_squares_homogeneous(seed: u64, d: usize, n: usize, m: usize) -> LeastSquaresProblem {
    let noise_std = 0.01f64.sqrt();
    let mut rng = RngStream::new(seed, "ls/worker/0");
    let x_star = RealVector::from_vec((0..d).map(|_| rng.normal()).collect());
    let mut rows = vec![0.0; m * d];
    for v in &mut rows {
        *v = rng.normal();
    }
    let mut b = vec![0.0; m];
    for (row_idx, bv) in b.iter_mut().enumerate() {
        let row = &rows[row_idx * d..(row_idx + 1) * d];
        let clean: f64 = row.iter().zip(x_star.iter()).map(|(a, v)| a * v).sum();
        *bv = clean + noise_std * rng.normal();
    }
    from_data(vec![rows; n], vec![b; n], vec![x_star; n], d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::fd_gradient_check;
    use crate::problem::{estimate_b2, estimate_smoothness, OracleSpec, OracleState, Problem};

    #[test]
    fn identity_design_gives_shifted_gradient() {
        // A_i = I (square), b_i = x_i*: grad f_i(x) = (x - x_i*) / M under the
        // per-sample normalization.
        let d = 3;
        let m = d as f64;
        let mut rows = vec![0.0; d * d];
        for j in 0..d {
            rows[j * d + j] = 1.0;
        }
        let x_star = RealVector::from_vec(vec![0.5, -1.0, 2.0]);
        let p = from_data(
            vec![rows],
            vec![x_star.as_slice().to_vec()],
            vec![x_star.clone()],
            d,
        );
        let x = RealVector::from_vec(vec![1.0, 1.0, 1.0]);
        let g = p.local_grad(0, &x);
        let expect = x.sub(&x_star);
        for j in 0..d {
            assert!((g[j] - expect[j] / m).abs() < 1e-12);
        }
        assert!((p.constants().smoothness - 1.0 / m).abs() < 1e-9);

        // With the design scaled by sqrt(M) the normalization cancels and the
        // gradient is exactly x - x_i*.
        let s = m.sqrt();
        let mut scaled_rows = vec![0.0; d * d];
        for j in 0..d {
            scaled_rows[j * d + j] = s;
        }
        let b: Vec<f64> = x_star.iter().map(|v| s * v).collect();
        let p = from_data(vec![scaled_rows], vec![b], vec![x_star.clone()], d);
        let g = p.local_grad(0, &x);
        for j in 0..d {
            assert!((g[j] - expect[j]).abs() < 1e-12);
        }
        assert!((p.constants().smoothness - 1.0).abs() < 1e-9);
    }

    #[test]
    fn generated_instance_passes_gradient_check() {
        let p = gen_least_squares(21, 6, 3, 40);
        let mut rng = RngStream::new(5, "ls/test");
        for _ in 0..5 {
            let x = RealVector::from_vec((0..6).map(|_| rng.normal()).collect());
            for i in 0..3 {
                let err = fd_gradient_check(
                    |v| p.local_value(i, v),
                    |v| p.local_grad(i, v),
                    &x,
                    1e-5,
                )
                .unwrap();
                assert!(err <= 1e-6, "worker {i} fd error {err}");
            }
            let err =
                fd_gradient_check(|v| p.global_value(v), |v| p.global_grad(v), &x, 1e-5).unwrap();
            assert!(err <= 1e-6);
        }
    }

    #[test]
    fn global_grad_is_average_of_locals() {
        let p = gen_least_squares(22, 5, 4, 30);
        let x = RealVector::from_vec(vec![1.0, -0.5, 0.3, 2.0, 0.0]);
        let fast = p.global_grad(&x);
        let mut slow = RealVector::zeros(5);
        for i in 0..4 {
            slow.add_assign(&p.local_grad(i, &x));
        }
        slow.scale_in_place(0.25);
        let rel = fast.dist_sq(&slow).sqrt() / slow.norm().max(1.0);
        assert!(rel <= 1e-12);
    }

    #[test]
    fn row_oracle_is_unbiased_for_local_grad() {
        let p = gen_least_squares(23, 4, 2, 50);
        let x = RealVector::from_vec(vec![0.2, -0.1, 0.7, 0.0]);
        let mean_exact = p.local_grad(0, &x);
        // Exact average over all rows must reproduce the full gradient.
        let mut acc = RealVector::zeros(4);
        for idx in 0..50 {
            acc.add_assign(&p.datapoint_grad(0, &x, idx).unwrap());
        }
        acc.scale_in_place(1.0 / 50.0);
        assert!(acc.dist_sq(&mean_exact).sqrt() < 1e-10);
    }

    #[test]
    fn gradient_small_near_mean_solution() {
        let ls = gen_least_squares(24, 8, 6, 200);
        let near = ls.mean_solution();
        let at_zero = ls.global_grad(&RealVector::zeros(8)).norm();
        let at_mean = ls.global_grad(&near).norm();
        assert!(
            at_mean < at_zero / 3.0,
            "grad at mean solution {at_mean} vs at zero {at_zero}"
        );
    }

    #[test]
    fn probe_smoothness_stays_below_analytic() {
        let p = Problem::new(gen_least_squares(25, 5, 3, 60));
        let mut rng = RngStream::new(77, "ls/probe");
        let probed = estimate_smoothness(&p, 8, &mut rng);
        assert!(probed <= p.constants().smoothness * (1.0 + 1e-9));
    }

    #[test]
    fn homogeneous_instance_has_zero_dissimilarity() {
        let p = Problem::new(gen_least_squares_homogeneous(9, 5, 4, 40));
        let mut rng = RngStream::new(1, "hom");
        assert_eq!(estimate_b2(&p, 5, &mut rng), 0.0);
        assert!(p.constants().sigma2 > 0.0);
    }

    #[test]
    fn minibatch_oracle_runs() {
        let p = Problem::new(gen_least_squares(26, 4, 2, 30));
        let spec = OracleSpec::Minibatch { batch: 3 };
        spec.validate(&p).unwrap();
        let mut o = OracleState::new(spec, 1, RngStream::new(4, "mb"));
        let g = o.query(&p, &RealVector::zeros(4)).unwrap();
        assert_eq!(g.dim(), 4);
        assert!(g.is_finite());
    }
}
