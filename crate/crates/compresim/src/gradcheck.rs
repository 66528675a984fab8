//! Finite-difference gradient checker.
//!
//! Central differences against an analytic gradient; used by every problem
//! module's tests and by the `gradcheck` CLI subcommand.

use crate::error::{Error, Result};
use crate::vector::RealVector;

/// Max over coordinates of |central_diff_j - grad_j| / max(1, |grad_j|).
pub fn fd_gradient_check<F, G>(f: F, grad: G, x: &RealVector, h: f64) -> Result<f64>
where
    F: Fn(&RealVector) -> f64,
    G: Fn(&RealVector) -> RealVector,
{
    if h <= 0.0 {
        return Err(Error::invalid("step size h must be positive"));
    }
    let g = grad(x);
    g.check_dim(x.dim())?;
    let mut max_rel = 0.0f64;
    let mut probe = x.clone();
    for j in 0..x.dim() {
        let orig = probe[j];
        probe[j] = orig + h;
        let f_plus = f(&probe);
        probe[j] = orig - h;
        let f_minus = f(&probe);
        probe[j] = orig;
        if !f_plus.is_finite() || !f_minus.is_finite() {
            return Err(Error::NonFinite("objective evaluation".into()));
        }
        let diff = (f_plus - f_minus) / (2.0 * h);
        let rel = (diff - g[j]).abs() / g[j].abs().max(1.0);
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_near_exact() {
        let f = |x: &RealVector| 0.5 * x.norm_sq();
        let g = |x: &RealVector| x.clone();
        let x = RealVector::from_vec(vec![1.0, 2.0]);
        let err = fd_gradient_check(f, g, &x, 1e-5).unwrap();
        assert!(err <= 1e-8, "err = {err}");
    }

    #[test]
    fn constant_function_is_exact() {
        let f = |_: &RealVector| 3.25;
        let g = |x: &RealVector| RealVector::zeros(x.dim());
        let x = RealVector::from_vec(vec![-4.0, 0.5, 9.0]);
        assert_eq!(fd_gradient_check(f, g, &x, 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_objective_errors() {
        let f = |x: &RealVector| (1.0 / x[0]).ln();
        let g = |x: &RealVector| RealVector::zeros(x.dim());
        let x = RealVector::from_vec(vec![0.0]);
        assert!(fd_gradient_check(f, g, &x, 1e-5).is_err());
    }

    #[test]
    fn rejects_bad_step() {
        let f = |x: &RealVector| x.norm_sq();
        let g = |x: &RealVector| x.scale(2.0);
        let x = RealVector::from_vec(vec![1.0]);
        assert!(fd_gradient_check(f, g, &x, 0.0).is_err());
    }
}
