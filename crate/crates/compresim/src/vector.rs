//! Dense real vectors: the universal payload of gradients, models and messages.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Fixed-dimension vector of finite f64 coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealVector {
    coords: Vec<f64>,
}

impl RealVector {
    pub fn zeros(dim: usize) -> Self {
        RealVector {
            coords: vec![0.0; dim],
        }
    }

    /// Builds a vector, rejecting NaN/Inf coordinates.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("vector construction".into()));
        }
        Ok(RealVector { coords })
    }

    /// Builds a vector without the finiteness check. Callers own the invariant.
    pub fn from_vec(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        RealVector { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.coords.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }

    pub fn dot(&self, other: &RealVector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(other.coords.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, factor: f64) -> RealVector {
        RealVector {
            coords: self.coords.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn scale_in_place(&mut self, factor: f64) {
        for c in &mut self.coords {
            *c *= factor;
        }
    }

    pub fn add(&self, other: &RealVector) -> RealVector {
        debug_assert_eq!(self.dim(), other.dim());
        RealVector {
            coords: self
                .coords
                .iter()
                .zip(other.coords.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &RealVector) -> RealVector {
        debug_assert_eq!(self.dim(), other.dim());
        RealVector {
            coords: self
                .coords
                .iter()
                .zip(other.coords.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &RealVector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.coords.iter_mut().zip(other.coords.iter()) {
            *a += b;
        }
    }

    pub fn sub_assign(&mut self, other: &RealVector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.coords.iter_mut().zip(other.coords.iter()) {
            *a -= b;
        }
    }

    /// self += factor * other
    pub fn axpy(&mut self, factor: f64, other: &RealVector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.coords.iter_mut().zip(other.coords.iter()) {
            *a += factor * b;
        }
    }

    pub fn dist_sq(&self, other: &RealVector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(other.coords.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl std::ops::Index<usize> for RealVector {
    type Output = f64;
    fn index(&self, idx: usize) -> &f64 {
        &self.coords[idx]
    }
}

impl std::ops::IndexMut<usize> for RealVector {
    fn index_mut(&mut self, idx: usize) -> &mut f64 {
        &mut self.coords[idx]
    }
}

impl From<Vec<f64>> for RealVector {
    fn from(coords: Vec<f64>) -> Self {
        RealVector::from_vec(coords)
    }
}

/// Mean of a nonempty collection, summed in iteration order.
pub fn mean(vectors: &[RealVector]) -> Result<RealVector> {
    let first = vectors.first().ok_or(Error::EmptySet)?;
    let mut acc = RealVector::zeros(first.dim());
    for v in vectors {
        acc.add_assign(v);
    }
    acc.scale_in_place(1.0 / vectors.len() as f64);
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(RealVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(RealVector::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(RealVector::new(vec![1.0, -2.0]).is_ok());
    }

    #[test]
    fn basic_arithmetic() {
        let a = RealVector::from_vec(vec![1.0, 2.0, 3.0]);
        let b = RealVector::from_vec(vec![1.0, 1.0, -1.0]);
        assert_eq!(a.dot(&b), 0.0);
        assert_eq!(a.norm_sq(), 14.0);
        assert_eq!(a.sub(&b).as_slice(), &[0.0, 1.0, 4.0]);
        assert_eq!(a.norm_inf(), 3.0);
        let mut c = a.clone();
        c.axpy(2.0, &b);
        assert_eq!(c.as_slice(), &[3.0, 4.0, 1.0]);
    }

    #[test]
    fn mean_matches_hand_sum() {
        let vs = vec![
            RealVector::from_vec(vec![1.0, 0.0]),
            RealVector::from_vec(vec![3.0, 2.0]),
        ];
        assert_eq!(mean(&vs).unwrap().as_slice(), &[2.0, 1.0]);
        assert!(mean(&[]).is_err());
    }
}
