//! Coordinate-progress functional: the index of the last nonzero coordinate.
//!
//! Measures how far along a chain-structured instance an algorithm has moved;
//! every hard-instance certificate in this crate is stated in terms of it.

use crate::error::{Error, Result};
use crate::vector::RealVector;

/// Index (1-based) of the last coordinate with |x_j| > zero_tol; 0 if none.
///
/// The default tolerance is exact zero: chain constructions produce exact
/// zeros by design, so exact comparison is the most stringent choice.
pub fn prog(x: &RealVector, zero_tol: f64) -> usize {
    debug_assert!(zero_tol >= 0.0);
    x.as_slice()
        .iter()
        .rposition(|c| c.abs() > zero_tol)
        .map_or(0, |j| j + 1)
}

/// Max of `prog` over a nonempty collection.
pub fn prog_set<'a, I>(xs: I, zero_tol: f64) -> Result<usize>
where
    I: IntoIterator<Item = &'a RealVector>,
{
    let mut seen = false;
    let mut max = 0;
    for x in xs {
        seen = true;
        max = max.max(prog(x, zero_tol));
    }
    if !seen {
        return Err(Error::EmptySet);
    }
    Ok(max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(coords: &[f64]) -> RealVector {
        RealVector::from_vec(coords.to_vec())
    }

    #[test]
    fn prog_examples() {
        assert_eq!(prog(&v(&[0.0, 0.0, 0.0]), 0.0), 0);
        assert_eq!(prog(&v(&[0.0, 5.0, 0.0]), 0.0), 2);
        assert_eq!(prog(&v(&[1e-12, 0.0, 0.0]), 1e-9), 0);
        assert_eq!(prog(&v(&[1e-12, 0.0, 0.0]), 0.0), 1);
    }

    #[test]
    fn prog_set_examples() {
        let a = v(&[1.0, 0.0]);
        let b = v(&[0.0, 1.0]);
        assert_eq!(prog_set([&a, &b], 0.0).unwrap(), 2);
        let z = v(&[0.0, 0.0]);
        assert_eq!(prog_set([&z], 0.0).unwrap(), 0);
        let c = v(&[3.0, 0.0, 0.0]);
        let d = v(&[0.0, 0.0, 7.0]);
        assert_eq!(prog_set([&c, &d], 0.0).unwrap(), 3);
        assert!(matches!(
            prog_set(std::iter::empty::<&RealVector>(), 0.0),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn prog_set_union_is_max() {
        let xs = [v(&[1.0, 0.0, 0.0]), v(&[0.0, 2.0, 0.0])];
        let ys = [v(&[0.0, 0.0, 3.0])];
        let all: Vec<&RealVector> = xs.iter().chain(ys.iter()).collect();
        let px = prog_set(xs.iter(), 0.0).unwrap();
        let py = prog_set(ys.iter(), 0.0).unwrap();
        assert_eq!(prog_set(all, 0.0).unwrap(), px.max(py));
        // Monotonicity: subset has no larger prog.
        assert!(px <= px.max(py));
    }
}
