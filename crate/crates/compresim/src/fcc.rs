//! Recursive compressed communication: R rounds of compressing the residual
//! of what has already been sent. With a delta-contractive operator the mean
//! squared residual decays as (1-delta)^R.

use crate::compressor::{CompressorSpec, CompressorState};
use crate::error::Result;
use crate::rng::RngStream;
use crate::vector::RealVector;
use crate::wire::WireCost;

/// Everything one FCC invocation produced.
#[derive(Debug, Clone)]
pub struct FccTranscript {
    /// The R transmitted chunks, in send order.
    pub chunks: Vec<RealVector>,
    /// Coordinate-wise sum of the chunks, in accumulation order.
    pub returned: RealVector,
    pub total_cost: WireCost,
    pub rounds: usize,
    /// First round whose residual was exactly zero, if any (diagnostic; the
    /// protocol always runs the full R rounds).
    pub first_zero_residual: Option<usize>,
}

/// Runs R compress-the-residual rounds of `compressor` against `v_star`.
pub fn fcc(
    v_star: &RealVector,
    compressor: &mut CompressorState,
    rounds: usize,
) -> Result<FccTranscript> {
    assert!(rounds >= 1, "FCC requires at least one round");
    let mut current = RealVector::zeros(v_star.dim());
    let mut chunks = Vec::with_capacity(rounds);
    let mut total_cost = WireCost::default();
    let mut first_zero_residual = None;
    for r in 0..rounds {
        let residual = v_star.sub(&current);
        if first_zero_residual.is_none() && residual.iter().all(|c| *c == 0.0) {
            first_zero_residual = Some(r);
        }
        let (chunk, cost) = compressor.compress(&residual)?;
        total_cost.accumulate(&cost);
        current.add_assign(&chunk);
        chunks.push(chunk);
    }
    Ok(FccTranscript {
        chunks,
        returned: current,
        total_cost,
        rounds,
        first_zero_residual,
    })
}

/// Monte-Carlo mean squared error ||v^(R) - v_star||^2, indexed by R.
///
/// Entry `r` (0-based) is the mean over `n_trials` independent transcripts of
/// the squared error after `r + 1` rounds.
pub fn fcc_error_curve(
    v_star: &RealVector,
    spec: &CompressorSpec,
    r_max: usize,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    assert!(n_trials >= 1 && r_max >= 1);
    let mut acc = vec![0.0f64; r_max];
    for trial in 0..n_trials {
        let mut state = spec.build(RngStream::new(seed, &format!("fcc-curve/{trial}")));
        let mut current = RealVector::zeros(v_star.dim());
        for entry in acc.iter_mut() {
            let residual = v_star.sub(&current);
            let (chunk, _) = state.compress(&residual)?;
            current.add_assign(&chunk);
            *entry += current.dist_sq(v_star);
        }
    }
    for entry in acc.iter_mut() {
        *entry /= n_trials as f64;
    }
    Ok(acc)
}
