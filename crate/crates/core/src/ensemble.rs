//! Summed-probability voting across several segmentations.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{ensure_same_shape, Mask, Volume};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Inclusive threshold on the per-voxel probability sum.
    pub threshold: f64,
    /// Number of inputs the caller intends to combine; a mismatch only warns.
    pub expected_count: Option<usize>,
}

impl Default for EnsembleConfig {
    /// Eleven models, at least six votes.
    fn default() -> Self {
        EnsembleConfig {
            threshold: 5.5,
            expected_count: Some(11),
        }
    }
}

/// Voxel is 1 iff the sum of the input probabilities is at least the threshold.
pub fn ensemble_vote(probs: &[Volume], cfg: &EnsembleConfig) -> Result<Mask> {
    let first = probs
        .first()
        .ok_or_else(|| Error::InvalidArgument("ensemble needs at least one input".into()))?;
    let shape = first.shape();
    for p in &probs[1..] {
        ensure_same_shape(shape, p.shape())?;
    }
    if !(cfg.threshold > 0.0 && cfg.threshold.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ensemble threshold must be positive, got {}",
            cfg.threshold
        )));
    }
    if cfg.threshold > probs.len() as f64 {
        warn!(
            "threshold {} exceeds input count {}; output is empty",
            cfg.threshold,
            probs.len()
        );
    }
    if let Some(n) = cfg.expected_count {
        if n != probs.len() {
            warn!("expected {n} ensemble inputs, got {}", probs.len());
        }
    }
    for (i, p) in probs.iter().enumerate() {
        let (lo, hi) = p.min_max();
        if lo < 0.0 || hi > 1.0 {
            warn!("ensemble input {i} spans [{lo}, {hi}], outside [0, 1]");
        }
    }

    let mut acc = vec![0.0f64; shape.len()];
    for p in probs {
        acc.iter_mut()
            .zip(p.data())
            .for_each(|(a, &v)| *a += v as f64);
    }
    Mask::new(
        shape,
        acc.iter().map(|&s| u8::from(s >= cfg.threshold)).collect(),
    )
}
