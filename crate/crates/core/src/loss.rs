//! Contour loss and soft Dice loss with analytic gradients.
//!
//! The contour loss is `sum((D + drain) * contour(p))` where `D` is the
//! ground-truth distance map, held constant with respect to `p`. Its gradient
//! uses the subgradient `sign(0) = 0` at the absolute-value kink, so a
//! constant prediction is a stationary point with exactly zero gradient.

use log::warn;

use crate::distance::DistanceMap;
use crate::error::{Error, Result};
use crate::filter::{correlate_adjoint_f64, correlate_f64, Axis, SobelKernels};
use crate::volume::{ensure_same_shape, Mask, Volume};

/// Offset added to the distance map so boundary voxels carry negative weight.
pub const DEFAULT_DRAIN: f32 = -1.8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourLossConfig {
    pub drain: f32,
    /// Distances above the cap are clamped to it before the drain is added.
    pub distance_cap: Option<f32>,
}

impl Default for ContourLossConfig {
    fn default() -> Self {
        ContourLossConfig {
            drain: DEFAULT_DRAIN,
            distance_cap: None,
        }
    }
}

impl ContourLossConfig {
    pub fn with_drain(drain: f32) -> Self {
        ContourLossConfig {
            drain,
            ..Default::default()
        }
    }

    /// Every 26-boundary voxel has distance at most sqrt(3); a drain below
    /// `-sqrt(3)` makes all of them negative.
    pub fn drain_covers_boundary(&self) -> bool {
        (self.drain as f64) < -(3f64.sqrt())
    }

    fn weights(&self, d: &DistanceMap) -> Vec<f64> {
        let drain = self.drain as f64;
        d.data()
            .iter()
            .map(|&v| {
                let v = match self.distance_cap {
                    Some(cap) => v.min(cap),
                    None => v,
                };
                v as f64 + drain
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossResult {
    pub value: f64,
    pub gradient: Volume,
}

fn warn_outside_unit(p: &Volume) {
    let (lo, hi) = p.min_max();
    if lo < 0.0 || hi > 1.0 {
        warn!("prediction values span [{lo}, {hi}], outside [0, 1]");
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Drain-adjusted contour loss and its gradient with respect to `p`.
pub fn contour_loss(p: &Volume, d: &DistanceMap, cfg: &ContourLossConfig) -> Result<LossResult> {
    ensure_same_shape(p.shape(), d.shape())?;
    if !cfg.drain.is_finite() {
        return Err(Error::InvalidArgument("drain must be finite".into()));
    }
    if !cfg.drain_covers_boundary() {
        // once per process; optimization loops call this every step
        static DRAIN_WARNING: std::sync::Once = std::sync::Once::new();
        DRAIN_WARNING.call_once(|| {
            warn!(
                "drain {} does not exceed -sqrt(3); some boundary voxels keep nonnegative weight",
                cfg.drain
            )
        });
    }
    warn_outside_unit(p);

    let shape = p.shape();
    let weights = cfg.weights(d);
    let kernels = SobelKernels::new();
    let mut value = 0.0f64;
    let mut grad = vec![0.0f64; shape.len()];
    for axis in Axis::ALL {
        let k = kernels.get(axis);
        let response = correlate_f64(p.data(), shape, k);
        let mut upstream = vec![0.0f64; shape.len()];
        for ((u, &r), &w) in upstream.iter_mut().zip(&response).zip(&weights) {
            value += w * r.abs();
            *u = w * sign(r);
        }
        let back = correlate_adjoint_f64(&upstream, shape, k);
        grad.iter_mut().zip(back).for_each(|(g, b)| *g += b);
    }
    if !value.is_finite() {
        return Err(Error::InvalidArgument("contour loss is not finite".into()));
    }
    let gradient = Volume::new(shape, grad.into_iter().map(|g| g as f32).collect())?;
    Ok(LossResult { value, gradient })
}

/// `1 - (2 sum(p m) + smooth) / (sum(p) + sum(m) + smooth)` and its gradient.
pub fn soft_dice_loss(p: &Volume, m: &Mask, smooth: f64) -> Result<LossResult> {
    ensure_same_shape(p.shape(), m.shape())?;
    if !(smooth > 0.0 && smooth.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "dice smoothing must be positive, got {smooth}"
        )));
    }
    warn_outside_unit(p);

    let mut inter = 0.0f64;
    let mut sum_p = 0.0f64;
    let mut sum_m = 0.0f64;
    for (&pv, &mv) in p.data().iter().zip(m.data()) {
        let (pv, mv) = (pv as f64, mv as f64);
        inter += pv * mv;
        sum_p += pv;
        sum_m += mv;
    }
    let num = 2.0 * inter + smooth;
    let den = sum_p + sum_m + smooth;
    let value = 1.0 - num / den;
    // d/dp_i [1 - num/den] = (num - 2 m_i den) / den^2
    let den2 = den * den;
    let gradient = Volume::new(
        p.shape(),
        m.data()
            .iter()
            .map(|&mv| ((num - 2.0 * mv as f64 * den) / den2) as f32)
            .collect(),
    )?;
    Ok(LossResult { value, gradient })
}
