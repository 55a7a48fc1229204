//! Overlap and surface-distance evaluation in voxel units.
//!
//! Surfaces are foreground voxels with a 26-neighbor in the background, where
//! voxels outside the grid count as background. Directed surface distances
//! come from an exact distance transform of the other surface.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::components::label_components;
use crate::distance::{boundary_flags, squared_distance_to_set, Connectivity};
use crate::error::{Error, Result};
use crate::volume::{ensure_same_shape, Mask};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// `tp / (tp + fn)`; 1 when the truth is empty.
    pub fn sensitivity(&self) -> f64 {
        ratio_or_one(self.tp, self.tp + self.fn_)
    }

    /// `tn / (tn + fp)`; 1 when the truth covers everything.
    pub fn specificity(&self) -> f64 {
        ratio_or_one(self.tn, self.tn + self.fp)
    }

    /// `2 tp / (2 tp + fp + fn)`; 1 when both masks are empty.
    pub fn dice(&self) -> f64 {
        ratio_or_one(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

fn ratio_or_one(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion(pred: &Mask, truth: &Mask) -> Result<Confusion> {
    ensure_same_shape(pred.shape(), truth.shape())?;
    let mut c = Confusion::default();
    for (&p, &t) in pred.data().iter().zip(truth.data()) {
        match (p != 0, t != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn dice(pred: &Mask, truth: &Mask) -> Result<f64> {
    Ok(confusion(pred, truth)?.dice())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HausdorffMode {
    Max,
    Average,
}

/// Flat indices of foreground voxels touching the background.
pub fn surface_indices(m: &Mask) -> Vec<usize> {
    boundary_flags(m, Connectivity::TwentySix, true)
        .into_iter()
        .enumerate()
        .filter(|&(i, on)| on && m.is_set(i))
        .map(|(i, _)| i)
        .collect()
}

/// Distances from each voxel of `from` to the nearest voxel of `to`.
fn directed(from: &[usize], to: &[usize], len: usize, shape: crate::volume::Shape3) -> Vec<f64> {
    let mut targets = vec![false; len];
    for &i in to {
        targets[i] = true;
    }
    let sq = squared_distance_to_set(&targets, shape);
    from.iter().map(|&i| sq[i].sqrt()).collect()
}

/// Both Hausdorff variants in one pass: `(max, average)`.
pub fn hausdorff_pair(pred: &Mask, truth: &Mask) -> Result<(f64, f64)> {
    ensure_same_shape(pred.shape(), truth.shape())?;
    let shape = pred.shape();
    let sp = surface_indices(pred);
    let st = surface_indices(truth);
    if sp.is_empty() || st.is_empty() {
        return Err(Error::EmptySurface);
    }
    let d_pt = directed(&sp, &st, shape.len(), shape);
    let d_tp = directed(&st, &sp, shape.len(), shape);
    let max = d_pt.iter().chain(&d_tp).fold(0.0f64, |acc, &v| acc.max(v));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let avg = (mean(&d_pt) + mean(&d_tp)) / 2.0;
    Ok((max, avg))
}

pub fn hausdorff(pred: &Mask, truth: &Mask, mode: HausdorffMode) -> Result<f64> {
    let (max, avg) = hausdorff_pair(pred, truth)?;
    Ok(match mode {
        HausdorffMode::Max => max,
        HausdorffMode::Average => avg,
    })
}

/// One prediction/truth evaluation. Distances are `None` when either mask is
/// empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dice: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub hausdorff: Option<f64>,
    pub avg_hausdorff: Option<f64>,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    /// 26-connected components in the prediction.
    pub components: usize,
}

pub fn evaluate(pred: &Mask, truth: &Mask) -> Result<MetricsReport> {
    let c = confusion(pred, truth)?;
    let distances = match hausdorff_pair(pred, truth) {
        Ok((max, avg)) => Some((max, avg)),
        Err(Error::EmptySurface) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricsReport {
        dice: c.dice(),
        sensitivity: c.sensitivity(),
        specificity: c.specificity(),
        hausdorff: distances.map(|d| d.0),
        avg_hausdorff: distances.map(|d| d.1),
        tp: c.tp,
        fp: c.fp,
        fn_: c.fn_,
        tn: c.tn,
        components: label_components(pred, Connectivity::TwentySix).count,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{v}"))
}

/// `key=value` lines.
impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dice={}", self.dice)?;
        writeln!(f, "sensitivity={}", self.sensitivity)?;
        writeln!(f, "specificity={}", self.specificity)?;
        writeln!(f, "hd={}", opt(self.hausdorff))?;
        writeln!(f, "avg_hd={}", opt(self.avg_hausdorff))?;
        writeln!(f, "tp={}", self.tp)?;
        writeln!(f, "fp={}", self.fp)?;
        writeln!(f, "fn={}", self.fn_)?;
        writeln!(f, "tn={}", self.tn)?;
        write!(f, "components={}", self.components)
    }
}
