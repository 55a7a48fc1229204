//! Coarse-to-fine segmentation: localize on a resized image, segment a fixed
//! full-resolution window, paste the result back.

pub mod geometry;
pub mod predictor;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use geometry::{
    crop, locate, locate_and_crop, normalize_intensity, paste_back, resize_trilinear, CropSpec,
    Normalization,
};
pub use predictor::{
    ExternalPredictor, IntensityThreshold, OraclePerturb, PredictRequest, Predictor, Stage,
};

use crate::error::{Error, Result};
use crate::volume::{threshold, Mask, Shape3, Volume};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub coarse_shape: Shape3,
    pub crop_shape: Shape3,
    pub coarse_threshold: f32,
    /// Applied to the pasted-back stage-2 probabilities.
    pub fine_threshold: f32,
    pub normalization: Normalization,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            coarse_shape: Shape3::cube(128),
            crop_shape: Shape3::new(224, 144, 96).expect("positive extents"),
            coarse_threshold: 0.5,
            fine_threshold: 0.5,
            normalization: Normalization::ZScore,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub step: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub timings: Vec<StageTiming>,
    pub crop: CropSpec,
    pub stage1: String,
    pub stage2: String,
}

#[derive(Clone, Debug)]
pub struct TwoStageOutput {
    pub mask: Mask,
    /// Stage-2 probabilities in original coordinates, before thresholding.
    pub probability: Volume,
    pub crop: CropSpec,
    pub diagnostics: Diagnostics,
}

fn checked(stage: Stage, input: &Volume, out: Volume) -> Result<Volume> {
    if out.shape() != input.shape() {
        return Err(Error::ShapeMismatch {
            left: input.shape(),
            right: out.shape(),
        }
        .in_stage(stage.label()));
    }
    let (lo, hi) = out.min_max();
    if lo < 0.0 || hi > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "probabilities span [{lo}, {hi}], outside [0, 1]"
        ))
        .in_stage(stage.label()));
    }
    Ok(out)
}

fn run_stage(p: &dyn Predictor, req: &PredictRequest<'_>) -> Result<Volume> {
    let out = p.predict(req).map_err(|e| e.in_stage(req.stage.label()))?;
    checked(req.stage, req.input, out)
}

/// normalize, resize, stage 1, localize, crop, stage 2, paste back, threshold.
pub fn run_two_stage(
    image: &Volume,
    stage1: &dyn Predictor,
    stage2: &dyn Predictor,
    cfg: &PipelineConfig,
) -> Result<TwoStageOutput> {
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |step: &str, timings: &mut Vec<StageTiming>| {
        let now = Instant::now();
        timings.push(StageTiming {
            step: step.to_string(),
            seconds: (now - clock).as_secs_f64(),
        });
        clock = now;
    };

    let original_shape = image.shape();
    let normalized =
        normalize_intensity(image, cfg.normalization).map_err(|e| e.in_stage("normalize"))?;
    lap("normalize", &mut timings);
    let coarse_input = resize_trilinear(&normalized, cfg.coarse_shape);
    lap("resize", &mut timings);

    let coarse_prob = run_stage(
        stage1,
        &PredictRequest {
            stage: Stage::Coarse,
            input: &coarse_input,
            original_shape,
            crop: None,
        },
    )?;
    lap("stage1", &mut timings);

    let (cropped, spec) =
        locate_and_crop(&normalized, &coarse_prob, cfg).map_err(|e| e.in_stage("localize"))?;
    lap("localize", &mut timings);

    let fine_prob = run_stage(
        stage2,
        &PredictRequest {
            stage: Stage::Fine,
            input: &cropped,
            original_shape,
            crop: Some(&spec),
        },
    )?;
    lap("stage2", &mut timings);

    let probability = paste_back(&fine_prob, &spec, original_shape)?;
    let mask = threshold(&probability, cfg.fine_threshold)?;
    lap("paste", &mut timings);

    Ok(TwoStageOutput {
        mask,
        probability,
        crop: spec,
        diagnostics: Diagnostics {
            timings,
            crop: spec,
            stage1: stage1.name(),
            stage2: stage2.name(),
        },
    })
}
