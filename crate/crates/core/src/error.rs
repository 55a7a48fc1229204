use std::path::PathBuf;

use crate::volume::Shape3;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid shape {nx}x{ny}x{nz}: every extent must be at least 1 and the voxel count addressable")]
    InvalidShape { nx: usize, ny: usize, nz: usize },

    #[error("data length {len} does not match shape {shape} ({expected} voxels)")]
    LengthMismatch {
        shape: Shape3,
        len: usize,
        expected: usize,
    },

    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: Shape3, right: Shape3 },

    #[error("non-finite value at voxel {index}")]
    NonFinite { index: usize },

    #[error("mask value {value} at voxel {index} is not 0 or 1")]
    NotBinary { index: usize, value: f32 },

    #[error("mask has a single label; distance to opposite label undefined")]
    SingleLabel,

    #[error("Hausdorff undefined for empty surface")]
    EmptySurface,

    #[error("no component to keep")]
    NoComponent,

    #[error("stage-1 predictor found no foreground")]
    NoForeground,

    #[error("{0}")]
    InvalidArgument(String),

    #[error("optimization diverged at step {step}: loss is not finite")]
    Diverged { step: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("predictor {command}: {reason}")]
    Predictor { command: String, reason: String },

    #[error("{path}: missing sidecar header {sidecar}")]
    MissingSidecar { path: PathBuf, sidecar: PathBuf },

    #[error("{path}: payload is {actual} bytes, header implies {expected}")]
    PayloadLength {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    #[error("{path}: unknown dtype {dtype:?}")]
    UnknownDtype { path: PathBuf, dtype: String },

    #[error("{path}: malformed header: {reason}")]
    Header { path: PathBuf, reason: String },

    #[error("{path}: unsupported: {feature}")]
    Unsupported { path: PathBuf, feature: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
