//! File formats: the native `.rvol` exchange format, a minimal NIfTI-1 reader,
//! and format dispatch by extension.

pub mod nifti;
pub mod rvol;

use std::path::Path;

pub use nifti::{read_nifti1, Nifti1Header};
pub use rvol::{read_rvol, write_mask, write_rvol, write_volume, Dtype, RvolData, RvolHeader};

use crate::error::Result;
use crate::volume::{Mask, Volume};

fn is_nifti(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "nii")
}

/// Reads a scalar volume from `.rvol` (either dtype) or `.nii`.
pub fn load_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    if is_nifti(path) {
        read_nifti1(path)
    } else {
        Ok(read_rvol(path)?.into_volume())
    }
}

/// Reads a binary mask; scalar inputs must contain only 0 and 1.
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let data = if is_nifti(path) {
        RvolData::F32(read_nifti1(path)?)
    } else {
        read_rvol(path)?
    };
    data.into_mask().map_err(|e| crate::Error::Header {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
