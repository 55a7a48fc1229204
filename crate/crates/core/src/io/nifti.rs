//! Read-only NIfTI-1 subset: single-file (`n+1`), uncompressed, little-endian,
//! 3D, datatypes uint8 / int16 / float32.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::{Shape3, Volume};

pub const HEADER_SIZE: usize = 348;
pub const DT_UINT8: i16 = 2;
pub const DT_INT16: i16 = 4;
pub const DT_FLOAT32: i16 = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Nifti1Header {
    pub dim: [i16; 8],
    pub datatype: i16,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
}

impl Nifti1Header {
    pub fn shape(&self) -> Result<Shape3> {
        let ndim = self.dim[0].clamp(1, 7) as usize;
        let extent = |axis: usize| {
            if axis <= ndim {
                self.dim[axis].max(0) as usize
            } else {
                1
            }
        };
        Shape3::new(extent(1), extent(2), extent(3))
    }

    /// Voxel size in mm along x, y, z.
    pub fn spacing(&self) -> [f32; 3] {
        [self.pixdim[1], self.pixdim[2], self.pixdim[3]]
    }
}

fn i16_at(b: &[u8], off: usize) -> i16 {
    i16::from_le_bytes([b[off], b[off + 1]])
}

fn f32_at(b: &[u8], off: usize) -> f32 {
    f32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

/// Parses the fixed 348-byte header.
pub fn parse_header(bytes: &[u8], path: &Path) -> Result<Nifti1Header> {
    let unsupported = |feature: &str| Error::Unsupported {
        path: path.to_path_buf(),
        feature: feature.to_string(),
    };
    let malformed = |reason: String| Error::Header {
        path: path.to_path_buf(),
        reason,
    };

    if bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b {
        return Err(unsupported("gzip-compressed NIfTI"));
    }
    if bytes.len() < HEADER_SIZE {
        return Err(malformed(format!(
            "file is {} bytes, shorter than the {HEADER_SIZE}-byte header",
            bytes.len()
        )));
    }
    let sizeof_hdr = i32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    if sizeof_hdr != HEADER_SIZE as i32 {
        if sizeof_hdr.swap_bytes() == HEADER_SIZE as i32 {
            return Err(unsupported("big-endian NIfTI"));
        }
        return Err(malformed(format!(
            "sizeof_hdr is {sizeof_hdr}, expected 348"
        )));
    }
    match &bytes[344..348] {
        b"n+1\0" => {}
        b"ni1\0" => return Err(unsupported("two-file (.hdr/.img) NIfTI")),
        other => return Err(malformed(format!("bad magic {other:?}"))),
    }

    let mut dim = [0i16; 8];
    for (i, d) in dim.iter_mut().enumerate() {
        *d = i16_at(bytes, 40 + 2 * i);
    }
    let mut pixdim = [0f32; 8];
    for (i, p) in pixdim.iter_mut().enumerate() {
        *p = f32_at(bytes, 76 + 4 * i);
    }
    let header = Nifti1Header {
        dim,
        datatype: i16_at(bytes, 70),
        bitpix: i16_at(bytes, 72),
        pixdim,
        vox_offset: f32_at(bytes, 108),
        scl_slope: f32_at(bytes, 112),
        scl_inter: f32_at(bytes, 116),
    };

    let ndim = header.dim[0];
    if !(1..=7).contains(&ndim) {
        return Err(malformed(format!("dim[0] = {ndim} out of range")));
    }
    if (4..=ndim as usize).any(|i| header.dim[i] > 1) {
        return Err(unsupported("images with more than 3 dimensions"));
    }
    if !matches!(header.datatype, DT_UINT8 | DT_INT16 | DT_FLOAT32) {
        return Err(unsupported(&format!("datatype {}", header.datatype)));
    }
    Ok(header)
}

/// Loads the image, applying `value * scl_slope + scl_inter` when the slope is
/// nonzero.
pub fn read_nifti1(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header = parse_header(&bytes, path)?;
    let shape = header.shape().map_err(|e| Error::Header {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let offset = header.vox_offset.max(HEADER_SIZE as f32) as usize;
    let size = match header.datatype {
        DT_UINT8 => 1,
        DT_INT16 => 2,
        _ => 4,
    };
    let expected = shape.len() * size;
    let payload = bytes.get(offset..).unwrap_or(&[]);
    if payload.len() < expected {
        return Err(Error::PayloadLength {
            path: path.to_path_buf(),
            expected,
            actual: payload.len(),
        });
    }
    let payload = &payload[..expected];
    let raw: Vec<f32> = match header.datatype {
        DT_UINT8 => payload.iter().map(|&b| b as f32).collect(),
        DT_INT16 => payload
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f32)
            .collect(),
        _ => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
    };
    let scaled = if header.scl_slope != 0.0 && header.scl_slope.is_finite() {
        let (m, b) = (header.scl_slope, header.scl_inter);
        raw.into_iter().map(|v| v * m + b).collect()
    } else {
        raw
    };
    Volume::new(shape, scaled).map_err(|e| Error::Header {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
