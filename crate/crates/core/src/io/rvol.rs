//! Raw volume files: a headerless little-endian payload `<name>.rvol` next
//! to a JSON sidecar `<name>.json`.
//!
//! ```json
//! { "shape": [nx, ny, nz], "dtype": "f32", "order": "x-fastest", "spacing": [1.0, 1.0, 1.0] }
//! ```
//!
//! `dtype` is `"u8"` (binary masks) or `"f32"`; `spacing` is optional and
//! informational.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Mask, Shape3, Volume};

pub const ORDER: &str = "x-fastest";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    U8,
    F32,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::F32 => 4,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "u8" => Some(Dtype::U8),
            "f32" => Some(Dtype::F32),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RvolHeader {
    pub shape: Shape3,
    pub dtype: Dtype,
    pub order: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<[f64; 3]>,
}

impl RvolHeader {
    pub fn new(shape: Shape3, dtype: Dtype) -> Self {
        RvolHeader {
            shape,
            dtype,
            order: ORDER.to_string(),
            spacing: None,
        }
    }

    pub fn payload_len(&self) -> usize {
        self.shape.len() * self.dtype.size()
    }
}

/// Header as written on disk, before validation.
#[derive(Deserialize)]
struct RawHeader {
    shape: [usize; 3],
    dtype: String,
    order: String,
    #[serde(default)]
    spacing: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RvolData {
    F32(Volume),
    U8(Mask),
}

impl RvolData {
    pub fn shape(&self) -> Shape3 {
        match self {
            RvolData::F32(v) => v.shape(),
            RvolData::U8(m) => m.shape(),
        }
    }

    /// Scalar view; masks become 0.0/1.0.
    pub fn into_volume(self) -> Volume {
        match self {
            RvolData::F32(v) => v,
            RvolData::U8(m) => m.to_volume(),
        }
    }

    /// Binary view; scalar volumes must hold only 0.0 and 1.0.
    pub fn into_mask(self) -> Result<Mask> {
        match self {
            RvolData::F32(v) => Mask::from_binary_volume(&v),
            RvolData::U8(m) => Ok(m),
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn read_header(path: &Path) -> Result<RvolHeader> {
    let sidecar = sidecar_path(path);
    let text = match fs::read_to_string(&sidecar) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingSidecar {
                path: path.to_path_buf(),
                sidecar,
            })
        }
        Err(e) => return Err(Error::io(sidecar, e)),
    };
    let raw: RawHeader = serde_json::from_str(&text).map_err(|e| Error::Header {
        path: sidecar.clone(),
        reason: e.to_string(),
    })?;
    let dtype = Dtype::parse(&raw.dtype).ok_or_else(|| Error::UnknownDtype {
        path: sidecar.clone(),
        dtype: raw.dtype.clone(),
    })?;
    if raw.order != ORDER {
        return Err(Error::Header {
            path: sidecar,
            reason: format!("order {:?} is not {ORDER:?}", raw.order),
        });
    }
    let shape = Shape3::try_from(raw.shape).map_err(|e| Error::Header {
        path: sidecar,
        reason: e.to_string(),
    })?;
    Ok(RvolHeader {
        shape,
        dtype,
        order: raw.order,
        spacing: raw.spacing,
    })
}

pub fn read_rvol(path: impl AsRef<Path>) -> Result<RvolData> {
    let path = path.as_ref();
    let header = read_header(path)?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != header.payload_len() {
        return Err(Error::PayloadLength {
            path: path.to_path_buf(),
            expected: header.payload_len(),
            actual: bytes.len(),
        });
    }
    match header.dtype {
        Dtype::U8 => Mask::new(header.shape, bytes).map(RvolData::U8),
        Dtype::F32 => {
            let data = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            Volume::new(header.shape, data).map(RvolData::F32)
        }
    }
    .map_err(|e| Error::Header {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn write_with(path: &Path, header: &RvolHeader, payload: &[u8]) -> Result<()> {
    let json = serde_json::to_string_pretty(header).expect("header serializes");
    let sidecar = sidecar_path(path);
    fs::write(&sidecar, json + "\n").map_err(|e| Error::io(sidecar, e))?;
    fs::write(path, payload).map_err(|e| Error::io(path, e))
}

pub fn write_volume(path: impl AsRef<Path>, v: &Volume) -> Result<()> {
    let header = RvolHeader::new(v.shape(), Dtype::F32);
    let payload: Vec<u8> = v.data().iter().flat_map(|x| x.to_le_bytes()).collect();
    write_with(path.as_ref(), &header, &payload)
}

pub fn write_mask(path: impl AsRef<Path>, m: &Mask) -> Result<()> {
    let header = RvolHeader::new(m.shape(), Dtype::U8);
    write_with(path.as_ref(), &header, m.data())
}

pub fn write_rvol(path: impl AsRef<Path>, data: &RvolData) -> Result<()> {
    match data {
        RvolData::F32(v) => write_volume(path, v),
        RvolData::U8(m) => write_mask(path, m),
    }
}
