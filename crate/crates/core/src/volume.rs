//! Dense 3D scalar and label fields.
//!
//! Storage is flat and x-fastest: the voxel `(x, y, z)` lives at
//! `x + nx * (y + ny * z)`. Scalars are stored as `f32` and reduced in `f64`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[usize; 3]", into = "[usize; 3]")]
pub struct Shape3 {
    nx: usize,
    ny: usize,
    nz: usize,
}

impl Shape3 {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        let ok = nx >= 1
            && ny >= 1
            && nz >= 1
            && nx
                .checked_mul(ny)
                .and_then(|v| v.checked_mul(nz))
                .is_some_and(|n| n <= isize::MAX as usize);
        if ok {
            Ok(Shape3 { nx, ny, nz })
        } else {
            Err(Error::InvalidShape { nx, ny, nz })
        }
    }

    /// Cube of side `n`. Panics when `n == 0`.
    pub fn cube(n: usize) -> Self {
        Shape3::new(n, n, n).expect("cube side must be positive")
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.nx && y < self.ny && z < self.nz);
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        let x = index % self.nx;
        let rest = index / self.nx;
        (x, rest % self.ny, rest / self.ny)
    }

    pub fn contains(&self, x: i64, y: i64, z: i64) -> bool {
        x >= 0
            && y >= 0
            && z >= 0
            && (x as usize) < self.nx
            && (y as usize) < self.ny
            && (z as usize) < self.nz
    }

    /// Axis stride in the flat layout.
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.nx,
            2 => self.nx * self.ny,
            _ => panic!("axis {axis} out of range"),
        }
    }
}

impl TryFrom<[usize; 3]> for Shape3 {
    type Error = Error;

    fn try_from(d: [usize; 3]) -> Result<Self> {
        Shape3::new(d[0], d[1], d[2])
    }
}

impl From<Shape3> for [usize; 3] {
    fn from(s: Shape3) -> Self {
        s.dims()
    }
}

impl fmt::Display for Shape3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

pub(crate) fn ensure_same_shape(a: Shape3, b: Shape3) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { left: a, right: b })
    }
}

/// Dense scalar field. All values are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    shape: Shape3,
    data: Vec<f32>,
}

impl Volume {
    pub fn new(shape: Shape3, data: Vec<f32>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::LengthMismatch {
                shape,
                len: data.len(),
                expected: shape.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Volume { shape, data })
    }

    pub(crate) fn from_vec_unchecked(shape: Shape3, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), shape.len());
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Volume { shape, data }
    }

    pub fn filled(shape: Shape3, value: f32) -> Self {
        assert!(value.is_finite(), "fill value must be finite");
        Volume {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn zeros(shape: Shape3) -> Self {
        Volume::filled(shape, 0.0)
    }

    /// Builds a volume by evaluating `f(x, y, z)` in storage order.
    pub fn from_fn(shape: Shape3, mut f: impl FnMut(usize, usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(shape.len());
        for z in 0..shape.nz {
            for y in 0..shape.ny {
                for x in 0..shape.nx {
                    data.push(f(x, y, z));
                }
            }
        }
        Volume::new(shape, data)
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.shape.index(x, y, z)]
    }

    /// Applies `f` voxelwise; fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<Volume> {
        Volume::new(self.shape, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Binary label field holding only 0 and 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    shape: Shape3,
    data: Vec<u8>,
}

impl Mask {
    pub fn new(shape: Shape3, data: Vec<u8>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::LengthMismatch {
                shape,
                len: data.len(),
                expected: shape.len(),
            });
        }
        if let Some(index) = data.iter().position(|&v| v > 1) {
            return Err(Error::NotBinary {
                index,
                value: data[index] as f32,
            });
        }
        Ok(Mask { shape, data })
    }

    pub fn zeros(shape: Shape3) -> Self {
        Mask {
            shape,
            data: vec![0; shape.len()],
        }
    }

    pub fn ones(shape: Shape3) -> Self {
        Mask {
            shape,
            data: vec![1; shape.len()],
        }
    }

    pub fn from_fn(shape: Shape3, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(shape.len());
        for z in 0..shape.nz {
            for y in 0..shape.ny {
                for x in 0..shape.nx {
                    data.push(f(x, y, z) as u8);
                }
            }
        }
        Mask { shape, data }
    }

    pub(crate) fn from_bools(shape: Shape3, bits: impl IntoIterator<Item = bool>) -> Self {
        let data: Vec<u8> = bits.into_iter().map(u8::from).collect();
        assert_eq!(data.len(), shape.len());
        Mask { shape, data }
    }

    /// Interprets a scalar volume whose values are exactly 0 or 1.
    pub fn from_binary_volume(v: &Volume) -> Result<Self> {
        let mut data = Vec::with_capacity(v.data.len());
        for (index, &value) in v.data.iter().enumerate() {
            match value {
                0.0 => data.push(0),
                1.0 => data.push(1),
                _ => return Err(Error::NotBinary { index, value }),
            }
        }
        Ok(Mask {
            shape: v.shape,
            data,
        })
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.data[self.shape.index(x, y, z)] != 0
    }

    pub fn is_set(&self, index: usize) -> bool {
        self.data[index] != 0
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, on: bool) {
        let i = self.shape.index(x, y, z);
        self.data[i] = on as u8;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    /// True when both labels occur.
    pub fn has_both_labels(&self) -> bool {
        let n = self.count();
        n > 0 && n < self.data.len()
    }

    pub fn complement(&self) -> Mask {
        Mask {
            shape: self.shape,
            data: self.data.iter().map(|&v| 1 - v).collect(),
        }
    }

    pub fn to_volume(&self) -> Volume {
        Volume::from_vec_unchecked(self.shape, self.data.iter().map(|&v| v as f32).collect())
    }
}

/// Voxel is 1 iff `v >= t`.
pub fn threshold(v: &Volume, t: f32) -> Result<Mask> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "threshold must be finite, got {t}"
        )));
    }
    Ok(Mask::from_bools(v.shape, v.data.iter().map(|&x| x >= t)))
}

pub fn elementwise_mul(a: &Volume, b: &Volume) -> Result<Volume> {
    ensure_same_shape(a.shape, b.shape)?;
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
    // A product of two finite f32 can overflow.
    Volume::new(a.shape, data)
}

/// Sum of all voxels, accumulated in `f64` in storage order.
pub fn sum(v: &Volume) -> f64 {
    v.data.iter().map(|&x| x as f64).sum()
}
