//! 3D Sobel–Feldman filtering and the soft contour operator.
//!
//! Filtering is cross-correlation (no kernel flip) with replicate padding:
//! out-of-bounds reads take the nearest edge voxel. Under that padding a
//! constant volume has an exactly zero response.

use rayon::prelude::*;

use crate::volume::{Shape3, Volume};

/// 3x3x3 integer stencil indexed `[dz + 1][dy + 1][dx + 1]`.
pub type Kernel3 = [[[i32; 3]; 3]; 3];

/// Spatial axis of a Sobel kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    fn position(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

const SMOOTH: [i32; 3] = [1, 2, 1];
const DERIVATIVE: [i32; 3] = [1, 0, -1];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SobelKernels {
    pub sx: Kernel3,
    pub sy: Kernel3,
    pub sz: Kernel3,
}

impl SobelKernels {
    /// `sz` has planes `[1 2 1; 2 4 2; 1 2 1]`, zeros, then the negation,
    /// for `dz = -1, 0, +1`. `sx` and `sy` are its axis permutations.
    pub fn new() -> Self {
        SobelKernels {
            sx: build(Axis::X),
            sy: build(Axis::Y),
            sz: build(Axis::Z),
        }
    }

    pub fn get(&self, axis: Axis) -> &Kernel3 {
        match axis {
            Axis::X => &self.sx,
            Axis::Y => &self.sy,
            Axis::Z => &self.sz,
        }
    }
}

impl Default for SobelKernels {
    fn default() -> Self {
        SobelKernels::new()
    }
}

fn build(axis: Axis) -> Kernel3 {
    let mut k = [[[0; 3]; 3]; 3];
    for (iz, plane) in k.iter_mut().enumerate() {
        for (iy, row) in plane.iter_mut().enumerate() {
            for (ix, w) in row.iter_mut().enumerate() {
                let idx = [ix, iy, iz];
                let a = axis.position();
                *w = (0..3)
                    .map(|i| {
                        if i == a {
                            DERIVATIVE[idx[i]]
                        } else {
                            SMOOTH[idx[i]]
                        }
                    })
                    .product();
            }
        }
    }
    k
}

/// Nonzero stencil taps as `(dx, dy, dz, weight)` in `dz, dy, dx` order.
pub(crate) fn taps(k: &Kernel3) -> Vec<(i64, i64, i64, f64)> {
    let mut out = Vec::with_capacity(18);
    for (iz, plane) in k.iter().enumerate() {
        for (iy, row) in plane.iter().enumerate() {
            for (ix, &w) in row.iter().enumerate() {
                if w != 0 {
                    out.push((ix as i64 - 1, iy as i64 - 1, iz as i64 - 1, w as f64));
                }
            }
        }
    }
    out
}

#[inline]
fn clamp(i: i64, n: usize) -> usize {
    i.clamp(0, n as i64 - 1) as usize
}

/// Replicate-padded correlation, kept in `f64`.
pub(crate) fn correlate_f64(data: &[f32], shape: Shape3, k: &Kernel3) -> Vec<f64> {
    let taps = taps(k);
    let (nx, ny, nz) = (shape.nx(), shape.ny(), shape.nz());
    let mut out = vec![0.0f64; shape.len()];
    out.par_chunks_mut(nx * ny)
        .enumerate()
        .for_each(|(z, slab)| {
            for y in 0..ny {
                for x in 0..nx {
                    let mut acc = 0.0f64;
                    for &(dx, dy, dz, w) in &taps {
                        let sx = clamp(x as i64 + dx, nx);
                        let sy = clamp(y as i64 + dy, ny);
                        let sz = clamp(z as i64 + dz, nz);
                        acc += w * data[sx + nx * (sy + ny * sz)] as f64;
                    }
                    slab[x + nx * y] = acc;
                }
            }
        });
    out
}

/// Transpose of [`correlate_f64`]: scatters each input voxel back through
/// the same clamped taps.
pub(crate) fn correlate_adjoint_f64(data: &[f64], shape: Shape3, k: &Kernel3) -> Vec<f64> {
    let taps = taps(k);
    let (nx, ny, nz) = (shape.nx(), shape.ny(), shape.nz());
    let mut out = vec![0.0f64; shape.len()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let g = data[x + nx * (y + ny * z)];
                if g == 0.0 {
                    continue;
                }
                for &(dx, dy, dz, w) in &taps {
                    let sx = clamp(x as i64 + dx, nx);
                    let sy = clamp(y as i64 + dy, ny);
                    let sz = clamp(z as i64 + dz, nz);
                    out[sx + nx * (sy + ny * sz)] += w * g;
                }
            }
        }
    }
    out
}

fn to_volume(shape: Shape3, data: Vec<f64>) -> Volume {
    Volume::from_vec_unchecked(shape, data.into_iter().map(|v| v as f32).collect())
}

/// Same-size cross-correlation with a 3x3x3 kernel.
pub fn correlate3(v: &Volume, k: &Kernel3) -> Volume {
    to_volume(v.shape(), correlate_f64(v.data(), v.shape(), k))
}

/// Adjoint of [`correlate3`]: `<correlate3(u, k), w> == <u, correlate3_adjoint(w, k)>`.
pub fn correlate3_adjoint(v: &Volume, k: &Kernel3) -> Volume {
    let data: Vec<f64> = v.data().iter().map(|&x| x as f64).collect();
    to_volume(v.shape(), correlate_adjoint_f64(&data, v.shape(), k))
}

/// `|p * sx| + |p * sy| + |p * sz|`, voxelwise.
pub fn contour(p: &Volume) -> Volume {
    let kernels = SobelKernels::new();
    let shape = p.shape();
    let mut acc = vec![0.0f64; shape.len()];
    for axis in Axis::ALL {
        let r = correlate_f64(p.data(), shape, kernels.get(axis));
        acc.iter_mut().zip(r).for_each(|(a, r)| *a += r.abs());
    }
    to_volume(shape, acc)
}
