//! Exact Euclidean distance maps.
//!
//! Squared distances are computed with the separable lower-envelope-of-parabolas
//! transform (one 1D pass per axis) and square-rooted once at the end, so the
//! result is exact in voxel units up to the final `f32` rounding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Mask, Shape3, Volume};

/// Voxel adjacency: faces only, or faces, edges and corners.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connectivity {
    #[serde(rename = "6")]
    Six,
    #[default]
    #[serde(rename = "26")]
    TwentySix,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Result<Self> {
        match n {
            6 => Ok(Connectivity::Six),
            26 => Ok(Connectivity::TwentySix),
            _ => Err(Error::InvalidArgument(format!(
                "connectivity must be 6 or 26, got {n}"
            ))),
        }
    }

    pub fn count(self) -> u32 {
        match self {
            Connectivity::Six => 6,
            Connectivity::TwentySix => 26,
        }
    }

    /// Neighbor offsets `(dx, dy, dz)`, excluding the origin.
    pub fn offsets(self) -> Vec<[i64; 3]> {
        let mut out = Vec::with_capacity(26);
        for dz in -1..=1i64 {
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let manhattan = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Connectivity::Six => manhattan == 1,
                        Connectivity::TwentySix => manhattan >= 1,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

/// Per-voxel distance to the nearest voxel carrying the opposite label.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMap {
    shape: Shape3,
    data: Vec<f32>,
}

impl DistanceMap {
    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.shape.index(x, y, z)]
    }

    pub fn to_volume(&self) -> Volume {
        Volume::from_vec_unchecked(self.shape, self.data.clone())
    }

    /// Wraps precomputed distances, e.g. a map loaded from disk.
    pub fn from_volume(v: Volume) -> Result<Self> {
        if let Some(index) = v.data().iter().position(|&d| d < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "distance map has negative value at voxel {index}"
            )));
        }
        let shape = v.shape();
        Ok(DistanceMap {
            shape,
            data: v.into_data(),
        })
    }
}

/// `D(x) = min { |x - y| : m(y) != m(x) }` for every voxel.
pub fn distance_to_opposite_label(m: &Mask) -> Result<DistanceMap> {
    if !m.has_both_labels() {
        return Err(Error::SingleLabel);
    }
    let shape = m.shape();
    let fg: Vec<bool> = m.data().iter().map(|&v| v != 0).collect();
    let bg: Vec<bool> = fg.iter().map(|&v| !v).collect();
    let (to_fg, to_bg) = rayon::join(
        || squared_distance_to_set(&fg, shape),
        || squared_distance_to_set(&bg, shape),
    );
    let data = fg
        .iter()
        .zip(to_fg.iter().zip(&to_bg))
        .map(|(&inside, (&dfg, &dbg))| {
            let sq = if inside { dbg } else { dfg };
            sq.sqrt() as f32
        })
        .collect();
    Ok(DistanceMap { shape, data })
}

/// Squared Euclidean distance from every voxel to the nearest `true` voxel.
/// Voxels are `f64::INFINITY` when the set is empty.
pub fn squared_distance_to_set(targets: &[bool], shape: Shape3) -> Vec<f64> {
    assert_eq!(targets.len(), shape.len());
    let mut grid: Vec<f64> = targets
        .iter()
        .map(|&t| if t { 0.0 } else { f64::INFINITY })
        .collect();
    let (nx, ny, nz) = (shape.nx(), shape.ny(), shape.nz());

    // x: contiguous rows
    grid.par_chunks_mut(nx).for_each(|row| {
        let line = row.to_vec();
        lower_envelope(&line, row);
    });

    // y: columns within each z slab
    grid.par_chunks_mut(nx * ny).for_each(|slab| {
        let mut line = vec![0.0; ny];
        let mut out = vec![0.0; ny];
        for x in 0..nx {
            for (y, v) in line.iter_mut().enumerate() {
                *v = slab[x + nx * y];
            }
            lower_envelope(&line, &mut out);
            for (y, &v) in out.iter().enumerate() {
                slab[x + nx * y] = v;
            }
        }
    });

    // z: lines cross slabs, so gather per (x, y) and scatter back
    if nz > 1 {
        let plane = nx * ny;
        let columns: Vec<Vec<f64>> = (0..plane)
            .into_par_iter()
            .map(|xy| {
                let line: Vec<f64> = (0..nz).map(|z| grid[xy + plane * z]).collect();
                let mut out = vec![0.0; nz];
                lower_envelope(&line, &mut out);
                out
            })
            .collect();
        for (xy, col) in columns.iter().enumerate() {
            for (z, &v) in col.iter().enumerate() {
                grid[xy + plane * z] = v;
            }
        }
    }
    grid
}

/// 1D transform `out[q] = min_p (q - p)^2 + f[p]` over sites with finite `f`.
fn lower_envelope(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut sites: Vec<usize> = Vec::with_capacity(n);
    let mut bounds: Vec<f64> = Vec::with_capacity(n + 1);

    for q in (0..n).filter(|&q| f[q].is_finite()) {
        let fq = f[q] + (q * q) as f64;
        loop {
            let Some(&p) = sites.last() else {
                sites.push(q);
                bounds.clear();
                bounds.push(f64::NEG_INFINITY);
                break;
            };
            let fp = f[p] + (p * p) as f64;
            let s = (fq - fp) / (2.0 * (q as f64 - p as f64));
            if s <= *bounds.last().expect("bounds tracks sites") {
                sites.pop();
                bounds.pop();
                continue;
            }
            sites.push(q);
            bounds.push(s);
            break;
        }
    }

    if sites.is_empty() {
        out.iter_mut().for_each(|v| *v = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        while k + 1 < sites.len() && bounds[k + 1] < q as f64 {
            k += 1;
        }
        let p = sites[k];
        let d = q as f64 - p as f64;
        *slot = d * d + f[p];
    }
}

/// Voxels with at least one in-bounds neighbor of the opposite label, in
/// storage order. Both labels qualify.
pub fn boundary_voxels(m: &Mask, connectivity: Connectivity) -> Vec<(usize, usize, usize)> {
    let shape = m.shape();
    boundary_flags(m, connectivity, false)
        .into_iter()
        .enumerate()
        .filter(|(_, on)| *on)
        .map(|(i, _)| shape.coords(i))
        .collect()
}

/// Boundary voxels as a mask.
pub fn boundary_mask(m: &Mask, connectivity: Connectivity) -> Mask {
    Mask::from_bools(m.shape(), boundary_flags(m, connectivity, false))
}

/// Per-voxel boundary flag. With `outside_is_background`, out-of-bounds
/// neighbors count as background.
pub(crate) fn boundary_flags(
    m: &Mask,
    connectivity: Connectivity,
    outside_is_background: bool,
) -> Vec<bool> {
    let shape = m.shape();
    let offsets = connectivity.offsets();
    (0..shape.len())
        .into_par_iter()
        .map(|i| {
            let (x, y, z) = shape.coords(i);
            let label = m.is_set(i);
            offsets.iter().any(|&[dx, dy, dz]| {
                let (px, py, pz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                if shape.contains(px, py, pz) {
                    m.get(px as usize, py as usize, pz as usize) != label
                } else {
                    outside_is_background && label
                }
            })
        })
        .collect()
}
