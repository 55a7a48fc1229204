//! Intensity normalization, trilinear resizing, and crop-window arithmetic.

use serde::{Deserialize, Serialize};

use crate::components::largest_component;
use crate::distance::Connectivity;
use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::volume::{ensure_same_shape, threshold, Shape3, Volume};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    ZScore,
    MinMax,
}

/// `zscore`: zero mean, unit population deviation. `minmax`: onto `[0, 1]`.
pub fn normalize_intensity(v: &Volume, mode: Normalization) -> Result<Volume> {
    let n = v.data().len() as f64;
    let (offset, scale) = match mode {
        Normalization::ZScore => {
            let mean = v.data().iter().map(|&x| x as f64).sum::<f64>() / n;
            let var = v
                .data()
                .iter()
                .map(|&x| (x as f64 - mean).powi(2))
                .sum::<f64>()
                / n;
            (mean, var.sqrt())
        }
        Normalization::MinMax => {
            let (lo, hi) = v.min_max();
            (lo as f64, hi as f64 - lo as f64)
        }
    };
    if scale <= 0.0 || !scale.is_finite() {
        return Err(Error::InvalidArgument(
            "cannot normalize a constant volume".into(),
        ));
    }
    v.map(|x| ((x as f64 - offset) / scale) as f32)
}

/// Source sample positions for one axis: `(lower index, upper index, weight of upper)`.
fn axis_samples(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}

/// Trilinear resampling with half-voxel-centred sampling; identity when the
/// shapes agree.
pub fn resize_trilinear(v: &Volume, target: Shape3) -> Volume {
    let src = v.shape();
    if src == target {
        return v.clone();
    }
    let sx = axis_samples(src.nx(), target.nx());
    let sy = axis_samples(src.ny(), target.ny());
    let sz = axis_samples(src.nz(), target.nz());
    let at = |x: usize, y: usize, z: usize| v.get(x, y, z) as f64;
    let mut data = Vec::with_capacity(target.len());
    for &(z0, z1, wz) in &sz {
        for &(y0, y1, wy) in &sy {
            for &(x0, x1, wx) in &sx {
                let c00 = at(x0, y0, z0) * (1.0 - wx) + at(x1, y0, z0) * wx;
                let c10 = at(x0, y1, z0) * (1.0 - wx) + at(x1, y1, z0) * wx;
                let c01 = at(x0, y0, z1) * (1.0 - wx) + at(x1, y0, z1) * wx;
                let c11 = at(x0, y1, z1) * (1.0 - wx) + at(x1, y1, z1) * wx;
                let c0 = c00 * (1.0 - wy) + c10 * wy;
                let c1 = c01 * (1.0 - wy) + c11 * wy;
                data.push((c0 * (1.0 - wz) + c1 * wz) as f32);
            }
        }
    }
    Volume::from_vec_unchecked(target, data)
}

/// Nearest-sample index map between two grids under the same half-voxel
/// convention as [`resize_trilinear`].
pub(crate) fn nearest_index(i: usize, src: usize, dst: usize) -> usize {
    let pos = (i as f64 + 0.5) * src as f64 / dst as f64 - 0.5;
    pos.round().clamp(0.0, (src - 1) as f64) as usize
}

/// Window into an image. `origin` may be negative when the image is smaller
/// than the window; `pre_pad` / `post_pad` count the window voxels that fall
/// outside the image on each side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CropSpec {
    pub origin: [i64; 3],
    pub size: Shape3,
    pub pre_pad: [usize; 3],
    pub post_pad: [usize; 3],
}

impl CropSpec {
    /// Centres a window of `size` on `center`, shifts it inside the image
    /// where the image is large enough, and splits padding evenly (extra
    /// voxel after) where it is not.
    pub fn place(center: [i64; 3], size: Shape3, image: Shape3) -> CropSpec {
        let mut origin = [0i64; 3];
        let mut pre_pad = [0usize; 3];
        let mut post_pad = [0usize; 3];
        for a in 0..3 {
            let n = image.dims()[a] as i64;
            let s = size.dims()[a] as i64;
            if s <= n {
                origin[a] = (center[a] - s / 2).clamp(0, n - s);
            } else {
                let pad = (s - n) as usize;
                pre_pad[a] = pad / 2;
                post_pad[a] = pad - pad / 2;
                origin[a] = -(pre_pad[a] as i64);
            }
        }
        CropSpec {
            origin,
            size,
            pre_pad,
            post_pad,
        }
    }

    /// The window covering the whole image.
    pub fn full(image: Shape3) -> CropSpec {
        CropSpec {
            origin: [0; 3],
            size: image,
            pre_pad: [0; 3],
            post_pad: [0; 3],
        }
    }

    /// Checks the pads and origin against an image shape.
    pub fn validate(&self, image: Shape3) -> Result<()> {
        for a in 0..3 {
            let n = image.dims()[a] as i64;
            let s = self.size.dims()[a] as i64;
            let o = self.origin[a];
            let pre = (-o).max(0) as usize;
            let post = (o + s - n).max(0) as usize;
            let inside = o + pre as i64 <= n && o + s - post as i64 >= 0;
            if pre != self.pre_pad[a]
                || post != self.post_pad[a]
                || !inside
                || pre + post >= s as usize
            {
                return Err(Error::InvalidArgument(format!(
                    "crop window origin {:?} size {} pads {:?}/{:?} is inconsistent with image {image}",
                    self.origin, self.size, self.pre_pad, self.post_pad
                )));
            }
        }
        Ok(())
    }

    fn image_coord(&self, a: usize, i: usize, n: usize) -> Option<usize> {
        let c = self.origin[a] + i as i64;
        (c >= 0 && c < n as i64).then_some(c as usize)
    }
}

/// Extracts the window, zero-filling voxels outside the image.
pub fn crop(v: &Volume, spec: &CropSpec) -> Result<Volume> {
    let img = v.shape();
    spec.validate(img)?;
    let s = spec.size;
    let mut data = vec![0.0f32; s.len()];
    for z in 0..s.nz() {
        let Some(iz) = spec.image_coord(2, z, img.nz()) else {
            continue;
        };
        for y in 0..s.ny() {
            let Some(iy) = spec.image_coord(1, y, img.ny()) else {
                continue;
            };
            for x in 0..s.nx() {
                if let Some(ix) = spec.image_coord(0, x, img.nx()) {
                    data[s.index(x, y, z)] = v.get(ix, iy, iz);
                }
            }
        }
    }
    Ok(Volume::from_vec_unchecked(s, data))
}

/// Places a window back into a zero volume of the original shape; padding
/// margins are dropped.
pub fn paste_back(cropped: &Volume, spec: &CropSpec, original_shape: Shape3) -> Result<Volume> {
    ensure_same_shape(spec.size, cropped.shape())?;
    spec.validate(original_shape)?;
    let s = spec.size;
    let mut data = vec![0.0f32; original_shape.len()];
    for z in 0..s.nz() {
        let Some(iz) = spec.image_coord(2, z, original_shape.nz()) else {
            continue;
        };
        for y in 0..s.ny() {
            let Some(iy) = spec.image_coord(1, y, original_shape.ny()) else {
                continue;
            };
            for x in 0..s.nx() {
                if let Some(ix) = spec.image_coord(0, x, original_shape.nx()) {
                    data[original_shape.index(ix, iy, iz)] = cropped.get(x, y, z);
                }
            }
        }
    }
    Ok(Volume::from_vec_unchecked(original_shape, data))
}

/// Centroid of the largest thresholded component, in coarse-grid coordinates.
pub fn coarse_centroid(coarse_prob: &Volume, cfg: &PipelineConfig) -> Result<[f64; 3]> {
    let mask = threshold(coarse_prob, cfg.coarse_threshold)?;
    if mask.count() == 0 {
        return Err(Error::NoForeground);
    }
    let kept = largest_component(&mask, Connectivity::TwentySix)?;
    let shape = kept.shape();
    let mut acc = [0.0f64; 3];
    let mut n = 0.0;
    for i in (0..shape.len()).filter(|&i| kept.is_set(i)) {
        let (x, y, z) = shape.coords(i);
        acc[0] += x as f64;
        acc[1] += y as f64;
        acc[2] += z as f64;
        n += 1.0;
    }
    Ok(acc.map(|c| c / n))
}

/// Maps a coarse-grid position back to the nearest original voxel.
pub fn coarse_to_original(pos: [f64; 3], coarse: Shape3, original: Shape3) -> [i64; 3] {
    let mut out = [0i64; 3];
    for a in 0..3 {
        let scale = original.dims()[a] as f64 / coarse.dims()[a] as f64;
        out[a] = ((pos[a] + 0.5) * scale - 0.5).round() as i64;
    }
    out
}

/// Crop window around the stage-1 localization.
pub fn locate(
    coarse_prob: &Volume,
    original_shape: Shape3,
    cfg: &PipelineConfig,
) -> Result<CropSpec> {
    ensure_same_shape(cfg.coarse_shape, coarse_prob.shape())?;
    let centroid = coarse_centroid(coarse_prob, cfg)?;
    let center = coarse_to_original(centroid, cfg.coarse_shape, original_shape);
    Ok(CropSpec::place(center, cfg.crop_shape, original_shape))
}

pub fn locate_and_crop(
    original: &Volume,
    coarse_prob: &Volume,
    cfg: &PipelineConfig,
) -> Result<(Volume, CropSpec)> {
    let spec = locate(coarse_prob, original.shape(), cfg)?;
    Ok((crop(original, &spec)?, spec))
}
