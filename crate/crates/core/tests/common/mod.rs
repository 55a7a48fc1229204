//! Brute-force oracles shared by the integration tests. Each one is written
//! from the definitions, without calling the routine it checks.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use voxelseg::{Mask, Shape3, Volume};

pub type Kernel = [[[f64; 3]; 3]; 3];

pub fn random_shape(rng: &mut ChaCha8Rng, max: usize) -> Shape3 {
    Shape3::new(
        rng.random_range(1..=max),
        rng.random_range(1..=max),
        rng.random_range(1..=max),
    )
    .unwrap()
}

pub fn random_mask(rng: &mut ChaCha8Rng, shape: Shape3, density: f64) -> Mask {
    Mask::from_fn(shape, |_, _, _| rng.random_bool(density))
}

/// Random mask with both labels present; needs at least two voxels.
pub fn random_two_label_mask(rng: &mut ChaCha8Rng, shape: Shape3) -> Mask {
    assert!(shape.len() >= 2);
    loop {
        let density = rng.random_range(0.05..0.95);
        let m = random_mask(rng, shape, density);
        if m.has_both_labels() {
            return m;
        }
    }
}

pub fn coords(shape: Shape3) -> Vec<(usize, usize, usize)> {
    let [nx, ny, nz] = shape.dims();
    let mut v = Vec::with_capacity(shape.len());
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                v.push((x, y, z));
            }
        }
    }
    v
}

fn sq_dist(a: (usize, usize, usize), b: (usize, usize, usize)) -> i64 {
    let d = |p: usize, q: usize| p as i64 - q as i64;
    d(a.0, b.0).pow(2) + d(a.1, b.1).pow(2) + d(a.2, b.2).pow(2)
}

/// All-pairs distance to the nearest voxel of the opposite label.
pub fn brute_edt(m: &Mask) -> Vec<f64> {
    let pts = coords(m.shape());
    (0..pts.len())
        .map(|i| {
            let best = (0..pts.len())
                .filter(|&j| m.is_set(j) != m.is_set(i))
                .map(|j| sq_dist(pts[i], pts[j]))
                .min()
                .expect("both labels present");
            (best as f64).sqrt()
        })
        .collect()
}

/// In-bounds 26-neighbors.
pub fn neighbors26(shape: Shape3, x: usize, y: usize, z: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for dz in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if (dx, dy, dz) == (0, 0, 0) {
                    continue;
                }
                let (a, b, c) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                if shape.contains(a, b, c) {
                    out.push(shape.index(a as usize, b as usize, c as usize));
                }
            }
        }
    }
    out
}

/// In-bounds 6-neighbors.
pub fn neighbors6(shape: Shape3, x: usize, y: usize, z: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for (dx, dy, dz) in [
        (1, 0, 0),
        (-1, 0, 0),
        (0, 1, 0),
        (0, -1, 0),
        (0, 0, 1),
        (0, 0, -1),
    ] {
        let (a, b, c) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
        if shape.contains(a, b, c) {
            out.push(shape.index(a as usize, b as usize, c as usize));
        }
    }
    out
}

/// Foreground voxels with a background 26-neighbor, counting positions
/// outside the volume as background.
pub fn brute_surface(m: &Mask) -> Vec<usize> {
    let shape = m.shape();
    coords(shape)
        .into_iter()
        .enumerate()
        .filter(|&(i, (x, y, z))| {
            if !m.is_set(i) {
                return false;
            }
            let on_border = [x, y, z]
                .iter()
                .zip(shape.dims())
                .any(|(&c, n)| c == 0 || c + 1 == n);
            on_border || neighbors26(shape, x, y, z).iter().any(|&j| !m.is_set(j))
        })
        .map(|(i, _)| i)
        .collect()
}

/// Per-point distance from each voxel of `from` to the nearest of `to`.
pub fn brute_directed(shape: Shape3, from: &[usize], to: &[usize]) -> Vec<f64> {
    from.iter()
        .map(|&i| {
            let a = shape.coords(i);
            let best = to
                .iter()
                .map(|&j| sq_dist(a, shape.coords(j)))
                .min()
                .unwrap();
            (best as f64).sqrt()
        })
        .collect()
}

/// Depth-first flood fill; labels in discovery order, 0 for background.
pub fn flood_fill(m: &Mask, six: bool) -> (Vec<u32>, usize) {
    let shape = m.shape();
    let mut labels = vec![0u32; shape.len()];
    let mut next = 0u32;
    for start in 0..shape.len() {
        if !m.is_set(start) || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            let (x, y, z) = shape.coords(i);
            let nb = if six {
                neighbors6(shape, x, y, z)
            } else {
                neighbors26(shape, x, y, z)
            };
            for j in nb {
                if m.is_set(j) && labels[j] == 0 {
                    labels[j] = next;
                    stack.push(j);
                }
            }
        }
    }
    (labels, next as usize)
}

/// True when the two labelings induce the same partition (0 = background).
pub fn same_partition(a: &[u32], b: &[u32]) -> bool {
    use std::collections::HashMap;
    let mut ab = HashMap::new();
    let mut ba = HashMap::new();
    a.iter().zip(b).all(|(&x, &y)| {
        if (x == 0) != (y == 0) {
            return false;
        }
        *ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x
    })
}

/// The z-derivative kernel exactly as printed: a +1 2 1 / 2 4 2 / 1 2 1
/// plane, a zero plane, then the negated plane. Index order [z][y][x].
pub fn printed_sz() -> Kernel {
    let plane = [[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]];
    let neg = plane.map(|r| r.map(|v: f64| -v));
    [plane, [[0.0; 3]; 3], neg]
}

/// `[sx, sy, sz]` with sx and sy obtained by permuting the axes of sz.
pub fn sobel_kernels() -> [Kernel; 3] {
    let sz = printed_sz();
    let mut sx = [[[0.0; 3]; 3]; 3];
    let mut sy = [[[0.0; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                sx[a][b][c] = sz[c][b][a];
                sy[a][b][c] = sz[b][a][c];
            }
        }
    }
    [sx, sy, sz]
}

/// 27-term cross-correlation with replicate padding, in f64.
pub fn naive_correlate(shape: Shape3, v: &[f64], k: &Kernel) -> Vec<f64> {
    let [nx, ny, nz] = shape.dims();
    let clamp = |c: i64, n: usize| c.clamp(0, n as i64 - 1) as usize;
    let mut out = vec![0.0; shape.len()];
    for (i, (x, y, z)) in coords(shape).into_iter().enumerate() {
        let mut acc = 0.0;
        for (dz, plane) in k.iter().enumerate() {
            for (dy, row) in plane.iter().enumerate() {
                for (dx, &w) in row.iter().enumerate() {
                    let a = clamp(x as i64 + dx as i64 - 1, nx);
                    let b = clamp(y as i64 + dy as i64 - 1, ny);
                    let c = clamp(z as i64 + dz as i64 - 1, nz);
                    acc += w * v[shape.index(a, b, c)];
                }
            }
        }
        out[i] = acc;
    }
    out
}

/// Responses of the three kernels.
pub fn naive_responses(shape: Shape3, p: &[f64]) -> [Vec<f64>; 3] {
    sobel_kernels().map(|k| naive_correlate(shape, p, &k))
}

/// Contour loss value from its definition: distance-plus-drain weights times
/// the summed absolute responses.
pub fn naive_contour_loss(shape: Shape3, p: &[f64], d: &[f64], drain: f64) -> f64 {
    let r = naive_responses(shape, p);
    (0..shape.len())
        .map(|i| (d[i] + drain) * (r[0][i].abs() + r[1][i].abs() + r[2][i].abs()))
        .sum()
}

pub fn naive_soft_dice(p: &[f64], m: &Mask, smooth: f64) -> f64 {
    let inter: f64 = p
        .iter()
        .enumerate()
        .filter(|&(i, _)| m.is_set(i))
        .map(|(_, v)| v)
        .sum();
    let sp: f64 = p.iter().sum();
    let sm = m.count() as f64;
    1.0 - (2.0 * inter + smooth) / (sp + sm + smooth)
}

pub fn to_f64(v: &Volume) -> Vec<f64> {
    v.data().iter().map(|&x| x as f64).collect()
}
