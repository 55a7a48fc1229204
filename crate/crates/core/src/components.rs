//! Connected-component labeling and component-count statistics.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::distance::Connectivity;
use crate::error::{Error, Result};
use crate::volume::Mask;

/// Labels are `1..=count` (0 is background), ordered by descending size with
/// ties broken by the smallest flat index in the component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub labels: Vec<u32>,
    pub count: usize,
    pub sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn mask_of(&self, label: u32, like: &Mask) -> Mask {
        Mask::from_bools(like.shape(), self.labels.iter().map(|&l| l == label))
    }
}

pub fn label_components(m: &Mask, connectivity: Connectivity) -> ComponentLabeling {
    let shape = m.shape();
    let offsets = connectivity.offsets();
    let mut raw = vec![0u32; shape.len()];
    let mut sizes: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();

    // Scanning in storage order discovers components by their smallest index.
    for start in 0..shape.len() {
        if !m.is_set(start) || raw[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        raw[start] = label;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y, z) = shape.coords(i);
            for &[dx, dy, dz] in &offsets {
                let (a, b, c) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                if !shape.contains(a, b, c) {
                    continue;
                }
                let j = shape.index(a as usize, b as usize, c as usize);
                if m.is_set(j) && raw[j] == 0 {
                    raw[j] = label;
                    queue.push_back(j);
                }
            }
        }
        sizes.push(size);
    }

    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]));
    let mut remap = vec![0u32; sizes.len() + 1];
    for (rank, &old) in order.iter().enumerate() {
        remap[old + 1] = rank as u32 + 1;
    }
    ComponentLabeling {
        labels: raw.iter().map(|&l| remap[l as usize]).collect(),
        count: sizes.len(),
        sizes: order.iter().map(|&i| sizes[i]).collect(),
    }
}

/// Keeps only the largest component.
pub fn largest_component(m: &Mask, connectivity: Connectivity) -> Result<Mask> {
    let lab = label_components(m, connectivity);
    if lab.count == 0 {
        return Err(Error::NoComponent);
    }
    Ok(lab.mask_of(1, m))
}

/// Mean, population standard deviation and maximum of component counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub mean: f64,
    pub stddev: f64,
    pub max: usize,
}

pub fn count_stats(counts: &[usize]) -> Result<ComponentStats> {
    if counts.is_empty() {
        return Err(Error::InvalidArgument(
            "component statistics need at least one mask".into(),
        ));
    }
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    Ok(ComponentStats {
        mean,
        stddev: var.sqrt(),
        max: *counts.iter().max().expect("nonempty"),
    })
}

pub fn component_stats(masks: &[Mask], connectivity: Connectivity) -> Result<ComponentStats> {
    let counts: Vec<usize> = masks
        .iter()
        .map(|m| label_components(m, connectivity).count)
        .collect();
    count_stats(&counts)
}
