//! Parametric multi-resolution grid encodings.
//!
//! A point in `[0, 1]^d` is located in every level's grid, the `2^d` cell
//! corners are mapped to table entries (hash, dense or tiled), their
//! features are blended with d-linear weights, and the per-level results are
//! concatenated level 0 first.
//!
//! Accumulation order is fixed so results are bit-reproducible: within a
//! level, corners are visited in ascending corner number and each feature is
//! accumulated from `0.0` as `acc += weight * value` in `f32`.

mod config;
mod index;
mod interp;
mod table;

use std::collections::BTreeMap;

use rayon::prelude::*;

pub use config::{grid_scale, EncodingConfig, GridKind, Precision, DEFAULT_PRIMES};
pub use index::{dense_index, hash_index};
pub use interp::{corner_set, CornerSet, MAX_CORNERS, MAX_DIM};
pub use table::FeatureTable;

use crate::{Error, Result};

/// Concatenated per-level features of one point, `levels * features` wide.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedFeature {
    values: Vec<f32>,
}

impl EncodedFeature {
    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[inline]
fn entry_index(config: &EncodingConfig, coords: &[u32], resolution: u32) -> u32 {
    let mask = config.table_size - 1;
    match config.kind {
        GridKind::Hash => index::hash_unchecked(coords, &config.primes, mask),
        GridKind::Dense => index::linear_unchecked(coords, resolution as u64 + 1, u64::MAX) as u32,
        GridKind::Tiled => {
            index::linear_unchecked(coords, resolution as u64 + 1, mask as u64) as u32
        }
    }
}

fn check_position(position: &[f32], config: &EncodingConfig) -> Result<()> {
    if position.len() != config.dim {
        return Err(Error::shape(format!(
            "{}-dimensional position for a {}-dimensional encoding",
            position.len(),
            config.dim
        )));
    }
    Ok(())
}

/// Visits every (level, corner) of `position` as `(level, entry index, weight)`.
fn for_each_corner(
    position: &[f32],
    table: &FeatureTable,
    mut visit: impl FnMut(usize, u32, f32),
) -> Result<()> {
    let config = table.config();
    check_position(position, config)?;
    for level in 0..config.levels {
        let resolution = grid_scale(config, level)?;
        let corners = corner_set(position, resolution)?;
        for (coords, w) in corners.iter() {
            visit(level, entry_index(config, coords, resolution), w);
        }
    }
    Ok(())
}

pub fn encode_point(position: &[f32], table: &FeatureTable) -> Result<EncodedFeature> {
    let features = table.config().features;
    let mut values = vec![0.0f32; table.config().output_width()];
    for_each_corner(position, table, |level, idx, w| {
        let entry = table.entry(level, idx);
        let out = &mut values[level * features..(level + 1) * features];
        for (o, v) in out.iter_mut().zip(entry) {
            *o += w * v;
        }
    })?;
    Ok(EncodedFeature { values })
}

/// Encodes every point; the first failing point aborts with its index.
pub fn encode_batch(positions: &[Vec<f32>], table: &FeatureTable) -> Result<Vec<EncodedFeature>> {
    let results: Vec<Result<EncodedFeature>> = positions
        .par_iter()
        .map(|p| encode_point(p, table))
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| e.in_batch(i)))
        .collect()
}

/// Gradient of a scalar loss with respect to the table entries one point
/// touched. Keys are `(level, entry index)`, iterated in ascending order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseGrad {
    features: usize,
    entries: BTreeMap<(usize, u32), Vec<f32>>,
}

impl SparseGrad {
    pub fn get(&self, level: usize, index: u32) -> Option<&[f32]> {
        self.entries.get(&(level, index)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, u32), &[f32])> {
        self.entries.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    /// True when every accumulated component is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.entries.values().flatten().all(|&g| g == 0.0)
    }

    /// Scatters into the table's level-major layout.
    pub fn to_dense(&self, config: &EncodingConfig) -> Vec<f32> {
        let level_len = config.table_size as usize * config.features;
        let mut dense = vec![0.0; config.levels * level_len];
        for (&(level, idx), g) in &self.entries {
            let o = level * level_len + idx as usize * self.features;
            for (d, v) in dense[o..o + self.features].iter_mut().zip(g) {
                *d += v;
            }
        }
        dense
    }
}

fn check_upstream(upstream: &[f32], config: &EncodingConfig) -> Result<()> {
    if upstream.len() != config.output_width() {
        return Err(Error::shape(format!(
            "upstream gradient of width {}, encoding produces {}",
            upstream.len(),
            config.output_width()
        )));
    }
    Ok(())
}

/// Reverse pass of [`encode_point`]: each touched entry receives
/// `weight * upstream[level slice]`; colliding corners add up.
pub fn encode_backward(position: &[f32], table: &FeatureTable, upstream: &[f32]) -> Result<SparseGrad> {
    let config = table.config();
    check_upstream(upstream, config)?;
    let features = config.features;
    let mut grad = SparseGrad {
        features,
        entries: BTreeMap::new(),
    };
    for_each_corner(position, table, |level, idx, w| {
        let g = grad
            .entries
            .entry((level, idx))
            .or_insert_with(|| vec![0.0; features]);
        for (gi, u) in g.iter_mut().zip(&upstream[level * features..(level + 1) * features]) {
            *gi += w * u;
        }
    })?;
    Ok(grad)
}

/// Same as [`encode_backward`] but accumulates straight into a dense buffer
/// laid out like the table values.
pub fn encode_backward_into(
    position: &[f32],
    table: &FeatureTable,
    upstream: &[f32],
    grad: &mut [f32],
) -> Result<()> {
    let config = table.config();
    check_upstream(upstream, config)?;
    if grad.len() != table.values().len() {
        return Err(Error::shape("dense gradient buffer does not match the table"));
    }
    let features = config.features;
    for_each_corner(position, table, |level, idx, w| {
        let o = table.offset(level, idx);
        let up = &upstream[level * features..(level + 1) * features];
        for (gi, u) in grad[o..o + features].iter_mut().zip(up) {
            *gi += w * u;
        }
    })
}
