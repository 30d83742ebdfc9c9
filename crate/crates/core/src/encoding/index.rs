//! Vertex-to-entry index functions.
//!
//! Table sizes are powers of two, so reducing an accumulator into the table
//! is a bit mask: `h & (T - 1) == h % T` for every `h`.

use super::config::GridKind;
use crate::{Error, Result};

fn check_table_size(table_size: u32) -> Result<()> {
    if !table_size.is_power_of_two() {
        return Err(Error::config(format!(
            "table size {table_size} is not a power of two"
        )));
    }
    Ok(())
}

/// Spatial hash `(XOR_i coords[i] * primes[i]) & (T - 1)` with 32-bit
/// wrapping products.
pub fn hash_index(coords: &[u32], primes: &[u32], table_size: u32) -> Result<u32> {
    check_table_size(table_size)?;
    if coords.len() != primes.len() {
        return Err(Error::shape(format!(
            "{} coordinates for {} hashing constants",
            coords.len(),
            primes.len()
        )));
    }
    Ok(hash_unchecked(coords, primes, table_size - 1))
}

#[inline]
pub(crate) fn hash_unchecked(coords: &[u32], primes: &[u32], mask: u32) -> u32 {
    coords
        .iter()
        .zip(primes)
        .fold(0u32, |h, (&c, &p)| h ^ c.wrapping_mul(p))
        & mask
}

/// Row-major index of a grid vertex with stride `resolution + 1`.
///
/// `Dense` grids must hold every vertex; `Tiled` grids wrap the linear index
/// into the table with the same mask as the hash.
pub fn dense_index(coords: &[u32], resolution: u32, table_size: u32, kind: GridKind) -> Result<u32> {
    check_table_size(table_size)?;
    let stride = resolution as u64 + 1;
    for &c in coords {
        if c > resolution {
            return Err(Error::Range {
                what: "vertex coordinate",
                value: c as usize,
                limit: resolution as usize,
            });
        }
    }
    match kind {
        GridKind::Hash => Err(Error::config("dense_index called for a hash grid")),
        GridKind::Dense => {
            let vertices = stride.saturating_pow(coords.len() as u32);
            if vertices > table_size as u64 {
                return Err(Error::config(format!(
                    "dense grid needs {vertices} entries but the table holds {table_size}"
                )));
            }
            Ok(linear_unchecked(coords, stride, u64::MAX) as u32)
        }
        GridKind::Tiled => Ok(linear_unchecked(coords, stride, table_size as u64 - 1) as u32),
    }
}

#[inline]
pub(crate) fn linear_unchecked(coords: &[u32], stride: u64, mask: u64) -> u64 {
    let mut idx = 0u64;
    let mut scale = 1u64;
    for &c in coords {
        idx = idx.wrapping_add((c as u64).wrapping_mul(scale));
        scale = scale.wrapping_mul(stride);
    }
    idx & mask
}
