use crate::{Error, Result};

pub const MAX_DIM: usize = 3;
pub const MAX_CORNERS: usize = 1 << MAX_DIM;

/// The `2^d` cell corners around a point and their d-linear weights.
///
/// Corner `c` is offset by `+1` along axis `i` when bit `i` of `c` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerSet {
    dim: usize,
    coords: [[u32; MAX_DIM]; MAX_CORNERS],
    weights: [f32; MAX_CORNERS],
}

impl CornerSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        1 << self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn corner(&self, c: usize) -> &[u32] {
        &self.coords[c][..self.dim]
    }

    pub fn weight(&self, c: usize) -> f32 {
        self.weights[c]
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights[..self.len()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], f32)> + '_ {
        (0..self.len()).map(move |c| (self.corner(c), self.weights[c]))
    }
}

/// Locates `position` (each component in `[0, 1]`) in a grid with
/// `resolution` cells per axis.
///
/// A component equal to 1.0 lands in the last cell with fraction 1.0, so no
/// corner ever exceeds `resolution`.
pub fn corner_set(position: &[f32], resolution: u32) -> Result<CornerSet> {
    let dim = position.len();
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::shape(format!("position of dimension {dim}")));
    }
    if resolution == 0 {
        return Err(Error::config("grid resolution must be at least 1"));
    }
    let mut base = [0u32; MAX_DIM];
    let mut frac = [0f32; MAX_DIM];
    for (i, &x) in position.iter().enumerate() {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain(format!(
                "position component {x} outside [0, 1]"
            )));
        }
        let p = x * resolution as f32;
        let b = (p.floor() as u32).min(resolution - 1);
        base[i] = b;
        frac[i] = p - b as f32;
    }

    let mut set = CornerSet {
        dim,
        coords: [[0; MAX_DIM]; MAX_CORNERS],
        weights: [0.0; MAX_CORNERS],
    };
    for c in 0..(1usize << dim) {
        let mut w = 1.0f32;
        for i in 0..dim {
            if c & (1 << i) != 0 {
                set.coords[c][i] = base[i] + 1;
                w *= frac[i];
            } else {
                set.coords[c][i] = base[i];
                w *= 1.0 - frac[i];
            }
        }
        set.weights[c] = w;
    }
    Ok(set)
}
