//! Straight-line reference implementations used by the integration tests.
#![allow(dead_code)]

use ngpc_core::encoding::{EncodingConfig, GridKind};
use rand::Rng;

/// Level resolution computed from scratch in f64.
pub fn resolution(cfg: &EncodingConfig, level: usize) -> u32 {
    let mut r = cfg.base_resolution as f64;
    for _ in 0..level {
        r *= cfg.growth;
    }
    r.floor() as u32
}

/// Spatial hash with 64-bit products reduced mod 2^32 and a true modulo.
pub fn hash(coords: &[u32], primes: &[u32], table_size: u32) -> u32 {
    let mut h = 0u64;
    for (c, p) in coords.iter().zip(primes) {
        h ^= (*c as u64 * *p as u64) % (1u64 << 32);
    }
    (h % table_size as u64) as u32
}

pub fn entry_index(cfg: &EncodingConfig, coords: &[u32], res: u32) -> u32 {
    match cfg.kind {
        GridKind::Hash => hash(coords, &cfg.primes, cfg.table_size),
        GridKind::Dense | GridKind::Tiled => {
            let mut idx = 0u64;
            for (i, c) in coords.iter().enumerate() {
                idx += *c as u64 * (res as u64 + 1).pow(i as u32);
            }
            if cfg.kind == GridKind::Tiled {
                idx %= cfg.table_size as u64;
            }
            idx as u32
        }
    }
}

/// Corner coordinates and per-axis fractions the same way the encoding
/// defines them: `p = x * N` in f32, base clamped to `N - 1`.
fn cell(x: f32, res: u32) -> (u32, f32) {
    let p = x * res as f32;
    let mut base = p.floor() as u32;
    if base >= res {
        base = res - 1;
    }
    (base, p - base as f32)
}

/// f32 encode with the documented accumulation order (corner-major, each
/// weight a product over axes in ascending order starting from 1).
pub fn encode_f32(cfg: &EncodingConfig, values: &[f32], pos: &[f32]) -> Vec<f32> {
    let f = cfg.features;
    let t = cfg.table_size as usize;
    let mut out = vec![0.0f32; cfg.levels * f];
    for level in 0..cfg.levels {
        let res = resolution(cfg, level);
        let cells: Vec<(u32, f32)> = pos.iter().map(|&x| cell(x, res)).collect();
        for corner in 0..(1usize << cfg.dim) {
            let mut coords = Vec::with_capacity(cfg.dim);
            let mut w = 1.0f32;
            for (axis, (base, frac)) in cells.iter().enumerate() {
                if corner >> axis & 1 == 1 {
                    coords.push(base + 1);
                    w *= frac;
                } else {
                    coords.push(*base);
                    w *= 1.0 - frac;
                }
            }
            let idx = entry_index(cfg, &coords, res) as usize;
            for k in 0..f {
                out[level * f + k] += w * values[(level * t + idx) * f + k];
            }
        }
    }
    out
}

/// Same blend in f64 (fractions still taken from the f32 cell location).
pub fn encode_f64(cfg: &EncodingConfig, values: &[f64], pos: &[f32]) -> Vec<f64> {
    let f = cfg.features;
    let t = cfg.table_size as usize;
    let mut out = vec![0.0f64; cfg.levels * f];
    for level in 0..cfg.levels {
        let res = resolution(cfg, level);
        let cells: Vec<(u32, f32)> = pos.iter().map(|&x| cell(x, res)).collect();
        for corner in 0..(1usize << cfg.dim) {
            let mut coords = Vec::new();
            let mut w = 1.0f64;
            for (axis, (base, frac)) in cells.iter().enumerate() {
                let frac = *frac as f64;
                if corner >> axis & 1 == 1 {
                    coords.push(base + 1);
                    w *= frac;
                } else {
                    coords.push(*base);
                    w *= 1.0 - frac;
                }
            }
            let idx = entry_index(cfg, &coords, res) as usize;
            for k in 0..f {
                out[level * f + k] += w * values[(level * t + idx) * f + k];
            }
        }
    }
    out
}

/// Random valid config; dense tables are sized to hold every vertex.
pub fn random_config(rng: &mut impl Rng, kind: GridKind, dim: usize) -> EncodingConfig {
    let levels = rng.gen_range(1..=5);
    let features = rng.gen_range(1..=4);
    let (base, growth) = match kind {
        GridKind::Tiled => (rng.gen_range(4..=64), 1.0),
        _ => (rng.gen_range(1..=12), rng.gen_range(1.0..1.8)),
    };
    let mut table_size = 1u32 << rng.gen_range(3..=12);
    if kind == GridKind::Dense {
        let mut probe = EncodingConfig::new(kind, dim, base, growth, features, 2, levels).unwrap();
        let finest = resolution(&probe, levels - 1) as u64 + 1;
        probe.table_size = (finest.pow(dim as u32)).next_power_of_two() as u32;
        table_size = table_size.max(probe.table_size);
    }
    EncodingConfig::new(kind, dim, base, growth, features, table_size, levels).unwrap()
}

/// Mostly uniform points, with some snapped to grid vertices or the box faces.
pub fn random_point(rng: &mut impl Rng, dim: usize) -> Vec<f32> {
    (0..dim)
        .map(|_| match rng.gen_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            2 => rng.gen_range(0..=16) as f32 / 16.0,
            _ => rng.gen::<f32>(),
        })
        .collect()
}

/// Bias-free MLP forward in f64: ReLU hidden layers, `out` on the last.
pub fn mlp_f64(widths: &[usize], weights: &[Vec<f64>], out: fn(f64) -> f64, x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for (k, w) in weights.iter().enumerate() {
        let (n_in, n_out) = (widths[k], widths[k + 1]);
        let mut y = vec![0.0; n_out];
        for i in 0..n_out {
            for j in 0..n_in {
                y[i] += w[i * n_in + j] * a[j];
            }
            y[i] = if k + 1 == weights.len() { out(y[i]) } else { y[i].max(0.0) };
        }
        a = y;
    }
    a
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn identity(z: f64) -> f64 {
    z
}

/// `|a - b| <= rel * max(|a|, |b|, floor)`.
pub fn close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(floor)
}
