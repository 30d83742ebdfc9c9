//! Oracle comparisons behind `ngpc verify`.
//!
//! Every check compares a library routine against a straight-line
//! re-implementation in this module. `fast` runs a few hundred cases per
//! check, `full` the acceptance-scale counts.

use std::fmt;
use std::str::FromStr;

use ngpc_core::encoding::{corner_set, encode_backward, encode_point, hash_index, EncodingConfig, FeatureTable, GridKind};
use ngpc_core::mlp::{MlpModel, OutputActivation};
use ngpc_core::pipeline::composite_ray;
use ngpc_core::Error;
use ngpc_perf::{area_power, bandwidth_model, sweep, AppProfile, ArchParams, SWEEP_NFP_COUNTS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyLevel {
    Fast,
    Full,
}

impl FromStr for VerifyLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fast" => Ok(VerifyLevel::Fast),
            "full" => Ok(VerifyLevel::Full),
            _ => Err(format!("unknown verify level {s:?} (fast or full)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {} ({} cases)", self.name, self.cases)?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

fn outcome(name: &'static str, cases: usize, failure: Option<String>) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: failure.is_none(),
        cases,
        detail: failure.unwrap_or_default(),
    }
}

pub fn run_checks(level: VerifyLevel, seed: u64) -> Vec<CheckOutcome> {
    let n = |fast: usize, full: usize| if level == VerifyLevel::Fast { fast } else { full };
    vec![
        check_hash(n(500, 10_000), seed),
        check_mask_modulo(n(1 << 14, 1 << 20)),
        check_encode(n(300, 10_000), seed),
        check_partition_of_unity(n(500, 10_000), seed),
        check_mlp_forward(n(100, 1000), seed),
        check_encode_gradients(n(20, 100), seed),
        check_mlp_gradients(n(20, 100), seed),
        check_compositing(n(200, 5000), seed),
        check_perf_invariants(),
        check_checkpoint_corruption(seed),
        check_table_mutation(seed),
    ]
}

/// Level resolution by repeated multiplication.
pub fn oracle_resolution(cfg: &EncodingConfig, level: usize) -> u32 {
    let mut r = cfg.base_resolution as f64;
    for _ in 0..level {
        r *= cfg.growth;
    }
    r.floor() as u32
}

/// Hash with 64-bit products reduced mod 2^32 and a true modulo.
pub fn oracle_hash(coords: &[u32], primes: &[u32], table_size: u32) -> u32 {
    let h = coords
        .iter()
        .zip(primes)
        .fold(0u64, |h, (c, p)| h ^ ((*c as u64 * *p as u64) % (1 << 32)));
    (h % table_size as u64) as u32
}

fn oracle_entry(cfg: &EncodingConfig, coords: &[u32], res: u32) -> usize {
    match cfg.kind {
        GridKind::Hash => oracle_hash(coords, &cfg.primes, cfg.table_size) as usize,
        GridKind::Dense | GridKind::Tiled => {
            let side = res as u64 + 1;
            let idx: u64 = coords.iter().rev().fold(0, |acc, &c| acc * side + c as u64);
            if cfg.kind == GridKind::Tiled {
                (idx % cfg.table_size as u64) as usize
            } else {
                idx as usize
            }
        }
    }
}

/// Brute-force encode: corners in ascending number, weights as products
/// over ascending axes from 1, features accumulated from 0 in f32.
pub fn oracle_encode(cfg: &EncodingConfig, values: &[f32], pos: &[f32]) -> Vec<f32> {
    let f = cfg.features;
    let t = cfg.table_size as usize;
    let mut out = vec![0.0f32; cfg.levels * f];
    for level in 0..cfg.levels {
        let res = oracle_resolution(cfg, level);
        let cells: Vec<(u32, f32)> = pos
            .iter()
            .map(|&x| {
                let p = x * res as f32;
                let base = (p.floor() as u32).min(res - 1);
                (base, p - base as f32)
            })
            .collect();
        for corner in 0..1usize << cfg.dim {
            let mut coords = Vec::with_capacity(cfg.dim);
            let mut w = 1.0f32;
            for (axis, &(base, frac)) in cells.iter().enumerate() {
                let up = corner >> axis & 1 == 1;
                coords.push(base + up as u32);
                w *= if up { frac } else { 1.0 - frac };
            }
            let idx = oracle_entry(cfg, &coords, res);
            for k in 0..f {
                out[level * f + k] += w * values[(level * t + idx) * f + k];
            }
        }
    }
    out
}

/// Random valid config; dense tables are sized to hold every vertex.
pub fn random_encoding(rng: &mut impl Rng, kind: GridKind, dim: usize) -> EncodingConfig {
    let levels = rng.gen_range(1..=5);
    let features = rng.gen_range(1..=4);
    let (base, growth) = match kind {
        GridKind::Tiled => (rng.gen_range(4..=64), 1.0),
        _ => (rng.gen_range(1..=12), rng.gen_range(1.0..1.8)),
    };
    let mut table_size = 1u32 << rng.gen_range(3..=12);
    if kind == GridKind::Dense {
        let probe = EncodingConfig::new(kind, dim, base, growth, features, 2, levels).expect("valid probe");
        let side = oracle_resolution(&probe, levels - 1) as u64 + 1;
        table_size = table_size.max(side.pow(dim as u32).next_power_of_two() as u32);
    }
    EncodingConfig::new(kind, dim, base, growth, features, table_size, levels).expect("valid random config")
}

/// Mostly uniform points, some snapped to the faces or to k/16.
pub fn random_point(rng: &mut impl Rng, dim: usize) -> Vec<f32> {
    (0..dim)
        .map(|_| match rng.gen_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            2 => rng.gen_range(0..=16) as f32 / 16.0,
            _ => rng.gen(),
        })
        .collect()
}

const KINDS: [GridKind; 3] = [GridKind::Hash, GridKind::Dense, GridKind::Tiled];

fn check_hash(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let dim = rng.gen_range(1..=3);
        let coords: Vec<u32> = (0..dim).map(|_| rng.gen()).collect();
        let primes: Vec<u32> = (0..dim).map(|_| rng.gen()).collect();
        let t = 1u32 << rng.gen_range(0..=31);
        let got = hash_index(&coords, &primes, t);
        if got.as_ref().ok() != Some(&oracle_hash(&coords, &primes, t)) {
            return outcome("hash index", cases, Some(format!("{coords:?} {primes:?} T={t}: {got:?}")));
        }
    }
    outcome("hash index", cases, None)
}

fn check_mask_modulo(hs: usize) -> CheckOutcome {
    let mut mismatches = 0usize;
    for k in 1..=19 {
        let t = 1u32 << k;
        mismatches += (0..hs as u32).filter(|h| h & (t - 1) != h % t).count();
    }
    let fail = (mismatches > 0).then(|| format!("{mismatches} mismatches"));
    outcome("mask equals modulo", hs * 19, fail)
}

fn check_encode(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe1);
    for i in 0..cases {
        let cfg = random_encoding(&mut rng, KINDS[i % 3], 2 + i % 2);
        let table = FeatureTable::random(cfg.clone(), 1.0, rng.gen()).expect("table");
        let pos = random_point(&mut rng, cfg.dim);
        let got = encode_point(&pos, &table).expect("encode");
        let want = oracle_encode(&cfg, table.values(), &pos);
        if !bit_equal(got.as_slice(), &want) {
            return outcome("encode oracle", cases, Some(format!("case {i} {:?} at {pos:?}", cfg.kind)));
        }
    }
    outcome("encode oracle", cases, None)
}

fn bit_equal(a: &[f32], b: &[f32]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn check_partition_of_unity(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe2);
    for _ in 0..cases {
        let dim = rng.gen_range(1..=3);
        let pos = random_point(&mut rng, dim);
        let res = rng.gen_range(1..=512);
        let cs = corner_set(&pos, res).expect("corner set");
        let sum: f64 = cs.weights().iter().map(|&w| w as f64).sum();
        if (sum - 1.0).abs() > 1e-6 || cs.weights().iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return outcome("interpolation weights", cases, Some(format!("{pos:?} N={res}: sum {sum}")));
        }
    }
    outcome("interpolation weights", cases, None)
}

fn mlp_f64(m: &MlpModel, weights: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let widths = m.widths();
    let mut a = x.to_vec();
    for (k, w) in weights.iter().enumerate() {
        let (n_in, n_out) = (widths[k], widths[k + 1]);
        a = (0..n_out)
            .map(|i| {
                let z: f64 = (0..n_in).map(|j| w[i * n_in + j] * a[j]).sum();
                if k + 1 < weights.len() {
                    z.max(0.0)
                } else {
                    match m.output_activation() {
                        OutputActivation::Identity => z,
                        OutputActivation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
                        OutputActivation::Exp => z.exp(),
                    }
                }
            })
            .collect();
    }
    a
}

fn weights_f64(m: &MlpModel) -> Vec<Vec<f64>> {
    m.weights().iter().map(|w| w.iter().map(|&v| v as f64).collect()).collect()
}

const ACTS: [OutputActivation; 3] = [OutputActivation::Identity, OutputActivation::Sigmoid, OutputActivation::Exp];

fn random_mlp(rng: &mut impl Rng, i: usize) -> MlpModel {
    let n_in = rng.gen_range(1..=32);
    let hidden = rng.gen_range(0..=3);
    let mut widths = vec![n_in];
    widths.extend((0..hidden).map(|_| rng.gen_range(2..=64)));
    widths.push(rng.gen_range(1..=4));
    MlpModel::random(widths, ACTS[i % 3], rng.gen()).expect("mlp")
}

fn check_mlp_forward(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe3);
    for i in 0..cases {
        let m = random_mlp(&mut rng, i);
        let x: Vec<f32> = (0..m.input_width()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = m.forward(&x).expect("forward");
        let want = mlp_f64(&m, &weights_f64(&m), &x.iter().map(|&v| v as f64).collect::<Vec<_>>());
        if got.iter().zip(&want).any(|(a, b)| (*a as f64 - b).abs() > 1e-5 * b.abs().max(1.0)) {
            return outcome("mlp forward", cases, Some(format!("case {i}: {got:?} vs {want:?}")));
        }
    }
    outcome("mlp forward", cases, None)
}

/// `|a - b| <= rel * max(|a|, |b|, floor)`.
fn close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(floor)
}

fn check_encode_gradients(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe4);
    let h = 1e-3;
    for i in 0..cases {
        let cfg = random_encoding(&mut rng, KINDS[i % 3], 2 + i % 2);
        let table = FeatureTable::random(cfg.clone(), 1.0, rng.gen()).expect("table");
        let pos = random_point(&mut rng, cfg.dim);
        let up: Vec<f32> = (0..cfg.output_width()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let grad = encode_backward(&pos, &table, &up).expect("backward");
        let values: Vec<f64> = table.values().iter().map(|&v| v as f64).collect();
        let loss = |vals: &[f64]| -> f64 {
            encode_f64(&cfg, vals, &pos).iter().zip(&up).map(|(e, u)| e * *u as f64).sum()
        };
        let f = cfg.features;
        let level_len = cfg.table_size as usize * f;
        for ((level, idx), g) in grad.iter() {
            for k in 0..f {
                let o = level * level_len + idx as usize * f + k;
                let (mut p, mut q) = (values.clone(), values.clone());
                p[o] += h;
                q[o] -= h;
                let fd = (loss(&p) - loss(&q)) / (2.0 * h);
                if !close(g[k] as f64, fd, 1e-4, 1e-3) {
                    return outcome("encode gradient", cases, Some(format!("case {i}: {} vs {fd}", g[k])));
                }
            }
        }
    }
    outcome("encode gradient", cases, None)
}

fn encode_f64(cfg: &EncodingConfig, values: &[f64], pos: &[f32]) -> Vec<f64> {
    let f = cfg.features;
    let t = cfg.table_size as usize;
    let mut out = vec![0.0f64; cfg.levels * f];
    for level in 0..cfg.levels {
        let res = oracle_resolution(cfg, level);
        for corner in 0..1usize << cfg.dim {
            let mut coords = Vec::with_capacity(cfg.dim);
            let mut w = 1.0f64;
            for (axis, &x) in pos.iter().enumerate() {
                let p = x * res as f32;
                let base = (p.floor() as u32).min(res - 1);
                let frac = (p - base as f32) as f64;
                let up = corner >> axis & 1 == 1;
                coords.push(base + up as u32);
                w *= if up { frac } else { 1.0 - frac };
            }
            let idx = oracle_entry(cfg, &coords, res);
            for k in 0..f {
                out[level * f + k] += w * values[(level * t + idx) * f + k];
            }
        }
    }
    out
}

fn check_mlp_gradients(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe5);
    let h = 1e-6;
    for i in 0..cases {
        let n_in = rng.gen_range(1..=12);
        let mut widths = vec![n_in];
        widths.extend((0..rng.gen_range(0..=3)).map(|_| rng.gen_range(2..=16)));
        widths.push(rng.gen_range(1..=4));
        let m = MlpModel::random(widths, ACTS[i % 3], rng.gen()).expect("mlp");
        let x: Vec<f32> = (0..n_in).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let up: Vec<f32> = (0..m.output_width()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = m.backward(&x, &up).expect("backward");
        let w = weights_f64(&m);
        let xd: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let loss = |w: &[Vec<f64>], x: &[f64]| -> f64 {
            mlp_f64(&m, w, x).iter().zip(&up).map(|(y, u)| y * *u as f64).sum()
        };
        let mut fd = Vec::new();
        for k in 0..w.len() {
            for j in 0..w[k].len() {
                let (mut p, mut q) = (w.clone(), w.clone());
                p[k][j] += h;
                q[k][j] -= h;
                fd.push((loss(&p, &xd) - loss(&q, &xd)) / (2.0 * h));
            }
        }
        for j in 0..n_in {
            let (mut p, mut q) = (xd.clone(), xd.clone());
            p[j] += h;
            q[j] -= h;
            fd.push((loss(&w, &p) - loss(&w, &q)) / (2.0 * h));
        }
        let analytic = g.weights.iter().flatten().chain(&g.input).map(|&v| v as f64);
        let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in analytic.zip(&fd) {
            if !close(a, *b, 1e-4, 1e-2 * scale) {
                return outcome("mlp gradient", cases, Some(format!("case {i}: {a} vs {b}")));
            }
        }
    }
    outcome("mlp gradient", cases, None)
}

fn check_compositing(cases: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe6);
    for i in 0..cases {
        let n = rng.gen_range(1..=16);
        let deltas: Vec<f32> = (0..n).map(|_| rng.gen_range(0.001..0.5)).collect();
        let sigmas: Vec<f32> = (0..n).map(|_| rng.gen_range(0.0..20.0)).collect();
        let colors: Vec<[f32; 3]> = (0..n).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        let got = composite_ray(&deltas, &sigmas, &colors).expect("composite");
        // closed form: T_i = exp(-sum_{j<i} sigma_j delta_j)
        let mut want = [0.0f64; 3];
        let mut optical = 0.0f64;
        for k in 0..n {
            let (s, d) = (sigmas[k] as f64, deltas[k] as f64);
            let w = (-optical).exp() * (1.0 - (-s * d).exp());
            for c in 0..3 {
                want[c] += w * colors[k][c] as f64;
            }
            optical += s * d;
        }
        if (0..3).any(|c| (got.color[c] as f64 - want[c]).abs() > 1e-5) {
            return outcome("compositing", cases, Some(format!("case {i}: {:?} vs {want:?}", got.color)));
        }
    }
    outcome("compositing", cases, None)
}

fn check_perf_invariants() -> CheckOutcome {
    let archs: Vec<ArchParams> = SWEEP_NFP_COUNTS.iter().map(|&n| ArchParams::with_nfp_count(n)).collect();
    let profiles = AppProfile::all_presets();
    let reports = match sweep(&profiles, &archs) {
        Ok(r) => r,
        Err(e) => return outcome("perf invariants", 0, Some(e.to_string())),
    };
    let cases = reports.len() + profiles.len() + archs.len();
    if let Some(r) = reports.iter().find(|r| !(r.speedup <= r.amdahl_bound)) {
        return outcome("perf invariants", cases, Some(format!("{} {} N={} above bound", r.app, r.encoding, r.nfp_count)));
    }
    for p in &profiles {
        let b = bandwidth_model(p, &ArchParams::default(), 60.0).expect("bandwidth");
        let identity_ms = b.total_gb_s / 60.0 / 936.2 * 1e3;
        if (b.access_time_ms - identity_ms).abs() > 1e-3 {
            return outcome("perf invariants", cases, Some(format!("{} access time {}", p.app, b.access_time_ms)));
        }
    }
    let anchors = [(4.52, 2.75), (9.04, 5.51), (18.01, 11.03), (36.18, 22.06)];
    for (a, (area, power)) in archs.iter().zip(anchors) {
        let (x, y) = area_power(a);
        if (x - area).abs() > 0.01 || (y - power).abs() > 0.01 {
            return outcome("perf invariants", cases, Some(format!("N={} area/power {x}/{y}", a.nfp_count)));
        }
    }
    outcome("perf invariants", cases, None)
}

/// Flipping one payload byte of a saved checkpoint must be caught by the
/// checksum.
fn check_checkpoint_corruption(seed: u64) -> CheckOutcome {
    let m = MlpModel::random(vec![8, 16, 3], OutputActivation::Sigmoid, seed).expect("mlp");
    let mut bytes = Vec::new();
    m.write_checkpoint(&mut bytes).expect("write");
    let clean = MlpModel::read_checkpoint(bytes.as_slice());
    if clean.as_ref().ok() != Some(&m) {
        return outcome("checkpoint corruption", 2, Some("clean checkpoint did not round-trip".into()));
    }
    let at = bytes.len() / 2;
    bytes[at] ^= 0x40;
    match MlpModel::read_checkpoint(bytes.as_slice()) {
        Err(Error::Checksum { .. }) => outcome("checkpoint corruption", 2, None),
        other => outcome("checkpoint corruption", 2, Some(format!("corrupted byte {at} gave {other:?}"))),
    }
}

/// Perturbing one table entry a point touches must make the library
/// disagree with the oracle run on the pristine values.
fn check_table_mutation(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe7);
    let cfg = EncodingConfig::new(GridKind::Hash, 3, 4, 1.5, 2, 1 << 10, 4).expect("config");
    let mut table = FeatureTable::random(cfg.clone(), 1.0, rng.gen()).expect("table");
    let pristine = table.values().to_vec();
    let pos = [0.3f32, 0.6, 0.2];
    let clean = encode_point(&pos, &table).expect("encode");
    if !bit_equal(clean.as_slice(), &oracle_encode(&cfg, &pristine, &pos)) {
        return outcome("table mutation", 2, Some("pristine table already disagrees".into()));
    }
    let grad = encode_backward(&pos, &table, &vec![1.0; cfg.output_width()]).expect("backward");
    let touched: Vec<(usize, u32)> = grad.iter().map(|(k, _)| k).collect();
    let (level, idx) = touched[rng.gen_range(0..touched.len())];
    let mut entry = table.entry(level, idx).to_vec();
    entry[0] += 0.5;
    table.set_entry(level, idx, &entry).expect("set entry");
    let mutated = encode_point(&pos, &table).expect("encode");
    let detail = (bit_equal(mutated.as_slice(), &oracle_encode(&cfg, &pristine, &pos)))
        .then(|| format!("mutating entry ({level}, {idx}) went unnoticed"));
    outcome("table mutation", 2, detail)
}
