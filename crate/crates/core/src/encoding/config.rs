use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hashing constants used when a config does not override them.
pub const DEFAULT_PRIMES: [u32; 3] = [1, 2_654_435_761, 805_459_861];

/// How grid vertices are mapped onto table entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// Spatial hash of the vertex coordinates (multi-resolution hashgrid).
    Hash,
    /// One-to-one row-major mapping (multi-resolution densegrid).
    Dense,
    /// Row-major mapping wrapped into the table (low-resolution densegrid).
    Tiled,
}

impl GridKind {
    pub(crate) fn code(self) -> u32 {
        match self {
            GridKind::Hash => 0,
            GridKind::Dense => 1,
            GridKind::Tiled => 2,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(GridKind::Hash),
            1 => Some(GridKind::Dense),
            2 => Some(GridKind::Tiled),
            _ => None,
        }
    }
}

/// Storage precision of feature table values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    /// Values are rounded to IEEE binary16 on every write.
    F16,
}

impl Precision {
    pub(crate) fn code(self) -> u32 {
        match self {
            Precision::F32 => 0,
            Precision::F16 => 1,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Precision::F32),
            1 => Some(Precision::F16),
            _ => None,
        }
    }

    /// Rounds `v` to the nearest value representable in this precision.
    pub fn quantize(self, v: f32) -> f32 {
        match self {
            Precision::F32 => v,
            Precision::F16 => half::f16::from_f32(v).to_f32(),
        }
    }
}

/// Parameters of one parametric grid encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "EncodingConfigRepr")]
pub struct EncodingConfig {
    pub kind: GridKind,
    /// Input dimension, 2 or 3.
    pub dim: usize,
    /// Resolution of the coarsest level.
    pub base_resolution: u32,
    /// Per-level resolution growth factor.
    pub growth: f64,
    /// Features per table entry.
    pub features: usize,
    /// Entries per level; must be a power of two.
    pub table_size: u32,
    pub levels: usize,
    /// Hashing constants, one per dimension.
    pub primes: Vec<u32>,
    pub precision: Precision,
}

/// Serialized form; omitted primes default to the first `dim` constants.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EncodingConfigRepr {
    kind: GridKind,
    dim: usize,
    base_resolution: u32,
    growth: f64,
    features: usize,
    table_size: u32,
    levels: usize,
    #[serde(default)]
    primes: Option<Vec<u32>>,
    #[serde(default)]
    precision: Precision,
}

impl From<EncodingConfigRepr> for EncodingConfig {
    fn from(r: EncodingConfigRepr) -> Self {
        Self {
            kind: r.kind,
            dim: r.dim,
            base_resolution: r.base_resolution,
            growth: r.growth,
            features: r.features,
            table_size: r.table_size,
            levels: r.levels,
            primes: r
                .primes
                .unwrap_or_else(|| DEFAULT_PRIMES[..r.dim.min(DEFAULT_PRIMES.len())].to_vec()),
            precision: r.precision,
        }
    }
}

impl EncodingConfig {
    /// Builds and validates a config using the default hashing constants.
    pub fn new(
        kind: GridKind,
        dim: usize,
        base_resolution: u32,
        growth: f64,
        features: usize,
        table_size: u32,
        levels: usize,
    ) -> Result<Self> {
        let cfg = Self {
            kind,
            dim,
            base_resolution,
            growth,
            features,
            table_size,
            levels,
            primes: DEFAULT_PRIMES[..dim.min(3)].to_vec(),
            precision: Precision::F32,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    /// Width of the encoded feature vector, `levels * features`.
    pub fn output_width(&self) -> usize {
        self.levels * self.features
    }

    /// Number of grid corners blended per level.
    pub fn corners(&self) -> usize {
        1 << self.dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::config(format!("input dimension {} not in {{2, 3}}", self.dim)));
        }
        if self.base_resolution == 0 {
            return Err(Error::config("base resolution must be at least 1"));
        }
        if !self.growth.is_finite() || self.growth < 1.0 {
            return Err(Error::config(format!("growth factor {} must be >= 1", self.growth)));
        }
        if self.features == 0 {
            return Err(Error::config("features per entry must be at least 1"));
        }
        if self.levels == 0 {
            return Err(Error::config("at least one level is required"));
        }
        if !self.table_size.is_power_of_two() {
            return Err(Error::config(format!(
                "table size {} is not a power of two",
                self.table_size
            )));
        }
        if self.primes.len() != self.dim {
            return Err(Error::config(format!(
                "{} hashing constants given for dimension {}",
                self.primes.len(),
                self.dim
            )));
        }
        if self.primes[0] != 1 {
            return Err(Error::config("first hashing constant must be 1"));
        }
        for (i, p) in self.primes.iter().enumerate() {
            if p % 2 == 0 {
                return Err(Error::config(format!("hashing constant {p} is even")));
            }
            if self.primes[..i].contains(p) {
                return Err(Error::config(format!("hashing constant {p} repeated")));
            }
        }
        let finest = self.resolution_unchecked(self.levels - 1);
        if finest > u32::MAX as f64 - 1.0 {
            return Err(Error::config("finest level resolution overflows u32"));
        }
        Ok(())
    }

    fn resolution_unchecked(&self, level: usize) -> f64 {
        (self.base_resolution as f64 * self.growth.powi(level as i32)).floor()
    }

    /// Vertex count of a full dense grid at `level`, `(N + 1)^d`.
    pub fn dense_vertices(&self, level: usize) -> Result<u64> {
        let n = grid_scale(self, level)? as u64 + 1;
        Ok(n.saturating_pow(self.dim as u32))
    }

    /// Checks that a `Dense` grid stores every vertex of every level.
    pub fn check_dense_capacity(&self) -> Result<()> {
        if self.kind != GridKind::Dense {
            return Ok(());
        }
        for level in 0..self.levels {
            let needed = self.dense_vertices(level)?;
            if needed > self.table_size as u64 {
                return Err(Error::config(format!(
                    "dense level {level} needs {needed} entries but the table holds {}",
                    self.table_size
                )));
            }
        }
        Ok(())
    }
}

/// Resolution of `level`: `floor(base_resolution * growth^level)`.
pub fn grid_scale(config: &EncodingConfig, level: usize) -> Result<u32> {
    if level >= config.levels {
        return Err(Error::Range {
            what: "level",
            value: level,
            limit: config.levels,
        });
    }
    Ok(config.resolution_unchecked(level) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(base: u32, growth: f64, levels: usize) -> EncodingConfig {
        EncodingConfig::new(GridKind::Hash, 3, base, growth, 2, 1 << 19, levels).unwrap()
    }

    #[test]
    fn grid_scale_examples() {
        assert_eq!(grid_scale(&cfg(16, 1.51572, 16), 0).unwrap(), 16);
        assert_eq!(grid_scale(&cfg(128, 1.0, 2), 1).unwrap(), 128);
        // 16 * 1.51572^4 = 84.45...
        let oracle = (16.0 * 1.51572f64 * 1.51572 * 1.51572 * 1.51572).floor() as u32;
        assert_eq!(oracle, 84);
        assert_eq!(grid_scale(&cfg(16, 1.51572, 16), 4).unwrap(), oracle);
    }

    #[test]
    fn grid_scale_out_of_range() {
        let err = grid_scale(&cfg(16, 1.5, 4), 4).unwrap_err();
        assert!(matches!(err, Error::Range { value: 4, limit: 4, .. }));
    }

    #[test]
    fn grid_scale_non_decreasing() {
        let c = cfg(16, 1.38191, 16);
        let scales: Vec<u32> = (0..16).map(|l| grid_scale(&c, l).unwrap()).collect();
        assert!(scales.windows(2).all(|w| w[0] <= w[1]));
        assert!(scales.iter().all(|&s| s >= 16));
    }

    #[test]
    fn rejects_bad_configs() {
        let ok = cfg(16, 1.5, 4);
        let mut c = ok.clone();
        c.table_size = 3000;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = ok.clone();
        c.dim = 4;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.primes = vec![1, 7, 7];
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.primes = vec![1, 7];
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.primes = vec![3, 7, 11];
        assert!(c.validate().is_err());
        let mut c = ok;
        c.growth = 0.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn dense_capacity() {
        let c = EncodingConfig::new(GridKind::Dense, 2, 4, 2.0, 2, 1 << 10, 3).unwrap();
        // finest level 16 -> 17^2 = 289 <= 1024
        c.check_dense_capacity().unwrap();
        let c = EncodingConfig::new(GridKind::Dense, 3, 16, 1.405, 2, 1 << 19, 8).unwrap();
        assert!(c.check_dense_capacity().is_err());
    }
}
