use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{EncodingConfig, GridKind, Precision};
use crate::binio::{CrcReader, CrcWriter};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"NGFT";
const VERSION: u32 = 1;

/// Trainable per-level feature storage: `levels` blocks of `table_size`
/// entries, each `features` wide, stored level-major in one buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    config: EncodingConfig,
    data: Vec<f32>,
}

impl FeatureTable {
    pub fn zeros(config: EncodingConfig) -> Result<Self> {
        Self::filled(config, 0.0)
    }

    pub fn filled(config: EncodingConfig, value: f32) -> Result<Self> {
        Self::check_config(&config)?;
        if !value.is_finite() {
            return Err(Error::domain("table values must be finite"));
        }
        let value = config.precision.quantize(value);
        let len = Self::expected_len(&config);
        Ok(Self {
            data: vec![value; len],
            config,
        })
    }

    /// Uniform values in `[-scale, scale]` from a seeded stream.
    pub fn random(config: EncodingConfig, scale: f32, seed: u64) -> Result<Self> {
        Self::check_config(&config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = config.precision;
        let data = (0..Self::expected_len(&config))
            .map(|_| p.quantize(rng.gen_range(-scale..=scale)))
            .collect();
        Ok(Self { config, data })
    }

    pub fn from_values(config: EncodingConfig, mut data: Vec<f32>) -> Result<Self> {
        Self::check_config(&config)?;
        let expected = Self::expected_len(&config);
        if data.len() != expected {
            return Err(Error::shape(format!(
                "{} table values given, {} expected",
                data.len(),
                expected
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("table values must be finite"));
        }
        for v in &mut data {
            *v = config.precision.quantize(*v);
        }
        Ok(Self { config, data })
    }

    fn check_config(config: &EncodingConfig) -> Result<()> {
        config.validate()?;
        config.check_dense_capacity()
    }

    fn expected_len(config: &EncodingConfig) -> usize {
        config.levels * config.table_size as usize * config.features
    }

    pub fn config(&self) -> &EncodingConfig {
        &self.config
    }

    pub fn values(&self) -> &[f32] {
        &self.data
    }

    pub fn level(&self, level: usize) -> &[f32] {
        let n = self.level_len();
        &self.data[level * n..(level + 1) * n]
    }

    fn level_len(&self) -> usize {
        self.config.table_size as usize * self.config.features
    }

    pub(crate) fn offset(&self, level: usize, index: u32) -> usize {
        level * self.level_len() + index as usize * self.config.features
    }

    pub fn entry(&self, level: usize, index: u32) -> &[f32] {
        let o = self.offset(level, index);
        &self.data[o..o + self.config.features]
    }

    /// Overwrites one entry, rounding to the table precision.
    pub fn set_entry(&mut self, level: usize, index: u32, values: &[f32]) -> Result<()> {
        if level >= self.config.levels {
            return Err(Error::Range {
                what: "level",
                value: level,
                limit: self.config.levels,
            });
        }
        if index >= self.config.table_size {
            return Err(Error::Range {
                what: "entry index",
                value: index as usize,
                limit: self.config.table_size as usize,
            });
        }
        if values.len() != self.config.features {
            return Err(Error::shape(format!(
                "{} features given, entry holds {}",
                values.len(),
                self.config.features
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("table values must be finite"));
        }
        let o = self.offset(level, index);
        let p = self.config.precision;
        for (dst, v) in self.data[o..o + values.len()].iter_mut().zip(values) {
            *dst = p.quantize(*v);
        }
        Ok(())
    }

    /// `self -= lr * grad` elementwise over the dense gradient layout.
    pub(crate) fn apply_dense_update(&mut self, grad: &[f32], lr: f32) {
        debug_assert_eq!(grad.len(), self.data.len());
        let p = self.config.precision;
        for (v, g) in self.data.iter_mut().zip(grad) {
            *v = p.quantize(*v - lr * g);
        }
    }

    /// Serializes header and level-major payload, little-endian, with a
    /// CRC-32 trailer.
    ///
    /// Layout: `"NGFT"`, version, kind, dim, base resolution, growth (f64),
    /// features, table size, levels, precision, `dim` hashing constants, then
    /// `levels * table_size * features` values (f32 or f16 bits), then CRC.
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let c = &self.config;
        let mut w = CrcWriter::new(w);
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        w.u32(c.kind.code())?;
        w.u32(c.dim as u32)?;
        w.u32(c.base_resolution)?;
        w.f64(c.growth)?;
        w.u32(c.features as u32)?;
        w.u32(c.table_size)?;
        w.u32(c.levels as u32)?;
        w.u32(c.precision.code())?;
        for &p in &c.primes {
            w.u32(p)?;
        }
        match c.precision {
            Precision::F32 => w.f32_slice(&self.data)?,
            Precision::F16 => w.f16_slice(&self.data)?,
        }
        w.finish()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        const WHAT: &str = "feature table";
        let mut r = CrcReader::new(r, WHAT);
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::format(WHAT, format!("unsupported version {version}")));
        }
        let kind_code = r.u32()?;
        let kind = GridKind::from_code(kind_code)
            .ok_or_else(|| Error::format(WHAT, format!("unknown grid kind {kind_code}")))?;
        let dim = r.u32()? as usize;
        if !(2..=3).contains(&dim) {
            return Err(Error::format(WHAT, format!("dimension {dim}")));
        }
        let base_resolution = r.u32()?;
        let growth = r.f64()?;
        let features = r.u32()? as usize;
        let table_size = r.u32()?;
        let levels = r.u32()? as usize;
        let prec_code = r.u32()?;
        let precision = Precision::from_code(prec_code)
            .ok_or_else(|| Error::format(WHAT, format!("unknown precision {prec_code}")))?;
        let primes = (0..dim).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let config = EncodingConfig {
            kind,
            dim,
            base_resolution,
            growth,
            features,
            table_size,
            levels,
            primes,
            precision,
        };
        Self::check_config(&config)?;
        let n = Self::expected_len(&config);
        let data = match precision {
            Precision::F32 => r.f32_vec(n)?,
            Precision::F16 => r.f16_vec(n)?,
        };
        r.finish()?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(WHAT, "non-finite value in payload"));
        }
        Ok(Self { config, data })
    }
}
