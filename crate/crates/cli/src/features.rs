//! Encoded-feature files.
//!
//! Layout, little-endian: `"NGEF"`, version, point count, input dimension,
//! feature width, then `count * width` f32 values point-major, then a CRC-32
//! of everything before it. The same trailer convention as feature tables.

use std::io::{self, BufRead, Read, Write};

use anyhow::{bail, ensure, Context, Result};

const MAGIC: &[u8; 4] = b"NGEF";
const VERSION: u32 = 1;

/// Streams feature rows to a writer, hashing as it goes.
pub struct FeatureWriter<W: Write> {
    inner: W,
    hasher: crc32fast::Hasher,
    remaining: u64,
    width: usize,
}

impl<W: Write> FeatureWriter<W> {
    pub fn new(mut inner: W, count: u32, dim: u32, width: u32) -> io::Result<Self> {
        let mut hasher = crc32fast::Hasher::new();
        let mut head = Vec::with_capacity(20);
        head.extend_from_slice(MAGIC);
        for v in [VERSION, count, dim, width] {
            head.extend_from_slice(&v.to_le_bytes());
        }
        hasher.update(&head);
        inner.write_all(&head)?;
        Ok(Self {
            inner,
            hasher,
            remaining: count as u64,
            width: width as usize,
        })
    }

    pub fn write_row(&mut self, row: &[f32]) -> Result<()> {
        ensure!(row.len() == self.width, "row of {} values, expected {}", row.len(), self.width);
        ensure!(self.remaining > 0, "more rows than the header announced");
        let mut buf = Vec::with_capacity(row.len() * 4);
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        self.hasher.update(&buf);
        self.inner.write_all(&buf)?;
        self.remaining -= 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        ensure!(self.remaining == 0, "{} rows missing", self.remaining);
        let crc = self.hasher.clone().finalize();
        self.inner.write_all(&crc.to_le_bytes())?;
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Decoded feature file.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub dim: u32,
    pub width: u32,
    /// Point-major values.
    pub values: Vec<f32>,
}

impl FeatureFile {
    pub fn count(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.values.len() / self.width as usize
        }
    }

    pub fn row(&self, i: usize) -> &[f32] {
        let w = self.width as usize;
        &self.values[i * w..(i + 1) * w]
    }
}

pub fn read_features<R: Read>(mut r: R) -> Result<FeatureFile> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    ensure!(bytes.len() >= 24, "feature file truncated");
    ensure!(&bytes[..4] == MAGIC, "bad magic {:?}", &bytes[..4]);
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(trailer.try_into().unwrap());
    let computed = crc32fast::hash(body);
    ensure!(stored == computed, "checksum mismatch: stored {stored:#010x}, computed {computed:#010x}");
    let word = |i: usize| u32::from_le_bytes(body[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    ensure!(word(0) == VERSION, "unsupported version {}", word(0));
    let (count, dim, width) = (word(1) as usize, word(2), word(3));
    let payload = &body[20..];
    ensure!(
        payload.len() == count * width as usize * 4,
        "payload of {} bytes for {count} rows of {width}",
        payload.len()
    );
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(FeatureFile { dim, width, values })
}

/// Parses one point per line, coordinates separated by whitespace or commas.
/// Blank lines and `#` comments are skipped.
pub fn read_points<R: BufRead>(r: R, dim: usize) -> Result<Vec<Vec<f32>>> {
    let mut points = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let coords = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f32>().with_context(|| format!("line {}: bad number {s:?}", n + 1)))
            .collect::<Result<Vec<_>>>()?;
        if coords.len() != dim {
            bail!("line {}: {} coordinates, expected {dim}", n + 1, coords.len());
        }
        points.push(coords);
    }
    Ok(points)
}
