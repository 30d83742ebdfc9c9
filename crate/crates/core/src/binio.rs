//! Little-endian primitives shared by the binary formats in this crate.
//!
//! Every format ends with a CRC-32 of all preceding bytes, so both halves
//! wrap the underlying stream and hash what passes through.

use std::io::{self, Read, Write};

use crate::{Error, Result};

pub(crate) struct CrcWriter<W> {
    inner: W,
    hasher: crc32fast::Hasher,
}

impl<W: Write> CrcWriter<W> {
    pub fn new(inner: W) -> Self {
        Self {
            inner,
            hasher: crc32fast::Hasher::new(),
        }
    }

    pub fn bytes(&mut self, buf: &[u8]) -> io::Result<()> {
        self.hasher.update(buf);
        self.inner.write_all(buf)
    }

    pub fn u32(&mut self, v: u32) -> io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f32_slice(&mut self, vs: &[f32]) -> io::Result<()> {
        let mut buf = Vec::with_capacity(vs.len() * 4);
        for v in vs {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        self.bytes(&buf)
    }

    pub fn f16_slice(&mut self, vs: &[f32]) -> io::Result<()> {
        let mut buf = Vec::with_capacity(vs.len() * 2);
        for v in vs {
            buf.extend_from_slice(&half::f16::from_f32(*v).to_bits().to_le_bytes());
        }
        self.bytes(&buf)
    }

    /// Writes the checksum trailer and returns the inner writer.
    pub fn finish(mut self) -> io::Result<W> {
        let crc = self.hasher.clone().finalize();
        self.inner.write_all(&crc.to_le_bytes())?;
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub(crate) struct CrcReader<R> {
    inner: R,
    hasher: crc32fast::Hasher,
    what: &'static str,
}

impl<R: Read> CrcReader<R> {
    pub fn new(inner: R, what: &'static str) -> Self {
        Self {
            inner,
            hasher: crc32fast::Hasher::new(),
            what,
        }
    }

    pub fn bytes(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| self.truncated(e))?;
        self.hasher.update(buf);
        Ok(())
    }

    fn truncated(&self, e: io::Error) -> Error {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::format(self.what, "unexpected end of data")
        } else {
            Error::Io(e)
        }
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let mut m = [0u8; 4];
        self.bytes(&mut m)?;
        if &m != expected {
            return Err(Error::format(self.what, format!("bad magic {m:?}")));
        }
        Ok(())
    }

    pub fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.bytes(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.bytes(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    pub fn f32_vec(&mut self, n: usize) -> Result<Vec<f32>> {
        let mut buf = vec![0u8; n * 4];
        self.bytes(&mut buf)?;
        Ok(buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    pub fn f16_vec(&mut self, n: usize) -> Result<Vec<f32>> {
        let mut buf = vec![0u8; n * 2];
        self.bytes(&mut buf)?;
        Ok(buf
            .chunks_exact(2)
            .map(|c| half::f16::from_bits(u16::from_le_bytes([c[0], c[1]])).to_f32())
            .collect())
    }

    /// Reads the trailer and compares it against everything read so far.
    pub fn finish(mut self) -> Result<()> {
        let computed = self.hasher.clone().finalize();
        let mut b = [0u8; 4];
        self.inner.read_exact(&mut b).map_err(|e| self.truncated(e))?;
        let stored = u32::from_le_bytes(b);
        if stored != computed {
            return Err(Error::Checksum {
                what: self.what,
                stored,
                computed,
            });
        }
        Ok(())
    }
}
