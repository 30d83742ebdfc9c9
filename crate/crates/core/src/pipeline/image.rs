use std::io::{BufRead, Read, Write};

use crate::binio::{CrcReader, CrcWriter};
use crate::{Error, Result};

const PLANAR_MAGIC: &[u8; 4] = b"NGIP";

/// Interleaved RGB image with `f32` channels, row-major from the top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self> {
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::shape(format!(
                "{} values for a {width}x{height} RGB image",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f32; 3] {
        let o = 3 * (y as usize * self.width as usize + x as usize);
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    /// Binary PPM (P6, maxval 255). Channels are clamped to `[0, 1]` and
    /// rounded to the nearest 8-bit level.
    pub fn write_ppm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_ppm<R: BufRead>(mut r: R) -> Result<Self> {
        const WHAT: &str = "ppm image";
        let mut fields = Vec::with_capacity(4);
        let mut token = Vec::new();
        while fields.len() < 4 {
            let mut byte = [0u8; 1];
            if r.read(&mut byte)? == 0 {
                return Err(Error::format(WHAT, "truncated header"));
            }
            match byte[0] {
                b'#' if token.is_empty() => {
                    let mut skip = Vec::new();
                    r.read_until(b'\n', &mut skip)?;
                }
                c if c.is_ascii_whitespace() => {
                    if !token.is_empty() {
                        fields.push(String::from_utf8_lossy(&token).into_owned());
                        token.clear();
                    }
                }
                c => token.push(c),
            }
        }
        if fields[0] != "P6" {
            return Err(Error::format(WHAT, format!("magic {:?}", fields[0])));
        }
        let num = |s: &str| {
            s.parse::<u32>()
                .map_err(|_| Error::format(WHAT, format!("bad header field {s:?}")))
        };
        let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if maxval != 255 {
            return Err(Error::format(WHAT, format!("maxval {maxval}, only 255 is supported")));
        }
        let mut bytes = vec![0u8; width as usize * height as usize * 3];
        r.read_exact(&mut bytes).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::format(WHAT, "truncated pixel data"),
            _ => e.into(),
        })?;
        let data = bytes.iter().map(|&b| b as f32 / 255.0).collect();
        Ok(Self { width, height, data })
    }

    /// Planar `f32` dump: `"NGIP"`, width, height, channels, then one plane
    /// per channel, CRC-32 trailer. Little-endian.
    pub fn write_planar<W: Write>(&self, w: W) -> Result<()> {
        let mut w = CrcWriter::new(w);
        w.bytes(PLANAR_MAGIC)?;
        w.u32(self.width)?;
        w.u32(self.height)?;
        w.u32(3)?;
        for c in 0..3 {
            let plane: Vec<f32> = self.data.iter().skip(c).step_by(3).copied().collect();
            w.f32_slice(&plane)?;
        }
        w.finish()?;
        Ok(())
    }

    pub fn read_planar<R: Read>(r: R) -> Result<Self> {
        const WHAT: &str = "planar image";
        let mut r = CrcReader::new(r, WHAT);
        r.magic(PLANAR_MAGIC)?;
        let width = r.u32()?;
        let height = r.u32()?;
        let channels = r.u32()?;
        if channels != 3 {
            return Err(Error::format(WHAT, format!("{channels} channels")));
        }
        let n = width as usize * height as usize;
        let planes = (0..3).map(|_| r.f32_vec(n)).collect::<Result<Vec<_>>>()?;
        r.finish()?;
        let mut data = Vec::with_capacity(3 * n);
        for i in 0..n {
            data.extend(planes.iter().map(|p| p[i]));
        }
        Ok(Self { width, height, data })
    }
}
