use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PerfError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Application {
    Nerf,
    Nsdf,
    Nvr,
    Gia,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingKind {
    /// Multi-resolution hashgrid.
    Mrhg,
    /// Multi-resolution densegrid.
    Mrdg,
    /// Low-resolution densegrid.
    Lrdg,
}

impl Application {
    pub const ALL: [Application; 4] = [
        Application::Nerf,
        Application::Nsdf,
        Application::Nvr,
        Application::Gia,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Application::Nerf => "nerf",
            Application::Nsdf => "nsdf",
            Application::Nvr => "nvr",
            Application::Gia => "gia",
        }
    }
}

impl EncodingKind {
    pub const ALL: [EncodingKind; 3] = [EncodingKind::Mrhg, EncodingKind::Mrdg, EncodingKind::Lrdg];

    pub fn name(self) -> &'static str {
        match self {
            EncodingKind::Mrhg => "mrhg",
            EncodingKind::Mrdg => "mrdg",
            EncodingKind::Lrdg => "lrdg",
        }
    }

    pub fn levels(self) -> u32 {
        match self {
            EncodingKind::Mrhg => 16,
            EncodingKind::Mrdg => 8,
            EncodingKind::Lrdg => 2,
        }
    }

    /// Encoding-average `(ie, mlp)` fractions of GPU frame time.
    pub fn average_fractions(self) -> (f64, f64) {
        match self {
            EncodingKind::Mrhg => (0.4024, 0.3212),
            EncodingKind::Mrdg => (0.2463, 0.3537),
            EncodingKind::Lrdg => (0.2415, 0.3581),
        }
    }
}

impl fmt::Display for Application {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Application {
    type Err = PerfError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| PerfError::Profile(format!("unknown application {s:?}")))
    }
}

impl std::str::FromStr for EncodingKind {
    type Err = PerfError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| PerfError::Profile(format!("unknown encoding {s:?}")))
    }
}

/// Full-HD pixel count, the resolution baselines are quoted at.
pub const FHD_PIXELS: u64 = 1920 * 1080;

/// Measured GPU behaviour of one application and encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppProfile {
    pub app: Application,
    pub encoding: EncodingKind,
    /// Grid levels L.
    pub levels: u32,
    /// Encoded coordinate dimension d.
    pub input_dim: u32,
    pub frac_ie: f64,
    pub frac_mlp: f64,
    pub frac_rest: f64,
    /// GPU frame time at `reference_pixels`.
    pub baseline_frame_ms: f64,
    pub reference_pixels: u64,
    /// Pixels of the frame being modeled.
    pub frame_pixels: u64,
    /// Encoding + MLP queries per pixel.
    pub samples_per_pixel: f64,
    /// Weight matrices of each network run per query.
    pub mlp_layer_transitions: Vec<u32>,
    /// Host-to-device bytes per pixel per network pass.
    pub bytes_per_input_element: f64,
    /// Device-to-host bytes per pixel per network pass.
    pub bytes_per_output_element: f64,
    pub network_passes: u32,
}

/// Per-app share of frame time outside the IE and MLP kernels.
fn rest_fraction(app: Application, enc: EncodingKind) -> f64 {
    use Application::*;
    use EncodingKind::*;
    match (enc, app) {
        (Mrhg, Nerf) => 0.22,
        (Mrhg, Nsdf) => 0.12,
        (Mrhg, Nvr) => 0.50,
        (Mrhg, Gia) => 0.2656,
        (Mrdg, Nerf) => 0.25,
        (Mrdg, Nsdf) => 0.55,
        (Mrdg, Nvr) => 0.30,
        (Mrdg, Gia) => 0.50,
        (Lrdg, Nerf) => 0.35,
        (Lrdg, Nsdf) => 0.60,
        (Lrdg, Nvr) => 0.60,
        (Lrdg, Gia) => 0.0516,
    }
}

fn baseline_ms(app: Application, enc: EncodingKind) -> f64 {
    use Application::*;
    use EncodingKind::*;
    match (app, enc) {
        (Nerf, Mrhg) => 231.0,
        (Nerf, _) => 162.0,
        (Nsdf, Mrhg) => 27.87,
        (Nsdf, Mrdg) => 17.57,
        (Nsdf, Lrdg) => 18.88,
        (Nvr, Mrhg) => 6.32,
        (Nvr, Mrdg) => 4.73,
        (Nvr, Lrdg) => 5.05,
        (Gia, Mrhg) => 2.12,
        (Gia, Mrdg) => 1.48,
        (Gia, Lrdg) => 1.33,
    }
}

impl AppProfile {
    /// Calibrated preset at full HD.
    ///
    /// Rest fractions are per application; the remaining time is split
    /// between IE and MLP in the encoding-average ratio, so the mean over the
    /// four applications equals the encoding average.
    pub fn preset(app: Application, encoding: EncodingKind) -> Self {
        let rest = rest_fraction(app, encoding);
        let (ie, mlp) = encoding.average_fractions();
        let scale = (1.0 - rest) / (ie + mlp);
        let (passes, bytes_in, bytes_out) = match app {
            Application::Nerf => (2, 600.0, 400.0),
            _ => (1, 300.0, 300.0),
        };
        Self {
            app,
            encoding,
            levels: encoding.levels(),
            input_dim: if app == Application::Gia { 2 } else { 3 },
            frac_ie: ie * scale,
            frac_mlp: mlp * scale,
            frac_rest: rest,
            baseline_frame_ms: baseline_ms(app, encoding),
            reference_pixels: FHD_PIXELS,
            frame_pixels: FHD_PIXELS,
            samples_per_pixel: match app {
                Application::Nerf => 48.0,
                Application::Nsdf => 1.6,
                Application::Nvr | Application::Gia => 1.0,
            },
            mlp_layer_transitions: match app {
                Application::Nerf => vec![4, 5],
                _ => vec![5],
            },
            bytes_per_input_element: bytes_in,
            bytes_per_output_element: bytes_out,
            network_passes: passes,
        }
    }

    /// The same profile with the encoding-average fractions instead of the
    /// per-app split.
    pub fn with_average_fractions(mut self) -> Self {
        let (ie, mlp) = self.encoding.average_fractions();
        self.frac_ie = ie;
        self.frac_mlp = mlp;
        self.frac_rest = 1.0 - ie - mlp;
        self
    }

    pub fn with_pixels(mut self, pixels: u64) -> Self {
        self.frame_pixels = pixels;
        self
    }

    /// All twelve presets, application-major.
    pub fn all_presets() -> Vec<Self> {
        Application::ALL
            .into_iter()
            .flat_map(|a| EncodingKind::ALL.into_iter().map(move |e| Self::preset(a, e)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let fr = [self.frac_ie, self.frac_mlp, self.frac_rest];
        if fr.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(PerfError::Profile("kernel fractions must be non-negative".into()));
        }
        let sum: f64 = fr.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(PerfError::Profile(format!("kernel fractions sum to {sum}, not 1")));
        }
        if self.levels == 0 || !(1..=3).contains(&self.input_dim) {
            return Err(PerfError::Profile("levels and input_dim must be positive".into()));
        }
        if !(self.baseline_frame_ms.is_finite() && self.baseline_frame_ms > 0.0) {
            return Err(PerfError::Profile("baseline_frame_ms must be positive".into()));
        }
        if self.reference_pixels == 0 {
            return Err(PerfError::Profile("reference_pixels must be positive".into()));
        }
        if !(self.samples_per_pixel.is_finite() && self.samples_per_pixel > 0.0) {
            return Err(PerfError::Profile("samples_per_pixel must be positive".into()));
        }
        let bytes = [self.bytes_per_input_element, self.bytes_per_output_element];
        if bytes.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(PerfError::Profile("byte counts must be non-negative".into()));
        }
        if self.network_passes == 0 {
            return Err(PerfError::Profile("network_passes must be positive".into()));
        }
        Ok(())
    }

    /// Queries issued for one frame, `pixels * samples_per_pixel`.
    pub fn queries(&self) -> f64 {
        self.frame_pixels as f64 * self.samples_per_pixel
    }

    /// GPU frame time at `frame_pixels`, scaled linearly from the reference.
    pub fn scaled_baseline_ms(&self) -> f64 {
        self.baseline_frame_ms * self.frame_pixels as f64 / self.reference_pixels as f64
    }

    pub fn total_layer_transitions(&self) -> u64 {
        self.mlp_layer_transitions.iter().map(|&t| t as u64).sum()
    }
}
