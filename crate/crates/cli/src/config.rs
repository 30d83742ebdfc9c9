//! Per-command TOML configs. Every field has a default, and the fully
//! materialized config is written next to (or into) each output.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ngpc_core::encoding::{EncodingConfig, GridKind};
use ngpc_core::pipeline::{App, Camera, Frame, PipelineConfig, DEFAULT_GIA_LEARNING_RATE};
use ngpc_perf::{AppProfile, ArchParams, SWEEP_NFP_COUNTS};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    Ok(toml::to_string(value)?)
}

/// Small hash grid used when neither a config nor `--paper-defaults` picks
/// an encoding.
pub fn desk_encoding(dim: usize) -> EncodingConfig {
    EncodingConfig::new(GridKind::Hash, dim, 16, 1.5, 2, 1 << 14, 8).expect("valid desk encoding")
}

fn pipeline_for(app: App, grid: GridKind, frame: Frame, presets: bool) -> Result<PipelineConfig> {
    Ok(if presets {
        PipelineConfig::published(app, grid, frame)?
    } else {
        PipelineConfig::new(app, desk_encoding(app.input_dim()), frame)?
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodeConfig {
    /// Preset selectors for `--paper-defaults`.
    pub app: App,
    pub grid: GridKind,
    pub encoding: Option<EncodingConfig>,
    /// Uniform init range of a random table.
    pub table_scale: f32,
    /// Feature table file to encode with instead of a random one.
    pub table: Option<PathBuf>,
    /// Points file, overridden by `--points`.
    pub points: Option<PathBuf>,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            app: App::Nerf,
            grid: GridKind::Hash,
            encoding: None,
            table_scale: 1.0,
            table: None,
            points: None,
        }
    }
}

impl EncodeConfig {
    pub fn materialize(mut self, presets: bool) -> Result<Self> {
        if presets || self.encoding.is_none() {
            let p = pipeline_for(self.app, self.grid, Frame::new(1, 1), presets)?;
            self.encoding = Some(p.encoding);
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub app: App,
    pub grid: GridKind,
    pub width: u32,
    pub height: u32,
    pub pipeline: Option<PipelineConfig>,
    pub camera: Option<Camera>,
    pub table_scale: f32,
    /// Trained parameters; random ones seeded by `--seed` otherwise.
    pub table: Option<PathBuf>,
    pub primary: Option<PathBuf>,
    pub color: Option<PathBuf>,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            app: App::Nerf,
            grid: GridKind::Hash,
            width: 64,
            height: 64,
            pipeline: None,
            camera: None,
            table_scale: 0.5,
            table: None,
            primary: None,
            color: None,
        }
    }
}

impl RenderConfig {
    pub fn materialize(mut self, presets: bool) -> Result<Self> {
        let frame = Frame::new(self.width, self.height);
        if presets || self.pipeline.is_none() {
            self.pipeline = Some(pipeline_for(self.app, self.grid, frame, presets)?);
        }
        let frame = self.pipeline.as_ref().map(|p| p.frame).unwrap_or(frame);
        (self.width, self.height) = (frame.width, frame.height);
        if self.camera.is_none() {
            // front face of the unit cube fills the frame
            self.camera = Some(Camera::looking_down_z([0.5, 0.5, 2.0], frame.width as f32, frame));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainGiaConfig {
    pub grid: GridKind,
    pub pipeline: Option<PipelineConfig>,
    pub steps: usize,
    pub learning_rate: f32,
    /// Target PPM; a seeded noise image otherwise.
    pub target: Option<PathBuf>,
    pub noise_width: u32,
    pub noise_height: u32,
    pub noise_seed: u64,
}

impl Default for TrainGiaConfig {
    fn default() -> Self {
        Self {
            grid: GridKind::Hash,
            pipeline: None,
            steps: 2000,
            learning_rate: DEFAULT_GIA_LEARNING_RATE,
            target: None,
            noise_width: 32,
            noise_height: 32,
            noise_seed: 7,
        }
    }
}

impl TrainGiaConfig {
    pub fn materialize(mut self, presets: bool) -> Result<Self> {
        let frame = Frame::new(self.noise_width, self.noise_height);
        if presets || self.pipeline.is_none() {
            let enc = if presets {
                PipelineConfig::published(App::Gia, self.grid, frame)?.encoding
            } else {
                EncodingConfig::new(GridKind::Hash, 2, 16, 1.25992, 2, 1 << 14, 16)?
            };
            self.pipeline = Some(PipelineConfig::new(App::Gia, enc, frame)?);
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerfSweepConfig {
    /// Base architecture; `nfp_count` is replaced by each sweep entry.
    pub arch: ArchParams,
    pub nfp_counts: Vec<u32>,
    /// Frame rate of the bandwidth table.
    pub bandwidth_fps: f64,
    /// Replace per-app fractions with the encoding averages.
    pub average_fractions: bool,
    pub profiles: Vec<AppProfile>,
}

impl Default for PerfSweepConfig {
    fn default() -> Self {
        Self {
            arch: ArchParams::default(),
            nfp_counts: SWEEP_NFP_COUNTS.to_vec(),
            bandwidth_fps: 60.0,
            average_fractions: false,
            profiles: AppProfile::all_presets(),
        }
    }
}

impl PerfSweepConfig {
    pub fn materialize(mut self, presets: bool) -> Result<Self> {
        if presets {
            let d = Self::default();
            self.profiles = d.profiles;
            self.nfp_counts = d.nfp_counts;
        }
        if self.average_fractions {
            self.profiles = self.profiles.into_iter().map(AppProfile::with_average_fractions).collect();
            self.average_fractions = false;
        }
        self.nfp_counts.sort_unstable();
        self.nfp_counts.dedup();
        Ok(self)
    }

    pub fn archs(&self) -> Vec<ArchParams> {
        self.nfp_counts
            .iter()
            .map(|&n| ArchParams {
                nfp_count: n,
                ..self.arch.clone()
            })
            .collect()
    }
}
