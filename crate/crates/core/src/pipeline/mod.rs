//! The four application pipelines built from a grid encoding and one or two
//! bias-free MLPs.
//!
//! * NeRF: position -> grid -> density MLP -> 16-wide latent (channel 0 is
//!   log-density); latent + SH view encoding -> color MLP -> RGB.
//! * NVR: position -> grid -> MLP -> (log-density, RGB logits).
//! * NSDF: position -> grid -> MLP -> signed distance.
//! * GIA: pixel coordinate -> grid -> MLP -> RGB.
//!
//! NeRF and NVR frames are volume-rendered along camera rays; NSDF frames
//! are a distance slice at a fixed depth and GIA frames query every pixel
//! center directly.

mod camera;
mod composite;
mod gia;
mod image;
mod sampling;
mod sh;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use camera::{generate_rays, Camera, Frame, Ray};
pub use composite::{composite_ray, Composite};
pub use gia::{psnr, train_gia, GiaTraining, DEFAULT_GIA_LEARNING_RATE};
pub use image::Image;
pub use sampling::{sample_ray, SamplePoint};
pub use sh::{view_direction_encoding, SH_WIDTH};

use crate::encoding::{encode_point, EncodingConfig, FeatureTable, GridKind};
use crate::mlp::{layer_widths, MlpModel, OutputActivation};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum App {
    Nerf,
    Nsdf,
    Nvr,
    Gia,
}

impl App {
    pub const ALL: [App; 4] = [App::Nerf, App::Nsdf, App::Nvr, App::Gia];

    pub fn name(self) -> &'static str {
        match self {
            App::Nerf => "nerf",
            App::Nsdf => "nsdf",
            App::Nvr => "nvr",
            App::Gia => "gia",
        }
    }

    /// Dimension of the encoded coordinate.
    pub fn input_dim(self) -> usize {
        match self {
            App::Gia => 2,
            _ => 3,
        }
    }

    /// Width of the network output (for NeRF, of the color network).
    pub fn output_width(self) -> usize {
        match self {
            App::Nsdf => 1,
            App::Nvr => 4,
            App::Nerf | App::Gia => 3,
        }
    }
}

impl std::str::FromStr for App {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        App::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown application {s:?}")))
    }
}

/// Width of the NeRF density-to-color latent.
pub const NERF_LATENT_WIDTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub app: App,
    pub encoding: EncodingConfig,
    /// Hidden layers of the single network (the color network for NeRF).
    #[serde(default = "default_hidden_layers")]
    pub hidden_layers: usize,
    /// Hidden layers of the NeRF density network.
    #[serde(default = "default_density_hidden_layers")]
    pub density_hidden_layers: usize,
    #[serde(default = "default_samples_per_ray")]
    pub samples_per_ray: usize,
    pub frame: Frame,
    /// Depth of the NSDF distance slice in the unit cube.
    #[serde(default = "default_slice_z")]
    pub nsdf_slice_z: f32,
    /// Seed for stratified jitter; `None` samples stratum midpoints.
    #[serde(default)]
    pub jitter_seed: Option<u64>,
}

fn default_hidden_layers() -> usize {
    4
}

fn default_density_hidden_layers() -> usize {
    3
}

fn default_samples_per_ray() -> usize {
    8
}

fn default_slice_z() -> f32 {
    0.5
}

impl PipelineConfig {
    pub fn new(app: App, encoding: EncodingConfig, frame: Frame) -> Result<Self> {
        let cfg = Self {
            app,
            encoding,
            hidden_layers: default_hidden_layers(),
            density_hidden_layers: default_density_hidden_layers(),
            samples_per_ray: default_samples_per_ray(),
            frame,
            nsdf_slice_z: default_slice_z(),
            jitter_seed: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Published parameters for one application and encoding kind.
    pub fn published(app: App, kind: GridKind, frame: Frame) -> Result<Self> {
        let d = app.input_dim();
        let table_size = if app == App::Gia { 1 << 24 } else { 1 << 19 };
        let encoding = match kind {
            GridKind::Hash => {
                let growth = match app {
                    App::Nerf => 1.51572,
                    App::Nsdf => 1.38191,
                    App::Nvr => 1.275,
                    App::Gia => 1.25992,
                };
                EncodingConfig::new(kind, d, 16, growth, 2, table_size, 16)?
            }
            GridKind::Dense => EncodingConfig::new(kind, d, 16, 1.405, 2, table_size, 8)?,
            GridKind::Tiled => EncodingConfig::new(kind, d, 128, 1.0, 8, table_size, 2)?,
        };
        Self::new(app, encoding, frame)
    }

    pub fn validate(&self) -> Result<()> {
        self.encoding.validate()?;
        if self.encoding.dim != self.app.input_dim() {
            return Err(Error::config(format!(
                "{} takes {}-dimensional coordinates, encoding is {}-dimensional",
                self.app.name(),
                self.app.input_dim(),
                self.encoding.dim
            )));
        }
        if self.samples_per_ray == 0 {
            return Err(Error::config("samples_per_ray must be at least 1"));
        }
        if self.frame.width == 0 || self.frame.height == 0 {
            return Err(Error::config("frame must have at least one pixel"));
        }
        if !(0.0..=1.0).contains(&self.nsdf_slice_z) {
            return Err(Error::config("nsdf_slice_z must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Layer widths of the primary network (the density network for NeRF).
    pub fn primary_widths(&self) -> Vec<usize> {
        let input = self.encoding.output_width();
        match self.app {
            App::Nerf => layer_widths(input, self.density_hidden_layers, NERF_LATENT_WIDTH),
            app => layer_widths(input, self.hidden_layers, app.output_width()),
        }
    }

    /// Layer widths of the NeRF color network.
    pub fn color_widths(&self) -> Option<Vec<usize>> {
        (self.app == App::Nerf)
            .then(|| layer_widths(NERF_LATENT_WIDTH + SH_WIDTH, self.hidden_layers, 3))
    }

    fn primary_activation(&self) -> OutputActivation {
        match self.app {
            App::Gia => OutputActivation::Sigmoid,
            _ => OutputActivation::Identity,
        }
    }
}

/// Encoding table plus networks of one application.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    config: PipelineConfig,
    table: FeatureTable,
    primary: MlpModel,
    color: Option<MlpModel>,
}

/// Default half-width of the uniform table initialization.
pub const TABLE_INIT_SCALE: f32 = 1e-4;

impl Pipeline {
    pub fn from_parts(
        config: PipelineConfig,
        table: FeatureTable,
        primary: MlpModel,
        color: Option<MlpModel>,
    ) -> Result<Self> {
        config.validate()?;
        if table.config() != &config.encoding {
            return Err(Error::config("table was built for a different encoding"));
        }
        if primary.widths() != config.primary_widths().as_slice() {
            return Err(Error::config(format!(
                "primary network widths {:?}, expected {:?}",
                primary.widths(),
                config.primary_widths()
            )));
        }
        if color.as_ref().map(|m| m.widths().to_vec()) != config.color_widths() {
            return Err(Error::config("color network does not match the application"));
        }
        Ok(Self {
            config,
            table,
            primary,
            color,
        })
    }

    /// Random table (uniform in `[-table_scale, table_scale]`) and random
    /// networks, all derived from `seed`.
    pub fn random(config: PipelineConfig, table_scale: f32, seed: u64) -> Result<Self> {
        config.validate()?;
        let table = FeatureTable::random(config.encoding.clone(), table_scale, seed)?;
        let primary = MlpModel::random(
            config.primary_widths(),
            config.primary_activation(),
            seed.wrapping_add(1),
        )?;
        let color = config
            .color_widths()
            .map(|w| MlpModel::random(w, OutputActivation::Sigmoid, seed.wrapping_add(2)))
            .transpose()?;
        Self::from_parts(config, table, primary, color)
    }

    pub fn zeros(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let table = FeatureTable::zeros(config.encoding.clone())?;
        let primary = MlpModel::zeros(config.primary_widths(), config.primary_activation())?;
        let color = config
            .color_widths()
            .map(|w| MlpModel::zeros(w, OutputActivation::Sigmoid))
            .transpose()?;
        Self::from_parts(config, table, primary, color)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn table(&self) -> &FeatureTable {
        &self.table
    }

    pub fn primary(&self) -> &MlpModel {
        &self.primary
    }

    pub fn color(&self) -> Option<&MlpModel> {
        self.color.as_ref()
    }

    pub fn into_parts(self) -> (PipelineConfig, FeatureTable, MlpModel, Option<MlpModel>) {
        (self.config, self.table, self.primary, self.color)
    }

    fn expect_app(&self, apps: &[App]) -> Result<()> {
        if apps.contains(&self.config.app) {
            Ok(())
        } else {
            Err(Error::config(format!(
                "operation not available for {}",
                self.config.app.name()
            )))
        }
    }

    fn primary_output(&self, position: &[f32]) -> Result<Vec<f32>> {
        let features = encode_point(position, &self.table)?;
        self.primary.forward(features.as_slice())
    }

    /// NeRF density and view-dependent color. The density path never sees
    /// the view direction.
    pub fn query_nerf(&self, position: [f32; 3], direction: [f32; 3]) -> Result<(f32, [f32; 3])> {
        self.expect_app(&[App::Nerf])?;
        let latent = self.primary_output(&position)?;
        let sigma = latent[0].exp();
        let mut color_in = latent;
        color_in.extend_from_slice(&view_direction_encoding(direction));
        let rgb = self.color.as_ref().expect("nerf has a color network").forward(&color_in)?;
        Ok((sigma, [rgb[0], rgb[1], rgb[2]]))
    }

    /// NVR density (`exp`) and color (`sigmoid`) from the 4-wide output.
    pub fn query_nvr(&self, position: [f32; 3]) -> Result<(f32, [f32; 3])> {
        self.expect_app(&[App::Nvr])?;
        let out = self.primary_output(&position)?;
        let s = OutputActivation::Sigmoid;
        Ok((out[0].exp(), [s.apply(out[1]), s.apply(out[2]), s.apply(out[3])]))
    }

    pub fn query_nsdf(&self, position: [f32; 3]) -> Result<f32> {
        self.expect_app(&[App::Nsdf])?;
        Ok(self.primary_output(&position)?[0])
    }

    pub fn query_gia(&self, uv: [f32; 2]) -> Result<[f32; 3]> {
        self.expect_app(&[App::Gia])?;
        let out = self.primary_output(&uv)?;
        Ok([out[0], out[1], out[2]])
    }

    /// Density and color at one sample for the volume-rendered apps.
    fn query_volume(&self, sample: &SamplePoint) -> Result<(f32, [f32; 3])> {
        match self.config.app {
            App::Nerf => self.query_nerf(sample.position, sample.direction),
            _ => self.query_nvr(sample.position),
        }
    }

    /// Renders one ray already expressed in unit-cube coordinates; rays that
    /// miss the cube are black.
    pub fn render_ray(&self, ray: &Ray, rng: Option<&mut ChaCha8Rng>) -> Result<[f32; 3]> {
        self.expect_app(&[App::Nerf, App::Nvr])?;
        let Some(clipped) = ray.clip_to_unit_cube() else {
            return Ok([0.0; 3]);
        };
        let samples = sample_ray(&clipped, self.config.samples_per_ray, rng)?;
        let mut deltas = Vec::with_capacity(samples.len());
        let mut sigmas = Vec::with_capacity(samples.len());
        let mut colors = Vec::with_capacity(samples.len());
        for s in &samples {
            let (sigma, rgb) = self.query_volume(s)?;
            deltas.push(s.delta);
            sigmas.push(sigma);
            colors.push(rgb);
        }
        Ok(composite_ray(&deltas, &sigmas, &colors)?.color)
    }
}

/// Per-pixel jitter stream: one ChaCha stream per pixel index so the result
/// does not depend on scheduling.
fn pixel_rng(seed: u64, pixel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pixel as u64);
    rng
}

/// Renders the configured frame. NeRF and NVR volume-render camera rays;
/// NSDF shows `clamp(0.5 + distance)` on the slice `z = nsdf_slice_z`; GIA
/// evaluates every pixel center. The camera is ignored for NSDF and GIA.
pub fn render_frame(pipeline: &Pipeline, camera: &Camera) -> Result<Image> {
    let cfg = &pipeline.config;
    let frame = cfg.frame;
    let pixels: Vec<Result<[f32; 3]>> = match cfg.app {
        App::Nerf | App::Nvr => {
            let rays = generate_rays(camera, frame)?;
            rays.par_iter()
                .enumerate()
                .map(|(i, ray)| {
                    let ray = camera.to_unit_cube(ray);
                    let mut rng = cfg.jitter_seed.map(|s| pixel_rng(s, i));
                    pipeline.render_ray(&ray, rng.as_mut())
                })
                .collect()
        }
        App::Nsdf | App::Gia => (0..frame.pixels())
            .into_par_iter()
            .map(|i| {
                let (x, y) = ((i % frame.width as usize) as u32, (i / frame.width as usize) as u32);
                let [u, v] = frame.pixel_center(x, y);
                if cfg.app == App::Gia {
                    pipeline.query_gia([u, v])
                } else {
                    let d = pipeline.query_nsdf([u, v, cfg.nsdf_slice_z])?;
                    let g = (0.5 + d).clamp(0.0, 1.0);
                    Ok([g; 3])
                }
            })
            .collect(),
    };
    let mut data = Vec::with_capacity(frame.pixels() * 3);
    for (i, p) in pixels.into_iter().enumerate() {
        data.extend_from_slice(&p.map_err(|e| e.in_batch(i))?);
    }
    Image::new(frame.width, frame.height, data)
}
