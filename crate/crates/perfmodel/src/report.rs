//! Sweep rows and their CSV rendering.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arch::ArchParams;
use crate::error::Result;
use crate::model::{
    area_power, bandwidth_model, frame_time, kernel_speedups, largest_resolution, ngpc_speedup,
    pixels_within_budget, rest_limited_bound, FPS_TARGETS,
};
use crate::profile::{AppProfile, Application, EncodingKind};

/// One (profile, architecture) point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    pub app: Application,
    pub encoding: EncodingKind,
    pub nfp_count: u32,
    pub s_ie: f64,
    pub s_mlp: f64,
    /// End-to-end speedup over the GPU.
    pub speedup: f64,
    /// Ceiling with IE and MLP free and the rest at its own speedup.
    pub amdahl_bound: f64,
    pub frame_ms: f64,
    pub ngpc_ms: f64,
    pub rest_ms: f64,
    /// Largest pixel count within budget at 30, 60, 90 and 120 FPS.
    pub max_pixels: [u64; 4],
    /// Largest named resolution within budget at each FPS target.
    pub max_resolution: [String; 4],
    /// Host traffic at the profile's frame size and 60 FPS, GB/s.
    pub bandwidth_gb_s: f64,
    pub access_time_ms: f64,
    pub area_pct: f64,
    pub power_pct: f64,
}

pub const CSV_HEADER: &str = "app,encoding,nfp_count,s_ie,s_mlp,speedup,amdahl_bound,frame_ms,ngpc_ms,rest_ms,\
max_pixels_30,max_pixels_60,max_pixels_90,max_pixels_120,\
max_res_30,max_res_60,max_res_90,max_res_120,bandwidth_gb_s,access_time_ms,area_pct,power_pct";

impl PerfReport {
    pub fn evaluate(profile: &AppProfile, arch: &ArchParams) -> Result<Self> {
        let speedup = ngpc_speedup(profile, arch)?;
        let t = frame_time(profile, arch);
        let (s_ie, s_mlp) = kernel_speedups(profile, arch);
        let mut max_pixels = [0u64; 4];
        let mut max_resolution: [String; 4] = Default::default();
        for (i, fps) in FPS_TARGETS.iter().enumerate() {
            max_pixels[i] = pixels_within_budget(profile, arch, *fps)?;
            max_resolution[i] = largest_resolution(max_pixels[i])
                .map_or_else(|| "-".to_string(), |r| r.name.to_string());
        }
        let bw = bandwidth_model(profile, arch, 60.0)?;
        let (area_pct, power_pct) = area_power(arch);
        Ok(Self {
            app: profile.app,
            encoding: profile.encoding,
            nfp_count: arch.nfp_count,
            s_ie,
            s_mlp,
            speedup,
            amdahl_bound: rest_limited_bound(profile, arch),
            frame_ms: t.frame_ms,
            ngpc_ms: t.ngpc_ms,
            rest_ms: t.rest_ms,
            max_pixels,
            max_resolution,
            bandwidth_gb_s: bw.total_gb_s,
            access_time_ms: bw.access_time_ms,
            area_pct,
            power_pct,
        })
    }

    pub fn csv_row(&self) -> String {
        let mut f = vec![
            self.app.to_string(),
            self.encoding.to_string(),
            self.nfp_count.to_string(),
        ];
        for v in [self.s_ie, self.s_mlp, self.speedup, self.amdahl_bound, self.frame_ms, self.ngpc_ms, self.rest_ms] {
            f.push(format!("{v:.6}"));
        }
        f.extend(self.max_pixels.iter().map(|p| p.to_string()));
        f.extend(self.max_resolution.iter().cloned());
        for v in [self.bandwidth_gb_s, self.access_time_ms, self.area_pct, self.power_pct] {
            f.push(format!("{v:.6}"));
        }
        f.join(",")
    }
}

/// Evaluates every profile against every architecture, profile-major.
pub fn sweep(profiles: &[AppProfile], archs: &[ArchParams]) -> Result<Vec<PerfReport>> {
    let pairs: Vec<(&AppProfile, &ArchParams)> = profiles
        .iter()
        .flat_map(|p| archs.iter().map(move |a| (p, a)))
        .collect();
    pairs
        .into_par_iter()
        .map(|(p, a)| PerfReport::evaluate(p, a))
        .collect()
}

/// Header line plus one row per report.
pub fn to_csv(reports: &[PerfReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Mean speedup over applications for each (encoding, NFP count) pair in
/// the sweep, in first-seen order.
pub fn mean_speedups(reports: &[PerfReport]) -> Vec<(EncodingKind, u32, f64)> {
    let mut keys: Vec<(EncodingKind, u32)> = Vec::new();
    for r in reports {
        if !keys.contains(&(r.encoding, r.nfp_count)) {
            keys.push((r.encoding, r.nfp_count));
        }
    }
    keys.into_iter()
        .map(|(e, n)| {
            let v: Vec<f64> = reports
                .iter()
                .filter(|r| r.encoding == e && r.nfp_count == n)
                .map(|r| r.speedup)
                .collect();
            (e, n, v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect()
}
