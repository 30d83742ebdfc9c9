//! Cycle, frame-time and overhead models.

use serde::{Deserialize, Serialize};

use crate::arch::{ArchParams, GIB};
use crate::error::{PerfError, Result};
use crate::profile::AppProfile;

/// Grid points each NFP encodes per pass, and passes per point.
///
/// Each engine caches one level, so `engines / L` points share an NFP.
/// With more levels than engines a point takes `ceil(L / engines)` passes.
pub fn level_parallelism(levels: u32, engines: u32) -> (u64, u64) {
    if levels <= engines {
        ((engines / levels) as u64, 1)
    } else {
        (1, levels.div_ceil(engines) as u64)
    }
}

fn ceil_div(q: f64, d: u64) -> u64 {
    (q / d as f64).ceil() as u64
}

/// Input-encoding engine cycles for one frame:
/// `passes * ceil(Q / (points_parallel * N)) * 2^d * sram_latency`.
pub fn ie_engine_cycles(profile: &AppProfile, arch: &ArchParams) -> u64 {
    let q = profile.queries();
    if q <= 0.0 {
        return 0;
    }
    let (pp, passes) = level_parallelism(profile.levels, arch.ie_engines_per_nfp);
    let corners = 1u64 << profile.input_dim;
    passes * ceil_div(q, pp * arch.nfp_count as u64) * corners * arch.sram_read_latency_cycles as u64
}

/// MLP engine cycles for one frame: one cycle per layer transition per query
/// on each NFP, `ceil(Q / N) * transitions`.
pub fn mlp_engine_cycles(profile: &AppProfile, arch: &ArchParams) -> u64 {
    let q = profile.queries();
    if q <= 0.0 {
        return 0;
    }
    ceil_div(q, arch.nfp_count as u64) * profile.total_layer_transitions()
}

/// One batch (or the whole frame, if smaller) through the faster stage,
/// from unrounded per-query rates so the fill never shrinks as frames grow.
fn batch_fill_ms(profile: &AppProfile, arch: &ArchParams, rest_ms: f64) -> f64 {
    let q = profile.queries();
    if q <= 0.0 {
        return 0.0;
    }
    let (pp, passes) = level_parallelism(profile.levels, arch.ie_engines_per_nfp);
    let n = arch.nfp_count as f64;
    let ie_cycles = passes as f64 * (1u64 << profile.input_dim) as f64 * arch.sram_read_latency_cycles as f64
        / (pp as f64 * n);
    let mlp_cycles = profile.total_layer_transitions() as f64 / n;
    let ngpc_per_query = (ie_cycles + mlp_cycles) / arch.clock_hz * 1e3;
    let rest_per_query = rest_ms / q;
    ngpc_per_query.min(rest_per_query) * q.min(arch.batch_queries as f64)
}

/// Where the time of one modeled frame goes, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameTime {
    pub ie_ms: f64,
    pub mlp_ms: f64,
    /// Fused IE + MLP time on the NGPC.
    pub ngpc_ms: f64,
    /// Accelerated time of the kernels left on the GPU.
    pub rest_ms: f64,
    /// Pipeline fill: one batch through the faster stage.
    pub fill_ms: f64,
    pub frame_ms: f64,
}

/// Frame time with the NGPC and the remaining GPU work overlapped batch by
/// batch: `max(ngpc, rest) + fill`. Serial mode sums the two stages.
pub fn frame_time(profile: &AppProfile, arch: &ArchParams) -> FrameTime {
    let ie_ms = ie_engine_cycles(profile, arch) as f64 / arch.clock_hz * 1e3;
    let mlp_ms = mlp_engine_cycles(profile, arch) as f64 / arch.clock_hz * 1e3;
    let ngpc_ms = ie_ms + mlp_ms;
    let rest_ms = profile.scaled_baseline_ms() * profile.frac_rest / arch.rest_kernel_speedup;
    let (fill_ms, frame_ms) = if arch.pipelined {
        let fill = batch_fill_ms(profile, arch, rest_ms);
        (fill, ngpc_ms.max(rest_ms) + fill)
    } else {
        (0.0, ngpc_ms + rest_ms)
    };
    FrameTime {
        ie_ms,
        mlp_ms,
        ngpc_ms,
        rest_ms,
        fill_ms,
        frame_ms,
    }
}

/// Modeled per-kernel speedups `(s_ie, s_mlp)` over the GPU kernels.
pub fn kernel_speedups(profile: &AppProfile, arch: &ArchParams) -> (f64, f64) {
    let t = frame_time(profile, arch);
    let base = profile.scaled_baseline_ms();
    let ratio = |gpu: f64, ngpc: f64| if ngpc > 0.0 { gpu / ngpc } else { f64::INFINITY };
    (
        ratio(base * profile.frac_ie, t.ie_ms),
        ratio(base * profile.frac_mlp, t.mlp_ms),
    )
}

/// End-to-end speedup: GPU frame time over modeled frame time.
pub fn ngpc_speedup(profile: &AppProfile, arch: &ArchParams) -> Result<f64> {
    profile.validate()?;
    arch.validate()?;
    if profile.frame_pixels == 0 {
        return Ok(1.0);
    }
    Ok(profile.scaled_baseline_ms() / frame_time(profile, arch).frame_ms)
}

/// `1 / (f_ie / s_ie + f_mlp / s_mlp + f_rest / s_rest)`; infinite
/// speedups contribute nothing.
pub fn amdahl_bound(profile: &AppProfile, s_ie: f64, s_mlp: f64, s_rest: f64) -> f64 {
    let term = |f: f64, s: f64| if s.is_infinite() { 0.0 } else { f / s };
    1.0 / (term(profile.frac_ie, s_ie) + term(profile.frac_mlp, s_mlp) + term(profile.frac_rest, s_rest))
}

/// Speedup ceiling with IE and MLP taking no time at all.
pub fn rest_limited_bound(profile: &AppProfile, arch: &ArchParams) -> f64 {
    amdahl_bound(profile, f64::INFINITY, f64::INFINITY, arch.rest_kernel_speedup)
}

/// Speedup of the per-kernel composition rule with explicit kernel
/// speedups: serial sum or pipelined `max + fill`, as `arch` selects.
pub fn composed_speedup(profile: &AppProfile, arch: &ArchParams, s_ie: f64, s_mlp: f64, s_rest: f64) -> f64 {
    let ngpc = profile.frac_ie / s_ie + profile.frac_mlp / s_mlp;
    let rest = profile.frac_rest / s_rest;
    let frame = if arch.pipelined {
        let q = profile.queries();
        let share = if q > 0.0 { (arch.batch_queries as f64 / q).min(1.0) } else { 0.0 };
        ngpc.max(rest) + ngpc.min(rest) * share
    } else {
        ngpc + rest
    };
    1.0 / frame
}

/// A named frame size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub name: &'static str,
    pub width: u32,
    pub height: u32,
}

impl Resolution {
    pub const fn pixels(&self) -> u64 {
        self.width as u64 * self.height as u64
    }
}

/// Resolution thresholds of the FPS study, smallest first.
pub const RESOLUTIONS: [Resolution; 6] = [
    Resolution { name: "HD", width: 1280, height: 720 },
    Resolution { name: "FHD", width: 1920, height: 1080 },
    Resolution { name: "2k", width: 2560, height: 1440 },
    Resolution { name: "4k", width: 3840, height: 2160 },
    Resolution { name: "5k", width: 5120, height: 2880 },
    Resolution { name: "8k", width: 7680, height: 4320 },
];

/// FPS targets of the FPS study.
pub const FPS_TARGETS: [f64; 4] = [30.0, 60.0, 90.0, 120.0];

pub fn frame_budget_ms(fps: f64) -> f64 {
    1000.0 / fps
}

/// Largest resolution threshold not exceeding `pixels`.
pub fn largest_resolution(pixels: u64) -> Option<Resolution> {
    RESOLUTIONS.iter().rev().find(|r| r.pixels() <= pixels).copied()
}

const MAX_PIXELS: u64 = 1 << 40;

/// Largest pixel count whose modeled frame time fits the `1000 / fps`
/// budget (capped at 2^40).
pub fn pixels_within_budget(profile: &AppProfile, arch: &ArchParams, fps: f64) -> Result<u64> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(PerfError::Fps(fps));
    }
    profile.validate()?;
    arch.validate()?;
    let budget = frame_budget_ms(fps);
    let fits = |p: u64| frame_time(&profile.clone().with_pixels(p), arch).frame_ms <= budget;
    if !fits(1) {
        return Ok(0);
    }
    let mut lo = 1u64;
    let mut hi = 2u64;
    while fits(hi) {
        lo = hi;
        if hi >= MAX_PIXELS {
            return Ok(MAX_PIXELS);
        }
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Host traffic at a frame rate. GB figures are in units of 2^30 bytes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub input_gb_s: f64,
    pub output_gb_s: f64,
    /// `network_passes * (input + output)`.
    pub total_gb_s: f64,
    /// Time to move one frame's traffic over host memory.
    pub access_time_ms: f64,
}

pub fn bandwidth_model(profile: &AppProfile, arch: &ArchParams, fps: f64) -> Result<Bandwidth> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(PerfError::Fps(fps));
    }
    profile.validate()?;
    arch.validate()?;
    let px = profile.frame_pixels as f64;
    let input = px * profile.bytes_per_input_element * fps;
    let output = px * profile.bytes_per_output_element * fps;
    let total = profile.network_passes as f64 * (input + output);
    Ok(Bandwidth {
        input_gb_s: input / GIB,
        output_gb_s: output / GIB,
        total_gb_s: total / GIB,
        access_time_ms: total / fps / arch.host_mem_bw_bytes_per_s * 1e3,
    })
}

/// `(nfp_count, area %, power %)` overhead anchors relative to the host GPU.
pub const AREA_POWER_ANCHORS: [(f64, f64, f64); 4] = [
    (8.0, 4.52, 2.75),
    (16.0, 9.04, 5.51),
    (32.0, 18.01, 11.03),
    (64.0, 36.18, 22.06),
];

/// Area and power overhead in percent, piecewise linear through the anchors
/// and extended linearly past both ends.
pub fn area_power(arch: &ArchParams) -> (f64, f64) {
    let n = arch.nfp_count as f64;
    let a = &AREA_POWER_ANCHORS;
    let seg = match a.iter().position(|p| n <= p.0) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => a.len() - 2,
    };
    let (p, q) = (a[seg], a[seg + 1]);
    let t = (n - p.0) / (q.0 - p.0);
    (p.1 + t * (q.1 - p.1), p.2 + t * (q.2 - p.2))
}

/// First NFP count (ascending) at which the NGPC stage is no longer the
/// bottleneck, i.e. `ngpc_ms <= rest_ms`.
pub fn plateau_nfp_count(profile: &AppProfile, archs: &[ArchParams]) -> Option<u32> {
    let mut sorted: Vec<&ArchParams> = archs.iter().collect();
    sorted.sort_by_key(|a| a.nfp_count);
    sorted.into_iter().find_map(|a| {
        let t = frame_time(profile, a);
        (t.ngpc_ms <= t.rest_ms).then_some(a.nfp_count)
    })
}
