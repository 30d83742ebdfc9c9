//! Analytical model of a neural graphics processing cluster (NGPC) attached
//! to a GPU.
//!
//! Input-encoding and MLP kernels move to `N` neural fields processors; the
//! rest of each frame stays on the GPU at a fixed speedup. The model gives
//! engine cycle counts, frame time and end-to-end speedup, the largest frame
//! that fits an FPS budget, host bandwidth, and area/power overhead.

mod arch;
mod error;
mod model;
mod profile;
mod report;

pub use arch::{ArchParams, GIB, SWEEP_NFP_COUNTS};
pub use error::{PerfError, Result};
pub use model::{
    amdahl_bound, area_power, bandwidth_model, composed_speedup, frame_budget_ms, frame_time,
    ie_engine_cycles, kernel_speedups, largest_resolution, level_parallelism, mlp_engine_cycles,
    ngpc_speedup, pixels_within_budget, plateau_nfp_count, rest_limited_bound, Bandwidth,
    FrameTime, Resolution, AREA_POWER_ANCHORS, FPS_TARGETS, RESOLUTIONS,
};
pub use profile::{AppProfile, Application, EncodingKind, FHD_PIXELS};
pub use report::{mean_speedups, sweep, to_csv, PerfReport, CSV_HEADER};
