use serde::{Deserialize, Serialize};

use crate::error::{PerfError, Result};

/// `2^30`; the bandwidth table quotes GB in binary units.
pub const GIB: f64 = (1u64 << 30) as f64;

/// Description of one NGPC configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchParams {
    /// Number of neural fields processors, the scaling factor N.
    pub nfp_count: u32,
    pub ie_engines_per_nfp: u32,
    pub grid_sram_bytes_per_engine: u64,
    pub mac_rows: u32,
    pub mac_cols: u32,
    pub clock_hz: f64,
    pub sram_read_latency_cycles: u32,
    /// Informational: lookups are modeled as SRAM hits.
    pub dram_access_ns: f64,
    pub host_mem_bw_bytes_per_s: f64,
    /// Speedup of the kernels left on the GPU.
    pub rest_kernel_speedup: f64,
    /// Queries per pipelined batch.
    pub batch_queries: u64,
    /// Overlap NGPC and GPU work across batches; `false` runs them serially.
    pub pipelined: bool,
}

impl Default for ArchParams {
    fn default() -> Self {
        Self {
            nfp_count: 8,
            ie_engines_per_nfp: 16,
            grid_sram_bytes_per_engine: 1 << 20,
            mac_rows: 64,
            mac_cols: 64,
            clock_hz: 5.5e9,
            sram_read_latency_cycles: 1,
            dram_access_ns: 100.0,
            host_mem_bw_bytes_per_s: 936.2 * GIB,
            rest_kernel_speedup: 9.94,
            batch_queries: 1 << 18,
            pipelined: true,
        }
    }
}

/// NFP counts evaluated by the standard sweep.
pub const SWEEP_NFP_COUNTS: [u32; 4] = [8, 16, 32, 64];

impl ArchParams {
    pub fn with_nfp_count(nfp_count: u32) -> Self {
        Self {
            nfp_count,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(PerfError::Arch(format!("{what} must be positive")));
        if self.nfp_count == 0 {
            return bad("nfp_count");
        }
        if self.ie_engines_per_nfp == 0 {
            return bad("ie_engines_per_nfp");
        }
        if self.grid_sram_bytes_per_engine == 0 {
            return bad("grid_sram_bytes_per_engine");
        }
        if self.mac_rows == 0 || self.mac_cols == 0 {
            return bad("MAC array size");
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return bad("clock_hz");
        }
        if self.sram_read_latency_cycles == 0 {
            return bad("sram_read_latency_cycles");
        }
        if !(self.dram_access_ns.is_finite() && self.dram_access_ns > 0.0) {
            return bad("dram_access_ns");
        }
        if !(self.host_mem_bw_bytes_per_s.is_finite() && self.host_mem_bw_bytes_per_s > 0.0) {
            return bad("host_mem_bw_bytes_per_s");
        }
        if !(self.rest_kernel_speedup.is_finite() && self.rest_kernel_speedup > 0.0) {
            return bad("rest_kernel_speedup");
        }
        if self.batch_queries == 0 {
            return bad("batch_queries");
        }
        Ok(())
    }
}
