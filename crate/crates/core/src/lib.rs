//! Reference kernels for neural graphics primitives.
//!
//! The crate is split along the three stages every application shares:
//!
//! * [`encoding`]: parametric multi-resolution grid encodings (hash grid,
//!   dense grid, tiled low-resolution grid) with d-linear interpolation.
//! * [`mlp`]: small bias-free fully-connected networks with forward and
//!   reverse-mode passes.
//! * [`pipeline`]: the NeRF, NSDF, NVR and GIA applications assembled from
//!   the two, plus ray generation, sampling, compositing and image I/O.

pub mod encoding;
pub mod error;
pub mod mlp;
pub mod pipeline;

mod binio;

pub use error::{Error, Result};
