//! Noise models for 3D range cameras.
//!
//! The crate covers the whole loop from captured (or synthesized) stacks of
//! range images of a planar board to calibrated noise emulation:
//!
//! * [`rangeimg`]: range images, RIF file I/O, point clouds, normals, frame averaging.
//! * [`planescene`]: noise-free renders of a rotated rectangular board, used as ground truth.
//! * [`noiseestim`]: lateral (edge) and axial (surface) noise estimation, ODR line fits, KS statistic.
//! * [`noisemodel`]: degree-2 polynomial models `sigma(z, theta)`, OLS fitting, built-in camera presets.
//! * [`emulate`]: injection of lateral and axial noise scaled by a multiplier `M_n`.
//! * [`cli`]: the `rangenoise` command line front end.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod emulate;
mod error;
pub mod noiseestim;
pub mod noisemodel;
pub mod planescene;
pub mod rangeimg;
mod rng;

pub use error::{Error, Result};

/// Selects between rayon-parallel and single-threaded execution.
///
/// Every parallel code path in the crate produces bit-identical results to its
/// serial counterpart; the switch exists so that this can be checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}
