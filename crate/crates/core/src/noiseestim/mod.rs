//! Estimation of lateral and axial noise from stacks of board captures.
//!
//! Lateral noise is measured at a straight board edge: edge pixels from all
//! frames of one scene are pooled, a single orthogonal-distance line is fitted
//! to them, and the spread of the signed distances is the noise level in
//! pixels. Axial noise is measured on the board surface as the spread of each
//! frame around a low-pass filtered temporal mean.

mod axial;
mod edges;
mod histogram;
mod ks;
mod lateral;
mod odr;

pub use axial::{estimate_axial, lowpass_reference, AxialEstimate, AxialOptions};
pub use edges::{board_mask, extract_edge_pixels, DEFAULT_DEPTH_GAP_MM};
pub use histogram::{freedman_diaconis_histogram, HistogramBin};
pub use ks::{ks_critical_value, ks_normality};
pub use lateral::{estimate_lateral, EdgeResidualSet, LateralOptions, QUANTIZATION_VARIANCE};
pub use odr::fit_line_odr;

pub use crate::planescene::{EdgeSide, Line2};

use crate::noisemodel::NoiseKind;
use crate::{Error, Result};

/// One estimated noise level for a scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSample {
    pub kind: NoiseKind,
    pub z_mm: f64,
    pub theta_deg: f64,
    /// Pixels for lateral samples, millimetres for axial ones.
    pub sigma: f64,
    /// Number of residuals behind `sigma`.
    pub n: usize,
}

impl NoiseSample {
    pub fn new(kind: NoiseKind, z_mm: f64, theta_deg: f64, sigma: f64, n: usize) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::arg(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if n < 2 {
            return Err(Error::arg(format!("a noise sample needs n >= 2, got {n}")));
        }
        Ok(NoiseSample {
            kind,
            z_mm,
            theta_deg,
            sigma,
            n,
        })
    }
}

/// Running count, mean and sum of squared deviations, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Moments {
    pub n: usize,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64,
        }
    }

    pub fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn of(xs: &[f64]) -> Moments {
        let mut m = Moments::default();
        xs.iter().for_each(|&x| m.push(x));
        m
    }
}
