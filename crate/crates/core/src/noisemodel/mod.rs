//! Bivariate degree-2 noise models `sigma(z, theta)`.
//!
//! A model is six coefficients over the basis `[1, z, theta, z^2, z*theta, theta^2]`
//! with `z` in millimetres and `theta` in degrees. Lateral models return pixels,
//! axial models millimetres.

mod fit;
mod io;
mod presets;
mod theory;

pub use fit::{fit_polynomial, FitOptions};
pub use io::{read_model, write_model};
pub use presets::{all_presets, parse_preset_ref, preset, PRESET_CAMERAS};
pub use theory::{theoretical_axial_sigma, TheoreticalSLParams};

use crate::{Error, Result};

/// Display names of the basis terms, in coefficient order.
pub const BASIS_TERMS: [&str; 6] = ["1", "z", "theta", "z^2", "z*theta", "theta^2"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseKind {
    Lateral,
    Axial,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Lateral => "lateral",
            NoiseKind::Axial => "axial",
        }
    }

    pub fn units(self) -> &'static str {
        match self {
            NoiseKind::Lateral => "px",
            NoiseKind::Axial => "mm",
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lateral" => Ok(NoiseKind::Lateral),
            "axial" => Ok(NoiseKind::Axial),
            other => Err(Error::Lookup {
                what: "noise kind",
                name: other.to_string(),
                valid: "lateral, axial".into(),
            }),
        }
    }
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Range of distances and angles a model was fitted on. Evaluation outside it
/// still succeeds but is flagged.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ValidityDomain {
    pub z_min_mm: Option<f64>,
    pub z_max_mm: Option<f64>,
    pub theta_max_deg: Option<f64>,
}

impl ValidityDomain {
    pub fn contains(&self, z: f64, theta: f64) -> bool {
        self.z_min_mm.is_none_or(|m| z >= m)
            && self.z_max_mm.is_none_or(|m| z <= m)
            && self.theta_max_deg.is_none_or(|m| theta <= m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub camera: String,
    pub kind: NoiseKind,
    pub coeffs: [f64; 6],
    pub domain: Option<ValidityDomain>,
}

/// Result of evaluating a model at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEval {
    pub sigma: f64,
    /// The polynomial was negative and `sigma` was clamped to 0.
    pub clamped: bool,
    /// The point lies outside the model's validity domain.
    pub extrapolated: bool,
}

impl NoiseModel {
    pub fn new(camera: impl Into<String>, kind: NoiseKind, coeffs: [f64; 6]) -> Self {
        NoiseModel {
            camera: camera.into(),
            kind,
            coeffs,
            domain: None,
        }
    }

    /// The model scaled to zero, used to switch a noise stage off.
    pub fn zero(kind: NoiseKind) -> Self {
        Self::new("none", kind, [0.0; 6])
    }

    /// Unclamped polynomial value, no range checks.
    #[inline]
    pub fn polynomial(&self, z: f64, theta: f64) -> f64 {
        let c = &self.coeffs;
        c[0] + c[1] * z + c[2] * theta + c[3] * z * z + c[4] * z * theta + c[5] * theta * theta
    }

    pub fn eval(&self, z: f64, theta: f64) -> Result<SigmaEval> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::arg(format!("z must be positive, got {z}")));
        }
        if !(0.0..90.0).contains(&theta) {
            return Err(Error::arg(format!("theta must lie in [0, 90), got {theta}")));
        }
        let raw = self.polynomial(z, theta);
        Ok(SigmaEval {
            sigma: raw.max(0.0),
            clamped: raw < 0.0,
            extrapolated: self.domain.is_some_and(|d| !d.contains(z, theta)),
        })
    }

    pub fn sigma(&self, z: f64, theta: f64) -> Result<f64> {
        self.eval(z, theta).map(|e| e.sigma)
    }
}

/// `max(0, p(z, theta))` with range checks and clamping/extrapolation flags.
pub fn eval_sigma(model: &NoiseModel, z: f64, theta: f64) -> Result<SigmaEval> {
    model.eval(z, theta)
}
