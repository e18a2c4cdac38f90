use nalgebra::{DMatrix, DVector};

use super::{NoiseKind, NoiseModel, BASIS_TERMS};
use crate::noiseestim::NoiseSample;
use crate::{Error, Result};

/// Relative singular-value threshold below which a basis direction counts as unresolved.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub camera: String,
    /// Weight every sample by its residual count `n` instead of uniformly.
    pub weighted: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            camera: "fitted".into(),
            weighted: false,
        }
    }
}

/// Affine change of variables `Z = (z - z_center) / z_scale`, `T = (theta - t_center) / t_scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BasisScaling {
    pub z_center: f64,
    pub z_scale: f64,
    pub t_center: f64,
    pub t_scale: f64,
}

impl BasisScaling {
    /// Centre on the mean, scale by the standard deviation (1 if there is no spread).
    pub fn standardizing(samples: &[NoiseSample]) -> Self {
        let n = samples.len() as f64;
        let zc = samples.iter().map(|s| s.z_mm).sum::<f64>() / n;
        let tc = samples.iter().map(|s| s.theta_deg).sum::<f64>() / n;
        let zs = (samples.iter().map(|s| (s.z_mm - zc).powi(2)).sum::<f64>() / n).sqrt();
        let ts = (samples.iter().map(|s| (s.theta_deg - tc).powi(2)).sum::<f64>() / n).sqrt();
        BasisScaling {
            z_center: zc,
            z_scale: if zs > 0.0 { zs } else { 1.0 },
            t_center: tc,
            t_scale: if ts > 0.0 { ts } else { 1.0 },
        }
    }

    fn row(&self, z: f64, theta: f64) -> [f64; 6] {
        let zz = (z - self.z_center) / self.z_scale;
        let tt = (theta - self.t_center) / self.t_scale;
        [1.0, zz, tt, zz * zz, zz * tt, tt * tt]
    }

    /// Coefficients in the scaled basis to coefficients in the raw basis.
    fn to_raw(self, b: &[f64; 6]) -> [f64; 6] {
        let (zc, zs, tc, ts) = (self.z_center, self.z_scale, self.t_center, self.t_scale);
        let (a, p) = (zc / zs, tc / ts);
        [
            b[0] - b[1] * a - b[2] * p + b[3] * a * a + b[4] * a * p + b[5] * p * p,
            b[1] / zs - 2.0 * b[3] * a / zs - b[4] * p / zs,
            b[2] / ts - b[4] * a / ts - 2.0 * b[5] * p / ts,
            b[3] / (zs * zs),
            b[4] / (zs * ts),
            b[5] / (ts * ts),
        ]
    }
}

fn check_samples(samples: &[NoiseSample]) -> Result<NoiseKind> {
    if samples.len() < 6 {
        return Err(Error::Fit(format!(
            "underdetermined: {} samples for 6 coefficients",
            samples.len()
        )));
    }
    let kind = samples[0].kind;
    if samples.iter().any(|s| s.kind != kind) {
        return Err(Error::Fit("samples mix lateral and axial noise".into()));
    }
    if samples
        .iter()
        .any(|s| !(s.z_mm.is_finite() && s.theta_deg.is_finite() && s.sigma.is_finite()))
    {
        return Err(Error::Fit("samples contain non-finite values".into()));
    }
    Ok(kind)
}

pub(crate) fn fit_in_basis(samples: &[NoiseSample], weighted: bool, scaling: &BasisScaling) -> Result<[f64; 6]> {
    let n = samples.len();
    let mut design = DMatrix::<f64>::zeros(n, 6);
    let mut target = DVector::<f64>::zeros(n);
    for (i, s) in samples.iter().enumerate() {
        let w = if weighted { (s.n as f64).sqrt() } else { 1.0 };
        for (j, x) in scaling.row(s.z_mm, s.theta_deg).into_iter().enumerate() {
            design[(i, j)] = w * x;
        }
        target[i] = w * s.sigma;
    }

    let svd = design.svd(true, true);
    let s_max = svd.singular_values.max();
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut deficient = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if !(s > RANK_TOLERANCE * s_max) {
            let dir = v_t.row(k);
            let peak = dir.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let terms: Vec<&str> = (0..6)
                .filter(|&j| dir[j].abs() >= 0.1 * peak)
                .map(|j| BASIS_TERMS[j])
                .collect();
            deficient.push(format!("[{}]", terms.join(" ~ ")));
        }
    }
    if !deficient.is_empty() {
        return Err(Error::Fit(format!(
            "rank-deficient design (rank {} of 6); unresolved basis directions: {}",
            6 - deficient.len(),
            deficient.join(", ")
        )));
    }
    let b = svd
        .solve(&target, RANK_TOLERANCE * s_max)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let b: [f64; 6] = std::array::from_fn(|j| b[j]);
    Ok(scaling.to_raw(&b))
}

/// Ordinary least squares fit of `sigma(z, theta)` over the six-term basis.
///
/// Regressors are standardized internally; `z^2` reaches 1e7 while the angle
/// terms stay near 1e2, so the raw design is badly conditioned. Coefficients
/// are returned in the raw basis.
pub fn fit_polynomial(samples: &[NoiseSample], opts: &FitOptions) -> Result<NoiseModel> {
    let kind = check_samples(samples)?;
    let scaling = BasisScaling::standardizing(samples);
    let coeffs = fit_in_basis(samples, opts.weighted, &scaling)?;
    Ok(NoiseModel::new(opts.camera.clone(), kind, coeffs))
}
