use crate::{Error, Result};

/// Disparity-noise parameters of a structured-light camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalSLParams {
    /// Internal disparity normalisation factor.
    pub m: f64,
    /// Focal length, pixels.
    pub f: f64,
    /// Baseline, mm.
    pub b: f64,
    /// Standard deviation of the normalised disparity.
    pub sigma_rho: f64,
}

/// Axial noise of a structured-light camera, `(m / (f b)) z^2 sigma_rho`.
pub fn theoretical_axial_sigma(p: &TheoreticalSLParams, z: f64) -> Result<f64> {
    if !(p.f > 0.0 && p.b > 0.0) {
        return Err(Error::arg(format!(
            "focal length and baseline must be positive, got f={} b={}",
            p.f, p.b
        )));
    }
    if !(p.sigma_rho >= 0.0) {
        return Err(Error::arg("sigma_rho must be >= 0"));
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::arg(format!("z must be positive, got {z}")));
    }
    Ok(p.m / (p.f * p.b) * z * z * p.sigma_rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_law() {
        let p = TheoreticalSLParams { m: 1.0, f: 1.0, b: 1.0, sigma_rho: 1e-6 };
        assert!((theoretical_axial_sigma(&p, 1000.0).unwrap() - 1.0).abs() < 1e-12);

        let q = TheoreticalSLParams { m: 0.3, f: 580.0, b: 75.0, sigma_rho: 0.5 };
        let a = theoretical_axial_sigma(&q, 1234.0).unwrap();
        let b = theoretical_axial_sigma(&q, 2468.0).unwrap();
        assert!((b / a - 4.0).abs() < 1e-12);

        let silent = TheoreticalSLParams { sigma_rho: 0.0, ..q };
        assert_eq!(theoretical_axial_sigma(&silent, 3000.0).unwrap(), 0.0);
    }

    #[test]
    fn invalid_parameters() {
        let p = TheoreticalSLParams { m: 1.0, f: 0.0, b: 1.0, sigma_rho: 1.0 };
        assert!(theoretical_axial_sigma(&p, 1.0).is_err());
        let p = TheoreticalSLParams { m: 1.0, f: 1.0, b: -2.0, sigma_rho: 1.0 };
        assert!(theoretical_axial_sigma(&p, 1.0).is_err());
        let p = TheoreticalSLParams { m: 1.0, f: 1.0, b: 1.0, sigma_rho: 1.0 };
        assert!(theoretical_axial_sigma(&p, 0.0).is_err());
    }
}
