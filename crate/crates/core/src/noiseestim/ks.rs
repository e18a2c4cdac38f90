use statrs::distribution::{ContinuousCDF, Normal};

use super::Moments;
use crate::{Error, Result};

/// One-sample Kolmogorov-Smirnov statistic against a normal distribution whose
/// mean and standard deviation are estimated from the same sample.
///
/// Estimating the parameters from the data makes the classical critical values
/// conservative (the Lilliefors situation); compare against
/// [`ks_critical_value`] with that in mind.
pub fn ks_normality(samples: &[f64]) -> Result<f64> {
    if samples.len() < 5 {
        return Err(Error::InsufficientData {
            what: "samples for a KS test",
            found: samples.len(),
            required: 5,
        });
    }
    let m = Moments::of(samples);
    let sd = m.sample_variance().sqrt();
    if !(sd > 0.0) {
        return Err(Error::Degenerate("samples have zero variance".into()));
    }
    let normal = Normal::new(m.mean, sd).map_err(|e| Error::Degenerate(e.to_string()))?;
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0f64, f64::max);
    Ok(d)
}

/// Asymptotic two-sided critical value `sqrt(-ln(alpha / 2) / 2) / sqrt(n)`;
/// about `1.358 / sqrt(n)` at `alpha = 0.05`.
pub fn ks_critical_value(n: usize, alpha: f64) -> Result<f64> {
    if n == 0 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::arg(format!("need n >= 1 and alpha in (0, 1), got n={n} alpha={alpha}")));
    }
    Ok((-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_value_at_five_percent() {
        let c = ks_critical_value(1000, 0.05).unwrap();
        assert!((c * 1000f64.sqrt() - 1.3581).abs() < 1e-4);
    }

    #[test]
    fn equal_samples_are_degenerate() {
        assert!(matches!(ks_normality(&[2.0; 10]), Err(Error::Degenerate(_))));
        assert!(ks_normality(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn statistic_is_a_probability_distance() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.731).sin()).collect();
        let d = ks_normality(&xs).unwrap();
        assert!(d > 0.0 && d < 1.0);
        let shifted: Vec<f64> = xs.iter().map(|x| 3.0 * x + 100.0).collect();
        assert!((ks_normality(&shifted).unwrap() - d).abs() < 1e-12);
    }
}
