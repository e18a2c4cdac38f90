use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub center: f64,
    pub count: usize,
}

const MAX_BINS: usize = 10_000;

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Histogram with Freedman-Diaconis bin width `2 IQR / n^(1/3)`, bins starting at the minimum.
pub fn freedman_diaconis_histogram(data: &[f64]) -> Result<Vec<HistogramBin>> {
    if data.is_empty() {
        return Err(Error::InsufficientData {
            what: "values for a histogram",
            found: 0,
            required: 1,
        });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg("histogram data must be finite"));
    }
    let mut sorted = data.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let mut width = 2.0 * iqr / (sorted.len() as f64).cbrt();
    let range = max - min;
    if !(width > 0.0) || range == 0.0 {
        if range == 0.0 {
            return Ok(vec![HistogramBin {
                center: min,
                count: sorted.len(),
            }]);
        }
        width = range;
    }
    let bins = ((range / width).ceil() as usize).clamp(1, MAX_BINS);
    let width = range / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in &sorted {
        let b = (((x - min) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            center: min + (i as f64 + 0.5) * width,
            count,
        })
        .collect())
}
