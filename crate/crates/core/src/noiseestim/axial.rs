use rayon::prelude::*;

use super::edges::board_mask;
use super::{Moments, NoiseSample};
use crate::noisemodel::NoiseKind;
use crate::rangeimg::{average_frames, PlaneSceneSpec, RangeImage, DEFAULT_MIN_VALID_FRACTION};
use crate::{Error, Result};

const MIN_RESIDUALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxialOptions {
    /// Standard deviation of the Gaussian low-pass filter, pixels.
    pub cutoff_px: f64,
    /// Pixels within this Chebyshev distance of the board boundary are skipped.
    /// `None` uses the filter radius, so that the reference of every kept
    /// pixel comes from a complete kernel window.
    pub margin_px: Option<usize>,
    pub gap_mm: f64,
    pub min_valid_fraction: f64,
    /// How many residuals of the first frame are kept for histograms.
    pub keep_residuals: usize,
}

impl Default for AxialOptions {
    fn default() -> Self {
        AxialOptions {
            cutoff_px: 2.0,
            margin_px: None,
            gap_mm: super::DEFAULT_DEPTH_GAP_MM,
            min_valid_fraction: DEFAULT_MIN_VALID_FRACTION,
            keep_residuals: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxialEstimate {
    pub sample: NoiseSample,
    /// Mean of all pooled residuals, mm.
    pub residual_mean: f64,
    /// Residuals of the first frame (up to `keep_residuals`), mm.
    pub residual_sample: Vec<f64>,
}

fn kernel_radius(sigma: f64) -> usize {
    (4.0 * sigma).ceil() as usize
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = kernel_radius(sigma);
    (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-0.5 * x * x / (sigma * sigma)).exp()
        })
        .collect()
}

/// Gaussian blur of `values` restricted to `mask`, normalised by the blurred
/// mask. Pixels outside the mask come out as NaN.
pub(crate) fn smooth_masked(values: &[f64], mask: &[bool], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return values
            .iter()
            .zip(mask)
            .map(|(&x, &m)| if m { x } else { f64::NAN })
            .collect();
    }
    let kernel = gaussian_kernel(sigma);
    let r = kernel.len() / 2;

    let mut num_h = vec![0.0; width * height];
    let mut den_h = vec![0.0; width * height];
    num_h
        .par_chunks_mut(width)
        .zip(den_h.par_chunks_mut(width))
        .enumerate()
        .for_each(|(v, (num, den))| {
            let row = v * width;
            for u in 0..width {
                let (mut a, mut b) = (0.0, 0.0);
                let lo = u.saturating_sub(r);
                let hi = (u + r).min(width - 1);
                for x in lo..=hi {
                    if mask[row + x] {
                        let k = kernel[x + r - u];
                        a += k * values[row + x];
                        b += k;
                    }
                }
                num[u] = a;
                den[u] = b;
            }
        });

    let mut out = vec![f64::NAN; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(v, row)| {
        let lo = v.saturating_sub(r);
        let hi = (v + r).min(height - 1);
        for (u, px) in row.iter_mut().enumerate() {
            if !mask[v * width + u] {
                continue;
            }
            let (mut a, mut b) = (0.0, 0.0);
            for y in lo..=hi {
                let k = kernel[y + r - v];
                a += k * num_h[y * width + u];
                b += k * den_h[y * width + u];
            }
            *px = a / b;
        }
    });
    out
}

fn check_cutoff(cutoff: f64) -> Result<()> {
    if !(cutoff >= 0.0 && cutoff.is_finite()) {
        return Err(Error::arg(format!("cutoff must be finite and >= 0, got {cutoff}")));
    }
    Ok(())
}

/// Smoothed reference surface of a (temporally averaged) image.
pub fn lowpass_reference(mean_img: &RangeImage, cutoff_px: f64) -> Result<RangeImage> {
    check_cutoff(cutoff_px)?;
    let values: Vec<f64> = mean_img.depths().iter().map(|&d| d as f64).collect();
    let smooth = smooth_masked(&values, mean_img.mask(), mean_img.width(), mean_img.height(), cutoff_px);
    let depth = smooth.iter().map(|&d| d as f32).collect();
    Ok(RangeImage::new(mean_img.width(), mean_img.height(), depth)?.with_meta(mean_img.meta.clone()))
}

/// Pixels whose whole `(2m+1)^2` neighbourhood lies inside `mask`.
fn erode(mask: &[bool], width: usize, height: usize, m: usize) -> Vec<bool> {
    if m == 0 {
        return mask.to_vec();
    }
    let window_all = |get: &dyn Fn(isize) -> bool, i: usize, len: usize| {
        (-(m as isize)..=m as isize).all(|d| {
            let j = i as isize + d;
            j >= 0 && (j as usize) < len && get(j)
        })
    };
    let mut rows = vec![false; width * height];
    for v in 0..height {
        for u in 0..width {
            rows[v * width + u] = window_all(&|x| mask[v * width + x as usize], u, width);
        }
    }
    let mut out = vec![false; width * height];
    for v in 0..height {
        for u in 0..width {
            out[v * width + u] = window_all(&|y| rows[y as usize * width + u], v, height);
        }
    }
    out
}

/// Axial noise of a scene: spread of every frame around the low-pass filtered
/// temporal mean, over board pixels away from the boundary.
pub fn estimate_axial(frames: &[RangeImage], spec: &PlaneSceneSpec, opts: &AxialOptions) -> Result<AxialEstimate> {
    if frames.len() < 2 {
        return Err(Error::InsufficientData {
            what: "frames for axial estimation",
            found: frames.len(),
            required: 2,
        });
    }
    check_cutoff(opts.cutoff_px)?;
    let mean = average_frames(frames, opts.min_valid_fraction)?;
    let (w, h) = (mean.width(), mean.height());
    let board = board_mask(&mean, opts.gap_mm)?;
    let values: Vec<f64> = mean.depths().iter().map(|&d| d as f64).collect();
    let reference = smooth_masked(&values, &board, w, h, opts.cutoff_px);
    let interior = erode(&board, w, h, opts.margin_px.unwrap_or_else(|| kernel_radius(opts.cutoff_px)));

    let per_frame: Vec<(Moments, Vec<f64>)> = frames
        .par_iter()
        .enumerate()
        .map(|(fi, frame)| {
            let mut m = Moments::default();
            let mut kept = Vec::new();
            for (i, (&d, &ok)) in frame.depths().iter().zip(frame.mask()).enumerate() {
                if !(ok && interior[i]) {
                    continue;
                }
                let r = d as f64 - reference[i];
                // A background sample that slid onto the board is not axial noise.
                if r.abs() > opts.gap_mm {
                    continue;
                }
                m.push(r);
                if fi == 0 && kept.len() < opts.keep_residuals {
                    kept.push(r);
                }
            }
            (m, kept)
        })
        .collect();

    let mut residual_sample = Vec::new();
    let mut total = Moments::default();
    for (i, (m, kept)) in per_frame.into_iter().enumerate() {
        total = total.merge(m);
        if i == 0 {
            residual_sample = kept;
        }
    }
    if total.n < MIN_RESIDUALS {
        return Err(Error::InsufficientData {
            what: "pooled axial residuals",
            found: total.n,
            required: MIN_RESIDUALS,
        });
    }
    let sample = NoiseSample::new(
        NoiseKind::Axial,
        spec.distance_mm,
        spec.angle_deg,
        total.sample_variance().sqrt(),
        total.n,
    )?;
    Ok(AxialEstimate {
        sample,
        residual_mean: total.mean,
        residual_sample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(w: usize, h: usize, f: impl Fn(usize, usize) -> Option<f32>) -> RangeImage {
        RangeImage::from_fn(w, h, f).unwrap()
    }

    #[test]
    fn constant_image_is_unchanged() {
        let img = image(30, 20, |u, _| (u % 7 != 3).then_some(812.5));
        let out = lowpass_reference(&img, 2.0).unwrap();
        assert_eq!(out.mask(), img.mask());
        for (a, b) in out.depths().iter().zip(img.depths()) {
            assert!(a.is_nan() && b.is_nan() || a == b);
        }
    }

    #[test]
    fn ramp_interior_is_preserved() {
        let (w, h) = (40, 30);
        let values: Vec<f64> = (0..w * h).map(|i| 1000.0 + 0.37 * (i % w) as f64 - 1.3 * (i / w) as f64).collect();
        let mask = vec![true; w * h];
        let out = smooth_masked(&values, &mask, w, h, 2.0);
        let r = 8;
        for v in r..h - r {
            for u in r..w - r {
                assert!((out[v * w + u] - values[v * w + u]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn single_valid_pixel_is_unchanged() {
        let img = image(9, 9, |u, v| (u == 4 && v == 4).then_some(1234.5));
        let out = lowpass_reference(&img, 2.0).unwrap();
        assert_eq!(out.depth(4, 4), Some(1234.5));
        assert_eq!(out.valid_count(), 1);
    }

    #[test]
    fn erosion_margin() {
        let mask: Vec<bool> = (0..100).map(|i| (2..8).contains(&(i % 10)) && (2..8).contains(&(i / 10))).collect();
        let e = erode(&mask, 10, 10, 2);
        let kept: Vec<usize> = (0..100).filter(|&i| e[i]).collect();
        assert_eq!(kept, vec![44, 45, 54, 55]);
    }

    #[test]
    fn noiseless_frames_have_no_axial_noise() {
        let img = image(60, 50, |u, v| ((5..55).contains(&u) && (5..45).contains(&v)).then_some(1000.0));
        let frames = vec![img; 4];
        let spec = PlaneSceneSpec::new(1000.0, 0.0).unwrap();
        let est = estimate_axial(&frames, &spec, &AxialOptions::default()).unwrap();
        assert!(est.sample.sigma < 1e-6);
        // Default margin is the filter radius, 8 px for a 2 px cutoff.
        assert_eq!(est.sample.n, 4 * 34 * 24);
        let narrow = AxialOptions {
            margin_px: Some(2),
            ..AxialOptions::default()
        };
        assert_eq!(estimate_axial(&frames, &spec, &narrow).unwrap().sample.n, 4 * 46 * 36);
        assert_eq!(est.sample.kind, NoiseKind::Axial);
    }

    #[test]
    fn too_few_frames_or_residuals() {
        let img = image(60, 50, |_, _| Some(1000.0));
        let spec = PlaneSceneSpec::new(1000.0, 0.0).unwrap();
        assert!(estimate_axial(&[img], &spec, &AxialOptions::default()).is_err());
        let tiny = image(8, 8, |_, _| Some(1000.0));
        assert!(matches!(
            estimate_axial(&[tiny.clone(), tiny], &spec, &AxialOptions::default()),
            Err(Error::InsufficientData { .. })
        ));
    }
}
