use nalgebra::Vector2;
use rayon::prelude::*;

use super::edges::{board_mask, outermost_in_mask};
use super::{fit_line_odr, ks_normality, EdgeSide, Line2, Moments, NoiseSample};
use crate::noisemodel::NoiseKind;
use crate::rangeimg::{PlaneSceneSpec, RangeImage};
use crate::{Error, Result};

/// Variance of a uniform rounding error on the unit pixel grid.
pub const QUANTIZATION_VARIANCE: f64 = 1.0 / 12.0;

const MIN_EDGE_PIXELS: usize = 10;

/// Residual spread below which an edge counts as exactly straight.
const SPREAD_EPSILON_PX: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LateralOptions {
    /// Depth jump separating board from a valid background.
    pub gap_mm: f64,
    /// Fraction of scan lines dropped at each end of the edge in every frame,
    /// so that corner pixels shared with the adjacent edges do not leak in.
    pub trim_fraction: f64,
    /// Subtract the pixel-grid quantization variance (Sheppard's correction)
    /// from the residual variance before reporting sigma.
    pub quantization_correction: bool,
    /// Pixels farther than this many robust standard deviations (at least one
    /// pixel each) from the fitted line are dropped and the line is refitted.
    /// Catches scan lines whose outermost pixel belongs to an adjacent edge.
    pub outlier_threshold: Option<f64>,
}

impl Default for LateralOptions {
    fn default() -> Self {
        LateralOptions {
            gap_mm: super::DEFAULT_DEPTH_GAP_MM,
            trim_fraction: 0.15,
            quantization_correction: true,
            outlier_threshold: Some(6.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeResidualSet {
    /// Signed orthogonal distances in pixels, frame by frame in input order.
    pub residuals: Vec<f64>,
    pub line: Line2,
    /// KS distance to the normal fitted to `residuals`; `None` when the
    /// residuals have no spread.
    pub ks_statistic: Option<f64>,
    /// Sample standard deviation of the residuals before quantization correction.
    pub raw_sigma: f64,
}

fn trimmed_edge(frame: &RangeImage, side: EdgeSide, opts: &LateralOptions) -> Result<Vec<(usize, usize)>> {
    let mask = board_mask(frame, opts.gap_mm)?;
    let pixels = outermost_in_mask(&mask, frame.width(), frame.height(), side);
    let cut = (pixels.len() as f64 * opts.trim_fraction).floor() as usize;
    if pixels.len() <= 2 * cut {
        return Ok(Vec::new());
    }
    Ok(pixels[cut..pixels.len() - cut].to_vec())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// ODR fit with iterative rejection of points beyond `threshold` robust
/// standard deviations (1.4826 MAD, floored at one pixel).
fn robust_line(mut points: Vec<Vector2<f64>>, threshold: Option<f64>) -> Result<(Line2, Vec<f64>)> {
    const MAX_ROUNDS: usize = 20;
    let mut line = fit_line_odr(&points)?;
    let mut residuals: Vec<f64> = points.iter().map(|p| line.signed_distance(p)).collect();
    let Some(k) = threshold else {
        return Ok((line, residuals));
    };
    if !(k > 0.0) {
        return Err(Error::arg("outlier threshold must be positive"));
    }
    for _ in 0..MAX_ROUNDS {
        let center = median(residuals.clone());
        let mad = median(residuals.iter().map(|r| (r - center).abs()).collect());
        let limit = k * (1.4826 * mad).max(1.0);
        let keep: Vec<bool> = residuals.iter().map(|r| (r - center).abs() <= limit).collect();
        if keep.iter().all(|&b| b) {
            break;
        }
        points = points.into_iter().zip(&keep).filter_map(|(p, &b)| b.then_some(p)).collect();
        if points.len() < MIN_EDGE_PIXELS {
            return Err(Error::InsufficientData {
                what: "edge pixels after outlier rejection",
                found: points.len(),
                required: MIN_EDGE_PIXELS,
            });
        }
        line = fit_line_odr(&points)?;
        residuals = points.iter().map(|p| line.signed_distance(p)).collect();
    }
    Ok((line, residuals))
}

/// Lateral noise at one board edge, pooled over all frames of a scene.
pub fn estimate_lateral(
    frames: &[RangeImage],
    spec: &PlaneSceneSpec,
    side: EdgeSide,
    opts: &LateralOptions,
) -> Result<(NoiseSample, EdgeResidualSet)> {
    let first = frames.first().ok_or_else(|| Error::arg("no input frames"))?;
    if frames.iter().any(|f| !f.same_shape(first)) {
        return Err(Error::arg("frames differ in size"));
    }
    if !(0.0..0.5).contains(&opts.trim_fraction) {
        return Err(Error::arg("trim_fraction must lie in [0, 0.5)"));
    }

    let per_frame = frames
        .par_iter()
        .map(|f| trimmed_edge(f, side, opts))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<Vector2<f64>> = per_frame
        .into_iter()
        .flatten()
        .map(|(u, v)| Vector2::new(u as f64, v as f64))
        .collect();
    if points.len() < MIN_EDGE_PIXELS {
        return Err(Error::InsufficientData {
            what: "pooled edge pixels",
            found: points.len(),
            required: MIN_EDGE_PIXELS,
        });
    }

    let (line, residuals) = robust_line(points, opts.outlier_threshold)?;
    let raw_var = Moments::of(&residuals).sample_variance();
    let var = if opts.quantization_correction {
        (raw_var - QUANTIZATION_VARIANCE).max(0.0)
    } else {
        raw_var
    };
    // Residuals of a perfectly straight edge are rounding noise.
    let ks_statistic = match ks_normality(&residuals) {
        _ if raw_var.sqrt() < SPREAD_EPSILON_PX => None,
        Ok(d) => Some(d),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    let sample = NoiseSample::new(
        NoiseKind::Lateral,
        spec.distance_mm,
        spec.angle_deg,
        var.sqrt(),
        residuals.len(),
    )?;
    Ok((
        sample,
        EdgeResidualSet {
            residuals,
            line,
            ks_statistic,
            raw_sigma: raw_var.sqrt(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> PlaneSceneSpec {
        PlaneSceneSpec::new(1000.0, 0.0).unwrap()
    }

    /// Board spanning rows 10..90 whose left edge in row `v` sits at column `left(v)`.
    fn frame(left: impl Fn(usize) -> usize) -> RangeImage {
        RangeImage::from_fn(120, 100, |u, v| ((10..90).contains(&v) && u >= left(v) && u < 110).then_some(1000.0)).unwrap()
    }

    #[test]
    fn straight_edge_has_zero_sigma() {
        let frames = vec![frame(|_| 30); 3];
        let (s, set) = estimate_lateral(&frames, &spec(), EdgeSide::Left, &LateralOptions::default()).unwrap();
        assert_eq!(s.sigma, 0.0);
        assert!(set.raw_sigma < 1e-9);
        assert_eq!(set.ks_statistic, None);
        // 80 rows, 12 trimmed at each end, 3 frames.
        assert_eq!(s.n, 3 * 56);
    }

    #[test]
    fn residual_spread_matches_known_offsets() {
        let offsets = [0i64, 1, -1, 2, 0, -2, 1, 0, -1, 0, 3, -3, 0, 1];
        let frames: Vec<RangeImage> = (0..4)
            .map(|f| frame(move |v| (40 + offsets[(v * 7 + f * 3) % offsets.len()]) as usize))
            .collect();
        let opts = LateralOptions {
            quantization_correction: false,
            trim_fraction: 0.0,
            outlier_threshold: None,
            ..LateralOptions::default()
        };
        let (s, set) = estimate_lateral(&frames, &spec(), EdgeSide::Left, &opts).unwrap();
        let xs: Vec<f64> = (0..4)
            .flat_map(|f| (10..90).map(move |v| offsets[(v * 7 + f * 3) % offsets.len()] as f64))
            .collect();
        let expect = Moments::of(&xs).sample_variance().sqrt();
        assert!((s.sigma - expect).abs() < 1e-2 * expect, "{} {}", s.sigma, expect);
        assert_eq!(set.residuals.len(), 320);
    }

    #[test]
    fn quantization_correction_subtracts_one_twelfth() {
        let frames: Vec<RangeImage> = (0..2).map(|f| frame(move |v| 40 + (v + f) % 3)).collect();
        let raw = LateralOptions {
            quantization_correction: false,
            ..LateralOptions::default()
        };
        let (a, _) = estimate_lateral(&frames, &spec(), EdgeSide::Left, &raw).unwrap();
        let (b, _) = estimate_lateral(&frames, &spec(), EdgeSide::Left, &LateralOptions::default()).unwrap();
        assert!((a.sigma.powi(2) - b.sigma.powi(2) - QUANTIZATION_VARIANCE).abs() < 1e-12);
    }

    #[test]
    fn far_outliers_are_rejected() {
        let mut pts: Vec<Vector2<f64>> = (0..200).map(|v| Vector2::new(50.0 + (v % 3) as f64 - 1.0, v as f64)).collect();
        pts.extend((0..10).map(|v| Vector2::new(5.0, v as f64)));
        let (line, res) = robust_line(pts.clone(), Some(6.0)).unwrap();
        assert_eq!(res.len(), 200);
        assert!((line.signed_distance(&Vector2::new(50.0, 100.0))).abs() < 0.05);
        let (_, all) = robust_line(pts, None).unwrap();
        assert_eq!(all.len(), 210);
    }

    #[test]
    fn empty_input_and_bad_options() {
        assert!(matches!(
            estimate_lateral(&[], &spec(), EdgeSide::Left, &LateralOptions::default()),
            Err(Error::InvalidArgument(m)) if m == "no input frames"
        ));
        let bad = LateralOptions {
            trim_fraction: 0.5,
            ..LateralOptions::default()
        };
        assert!(estimate_lateral(&[frame(|_| 30)], &spec(), EdgeSide::Left, &bad).is_err());
    }
}
