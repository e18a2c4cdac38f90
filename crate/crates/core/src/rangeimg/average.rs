use super::RangeImage;
use crate::{Error, Result};

pub const DEFAULT_MIN_VALID_FRACTION: f64 = 0.5;

/// Per-pixel temporal mean of a frame stack.
///
/// A pixel is averaged over the frames in which it is valid and is kept only
/// when that happens in at least `min_valid_fraction` of the frames. Metadata
/// is taken from the first frame.
pub fn average_frames(frames: &[RangeImage], min_valid_fraction: f64) -> Result<RangeImage> {
    let first = frames.first().ok_or_else(|| Error::arg("no frames to average"))?;
    if !(0.0..=1.0).contains(&min_valid_fraction) {
        return Err(Error::arg(format!(
            "min_valid_fraction must lie in [0, 1], got {min_valid_fraction}"
        )));
    }
    if let Some(i) = frames.iter().position(|f| !f.same_shape(first)) {
        return Err(Error::arg(format!(
            "frame {i} is {}x{}, expected {}x{}",
            frames[i].width(),
            frames[i].height(),
            first.width(),
            first.height()
        )));
    }

    let n = frames.len() as f64;
    let mut sum = vec![0.0f64; first.len()];
    let mut count = vec![0u32; first.len()];
    for frame in frames {
        for (i, (&d, &ok)) in frame.depths().iter().zip(frame.mask()).enumerate() {
            if ok {
                sum[i] += d as f64;
                count[i] += 1;
            }
        }
    }
    let depth = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| {
            if c > 0 && c as f64 / n >= min_valid_fraction {
                (s / c as f64) as f32
            } else {
                f32::NAN
            }
        })
        .collect();
    Ok(RangeImage::new(first.width(), first.height(), depth)?.with_meta(first.meta.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn px(d: f32) -> RangeImage {
        RangeImage::new(1, 1, vec![d]).unwrap()
    }

    #[test]
    fn mean_of_three() {
        let out = average_frames(&[px(9.0), px(10.0), px(11.0)], 0.5).unwrap();
        assert_eq!(out.depth(0, 0), Some(10.0));
    }

    #[test]
    fn validity_fraction_rule() {
        let out = average_frames(&[px(10.0), px(f32::NAN), px(12.0)], 0.5).unwrap();
        assert_eq!(out.depth(0, 0), Some(11.0));
        let out = average_frames(&[px(10.0), px(f32::NAN), px(f32::NAN)], 0.5).unwrap();
        assert_eq!(out.depth(0, 0), None);
    }

    #[test]
    fn copies_average_to_themselves_exactly() {
        let img = RangeImage::new(3, 1, vec![1000.123, f32::NAN, 0.1]).unwrap();
        let frames = vec![img.clone(); 7];
        let out = average_frames(&frames, 0.5).unwrap();
        let a: Vec<u32> = img.depths().iter().map(|d| d.to_bits()).collect();
        let b: Vec<u32> = out.depths().iter().map(|d| d.to_bits()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn argument_errors() {
        assert!(average_frames(&[], 0.5).is_err());
        let a = RangeImage::new(2, 1, vec![1.0, 1.0]).unwrap();
        assert!(average_frames(&[a.clone(), px(1.0)], 0.5).is_err());
        assert!(average_frames(&[a], 1.5).is_err());
    }
}
