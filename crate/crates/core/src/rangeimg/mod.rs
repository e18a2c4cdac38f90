//! Range images and the camera geometry around them.
//!
//! Depth is always the z coordinate along the optical axis in millimetres,
//! never the Euclidean length of the ray. A frontal plane therefore renders
//! as a constant image. Missing measurements are NaN in the depth buffer and
//! `false` in the validity mask; the two are kept in lockstep by every
//! constructor.

mod average;
mod geometry;
mod rif;

pub use average::{average_frames, DEFAULT_MIN_VALID_FRACTION};
pub use geometry::{
    compute_normals, mm_to_px, px_to_mm, surface_angle_deg, to_point_cloud, NormalMap,
};
pub use rif::{decode_rif, encode_rif, read_range_image, write_range_image, RIF_MAGIC};

use crate::{Error, Result};

/// Pinhole intrinsics, all values in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    /// Square pixels with the principal point at the geometric image centre.
    pub fn centered(focal_px: f64, width: usize, height: usize) -> Result<Self> {
        Self::new(
            focal_px,
            focal_px,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
            width,
            height,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fx.is_finite() && self.fy > 0.0 && self.fy.is_finite()) {
            return Err(Error::arg(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::arg("intrinsics resolution must be at least 1x1"));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(Error::arg(format!(
                "cx={} outside [0, {})",
                self.cx, self.width
            )));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(Error::arg(format!(
                "cy={} outside [0, {})",
                self.cy, self.height
            )));
        }
        Ok(())
    }

    /// Direction of the ray through pixel `(u, v)`, scaled so that its z component is 1.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> [f64; 3] {
        [(u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0]
    }

    /// Pixel coordinates of a camera-frame point with `z > 0`.
    #[inline]
    pub fn project(&self, p: [f64; 3]) -> [f64; 2] {
        [
            self.fx * p[0] / p[2] + self.cx,
            self.fy * p[1] / p[2] + self.cy,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RotationAxis {
    /// Board rotates about the camera's vertical (y) axis; left/right edges stay vertical.
    #[default]
    Vertical,
    /// Board rotates about the camera's horizontal (x) axis.
    Horizontal,
}

impl std::str::FromStr for RotationAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertical" => Ok(RotationAxis::Vertical),
            "horizontal" => Ok(RotationAxis::Horizontal),
            other => Err(Error::Lookup {
                what: "rotation axis",
                name: other.to_string(),
                valid: "vertical, horizontal".into(),
            }),
        }
    }
}

impl std::fmt::Display for RotationAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RotationAxis::Vertical => "vertical",
            RotationAxis::Horizontal => "horizontal",
        })
    }
}

/// Ground truth for a planar board scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSceneSpec {
    /// Distance of the board's rotation centre along the optical axis.
    pub distance_mm: f64,
    /// Angle between the board normal and the optical axis.
    pub angle_deg: f64,
    pub board_width_mm: f64,
    pub board_height_mm: f64,
    pub rotation_axis: RotationAxis,
}

impl PlaneSceneSpec {
    pub const DEFAULT_BOARD_WIDTH_MM: f64 = 400.0;
    pub const DEFAULT_BOARD_HEIGHT_MM: f64 = 300.0;

    /// Default-sized board rotated about the vertical axis.
    pub fn new(distance_mm: f64, angle_deg: f64) -> Result<Self> {
        let spec = PlaneSceneSpec {
            distance_mm,
            angle_deg,
            board_width_mm: Self::DEFAULT_BOARD_WIDTH_MM,
            board_height_mm: Self::DEFAULT_BOARD_HEIGHT_MM,
            rotation_axis: RotationAxis::Vertical,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance_mm > 0.0 && self.distance_mm.is_finite()) {
            return Err(Error::arg(format!(
                "distance_mm must be positive, got {}",
                self.distance_mm
            )));
        }
        if !(self.angle_deg >= 0.0 && self.angle_deg < 90.0) {
            return Err(Error::arg(format!(
                "angle_deg must lie in [0, 90), got {}",
                self.angle_deg
            )));
        }
        if !(self.board_width_mm > 0.0 && self.board_height_mm > 0.0) {
            return Err(Error::arg("board extent must be positive"));
        }
        Ok(())
    }
}

/// Optional header metadata carried by a RIF file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    pub fx: Option<f64>,
    pub fy: Option<f64>,
    pub cx: Option<f64>,
    pub cy: Option<f64>,
    pub distance_mm: Option<f64>,
    pub angle_deg: Option<f64>,
    pub camera: Option<String>,
}

impl Metadata {
    pub fn set_intrinsics(&mut self, k: &CameraIntrinsics) {
        self.fx = Some(k.fx);
        self.fy = Some(k.fy);
        self.cx = Some(k.cx);
        self.cy = Some(k.cy);
    }
}

/// Row-major grid of z-depths in millimetres with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeImage {
    width: usize,
    height: usize,
    depth: Vec<f32>,
    valid: Vec<bool>,
    pub meta: Metadata,
}

impl RangeImage {
    /// Builds an image from raw depths. NaN marks an invalid pixel; any other
    /// value must be finite and positive.
    pub fn new(width: usize, height: usize, depth: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg(format!(
                "image dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if depth.len() != width * height {
            return Err(Error::arg(format!(
                "depth buffer has {} values, expected {}",
                depth.len(),
                width * height
            )));
        }
        if let Some(i) = depth.iter().position(|d| !d.is_nan() && !(*d > 0.0 && d.is_finite())) {
            return Err(Error::arg(format!(
                "pixel {i} holds {} which is neither NaN nor a positive finite depth",
                depth[i]
            )));
        }
        let valid = depth.iter().map(|d| !d.is_nan()).collect();
        Ok(RangeImage {
            width,
            height,
            depth,
            valid,
            meta: Metadata::default(),
        })
    }

    /// An image with every pixel invalid.
    pub fn invalid(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![f32::NAN; width * height])
    }

    /// Builds an image pixel by pixel; `None` or a non-positive value yields an invalid pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Option<f32>,
    ) -> Result<Self> {
        let mut depth = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                depth.push(match f(u, v) {
                    Some(d) if d > 0.0 && d.is_finite() => d,
                    _ => f32::NAN,
                });
            }
        }
        Self::new(width, height, depth)
    }

    pub fn with_meta(mut self, meta: Metadata) -> Self {
        self.meta = meta;
        self
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.depth.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }

    /// Raw depth buffer, NaN at invalid pixels.
    #[inline]
    pub fn depths(&self) -> &[f32] {
        &self.depth
    }

    #[inline]
    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.valid[self.index(u, v)]
    }

    #[inline]
    pub fn depth(&self, u: usize, v: usize) -> Option<f32> {
        let i = self.index(u, v);
        self.valid[i].then(|| self.depth[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&b| b).count()
    }

    /// Intrinsics assembled from header metadata, when all four values are present.
    pub fn intrinsics(&self) -> Option<CameraIntrinsics> {
        let m = &self.meta;
        CameraIntrinsics::new(m.fx?, m.fy?, m.cx?, m.cy?, self.width, self.height).ok()
    }

    /// Scene ground truth from header metadata, with the default board size.
    pub fn scene_spec(&self) -> Option<PlaneSceneSpec> {
        PlaneSceneSpec::new(self.meta.distance_mm?, self.meta.angle_deg?).ok()
    }

    pub fn same_shape(&self, other: &RangeImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_intrinsics(&self, k: &CameraIntrinsics) -> Result<()> {
        if k.width != self.width || k.height != self.height {
            return Err(Error::arg(format!(
                "image is {}x{} but intrinsics describe {}x{}",
                self.width, self.height, k.width, k.height
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_mirrors_nan() {
        let img = RangeImage::new(3, 1, vec![1000.0, f32::NAN, 5.0]).unwrap();
        assert_eq!(img.mask(), &[true, false, true]);
        assert_eq!(img.depth(1, 0), None);
        assert_eq!(img.depth(2, 0), Some(5.0));
    }

    #[test]
    fn rejects_bad_depths_and_shapes() {
        assert!(RangeImage::new(0, 0, vec![]).is_err());
        assert!(RangeImage::new(2, 2, vec![1.0; 3]).is_err());
        assert!(RangeImage::new(1, 1, vec![0.0]).is_err());
        assert!(RangeImage::new(1, 1, vec![-3.0]).is_err());
        assert!(RangeImage::new(1, 1, vec![f32::INFINITY]).is_err());
    }

    #[test]
    fn intrinsics_invariants() {
        assert!(CameraIntrinsics::new(500.0, 500.0, 319.5, 239.5, 640, 480).is_ok());
        assert!(CameraIntrinsics::new(0.0, 500.0, 319.5, 239.5, 640, 480).is_err());
        assert!(CameraIntrinsics::new(500.0, 500.0, 640.0, 239.5, 640, 480).is_err());
        assert!(CameraIntrinsics::new(500.0, 500.0, 10.0, -1.0, 640, 480).is_err());
    }

    #[test]
    fn scene_spec_invariants() {
        assert!(PlaneSceneSpec::new(1000.0, 0.0).is_ok());
        assert!(PlaneSceneSpec::new(1000.0, 89.9).is_ok());
        assert!(PlaneSceneSpec::new(1000.0, 90.0).is_err());
        assert!(PlaneSceneSpec::new(0.0, 10.0).is_err());
        assert!(PlaneSceneSpec::new(1000.0, -1.0).is_err());
    }
}
