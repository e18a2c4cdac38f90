use nalgebra::Vector3;
use rayon::prelude::*;

use super::{CameraIntrinsics, RangeImage};
use crate::{Error, Result};

/// Back-projects every valid pixel; invalid pixels are skipped.
pub fn to_point_cloud(img: &RangeImage, k: &CameraIntrinsics) -> Result<Vec<Vector3<f64>>> {
    img.check_intrinsics(k)?;
    let mut cloud = Vec::with_capacity(img.valid_count());
    for v in 0..img.height() {
        for u in 0..img.width() {
            if let Some(z) = img.depth(u, v) {
                cloud.push(back_project(k, u, v, z as f64));
            }
        }
    }
    Ok(cloud)
}

#[inline]
fn back_project(k: &CameraIntrinsics, u: usize, v: usize, z: f64) -> Vector3<f64> {
    Vector3::new(
        (u as f64 - k.cx) * z / k.fx,
        (v as f64 - k.cy) * z / k.fy,
        z,
    )
}

/// Per-pixel unit normals, camera facing (`n.z < 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    width: usize,
    height: usize,
    normals: Vec<Option<Vector3<f64>>>,
}

impl NormalMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, u: usize, v: usize) -> Option<Vector3<f64>> {
        self.normals[v * self.width + u]
    }

    pub fn as_slice(&self) -> &[Option<Vector3<f64>>] {
        &self.normals
    }

    /// Surface angle in degrees at `(u, v)`, if the normal there is valid.
    pub fn angle_deg(&self, u: usize, v: usize) -> Option<f64> {
        self.get(u, v).map(|n| angle_of_unit(&n))
    }

    pub fn valid_count(&self) -> usize {
        self.normals.iter().filter(|n| n.is_some()).count()
    }
}

/// Central-difference normals on the back-projected point grid.
///
/// A pixel gets a normal only if it and its four direct neighbours are valid;
/// image borders and mask boundaries therefore stay invalid.
pub fn compute_normals(img: &RangeImage, k: &CameraIntrinsics) -> Result<NormalMap> {
    img.check_intrinsics(k)?;
    let (w, h) = (img.width(), img.height());
    let mut normals = vec![None; w * h];
    if w >= 3 && h >= 3 {
        normals
            .par_chunks_mut(w)
            .enumerate()
            .skip(1)
            .take(h - 2)
            .for_each(|(v, row)| {
                for (u, slot) in row.iter_mut().enumerate().skip(1).take(w - 2) {
                    *slot = normal_at(img, k, u, v);
                }
            });
    }
    Ok(NormalMap {
        width: w,
        height: h,
        normals,
    })
}

fn normal_at(img: &RangeImage, k: &CameraIntrinsics, u: usize, v: usize) -> Option<Vector3<f64>> {
    img.depth(u, v)?;
    let p = |u: usize, v: usize| img.depth(u, v).map(|z| back_project(k, u, v, z as f64));
    let tu = p(u + 1, v)? - p(u - 1, v)?;
    let tv = p(u, v + 1)? - p(u, v - 1)?;
    let n = tu.cross(&tv);
    let norm = n.norm();
    if !(norm > 0.0) || n.z == 0.0 {
        return None;
    }
    let n = n / norm;
    Some(if n.z > 0.0 { -n } else { n })
}

#[inline]
fn angle_of_unit(n: &Vector3<f64>) -> f64 {
    n.z.abs().min(1.0).acos().to_degrees()
}

/// Angle between a unit normal and the optical axis, in `[0, 90]` degrees.
pub fn surface_angle_deg(normal: &Vector3<f64>) -> Result<f64> {
    let norm = normal.norm();
    if !((norm - 1.0).abs() <= 1e-6) {
        return Err(Error::arg(format!(
            "normal must be unit length, got norm {norm}"
        )));
    }
    Ok(angle_of_unit(normal))
}

fn check_px_mm(z: f64, f: f64) -> Result<()> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::arg(format!("depth must be positive, got {z}")));
    }
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::arg(format!("focal length must be positive, got {f}")));
    }
    Ok(())
}

/// Converts an image-plane length in pixels to millimetres at depth `z`.
pub fn px_to_mm(sigma_px: f64, z: f64, f: f64) -> Result<f64> {
    check_px_mm(z, f)?;
    Ok(sigma_px * z / f)
}

pub fn mm_to_px(sigma_mm: f64, z: f64, f: f64) -> Result<f64> {
    check_px_mm(z, f)?;
    Ok(sigma_mm * f / z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn k(w: usize, h: usize) -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, ((w - 1) / 2) as f64, ((h - 1) / 2) as f64, w, h).unwrap()
    }

    /// Depth image of the infinite plane with camera-facing normal `n`
    /// through (0, 0, d), from the closed-form ray intersection.
    fn plane(k: &CameraIntrinsics, n: Vector3<f64>, d: f64) -> RangeImage {
        RangeImage::from_fn(k.width, k.height, |u, v| {
            let r = k.ray(u as f64, v as f64);
            let t = n.z * d / (n.x * r[0] + n.y * r[1] + n.z);
            Some(t as f32)
        })
        .unwrap()
    }

    #[test]
    fn point_cloud_geometry() {
        let kk = k(21, 17);
        let mut depth = vec![f32::NAN; 21 * 17];
        depth[8 * 21 + 10] = 1000.0;
        let img = RangeImage::new(21, 17, depth).unwrap();
        let cloud = to_point_cloud(&img, &kk).unwrap();
        assert_eq!(cloud, vec![Vector3::new(0.0, 0.0, 1000.0)]);

        let wide = CameraIntrinsics::new(500.0, 500.0, 0.0, 0.0, 501, 1).unwrap();
        let mut depth = vec![f32::NAN; 501];
        depth[500] = 1000.0;
        let img = RangeImage::new(501, 1, depth).unwrap();
        let cloud = to_point_cloud(&img, &wide).unwrap();
        assert_eq!(cloud[0].x, 1000.0);

        let empty = RangeImage::invalid(21, 17).unwrap();
        assert!(to_point_cloud(&empty, &kk).unwrap().is_empty());
        assert!(to_point_cloud(&empty, &k(5, 5)).is_err());
    }

    #[test]
    fn cloud_z_equals_depth() {
        let kk = k(21, 17);
        let img = plane(&kk, Vector3::new(0.3, -0.1, -0.9).normalize(), 1234.5);
        let cloud = to_point_cloud(&img, &kk).unwrap();
        for (p, d) in cloud.iter().zip(img.depths()) {
            assert_eq!(p.z, *d as f64);
        }
    }

    #[test]
    fn frontal_plane_normals() {
        let kk = k(21, 17);
        let img = plane(&kk, Vector3::new(0.0, 0.0, -1.0), 1000.0);
        let normals = compute_normals(&img, &kk).unwrap();
        assert_eq!(normals.valid_count(), 19 * 15);
        for n in normals.as_slice().iter().flatten() {
            assert!((n - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-6);
        }
        assert!(normals.get(0, 5).is_none());
    }

    #[test]
    fn tilted_plane_normal_angle() {
        let kk = k(21, 17);
        let t = 30f64.to_radians();
        let img = plane(&kk, Vector3::new(t.sin(), 0.0, -t.cos()), 1000.0);
        let normals = compute_normals(&img, &kk).unwrap();
        for v in 1..16 {
            for u in 1..20 {
                let n = normals.get(u, v).unwrap();
                assert!((n.norm() - 1.0).abs() < 1e-9 && n.z < 0.0);
                assert!((normals.angle_deg(u, v).unwrap() - 30.0).abs() < 0.1);
            }
        }
    }

    #[test]
    fn isolated_pixel_has_no_normal() {
        let kk = k(5, 5);
        let mut depth = vec![f32::NAN; 25];
        depth[12] = 1000.0;
        let img = RangeImage::new(5, 5, depth).unwrap();
        assert_eq!(compute_normals(&img, &kk).unwrap().valid_count(), 0);
    }

    #[test]
    fn surface_angles() {
        let s = 30f64.to_radians();
        assert_eq!(surface_angle_deg(&Vector3::new(0.0, 0.0, -1.0)).unwrap(), 0.0);
        assert_relative_eq!(
            surface_angle_deg(&Vector3::new(s.sin(), 0.0, -s.cos())).unwrap(),
            30.0,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            surface_angle_deg(&Vector3::new(1.0, 0.0, 0.0)).unwrap(),
            90.0,
            epsilon = 1e-12
        );
        assert!(surface_angle_deg(&Vector3::new(0.0, 0.0, -1.1)).is_err());
    }

    #[test]
    fn pixel_millimetre_conversion() {
        assert_relative_eq!(px_to_mm(0.9851, 1000.0, 500.0).unwrap(), 1.9702, epsilon = 1e-12);
        assert_eq!(px_to_mm(0.0, 1000.0, 500.0).unwrap(), 0.0);
        assert!(px_to_mm(1.0, 0.0, 500.0).is_err());
        assert!(mm_to_px(1.0, 1000.0, -5.0).is_err());
        for &(s, z, f) in &[(0.3, 812.0, 525.0), (7.1, 4000.0, 366.2), (1e-3, 500.0, 1450.0)] {
            let back = mm_to_px(px_to_mm(s, z, f).unwrap(), z, f).unwrap();
            assert!(((back - s) / s).abs() < 1e-12);
        }
    }
}
