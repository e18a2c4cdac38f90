use nalgebra::Vector2;

use super::Line2;
use crate::{Error, Result};

/// Total least squares line through 2D points.
///
/// The line passes through the centroid; its normal is the minor principal
/// axis of the scatter matrix, taken in closed form from the 2x2 eigenproblem.
/// The normal is oriented to have a positive x component (or positive y for
/// exactly horizontal normals).
pub fn fit_line_odr(points: &[Vector2<f64>]) -> Result<Line2> {
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            what: "points for a line fit",
            found: points.len(),
            required: 2,
        });
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector2::zeros(), |acc, p| acc + p) / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = p - centroid;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let trace = sxx + syy;
    if trace == 0.0 {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let spread = (sxx - syy).hypot(2.0 * sxy);
    if spread <= 1e-12 * trace {
        return Err(Error::Degenerate(
            "isotropic point scatter, line direction is undefined".into(),
        ));
    }
    // Major axis at angle phi; the normal is perpendicular to it.
    let phi = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let mut normal = Vector2::new(-phi.sin(), phi.cos());
    if normal.x < 0.0 || (normal.x == 0.0 && normal.y < 0.0) {
        normal = -normal;
    }
    Ok(Line2 {
        normal,
        offset: normal.dot(&centroid),
    })
}
