use super::{NoiseKind, NoiseModel, ValidityDomain};
use crate::{Error, Result};

pub const PRESET_CAMERAS: [&str; 3] = ["kinect-v1", "kinect-v2", "motioncam-3d"];

// Coefficients over [1, z, theta, z^2, z*theta, theta^2], z in mm, theta in degrees.
const KINECT_V1_LATERAL: [f64; 6] = [0.94, 4.51e-5, 6.20e-4, 0.0, 0.0, 0.0];
const KINECT_V2_LATERAL: [f64; 6] = [0.736, -6.20e-4, 5.35e-3, 2.13e-7, -1.40e-6, -4.13e-5];
const MOTIONCAM_LATERAL: [f64; 6] = [0.915, -6.91e-5, 2.84e-3, 0.0, 0.0, 0.0];
const KINECT_V1_AXIAL: [f64; 6] = [-0.422, 6.89e-4, 2.24e-2, 5.99e-7, -2.70e-6, -1.52e-4];
const KINECT_V2_AXIAL: [f64; 6] = [1.17, 9.72e-5, -1.37e-2, -6.35e-9, 7.86e-6, 1.17e-4];
const MOTIONCAM_AXIAL: [f64; 6] = [0.599, -1.43e-3, -8.94e-3, 8.84e-7, 1.27e-5, 2.75e-5];

/// Depth and angle ranges the presets were measured on.
fn domain(camera: &str) -> ValidityDomain {
    match camera {
        "kinect-v1" => ValidityDomain {
            z_min_mm: Some(800.0),
            z_max_mm: Some(4000.0),
            theta_max_deg: Some(70.0),
        },
        "kinect-v2" => ValidityDomain {
            z_min_mm: Some(500.0),
            z_max_mm: Some(4500.0),
            theta_max_deg: Some(80.0),
        },
        _ => ValidityDomain {
            z_min_mm: Some(500.0),
            z_max_mm: None,
            theta_max_deg: Some(70.0),
        },
    }
}

/// Built-in model for one of [`PRESET_CAMERAS`].
pub fn preset(camera: &str, kind: NoiseKind) -> Result<NoiseModel> {
    let coeffs = match (camera, kind) {
        ("kinect-v1", NoiseKind::Lateral) => KINECT_V1_LATERAL,
        ("kinect-v2", NoiseKind::Lateral) => KINECT_V2_LATERAL,
        ("motioncam-3d", NoiseKind::Lateral) => MOTIONCAM_LATERAL,
        ("kinect-v1", NoiseKind::Axial) => KINECT_V1_AXIAL,
        ("kinect-v2", NoiseKind::Axial) => KINECT_V2_AXIAL,
        ("motioncam-3d", NoiseKind::Axial) => MOTIONCAM_AXIAL,
        _ => {
            return Err(Error::Lookup {
                what: "camera",
                name: camera.to_string(),
                valid: PRESET_CAMERAS.join(", "),
            })
        }
    };
    Ok(NoiseModel {
        camera: camera.to_string(),
        kind,
        coeffs,
        domain: Some(domain(camera)),
    })
}

/// Parses `camera:kind`, e.g. `kinect-v1:lateral`.
pub fn parse_preset_ref(s: &str) -> Result<NoiseModel> {
    let (camera, kind) = s.split_once(':').ok_or_else(|| Error::Lookup {
        what: "preset",
        name: s.to_string(),
        valid: format!("<camera>:<lateral|axial> with camera one of {}", PRESET_CAMERAS.join(", ")),
    })?;
    preset(camera, kind.parse()?)
}

pub fn all_presets() -> Vec<NoiseModel> {
    let mut out = Vec::new();
    for kind in [NoiseKind::Lateral, NoiseKind::Axial] {
        for cam in PRESET_CAMERAS {
            out.push(preset(cam, kind).expect("built-in preset"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_are_verbatim() {
        assert_eq!(
            preset("kinect-v1", NoiseKind::Lateral).unwrap().coeffs,
            [0.94, 4.51e-5, 6.20e-4, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            preset("motioncam-3d", NoiseKind::Axial).unwrap().coeffs,
            [0.599, -1.43e-3, -8.94e-3, 8.84e-7, 1.27e-5, 2.75e-5]
        );
        let linear = preset("motioncam-3d", NoiseKind::Lateral).unwrap();
        assert_eq!(&linear.coeffs[3..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn table_evaluations_to_five_digits() {
        let cases = [
            ("kinect-v1", NoiseKind::Lateral, 1000.0, 0.0, 0.98510),
            ("kinect-v2", NoiseKind::Lateral, 1000.0, 30.0, 0.41033),
            ("motioncam-3d", NoiseKind::Axial, 1000.0, 0.0, 0.053),
            ("kinect-v1", NoiseKind::Axial, 1000.0, 30.0, 1.3202),
        ];
        for (cam, kind, z, t, want) in cases {
            let got = preset(cam, kind).unwrap().sigma(z, t).unwrap();
            assert!((got - want).abs() < 5e-6 * want.max(0.1), "{cam} {kind}: {got} vs {want}");
        }
    }

    #[test]
    fn unknown_names() {
        match preset("kinect-v3", NoiseKind::Lateral) {
            Err(Error::Lookup { valid, .. }) => assert!(valid.contains("kinect-v1")),
            other => panic!("{other:?}"),
        }
        assert!(parse_preset_ref("kinect-v1:depth").is_err());
        assert!(parse_preset_ref("kinect-v1").is_err());
        assert_eq!(parse_preset_ref("kinect-v2:axial").unwrap().kind, NoiseKind::Axial);
        assert_eq!(all_presets().len(), 6);
    }
}
