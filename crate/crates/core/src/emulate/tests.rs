use super::*;
use crate::noisemodel::preset;
use crate::planescene::{synth_plane, Background, SynthesisConfig};
use crate::rangeimg::PlaneSceneSpec;

fn board(distance: f64, angle: f64) -> RangeImage {
    let k = CameraIntrinsics::centered(200.0, 80, 60).unwrap();
    let cfg = SynthesisConfig::new(PlaneSceneSpec::new(distance, angle).unwrap(), k, Background::Constant(3000.0)).unwrap();
    synth_plane(&cfg).unwrap()
}

fn constant_model(kind: NoiseKind, sigma: f64) -> NoiseModel {
    NoiseModel::new("test", kind, [sigma, 0.0, 0.0, 0.0, 0.0, 0.0])
}

fn kinect_cfg(m_n: f64, seed: u64) -> EmulationConfig {
    EmulationConfig::new(
        preset("kinect-v1", NoiseKind::Axial).unwrap(),
        preset("kinect-v1", NoiseKind::Lateral).unwrap(),
        m_n,
        seed,
    )
}

fn bits(img: &RangeImage) -> Vec<u32> {
    img.depths().iter().map(|d| d.to_bits()).collect()
}

#[test]
fn zero_multiplier_is_identity() {
    let img = board(1000.0, 30.0);
    let out = emulate_noise(&img, &kinect_cfg(0.0, 5)).unwrap();
    assert_eq!(bits(&out), bits(&img));
    assert_eq!(out.mask(), img.mask());
    assert_eq!(out.meta, img.meta);
}

#[test]
fn output_is_deterministic_and_thread_independent() {
    let img = board(1000.0, 30.0);
    let cfg = kinect_cfg(1.5, 99);
    let a = emulate_noise_with(&img, &cfg, Execution::Parallel).unwrap();
    let b = emulate_noise_with(&img, &cfg, Execution::Serial).unwrap();
    assert_eq!(bits(&a), bits(&b));
    let c = emulate_noise(&img, &EmulationConfig { seed: 100, ..cfg }).unwrap();
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn swapped_models_are_rejected() {
    let mut cfg = kinect_cfg(1.0, 1);
    std::mem::swap(&mut cfg.axial_model, &mut cfg.lateral_model);
    assert!(matches!(emulate_noise(&board(1000.0, 0.0), &cfg), Err(Error::Config(_))));
}

#[test]
fn negative_or_nan_multiplier_is_rejected() {
    for m in [-0.5, f64::NAN, f64::INFINITY] {
        assert!(kinect_cfg(m, 1).validate().is_err());
    }
}

#[test]
fn normals_need_intrinsics() {
    let img = RangeImage::from_fn(10, 10, |_, _| Some(1000.0)).unwrap();
    let cfg = kinect_cfg(1.0, 1);
    assert!(matches!(Emulator::new(&img, &cfg), Err(Error::Config(_))));
    let with_f = EmulationConfig { focal_px: Some(300.0), ..cfg.clone() };
    assert!(Emulator::new(&img, &with_f).is_ok());
    let dist = EmulationConfig { angle_mode: AngleMode::DistanceOnly, ..cfg };
    assert!(Emulator::new(&img, &dist).is_ok());
}

#[test]
fn theta_field_matches_board_angle() {
    let img = board(1000.0, 40.0);
    let emu = Emulator::new(&img, &kinect_cfg(1.0, 1)).unwrap();
    // Interior board pixel near the image centre.
    let i = img.index(40, 30);
    assert!((emu.theta_field()[i] - 40.0).abs() < 0.1, "{}", emu.theta_field()[i]);
    assert!(emu.theta_field().iter().all(|t| (0.0..90.0).contains(t)));
}

#[test]
fn axial_offsets_scale_linearly_with_multiplier() {
    let img = board(1200.0, 20.0);
    let axial = preset("kinect-v2", NoiseKind::Axial).unwrap();
    let offsets = |m: f64| {
        let cfg = EmulationConfig::new(axial.clone(), NoiseModel::zero(NoiseKind::Lateral), m, 8);
        let emu = Emulator::new(&img, &cfg).unwrap();
        let (moved, src) = emu.lateral_stage(8);
        assert_eq!(bits(&moved), bits(&img));
        emu.axial_offsets(&moved, &src, 8, Execution::Serial).unwrap()
    };
    let base = offsets(1.0);
    for k in [0.5, 2.0, 3.0] {
        let scaled = offsets(k);
        for (a, b) in base.iter().zip(&scaled) {
            if a.is_nan() {
                assert!(b.is_nan());
            } else {
                assert!((b - k * a).abs() <= 1e-12 * (1.0 + a.abs()), "{a} {b} {k}");
            }
        }
    }
}

#[test]
fn axial_noise_matches_model_sigma() {
    let img = RangeImage::from_fn(200, 200, |_, _| Some(1500.0)).unwrap();
    let mut cfg = EmulationConfig::new(
        constant_model(NoiseKind::Axial, 2.0),
        NoiseModel::zero(NoiseKind::Lateral),
        1.5,
        3,
    );
    cfg.angle_mode = AngleMode::DistanceOnly;
    let out = emulate_noise(&img, &cfg).unwrap();
    let d: Vec<f64> = out.depths().iter().map(|&z| z as f64 - 1500.0).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 0.05, "{mean}");
    assert!((sd - 3.0).abs() < 0.05, "{sd}");
}

#[test]
fn points_pushed_behind_the_camera_become_invalid() {
    let img = RangeImage::from_fn(50, 50, |_, _| Some(1.0)).unwrap();
    let mut cfg = EmulationConfig::new(
        constant_model(NoiseKind::Axial, 10.0),
        NoiseModel::zero(NoiseKind::Lateral),
        1.0,
        3,
    );
    cfg.angle_mode = AngleMode::DistanceOnly;
    let out = emulate_noise(&img, &cfg).unwrap();
    assert!(out.valid_count() > 0 && out.valid_count() < out.len());
    assert!(out.depths().iter().all(|d| d.is_nan() || *d > 0.0));
}

#[test]
fn lateral_shift_is_shared_along_rows() {
    // Left half near, right half far: each row's boundary moves by its own rounded shift.
    let img = RangeImage::from_fn(60, 40, |u, _| Some(if u < 30 { 1000.0 } else { 2000.0 })).unwrap();
    let mut cfg = EmulationConfig::new(
        NoiseModel::zero(NoiseKind::Axial),
        constant_model(NoiseKind::Lateral, 2.0),
        1.0,
        17,
    );
    cfg.angle_mode = AngleMode::DistanceOnly;
    let emu = Emulator::new(&img, &cfg).unwrap();
    let (du, _) = emu.displacements(17);
    let (moved, _) = emu.lateral_stage(17);
    // Rows far from the top and bottom border, where no vertical shift leaves the image.
    for v in 12..28 {
        let row = &du[v * 60..(v + 1) * 60];
        assert!(row.iter().all(|&x| x == row[0]));
        let boundary = (0..60).find(|&u| moved.depth(u, v) == Some(2000.0)).unwrap() as f64;
        assert_eq!(boundary, 30.0 - row[0].round(), "row {v}");
    }
}

#[test]
fn fill_prefers_nearest_then_lower_index() {
    let mut v = vec![None, Some(1.0), None, None, Some(4.0), None];
    fill_line(&mut v, 6, |i| i);
    assert_eq!(v, vec![Some(1.0), Some(1.0), Some(1.0), Some(4.0), Some(4.0), Some(4.0)]);
    let mut empty: Vec<Option<f64>> = vec![None; 3];
    fill_line(&mut empty, 3, |i| i);
    assert_eq!(empty, vec![None; 3]);
}

#[test]
fn sweep_writes_one_directory_per_multiplier() {
    let dir = tempfile::tempdir().unwrap();
    let images = vec![("a.rif".to_string(), board(900.0, 0.0)), ("b.rif".to_string(), board(1100.0, 20.0))];
    let grid = [0.0, 0.5, 1.0];
    let report = sweep_mn(&images, &kinect_cfg(1.0, 4), &grid, dir.path(), Execution::Parallel).unwrap();
    assert!(report.is_success(), "{:?}", report.failures);
    assert_eq!(report.written.len(), 6);
    for m in grid {
        for (name, _) in &images {
            assert!(dir.path().join(mn_dir_name(m)).join(name).is_file());
        }
    }
    let zero = crate::rangeimg::read_range_image(dir.path().join("mn_0/a.rif")).unwrap();
    assert_eq!(bits(&zero), bits(&images[0].1));
}

#[test]
fn sweep_rejects_bad_grids() {
    let dir = tempfile::tempdir().unwrap();
    let images = vec![("a.rif".to_string(), board(900.0, 0.0))];
    for grid in [&[][..], &[1.0, 1.0][..], &[-1.0][..]] {
        assert!(sweep_mn(&images, &kinect_cfg(1.0, 4), grid, dir.path(), Execution::Serial).is_err());
    }
}

#[test]
fn grid_and_seed_helpers() {
    let g = default_mn_grid();
    assert_eq!(g.len(), 13);
    assert_eq!(g[12], 3.0);
    assert_eq!(mn_dir_name(0.25), "mn_0.25");
    assert_eq!(mn_dir_name(-0.0), "mn_0");
    assert_eq!(mn_dir_name(2.0), "mn_2");
    assert_ne!(image_seed(1, 0, 1.0), image_seed(1, 1, 1.0));
    assert_ne!(image_seed(1, 0, 1.0), image_seed(1, 0, 2.0));
}
