use std::path::Path;

use serde::Deserialize;

use super::{
    emit, format_sig, load_frames, load_model, usage, write_sidecar, AverageArgs, EmulateArgs,
    EmulationArgs, EstimateAxialArgs, EstimateLateralArgs, EvalModelArgs, FitModelArgs, SceneArgs, SweepArgs,
    SynthPlaneArgs,
};
use crate::emulate::{image_seed, sweep_mn, AngleMode, EmulationConfig, Emulator};
use crate::noiseestim::{
    estimate_axial, estimate_lateral, freedman_diaconis_histogram, ks_critical_value, AxialOptions, EdgeSide,
    LateralOptions, NoiseSample,
};
use crate::noisemodel::{all_presets, fit_polynomial, parse_preset_ref, read_model, FitOptions, NoiseKind, BASIS_TERMS};
use crate::planescene::{synth_plane, Background, SynthesisConfig};
use crate::rangeimg::{average_frames, write_range_image, CameraIntrinsics, PlaneSceneSpec, RangeImage};
use crate::{Error, Execution};

const KS_ALPHA: f64 = 0.05;

#[derive(Debug, Deserialize)]
struct SampleRecord {
    kind: String,
    z_mm: f64,
    theta_deg: f64,
    sigma: f64,
    n: usize,
}

pub(super) fn samples_csv(samples: &[NoiseSample]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "z_mm", "theta_deg", "sigma", "n"])?;
    for s in samples {
        w.write_record([
            s.kind.name().to_string(),
            s.z_mm.to_string(),
            s.theta_deg.to_string(),
            s.sigma.to_string(),
            s.n.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub(super) fn read_samples(path: &Path) -> anyhow::Result<Vec<NoiseSample>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in r.deserialize::<SampleRecord>().enumerate() {
        // Line numbers count the header as line 1.
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: format!("{}: {e}", path.display()),
        })?;
        let kind = rec.kind.parse().map_err(|e: Error| Error::Parse {
            line,
            message: format!("{}: {e}", path.display()),
        })?;
        out.push(NoiseSample::new(kind, rec.z_mm, rec.theta_deg, rec.sigma, rec.n)?);
    }
    Ok(out)
}

fn histogram_csv(data: &[f64]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bin_center", "count"])?;
    for b in freedman_diaconis_histogram(data)? {
        w.write_record([b.center.to_string(), b.count.to_string()])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn scene_spec(scene: &SceneArgs, first: &RangeImage) -> anyhow::Result<PlaneSceneSpec> {
    let header = first.scene_spec();
    let distance = scene.distance.or(header.map(|s| s.distance_mm));
    let angle = scene.angle.or(header.map(|s| s.angle_deg));
    match (distance, angle) {
        (Some(d), Some(a)) => Ok(PlaneSceneSpec::new(d, a)?),
        _ => Err(usage("scene distance and angle are not in the frame header; pass --distance and --angle")),
    }
}

pub(super) fn run_synth_plane(a: &SynthPlaneArgs) -> anyhow::Result<()> {
    let background = match a.background.as_str() {
        "invalid" => Background::Invalid,
        s => Background::Constant(
            s.parse()
                .map_err(|_| usage(format!("--background must be `invalid` or a depth in mm, got {s}")))?,
        ),
    };
    let spec = PlaneSceneSpec {
        distance_mm: a.distance,
        angle_deg: a.angle,
        board_width_mm: a.board_width,
        board_height_mm: a.board_height,
        rotation_axis: a.axis.parse()?,
    };
    let centre = CameraIntrinsics::centered(a.focal, a.width, a.height)?;
    let k = CameraIntrinsics::new(
        a.focal,
        a.focal,
        a.cx.unwrap_or(centre.cx),
        a.cy.unwrap_or(centre.cy),
        a.width,
        a.height,
    )?;
    let mut img = synth_plane(&SynthesisConfig::new(spec, k, background)?)?;
    img.meta.camera = a.camera.clone();
    write_range_image(&img, &a.output)?;
    write_sidecar(&a.output, "synth-plane", a)
}

pub(super) fn run_average(a: &AverageArgs) -> anyhow::Result<()> {
    let (_, frames) = load_frames(&a.inputs)?;
    let mean = average_frames(&frames, a.min_valid_fraction)?;
    write_range_image(&mean, &a.output)?;
    write_sidecar(&a.output, "average", a)
}

pub(super) fn run_estimate_lateral(a: &EstimateLateralArgs) -> anyhow::Result<()> {
    let (_, frames) = load_frames(&a.inputs)?;
    let spec = scene_spec(&a.scene, &frames[0])?;
    let opts = LateralOptions {
        gap_mm: a.scene.gap,
        trim_fraction: a.trim,
        quantization_correction: !a.no_quantization_correction,
        outlier_threshold: (a.outlier_threshold > 0.0).then_some(a.outlier_threshold),
    };
    let mut samples = Vec::new();
    let mut pooled = Vec::new();
    let mut residual_rows = csv::Writer::from_writer(Vec::new());
    residual_rows.write_record(["side", "residual"])?;
    for name in &a.sides {
        let side: EdgeSide = name.parse()?;
        let (sample, set) = estimate_lateral(&frames, &spec, side, &opts)?;
        let ks = match set.ks_statistic {
            Some(d) => format!(
                "{} (critical {} at alpha {KS_ALPHA})",
                format_sig(d, 5),
                format_sig(ks_critical_value(set.residuals.len(), KS_ALPHA)?, 5)
            ),
            None => "n/a".into(),
        };
        eprintln!(
            "{side}: sigma {} px (raw {}) from {} edge pixels, KS {ks}",
            format_sig(sample.sigma, 5),
            format_sig(set.raw_sigma, 5),
            sample.n
        );
        for r in &set.residuals {
            residual_rows.write_record([side.name().to_string(), r.to_string()])?;
        }
        pooled.extend_from_slice(&set.residuals);
        samples.push(sample);
    }
    emit(a.output.as_deref(), &samples_csv(&samples)?)?;
    if let Some(h) = &a.histogram {
        emit(Some(h), &histogram_csv(&pooled)?)?;
    }
    if let Some(r) = &a.residuals {
        emit(Some(r), &String::from_utf8(residual_rows.into_inner()?)?)?;
    }
    match &a.output {
        Some(out) => write_sidecar(out, "estimate-lateral", a),
        None => Ok(()),
    }
}

pub(super) fn run_estimate_axial(a: &EstimateAxialArgs) -> anyhow::Result<()> {
    let (_, frames) = load_frames(&a.inputs)?;
    let spec = scene_spec(&a.scene, &frames[0])?;
    let opts = AxialOptions {
        cutoff_px: a.cutoff,
        margin_px: a.margin,
        gap_mm: a.scene.gap,
        min_valid_fraction: a.min_valid_fraction,
        ..AxialOptions::default()
    };
    let est = estimate_axial(&frames, &spec, &opts)?;
    eprintln!(
        "axial: sigma {} mm from {} residuals, residual mean {} mm",
        format_sig(est.sample.sigma, 5),
        est.sample.n,
        format_sig(est.residual_mean, 5)
    );
    emit(a.output.as_deref(), &samples_csv(&[est.sample])?)?;
    if let Some(h) = &a.histogram {
        emit(Some(h), &histogram_csv(&est.residual_sample)?)?;
    }
    match &a.output {
        Some(out) => write_sidecar(out, "estimate-axial", a),
        None => Ok(()),
    }
}

pub(super) fn run_fit_model(a: &FitModelArgs) -> anyhow::Result<()> {
    let mut samples = Vec::new();
    for p in &a.inputs {
        samples.extend(read_samples(p)?);
    }
    let kind: NoiseKind = match &a.kind {
        Some(k) => k.parse()?,
        None => {
            let first = samples.first().ok_or_else(|| Error::arg("no noise samples in the input"))?.kind;
            if samples.iter().any(|s| s.kind != first) {
                return Err(usage("samples of both kinds present; choose one with --kind"));
            }
            first
        }
    };
    samples.retain(|s| s.kind == kind);
    let model = fit_polynomial(
        &samples,
        &FitOptions {
            camera: a.camera.clone(),
            weighted: a.weighted,
        },
    )?;
    for (term, c) in BASIS_TERMS.iter().zip(&model.coeffs) {
        eprintln!("{term:>8}: {c:e}");
    }
    emit(a.output.as_deref(), &model.to_text())?;
    match &a.output {
        Some(out) => write_sidecar(out, "fit-model", a),
        None => Ok(()),
    }
}

pub(super) fn run_eval_model(a: &EvalModelArgs) -> anyhow::Result<()> {
    let model = match (&a.source.preset, &a.source.model) {
        (Some(p), _) => parse_preset_ref(p).map_err(|e| usage(e.to_string()))?,
        (None, Some(m)) => read_model(m)?,
        (None, None) => unreachable!("clap requires one model source"),
    };
    let e = model.eval(a.z, a.theta)?;
    if e.clamped {
        eprintln!("warning: polynomial is negative at z={} theta={}, clamped to 0", a.z, a.theta);
    }
    if e.extrapolated {
        eprintln!("warning: z={} theta={} lies outside the model's validity domain", a.z, a.theta);
    }
    println!("{}", format_sig(e.sigma, 5));
    Ok(())
}

pub(super) fn run_presets() -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "camera", "kind", "units", "c0", "c1", "c2", "c3", "c4", "c5", "z_min_mm", "z_max_mm", "theta_max_deg",
    ])?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for m in all_presets() {
        let d = m.domain.unwrap_or_default();
        let mut rec = vec![m.camera.clone(), m.kind.name().into(), m.kind.units().into()];
        rec.extend(m.coeffs.iter().map(|c| c.to_string()));
        rec.extend([opt(d.z_min_mm), opt(d.z_max_mm), opt(d.theta_max_deg)]);
        w.write_record(rec)?;
    }
    emit(None, &String::from_utf8(w.into_inner()?)?)
}

fn emulation_config(a: &EmulationArgs, m_n: f64) -> anyhow::Result<EmulationConfig> {
    let cfg = EmulationConfig {
        axial_model: load_model(&a.axial_model, NoiseKind::Axial)?,
        lateral_model: load_model(&a.lateral_model, NoiseKind::Lateral)?,
        m_n,
        seed: a.seed,
        angle_mode: a.angle_mode.parse::<AngleMode>()?,
        focal_px: a.focal,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn execution(serial: bool) -> Execution {
    if serial {
        Execution::Serial
    } else {
        Execution::Parallel
    }
}

/// Input images with the file names they are written under.
fn named_inputs(inputs: &[std::path::PathBuf]) -> anyhow::Result<Vec<(String, RangeImage)>> {
    let (paths, frames) = load_frames(inputs)?;
    let mut names = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for (p, img) in paths.iter().zip(frames) {
        let name = p
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::arg(format!("{}: not a UTF-8 file name", p.display())))?
            .to_string();
        if !names.insert(name.clone()) {
            return Err(usage(format!("two inputs share the file name {name}")));
        }
        out.push((name, img));
    }
    Ok(out)
}

pub(super) fn run_emulate(a: &EmulateArgs) -> anyhow::Result<()> {
    let cfg = emulation_config(&a.emulation, a.mn)?;
    let exec = execution(a.emulation.serial);
    if a.frames == 0 {
        return Err(usage("--frames must be at least 1"));
    }
    let single_file = a.inputs.len() == 1 && a.inputs[0].is_file() && a.frames == 1;
    let images = named_inputs(&a.inputs)?;
    if single_file {
        let noisy = Emulator::new(&images[0].1, &cfg)?.run(image_seed(cfg.seed, 0, cfg.m_n), exec)?;
        write_range_image(&noisy, &a.output)?;
        return write_sidecar(&a.output, "emulate", a);
    }

    std::fs::create_dir_all(&a.output).map_err(|e| Error::io(&a.output, e))?;
    let mut failures = 0;
    let total = images.len() * a.frames;
    for (i, (name, img)) in images.iter().enumerate() {
        let emu = match Emulator::new(img, &cfg) {
            Ok(emu) => emu,
            Err(e) => {
                eprintln!("{name}: {e}");
                failures += a.frames;
                continue;
            }
        };
        for f in 0..a.frames {
            let path = if a.frames == 1 {
                a.output.join(name)
            } else {
                let stem = Path::new(name).file_stem().and_then(|s| s.to_str()).unwrap_or(name);
                a.output.join(format!("{stem}_{f:04}.rif"))
            };
            let res = emu
                .run(image_seed(cfg.seed, i * a.frames + f, cfg.m_n), exec)
                .and_then(|noisy| write_range_image(&noisy, &path));
            if let Err(e) = res {
                eprintln!("{}: {e}", path.display());
                failures += 1;
            }
        }
    }
    write_sidecar(&a.output, "emulate", a)?;
    if failures > 0 {
        return Err(Error::arg(format!("{failures} of {total} images failed")).into());
    }
    Ok(())
}

pub(super) fn run_sweep(a: &SweepArgs) -> anyhow::Result<()> {
    let cfg = emulation_config(&a.emulation, 1.0)?;
    let images = named_inputs(&a.inputs)?;
    let report = sweep_mn(&images, &cfg, &a.mn_list, &a.output, execution(a.emulation.serial))
        .map_err(|e| match e {
            Error::InvalidArgument(m) => usage(m),
            other => other.into(),
        })?;
    for (path, msg) in &report.failures {
        eprintln!("{}: {msg}", path.display());
    }
    eprintln!("wrote {} images, {} failures", report.written.len(), report.failures.len());
    write_sidecar(&a.output, "sweep", a)?;
    if !report.is_success() {
        return Err(Error::arg(format!("{} images failed", report.failures.len())).into());
    }
    Ok(())
}
