use std::collections::BTreeMap;
use std::path::PathBuf;

use super::commands::read_samples;
use super::{usage, write_sidecar, ReportArgs};
use crate::noiseestim::NoiseSample;
use crate::noisemodel::{fit_polynomial, FitOptions, NoiseKind, NoiseModel};
use crate::Error;

/// Samples of one camera and kind, pooled per `(z, theta)`.
#[derive(Debug, Clone, Copy)]
struct Point {
    z: f64,
    theta: f64,
    sigma: f64,
    n: usize,
}

/// Merges samples taken at the same distance and angle: variances are
/// averaged with weights `n`.
fn pool(samples: &[NoiseSample]) -> Vec<Point> {
    let mut groups: BTreeMap<(u64, u64), (f64, usize)> = BTreeMap::new();
    for s in samples {
        let key = ((s.z_mm + 0.0).to_bits(), (s.theta_deg + 0.0).to_bits());
        let e = groups.entry(key).or_insert((0.0, 0));
        e.0 += s.n as f64 * s.sigma * s.sigma;
        e.1 += s.n;
    }
    groups
        .into_iter()
        .map(|((z, t), (ss, n))| Point {
            z: f64::from_bits(z),
            theta: f64::from_bits(t),
            sigma: (ss / n as f64).sqrt(),
            n,
        })
        .collect()
}

fn table(points: &[Point], fit: Option<&NoiseModel>, by_z: bool) -> anyhow::Result<String> {
    let mut rows = points.to_vec();
    if by_z {
        rows.sort_by(|a, b| a.theta.total_cmp(&b.theta).then(a.z.total_cmp(&b.z)));
    } else {
        rows.sort_by(|a, b| a.z.total_cmp(&b.z).then(a.theta.total_cmp(&b.theta)));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    if by_z {
        w.write_record(["theta_deg", "z_mm", "sigma", "n", "fit_sigma"])?;
    } else {
        w.write_record(["z_mm", "theta_deg", "sigma", "n", "fit_sigma"])?;
    }
    for p in rows {
        let fitted = fit
            .and_then(|m| m.sigma(p.z, p.theta).ok())
            .map(|s| s.to_string())
            .unwrap_or_default();
        let (first, second) = if by_z { (p.theta, p.z) } else { (p.z, p.theta) };
        w.write_record([first.to_string(), second.to_string(), p.sigma.to_string(), p.n.to_string(), fitted])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Splits `camera=path`; a bare path names its camera by the file stem.
fn parse_input(s: &str) -> anyhow::Result<(String, PathBuf)> {
    if let Some((cam, path)) = s.split_once('=') {
        if cam.is_empty() {
            return Err(usage(format!("empty camera name in {s}")));
        }
        return Ok((cam.to_string(), PathBuf::from(path)));
    }
    let path = PathBuf::from(s);
    let stem = path
        .file_stem()
        .and_then(|x| x.to_str())
        .ok_or_else(|| usage(format!("cannot derive a camera name from {s}")))?
        .to_string();
    Ok((stem, path))
}

pub(super) fn run_report(a: &ReportArgs) -> anyhow::Result<()> {
    let mut by_camera: BTreeMap<(String, NoiseKind), Vec<NoiseSample>> = BTreeMap::new();
    for input in &a.inputs {
        let (camera, path) = parse_input(input)?;
        for s in read_samples(&path)? {
            by_camera.entry((camera.clone(), s.kind)).or_default().push(s);
        }
    }
    if by_camera.is_empty() {
        return Err(Error::arg("no noise samples in the input").into());
    }
    std::fs::create_dir_all(&a.output).map_err(|e| Error::io(&a.output, e))?;
    for ((camera, kind), samples) in &by_camera {
        let opts = FitOptions {
            camera: camera.clone(),
            weighted: false,
        };
        let fit = match fit_polynomial(samples, &opts) {
            Ok(m) => Some(m),
            Err(e) => {
                eprintln!("{camera} {kind}: no fit column ({e})");
                None
            }
        };
        let points = pool(samples);
        for (suffix, by_z) in [("vs_z", true), ("vs_theta", false)] {
            let path = a.output.join(format!("{camera}_{kind}_{suffix}.csv"));
            let text = table(&points, fit.as_ref(), by_z)?;
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
    }
    write_sidecar(&a.output, "report", a)
}
