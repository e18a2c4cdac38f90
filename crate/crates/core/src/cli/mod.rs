//! The `rangenoise` command line front end.
//!
//! Every subcommand that writes files also writes `<output>.run.txt` next to
//! its main output, a TOML record of all effective parameters including
//! defaults. Data goes to stdout or the given output files, diagnostics to
//! stderr. Exit status is 0 on success, 1 on usage errors and 2 on data or
//! estimation errors.

mod commands;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::noisemodel::{parse_preset_ref, read_model, NoiseKind, NoiseModel};
use crate::rangeimg::{read_range_image, RangeImage};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rangenoise", version, about = "Noise estimation, modelling and emulation for 3D range cameras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a noise-free range image of a rotated rectangular board.
    SynthPlane(SynthPlaneArgs),
    /// Per-pixel temporal mean of a stack of range images.
    Average(AverageArgs),
    /// Estimate lateral noise at board edges; writes CSV `kind,z_mm,theta_deg,sigma,n`.
    EstimateLateral(EstimateLateralArgs),
    /// Estimate axial noise on the board surface; writes CSV `kind,z_mm,theta_deg,sigma,n`.
    EstimateAxial(EstimateAxialArgs),
    /// Fit a degree-2 model sigma(z, theta) to noise-sample CSV files.
    FitModel(FitModelArgs),
    /// Print sigma of a model at one distance and angle.
    EvalModel(EvalModelArgs),
    /// List the built-in camera models as CSV.
    Presets,
    /// Add model-calibrated noise, scaled by a multiplier, to clean range images.
    Emulate(EmulateArgs),
    /// Emulate a set of images at several multipliers, one subdirectory per multiplier.
    Sweep(SweepArgs),
    /// Collect noise-sample CSV files into sigma-vs-z and sigma-vs-theta tables per camera.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
struct SynthPlaneArgs {
    /// Distance of the board centre along the optical axis, mm.
    #[arg(long)]
    distance: f64,
    /// Angle between board normal and optical axis, degrees.
    #[arg(long, default_value_t = 0.0)]
    angle: f64,
    /// Rotation axis of the board.
    #[arg(long, default_value = "vertical", value_parser = ["vertical", "horizontal"])]
    axis: String,
    /// Board width, mm.
    #[arg(long, default_value_t = 400.0)]
    board_width: f64,
    /// Board height, mm.
    #[arg(long, default_value_t = 300.0)]
    board_height: f64,
    /// Image width, pixels.
    #[arg(long, default_value_t = 640)]
    width: usize,
    /// Image height, pixels.
    #[arg(long, default_value_t = 480)]
    height: usize,
    /// Focal length (fx = fy), pixels.
    #[arg(long, default_value_t = 580.0)]
    focal: f64,
    /// Principal point x, pixels [default: image centre].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cx: Option<f64>,
    /// Principal point y, pixels [default: image centre].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cy: Option<f64>,
    /// Depth outside the board: `invalid` or a depth in mm.
    #[arg(long, default_value = "invalid")]
    background: String,
    /// Camera name stored in the file header.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    camera: Option<String>,
    /// Output RIF file.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct AverageArgs {
    /// Input RIF files or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Minimum fraction of frames in which a pixel must be valid.
    #[arg(long, default_value_t = 0.5)]
    min_valid_fraction: f64,
    /// Output RIF file.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SceneArgs {
    /// Scene distance, mm [default: from the first frame's header].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    distance: Option<f64>,
    /// Scene angle, degrees [default: from the first frame's header].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
    /// Depth jump separating board and background, mm.
    #[arg(long, default_value_t = 50.0)]
    gap: f64,
}

#[derive(Debug, Args, Serialize)]
struct EstimateLateralArgs {
    /// Input RIF frames or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    scene: SceneArgs,
    /// Board edges to measure, comma separated.
    #[arg(long, default_value = "left,right", value_delimiter = ',', value_parser = ["left", "right", "top", "bottom"])]
    sides: Vec<String>,
    /// Fraction of scan lines dropped at each end of an edge.
    #[arg(long, default_value_t = 0.15)]
    trim: f64,
    /// Outlier rejection threshold in robust standard deviations; 0 disables.
    #[arg(long, default_value_t = 6.0)]
    outlier_threshold: f64,
    /// Report raw residual spread without subtracting the 1/12 px^2 quantization variance.
    #[arg(long)]
    no_quantization_correction: bool,
    /// Output CSV of noise samples [default: stdout].
    #[arg(short, long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
    /// Histogram CSV `bin_center,count` of the pooled edge residuals, pixels.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    histogram: Option<PathBuf>,
    /// CSV `side,residual` of all edge residuals, pixels.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    residuals: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct EstimateAxialArgs {
    /// Input RIF frames or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    scene: SceneArgs,
    /// Standard deviation of the low-pass filter, pixels.
    #[arg(long, default_value_t = 2.0)]
    cutoff: f64,
    /// Boundary margin, pixels [default: filter radius, ceil(4 * cutoff)].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    margin: Option<usize>,
    /// Minimum fraction of frames in which a pixel must be valid.
    #[arg(long, default_value_t = 0.5)]
    min_valid_fraction: f64,
    /// Output CSV of noise samples [default: stdout].
    #[arg(short, long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
    /// Histogram CSV `bin_center,count` of first-frame residuals, mm.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    histogram: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct FitModelArgs {
    /// Noise-sample CSV files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Use only samples of this kind [default: the single kind present].
    #[arg(long, value_parser = ["lateral", "axial"])]
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    /// Camera name written to the model file.
    #[arg(long, default_value = "fitted")]
    camera: String,
    /// Weight samples by their residual count.
    #[arg(long)]
    weighted: bool,
    /// Output model file [default: stdout].
    #[arg(short, long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ModelSource {
    /// Built-in model, `<camera>:<lateral|axial>`.
    #[arg(long)]
    preset: Option<String>,
    /// Model file.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalModelArgs {
    #[command(flatten)]
    source: ModelSource,
    /// Distance, mm.
    #[arg(long)]
    z: f64,
    /// Surface angle, degrees.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
}

#[derive(Debug, Args, Serialize)]
struct EmulationArgs {
    /// Axial model: a model file, `<camera>:axial`, or `none`.
    #[arg(long)]
    axial_model: String,
    /// Lateral model: a model file, `<camera>:lateral`, or `none`.
    #[arg(long)]
    lateral_model: String,
    /// Seed of the noise streams.
    #[arg(long)]
    seed: u64,
    /// Source of the surface angle.
    #[arg(long, default_value = "normals", value_parser = ["normals", "distance"])]
    angle_mode: String,
    /// Focal length for images without intrinsics in their header, pixels.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    focal: Option<f64>,
    /// Run single-threaded (output is identical either way).
    #[arg(long)]
    serial: bool,
}

#[derive(Debug, Args, Serialize)]
struct EmulateArgs {
    /// Clean RIF images or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    emulation: EmulationArgs,
    /// Noise multiplier.
    #[arg(long, default_value_t = 1.0)]
    mn: f64,
    /// Noisy frames per input; above 1 they are written as `<stem>_<frame>.rif`.
    #[arg(long, default_value_t = 1)]
    frames: usize,
    /// Output file for a single input file and frame, otherwise output directory.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    /// Clean RIF images or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    emulation: EmulationArgs,
    /// Multipliers, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1,1.25,1.5,1.75,2,2.25,2.5,2.75,3")]
    mn_list: Vec<f64>,
    /// Output directory.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ReportArgs {
    /// Noise-sample CSV files, each optionally prefixed `<camera>=`; the camera
    /// name defaults to the file stem.
    #[arg(required = true)]
    inputs: Vec<String>,
    /// Output directory.
    #[arg(short, long)]
    output: PathBuf,
}

/// A command line mistake, reported with exit status 1.
#[derive(Debug)]
pub(crate) struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Runs the command line `args` (including the program name) and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::SynthPlane(a) => commands::run_synth_plane(&a),
        Command::Average(a) => commands::run_average(&a),
        Command::EstimateLateral(a) => commands::run_estimate_lateral(&a),
        Command::EstimateAxial(a) => commands::run_estimate_axial(&a),
        Command::FitModel(a) => commands::run_fit_model(&a),
        Command::EvalModel(a) => commands::run_eval_model(&a),
        Command::Presets => commands::run_presets(),
        Command::Emulate(a) => commands::run_emulate(&a),
        Command::Sweep(a) => commands::run_sweep(&a),
        Command::Report(a) => report::run_report(&a),
    }
}

/// `x` with `digits` significant digits, fixed notation.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{:.*}", digits.saturating_sub(1), x);
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new leading digit, e.g. 9.99996 -> 10.0000.
    let rounded: f64 = s.parse().unwrap_or(x);
    if rounded != 0.0 && (rounded.abs().log10().floor() as i64) > magnitude && decimals > 0 {
        format!("{x:.*}", decimals - 1)
    } else {
        s
    }
}

#[derive(Serialize)]
struct Sidecar<'a, P: Serialize> {
    command: &'a str,
    version: &'a str,
    params: &'a P,
}

fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(OsString::from).unwrap_or_else(|| "output".into());
    name.push(".run.txt");
    output.with_file_name(name)
}

/// Writes the effective parameters of a run next to `output`.
fn write_sidecar<P: Serialize>(output: &Path, command: &str, params: &P) -> anyhow::Result<()> {
    let text = toml::to_string(&Sidecar {
        command,
        version: env!("CARGO_PKG_VERSION"),
        params,
    })?;
    let path = sidecar_path(output);
    std::fs::write(&path, text).map_err(|e| crate::Error::io(&path, e))?;
    Ok(())
}

/// RIF files named by `inputs`; directories contribute their `*.rif` files
/// sorted by name.
fn collect_rif_paths(inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| crate::Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && f.extension().is_some_and(|x| x.eq_ignore_ascii_case("rif")))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn load_frames(inputs: &[PathBuf]) -> anyhow::Result<(Vec<PathBuf>, Vec<RangeImage>)> {
    let paths = collect_rif_paths(inputs)?;
    if paths.is_empty() {
        return Err(crate::Error::arg("no input frames").into());
    }
    let frames = paths.iter().map(read_range_image).collect::<crate::Result<Vec<_>>>()?;
    Ok((paths, frames))
}

/// A model given as `none`, a model file or a `<camera>:<kind>` preset.
fn load_model(spec: &str, kind: NoiseKind) -> anyhow::Result<NoiseModel> {
    let model = if spec == "none" {
        NoiseModel::zero(kind)
    } else if Path::new(spec).is_file() {
        read_model(spec)?
    } else {
        parse_preset_ref(spec).map_err(|e| usage(format!("{spec}: not a model file, and {e}")))?
    };
    if model.kind != kind {
        return Err(usage(format!("{spec} is a {} model, expected {kind}", model.kind)));
    }
    Ok(model)
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| crate::Error::io(p, e))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
