//! Calibrated noise injection for clean (rendered) range images.
//!
//! Emulation runs in two fixed stages. The lateral stage moves each pixel's
//! sampling position in the image plane and looks the input up with nearest
//! neighbour resampling; the axial stage adds Gaussian noise to the depth that
//! was picked up. Both noise levels come from [`NoiseModel`]s evaluated at the
//! pixel's depth and surface angle and are scaled by the multiplier `m_n`, so
//! `m_n = 0` reproduces the input exactly and `m_n = 1` emulates the modelled
//! camera.
//!
//! Lateral displacements are coherent along scan lines: all pixels of a row
//! share one standard normal draw for their horizontal shift and all pixels of
//! a column share one for their vertical shift, each scaled by the pixel's own
//! sigma. A straight board edge then moves as a whole in every row, so the
//! spread of the edge position across rows equals the modelled sigma.
//! Independent per-pixel shifts would instead make the outermost board pixel an
//! extreme-value statistic of several neighbours and bias the edge spread.
//!
//! All random numbers are counter based (see the crate's `rng` module): the draw
//! for a row, column or pixel depends only on `(seed, stage, index)`.

mod sweep;

pub use sweep::{default_mn_grid, image_seed, mn_dir_name, sweep_mn, SweepReport};

use rayon::prelude::*;

use crate::noisemodel::{NoiseKind, NoiseModel};
use crate::rangeimg::{compute_normals, CameraIntrinsics, RangeImage};
use crate::rng::{unit_normal, Stage};
use crate::{Error, Execution, Result};

/// Largest surface angle fed to the models; normals at exactly grazing incidence
/// fall outside their `[0, 90)` domain.
const MAX_THETA_DEG: f64 = 89.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngleMode {
    /// Surface angle per pixel from estimated normals.
    #[default]
    Normals,
    /// Angle fixed at 0, noise depends on distance only.
    DistanceOnly,
}

impl std::str::FromStr for AngleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normals" => Ok(AngleMode::Normals),
            "distance" => Ok(AngleMode::DistanceOnly),
            other => Err(Error::Lookup {
                what: "angle mode",
                name: other.to_string(),
                valid: "normals, distance".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmulationConfig {
    pub axial_model: NoiseModel,
    pub lateral_model: NoiseModel,
    /// Noise multiplier, ratio of emulated to modelled sigma.
    pub m_n: f64,
    pub seed: u64,
    pub angle_mode: AngleMode,
    /// Focal length used to build centred intrinsics when the image carries none.
    pub focal_px: Option<f64>,
}

impl EmulationConfig {
    pub fn new(axial_model: NoiseModel, lateral_model: NoiseModel, m_n: f64, seed: u64) -> Self {
        EmulationConfig {
            axial_model,
            lateral_model,
            m_n,
            seed,
            angle_mode: AngleMode::Normals,
            focal_px: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.axial_model.kind != NoiseKind::Axial {
            return Err(Error::Config(format!(
                "axial slot holds a {} model",
                self.axial_model.kind
            )));
        }
        if self.lateral_model.kind != NoiseKind::Lateral {
            return Err(Error::Config(format!(
                "lateral slot holds a {} model",
                self.lateral_model.kind
            )));
        }
        if !(self.m_n >= 0.0 && self.m_n.is_finite()) {
            return Err(Error::Config(format!("m_n must be finite and >= 0, got {}", self.m_n)));
        }
        if let Some(f) = self.focal_px {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Config(format!("focal length must be positive, got {f}")));
            }
        }
        Ok(())
    }
}

/// Per-pixel quantities that do not depend on the seed.
#[derive(Debug, Clone)]
pub struct Emulator {
    clean: RangeImage,
    cfg: EmulationConfig,
    /// Surface angle, filled in where no normal could be estimated.
    theta: Vec<f64>,
    /// Lateral sigma (unscaled), nearest valid value along the row.
    sigma_row: Vec<f64>,
    /// Lateral sigma (unscaled), nearest valid value along the column.
    sigma_col: Vec<f64>,
}

/// Copies `Some` values into `None` slots from the nearest `Some` along a line
/// of `len` elements read through `idx`; ties go to the lower index.
fn fill_line(values: &mut [Option<f64>], len: usize, idx: impl Fn(usize) -> usize) {
    let known: Vec<usize> = (0..len).filter(|&i| values[idx(i)].is_some()).collect();
    if known.is_empty() {
        return;
    }
    let mut k = 0;
    for i in 0..len {
        while k + 1 < known.len() && known[k + 1] <= i {
            k += 1;
        }
        let left = known[k];
        let nearest = if left >= i {
            left
        } else if k + 1 < known.len() && known[k + 1] - i < i - left {
            known[k + 1]
        } else {
            left
        };
        if values[idx(i)].is_none() {
            values[idx(i)] = values[idx(nearest)];
        }
    }
}

fn fill_rows(values: &mut [Option<f64>], w: usize, h: usize) {
    for v in 0..h {
        fill_line(values, w, |u| v * w + u);
    }
}

fn fill_cols(values: &mut [Option<f64>], w: usize, h: usize) {
    for u in 0..w {
        fill_line(values, h, |v| v * w + u);
    }
}

impl Emulator {
    pub fn new(clean: &RangeImage, cfg: &EmulationConfig) -> Result<Self> {
        cfg.validate()?;
        let (w, h) = (clean.width(), clean.height());

        let theta = match cfg.angle_mode {
            AngleMode::DistanceOnly => vec![0.0; w * h],
            AngleMode::Normals => {
                let k = match (clean.intrinsics(), cfg.focal_px) {
                    (Some(k), _) => k,
                    (None, Some(f)) => CameraIntrinsics::centered(f, w, h)?,
                    (None, None) => {
                        return Err(Error::Config(
                            "normal-based angles need intrinsics in the image or a focal length".into(),
                        ))
                    }
                };
                let normals = compute_normals(clean, &k)?;
                let mut t: Vec<Option<f64>> = (0..w * h)
                    .map(|i| normals.angle_deg(i % w, i / w).map(|a| a.min(MAX_THETA_DEG)))
                    .collect();
                fill_rows(&mut t, w, h);
                fill_cols(&mut t, w, h);
                t.into_iter().map(|a| a.unwrap_or(0.0)).collect()
            }
        };

        let mut lateral: Vec<Option<f64>> = Vec::with_capacity(w * h);
        for (i, (&d, &ok)) in clean.depths().iter().zip(clean.mask()).enumerate() {
            lateral.push(if ok {
                Some(cfg.lateral_model.sigma(d as f64, theta[i])?)
            } else {
                None
            });
        }
        let mut sigma_row = lateral.clone();
        fill_rows(&mut sigma_row, w, h);
        let mut sigma_col = lateral;
        fill_cols(&mut sigma_col, w, h);
        let flat = |v: Vec<Option<f64>>| v.into_iter().map(|s| s.unwrap_or(0.0)).collect();

        Ok(Emulator {
            clean: clean.clone(),
            cfg: cfg.clone(),
            theta,
            sigma_row: flat(sigma_row),
            sigma_col: flat(sigma_col),
        })
    }

    pub fn config(&self) -> &EmulationConfig {
        &self.cfg
    }

    /// Changes `m_n` without recomputing angles and sigma fields.
    pub fn set_multiplier(&mut self, m_n: f64) -> Result<()> {
        let mut cfg = self.cfg.clone();
        cfg.m_n = m_n;
        cfg.validate()?;
        self.cfg = cfg;
        Ok(())
    }

    /// Surface angle per pixel as used by both noise stages, degrees.
    pub fn theta_field(&self) -> &[f64] {
        &self.theta
    }

    /// Lateral displacement `(du, dv)` of every pixel, pixels.
    pub fn displacements(&self, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let (w, h) = (self.clean.width(), self.clean.height());
        let m = self.cfg.m_n;
        let rows: Vec<f64> = (0..h).map(|v| unit_normal(seed, Stage::LateralRow, v as u64)).collect();
        let cols: Vec<f64> = (0..w).map(|u| unit_normal(seed, Stage::LateralCol, u as u64)).collect();
        let du = (0..w * h).map(|i| m * (self.sigma_row[i] * rows[i / w])).collect();
        let dv = (0..w * h).map(|i| m * (self.sigma_col[i] * cols[i % w])).collect();
        (du, dv)
    }

    /// Lateral stage only: the resampled image and, per output pixel, the
    /// index of the input pixel it was read from.
    pub fn lateral_stage(&self, seed: u64) -> (RangeImage, Vec<Option<usize>>) {
        let (w, h) = (self.clean.width(), self.clean.height());
        let (du, dv) = self.displacements(seed);
        let source: Vec<Option<usize>> = (0..w * h)
            .map(|i| {
                let su = ((i % w) as f64 + du[i]).round();
                let sv = ((i / w) as f64 + dv[i]).round();
                (su >= 0.0 && sv >= 0.0 && su < w as f64 && sv < h as f64)
                    .then(|| sv as usize * w + su as usize)
            })
            .collect();
        let depth = source
            .iter()
            .map(|s| s.map_or(f32::NAN, |j| self.clean.depths()[j]))
            .collect();
        let img = RangeImage::new(w, h, depth)
            .expect("resampling keeps depths valid")
            .with_meta(self.clean.meta.clone());
        (img, source)
    }

    /// Axial offset `m_n * sigma_z * xi` for every valid pixel of `moved`
    /// (NaN elsewhere). `source` maps pixels to the input pixel whose surface
    /// angle applies.
    pub fn axial_offsets(&self, moved: &RangeImage, source: &[Option<usize>], seed: u64, exec: Execution) -> Result<Vec<f64>> {
        let m = self.cfg.m_n;
        let offset = |i: usize| -> Result<f64> {
            let Some(j) = source[i] else { return Ok(f64::NAN) };
            if !moved.mask()[i] {
                return Ok(f64::NAN);
            }
            let sigma = self.cfg.axial_model.sigma(moved.depths()[i] as f64, self.theta[j])?;
            Ok(m * (sigma * unit_normal(seed, Stage::Axial, i as u64)))
        };
        match exec {
            Execution::Parallel => (0..moved.len()).into_par_iter().map(offset).collect(),
            Execution::Serial => (0..moved.len()).map(offset).collect(),
        }
    }

    pub fn run(&self, seed: u64, exec: Execution) -> Result<RangeImage> {
        if self.cfg.m_n == 0.0 {
            return Ok(self.clean.clone());
        }
        let (moved, source) = self.lateral_stage(seed);
        let offsets = self.axial_offsets(&moved, &source, seed, exec)?;
        let depth = moved
            .depths()
            .iter()
            .zip(&offsets)
            .map(|(&d, &o)| {
                if d.is_nan() {
                    return f32::NAN;
                }
                let z = (d as f64 + o) as f32;
                // Noise that pushes a point behind the camera leaves no measurement.
                if z > 0.0 && z.is_finite() {
                    z
                } else {
                    f32::NAN
                }
            })
            .collect();
        Ok(RangeImage::new(moved.width(), moved.height(), depth)?.with_meta(self.clean.meta.clone()))
    }
}

/// Emulates the configured noise on `img` with `cfg.seed`.
pub fn emulate_noise(img: &RangeImage, cfg: &EmulationConfig) -> Result<RangeImage> {
    Emulator::new(img, cfg)?.run(cfg.seed, Execution::Parallel)
}

pub fn emulate_noise_with(img: &RangeImage, cfg: &EmulationConfig, exec: Execution) -> Result<RangeImage> {
    Emulator::new(img, cfg)?.run(cfg.seed, exec)
}

#[cfg(test)]
mod tests;
