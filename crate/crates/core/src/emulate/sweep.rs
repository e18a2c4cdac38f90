use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{EmulationConfig, Emulator};
use crate::rangeimg::{write_range_image, RangeImage};
use crate::rng::derive;
use crate::{Error, Execution, Result};

/// `0, 0.25, ..., 3.0`.
pub fn default_mn_grid() -> Vec<f64> {
    (0..=12).map(|i| i as f64 * 0.25).collect()
}

/// Name of the output subdirectory for one multiplier, e.g. `mn_0.25`.
pub fn mn_dir_name(m_n: f64) -> String {
    format!("mn_{}", m_n + 0.0)
}

/// Seed for image `index` at multiplier `m_n`, derived from the base seed.
pub fn image_seed(seed: u64, index: usize, m_n: f64) -> u64 {
    derive(seed, &[index as u64, (m_n + 0.0).to_bits()])
}

#[derive(Debug, Default)]
pub struct SweepReport {
    pub written: Vec<PathBuf>,
    /// Output path (or input name) and the error message.
    pub failures: Vec<(PathBuf, String)>,
}

impl SweepReport {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }
}

fn check_grid(m_values: &[f64]) -> Result<()> {
    if m_values.is_empty() {
        return Err(Error::arg("empty m_n list"));
    }
    let mut seen = HashSet::new();
    for &m in m_values {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::arg(format!("m_n must be finite and >= 0, got {m}")));
        }
        if !seen.insert((m + 0.0).to_bits()) {
            return Err(Error::arg(format!("duplicate m_n value {m}")));
        }
    }
    Ok(())
}

/// Emulates every `(name, image)` pair at every multiplier and writes the
/// results to `out_dir/mn_<m>/<name>`.
///
/// Failures of single images are collected in the report and do not stop the
/// sweep. `cfg.m_n` and `cfg.seed` are replaced per image and multiplier.
pub fn sweep_mn(
    images: &[(String, RangeImage)],
    cfg: &EmulationConfig,
    m_values: &[f64],
    out_dir: &Path,
    exec: Execution,
) -> Result<SweepReport> {
    check_grid(m_values)?;
    if images.is_empty() {
        return Err(Error::arg("no input images"));
    }
    cfg.validate()?;
    for &m in m_values {
        let dir = out_dir.join(mn_dir_name(m));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }

    let one = |(index, (name, img)): (usize, &(String, RangeImage))| -> Vec<std::result::Result<PathBuf, (PathBuf, String)>> {
        let mut emu = match Emulator::new(img, cfg) {
            Ok(e) => e,
            Err(e) => return vec![Err((PathBuf::from(name), e.to_string()))],
        };
        m_values
            .iter()
            .map(|&m| {
                let path = out_dir.join(mn_dir_name(m)).join(name);
                let res = emu
                    .set_multiplier(m)
                    .and_then(|_| emu.run(image_seed(cfg.seed, index, m), Execution::Serial))
                    .and_then(|noisy| write_range_image(&noisy, &path));
                res.map(|_| path.clone()).map_err(|e| (path, e.to_string()))
            })
            .collect()
    };
    let results: Vec<_> = match exec {
        Execution::Parallel => images.par_iter().enumerate().flat_map_iter(one).collect(),
        Execution::Serial => images.iter().enumerate().flat_map(one).collect(),
    };

    let mut report = SweepReport::default();
    for r in results {
        match r {
            Ok(p) => report.written.push(p),
            Err(f) => report.failures.push(f),
        }
    }
    Ok(report)
}
