//! Plain-text model files.
//!
//! ```text
//! camera=kinect-v1
//! kind=lateral
//! units=px
//! c0=0.94
//! ...
//! c5=0.0
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Coefficients are
//! written in shortest round-trip form.

use std::fs;
use std::path::Path;

use super::{NoiseKind, NoiseModel};
use crate::{Error, Result};

impl NoiseModel {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "camera={}\nkind={}\nunits={}\n",
            self.camera,
            self.kind,
            self.kind.units()
        );
        for (i, c) in self.coeffs.iter().enumerate() {
            out.push_str(&format!("c{i}={c:?}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut camera = None;
        let mut kind: Option<(NoiseKind, usize)> = None;
        let mut units: Option<(String, usize)> = None;
        let mut coeffs = [None; 6];
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse { line: line_no, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let duplicate = || err(format!("duplicate key '{key}'"));
            match key {
                "camera" => {
                    if camera.replace(value.to_string()).is_some() {
                        return Err(duplicate());
                    }
                }
                "kind" => {
                    let k = value.parse::<NoiseKind>().map_err(|e| err(e.to_string()))?;
                    if kind.replace((k, line_no)).is_some() {
                        return Err(duplicate());
                    }
                }
                "units" => {
                    if units.replace((value.to_string(), line_no)).is_some() {
                        return Err(duplicate());
                    }
                }
                _ => {
                    let slot = key
                        .strip_prefix('c')
                        .and_then(|d| d.parse::<usize>().ok())
                        .filter(|&i| i < 6 && key.len() == 2)
                        .ok_or_else(|| err(format!("unknown key '{key}'")))?;
                    let c: f64 = value
                        .parse()
                        .map_err(|_| err(format!("'{key}' is not a number: '{value}'")))?;
                    if !c.is_finite() {
                        return Err(err(format!("'{key}' must be finite")));
                    }
                    if coeffs[slot].replace(c).is_some() {
                        return Err(duplicate());
                    }
                }
            }
        }
        let eof = text.lines().count() + 1;
        let missing = |what: &str| Error::Parse {
            line: eof,
            message: format!("missing '{what}='"),
        };
        let camera = camera.ok_or_else(|| missing("camera"))?;
        let (kind, _) = kind.ok_or_else(|| missing("kind"))?;
        let (units, units_line) = units.ok_or_else(|| missing("units"))?;
        if units != kind.units() {
            return Err(Error::Parse {
                line: units_line,
                message: format!("{kind} models are in {}, file says '{units}'", kind.units()),
            });
        }
        let mut out = [0.0; 6];
        for (i, c) in coeffs.iter().enumerate() {
            out[i] = c.ok_or_else(|| missing(&format!("c{i}")))?;
        }
        Ok(NoiseModel::new(camera, kind, out))
    }
}

pub fn read_model(path: impl AsRef<Path>) -> Result<NoiseModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    NoiseModel::from_text(&text)
}

pub fn write_model(model: &NoiseModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_text()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noisemodel::all_presets;

    #[test]
    fn presets_roundtrip() {
        for m in all_presets() {
            let back = NoiseModel::from_text(&m.to_text()).unwrap();
            assert_eq!(back.coeffs, m.coeffs);
            assert_eq!((back.kind, &back.camera), (m.kind, &m.camera));
        }
    }

    #[test]
    fn odd_values_roundtrip_exactly() {
        let m = NoiseModel::new("x", NoiseKind::Axial, [0.1 + 0.2, -1e-300, 6.35e-9, 1.0 / 3.0, -0.0, 123456789.123]);
        let back = NoiseModel::from_text(&m.to_text()).unwrap();
        for (a, b) in m.coeffs.iter().zip(back.coeffs) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn missing_coefficient() {
        let text = "camera=a\nkind=axial\nunits=mm\nc0=1\nc1=0\nc2=0\nc3=0\nc4=0\n";
        match NoiseModel::from_text(text) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("c5")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let text = "camera=a\nkind=axial\nunits=mm\nc0=1\nc1=0\nc2=0\nc3=0\nc4=0\nc5=0\nc6=2\n";
        match NoiseModel::from_text(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 10);
                assert!(message.contains("'c6'"));
            }
            other => panic!("{other:?}"),
        }
        let text = "camera=a\nkind=axial\nunits=px\nc0=1\nc1=0\nc2=0\nc3=0\nc4=0\nc5=0\n";
        assert!(matches!(NoiseModel::from_text(text), Err(Error::Parse { line: 3, .. })));
    }
}
