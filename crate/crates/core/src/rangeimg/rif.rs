//! RIF, the range image file format.
//!
//! ```text
//! RIF1
//! <width> <height>
//! key=value          (zero or more of fx, fy, cx, cy, distance_mm, angle_deg, camera)
//! DATA
//! <width*height little-endian f32, row-major, NaN = invalid>
//! ```
//!
//! Metadata is written in the fixed key order above, floats in shortest
//! round-trip form, so decode followed by encode reproduces canonical files
//! byte for byte.

use std::fs;
use std::path::Path;

use super::{Metadata, RangeImage};
use crate::{Error, Result};

pub const RIF_MAGIC: &str = "RIF1";
const DATA_MARKER: &str = "DATA";

pub fn encode_rif(img: &RangeImage) -> Result<Vec<u8>> {
    let mut header = format!("{RIF_MAGIC}\n{} {}\n", img.width(), img.height());
    let m = &img.meta;
    let floats = [
        ("fx", m.fx),
        ("fy", m.fy),
        ("cx", m.cx),
        ("cy", m.cy),
        ("distance_mm", m.distance_mm),
        ("angle_deg", m.angle_deg),
    ];
    for (key, value) in floats {
        if let Some(x) = value {
            header.push_str(&format!("{key}={x}\n"));
        }
    }
    if let Some(camera) = &m.camera {
        if camera.contains(['\n', '\r']) {
            return Err(Error::arg("camera name must be a single line"));
        }
        header.push_str(&format!("camera={camera}\n"));
    }
    header.push_str(DATA_MARKER);
    header.push('\n');

    let mut out = header.into_bytes();
    out.reserve(img.len() * 4);
    for d in img.depths() {
        out.extend_from_slice(&d.to_le_bytes());
    }
    Ok(out)
}

/// Splits off one `\n`-terminated header line.
fn next_line<'a>(bytes: &'a [u8], pos: &mut usize, line_no: usize) -> Result<&'a str> {
    let rest = &bytes[*pos..];
    let end = rest.iter().position(|&b| b == b'\n').ok_or(Error::Format {
        line: line_no,
        message: "unterminated header line".into(),
    })?;
    *pos += end + 1;
    std::str::from_utf8(&rest[..end]).map_err(|_| Error::Format {
        line: line_no,
        message: "header is not ASCII".into(),
    })
}

pub fn decode_rif(bytes: &[u8]) -> Result<RangeImage> {
    let mut pos = 0;
    let magic = next_line(bytes, &mut pos, 1)?;
    if magic != RIF_MAGIC {
        return Err(Error::Format {
            line: 1,
            message: format!("bad magic '{magic}', expected '{RIF_MAGIC}'"),
        });
    }

    let dims = next_line(bytes, &mut pos, 2)?;
    let bad_dims = || Error::Format {
        line: 2,
        message: format!("expected '<width> <height>', got '{dims}'"),
    };
    let mut parts = dims.split(' ');
    let width: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad_dims)?;
    let height: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad_dims)?;
    if parts.next().is_some() {
        return Err(bad_dims());
    }
    if width == 0 || height == 0 {
        return Err(Error::Format {
            line: 2,
            message: "dimensions must be at least 1x1".into(),
        });
    }

    let mut meta = Metadata::default();
    let mut line_no = 2;
    loop {
        line_no += 1;
        let line = next_line(bytes, &mut pos, line_no)?;
        if line == DATA_MARKER {
            break;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Format {
            line: line_no,
            message: format!("expected key=value or {DATA_MARKER}, got '{line}'"),
        })?;
        let parse_f64 = || -> Result<Option<f64>> {
            value.parse::<f64>().map(Some).map_err(|_| Error::Format {
                line: line_no,
                message: format!("'{key}' has non-numeric value '{value}'"),
            })
        };
        let slot = match key {
            "fx" => &mut meta.fx,
            "fy" => &mut meta.fy,
            "cx" => &mut meta.cx,
            "cy" => &mut meta.cy,
            "distance_mm" => &mut meta.distance_mm,
            "angle_deg" => &mut meta.angle_deg,
            "camera" => {
                if meta.camera.replace(value.to_string()).is_some() {
                    return Err(Error::Format {
                        line: line_no,
                        message: "duplicate key 'camera'".into(),
                    });
                }
                continue;
            }
            other => {
                return Err(Error::Format {
                    line: line_no,
                    message: format!("unknown metadata key '{other}'"),
                })
            }
        };
        if slot.is_some() {
            return Err(Error::Format {
                line: line_no,
                message: format!("duplicate key '{key}'"),
            });
        }
        *slot = parse_f64()?;
    }

    let payload = &bytes[pos..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(bad_dims)?;
    if payload.len() != expected {
        return Err(Error::Truncated {
            expected,
            found: payload.len(),
        });
    }
    let depth = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let img = RangeImage::new(width, height, depth).map_err(|e| Error::Format {
        line: line_no + 1,
        message: e.to_string(),
    })?;
    Ok(img.with_meta(meta))
}

pub fn read_range_image(path: impl AsRef<Path>) -> Result<RangeImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_rif(&bytes)
}

pub fn write_range_image(img: &RangeImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_rif(img)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
