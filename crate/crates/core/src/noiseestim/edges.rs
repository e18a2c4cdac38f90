use super::EdgeSide;
use crate::rangeimg::RangeImage;
use crate::{Error, Result};

pub const DEFAULT_DEPTH_GAP_MM: f64 = 50.0;

/// Foreground (board) mask of an image.
///
/// Valid depths are sorted and split at the widest jump between neighbours;
/// if that jump exceeds `gap_mm` the near cluster is the board, otherwise
/// every valid pixel is. An image without valid pixels has no board.
pub fn board_mask(img: &RangeImage, gap_mm: f64) -> Result<Vec<bool>> {
    let mut depths: Vec<f32> = img
        .depths()
        .iter()
        .zip(img.mask())
        .filter_map(|(&d, &ok)| ok.then_some(d))
        .collect();
    if depths.is_empty() {
        return Err(Error::NoBoard);
    }
    depths.sort_unstable_by(f32::total_cmp);
    let mut cut = f32::INFINITY;
    let mut widest = gap_mm;
    for pair in depths.windows(2) {
        let jump = (pair[1] - pair[0]) as f64;
        if jump > widest {
            widest = jump;
            cut = pair[0];
        }
    }
    Ok(img
        .depths()
        .iter()
        .zip(img.mask())
        .map(|(&d, &ok)| ok && d <= cut)
        .collect())
}

pub(crate) fn outermost_in_mask(
    mask: &[bool],
    width: usize,
    height: usize,
    side: EdgeSide,
) -> Vec<(usize, usize)> {
    let at = |u: usize, v: usize| mask[v * width + u];
    let mut out = Vec::new();
    match side {
        EdgeSide::Left | EdgeSide::Right => {
            for v in 0..height {
                let hit = if side == EdgeSide::Left {
                    (0..width).find(|&u| at(u, v))
                } else {
                    (0..width).rev().find(|&u| at(u, v))
                };
                if let Some(u) = hit {
                    out.push((u, v));
                }
            }
        }
        EdgeSide::Top | EdgeSide::Bottom => {
            for u in 0..width {
                let hit = if side == EdgeSide::Top {
                    (0..height).find(|&v| at(u, v))
                } else {
                    (0..height).rev().find(|&v| at(u, v))
                };
                if let Some(v) = hit {
                    out.push((u, v));
                }
            }
        }
    }
    out
}

/// Outermost board pixel on `side` for every scan line that crosses the board,
/// as `(u, v)` integer coordinates. Rows are scanned for left/right edges,
/// columns for top/bottom ones.
pub fn extract_edge_pixels(img: &RangeImage, side: EdgeSide, gap_mm: f64) -> Result<Vec<(usize, usize)>> {
    let mask = board_mask(img, gap_mm)?;
    let pixels = outermost_in_mask(&mask, img.width(), img.height(), side);
    if pixels.is_empty() {
        return Err(Error::NoBoard);
    }
    Ok(pixels)
}
