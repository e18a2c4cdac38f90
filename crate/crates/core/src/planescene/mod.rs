//! Noise-free renders of a rectangular board in front of a pinhole camera.
//!
//! The board rotates about an axis through its own centre, which sits on the
//! optical axis at `distance_mm`. A pixel belongs to the board iff the ray
//! through its integer coordinates hits the board; there is no anti-aliasing,
//! so the boundary in the mask is as crisp as quantization allows.

use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;

use crate::rangeimg::{CameraIntrinsics, Metadata, PlaneSceneSpec, RangeImage, RotationAxis};
use crate::{Error, Execution, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Background {
    Invalid,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    pub spec: PlaneSceneSpec,
    pub intrinsics: CameraIntrinsics,
    pub background: Background,
}

impl SynthesisConfig {
    pub fn new(spec: PlaneSceneSpec, intrinsics: CameraIntrinsics, background: Background) -> Result<Self> {
        let cfg = SynthesisConfig {
            spec,
            intrinsics,
            background,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.intrinsics.validate()?;
        if let Background::Constant(d) = self.background {
            if !(d > self.spec.distance_mm && d.is_finite()) {
                return Err(Error::arg(format!(
                    "background depth {d} must lie behind the board at {}",
                    self.spec.distance_mm
                )));
            }
        }
        Ok(())
    }
}

/// Side of the board, named by where it appears in the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeSide {
    Left,
    Right,
    Top,
    Bottom,
}

impl EdgeSide {
    pub const ALL: [EdgeSide; 4] = [EdgeSide::Left, EdgeSide::Right, EdgeSide::Top, EdgeSide::Bottom];

    pub fn name(self) -> &'static str {
        match self {
            EdgeSide::Left => "left",
            EdgeSide::Right => "right",
            EdgeSide::Top => "top",
            EdgeSide::Bottom => "bottom",
        }
    }

    /// Left/right edges are found along rows, top/bottom along columns.
    pub fn is_horizontal_scan(self) -> bool {
        matches!(self, EdgeSide::Left | EdgeSide::Right)
    }
}

impl std::str::FromStr for EdgeSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EdgeSide::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Lookup {
                what: "edge side",
                name: s.to_string(),
                valid: "left, right, top, bottom".into(),
            })
    }
}

impl std::fmt::Display for EdgeSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The board as a rectangle in camera space.
#[derive(Debug, Clone, Copy)]
pub struct BoardGeometry {
    pub center: Vector3<f64>,
    /// In-plane unit axis along the board width (image left to right at angle 0).
    pub axis_u: Vector3<f64>,
    /// In-plane unit axis along the board height (image top to bottom at angle 0).
    pub axis_v: Vector3<f64>,
    /// Camera-facing unit normal.
    pub normal: Vector3<f64>,
    pub half_width: f64,
    pub half_height: f64,
}

impl BoardGeometry {
    pub fn from_spec(spec: &PlaneSceneSpec) -> Self {
        let (s, c) = spec.angle_deg.to_radians().sin_cos();
        let (axis_u, axis_v) = match spec.rotation_axis {
            RotationAxis::Vertical => (Vector3::new(c, 0.0, s), Vector3::new(0.0, 1.0, 0.0)),
            RotationAxis::Horizontal => (Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, c, s)),
        };
        let mut normal = axis_u.cross(&axis_v);
        if normal.z > 0.0 {
            normal = -normal;
        }
        BoardGeometry {
            center: Vector3::new(0.0, 0.0, spec.distance_mm),
            axis_u,
            axis_v,
            normal,
            half_width: spec.board_width_mm / 2.0,
            half_height: spec.board_height_mm / 2.0,
        }
    }

    /// Depth where the ray through `(u, v)` meets the bounded board.
    pub fn hit_depth(&self, k: &CameraIntrinsics, u: f64, v: f64) -> Option<f64> {
        let r = k.ray(u, v);
        let ray = Vector3::new(r[0], r[1], r[2]);
        let denom = self.normal.dot(&ray);
        if denom == 0.0 {
            return None;
        }
        let t = self.normal.dot(&self.center) / denom;
        if !(t > 0.0 && t.is_finite()) {
            return None;
        }
        let rel = ray * t - self.center;
        let a = rel.dot(&self.axis_u);
        let b = rel.dot(&self.axis_v);
        (a.abs() <= self.half_width && b.abs() <= self.half_height).then_some(t)
    }

    /// 3D end points of one board edge.
    pub fn edge_segment(&self, side: EdgeSide) -> [Vector3<f64>; 2] {
        let (du, dv) = (self.axis_u * self.half_width, self.axis_v * self.half_height);
        let c = self.center;
        match side {
            EdgeSide::Left => [c - du - dv, c - du + dv],
            EdgeSide::Right => [c + du - dv, c + du + dv],
            EdgeSide::Top => [c - du - dv, c + du - dv],
            EdgeSide::Bottom => [c - du + dv, c + du + dv],
        }
    }
}

pub fn synth_plane(cfg: &SynthesisConfig) -> Result<RangeImage> {
    synth_plane_with(cfg, Execution::Parallel)
}

pub fn synth_plane_with(cfg: &SynthesisConfig, exec: Execution) -> Result<RangeImage> {
    cfg.validate()?;
    let k = &cfg.intrinsics;
    let board = BoardGeometry::from_spec(&cfg.spec);
    let background = match cfg.background {
        Background::Invalid => f32::NAN,
        Background::Constant(d) => d as f32,
    };
    let render_row = |(v, row): (usize, &mut [f32])| {
        for (u, px) in row.iter_mut().enumerate() {
            *px = match board.hit_depth(k, u as f64, v as f64) {
                Some(z) => z as f32,
                None => background,
            };
        }
    };
    let mut depth = vec![0.0f32; k.width * k.height];
    match exec {
        Execution::Parallel => depth.par_chunks_mut(k.width).enumerate().for_each(render_row),
        Execution::Serial => depth.chunks_mut(k.width).enumerate().for_each(render_row),
    }

    let mut meta = Metadata {
        distance_mm: Some(cfg.spec.distance_mm),
        angle_deg: Some(cfg.spec.angle_deg),
        ..Metadata::default()
    };
    meta.set_intrinsics(k);
    Ok(RangeImage::new(k.width, k.height, depth)?.with_meta(meta))
}

/// An image-plane line `normal . p = offset` with unit `normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line2 {
    pub normal: Vector2<f64>,
    pub offset: f64,
}

impl Line2 {
    /// Signed orthogonal distance of `p` from the line.
    #[inline]
    pub fn signed_distance(&self, p: &Vector2<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoardEdge {
    pub side: EdgeSide,
    pub line: Line2,
    /// Projected end points of the full 3D edge.
    pub endpoints: [Vector2<f64>; 2],
}

/// Exact projections of the board edges that are at least partly inside the image.
pub fn board_edge_ground_truth(cfg: &SynthesisConfig) -> Result<Vec<BoardEdge>> {
    cfg.validate()?;
    let k = &cfg.intrinsics;
    let board = BoardGeometry::from_spec(&cfg.spec);
    let mut edges = Vec::new();
    for side in EdgeSide::ALL {
        let [a, b] = board.edge_segment(side);
        if a.z <= 0.0 || b.z <= 0.0 {
            continue;
        }
        let pa = k.project([a.x, a.y, a.z]);
        let pb = k.project([b.x, b.y, b.z]);
        let (pa, pb) = (Vector2::new(pa[0], pa[1]), Vector2::new(pb[0], pb[1]));
        if !segment_touches_image(pa, pb, k.width as f64, k.height as f64) {
            continue;
        }
        let dir = (pb - pa).normalize();
        let normal = Vector2::new(-dir.y, dir.x);
        edges.push(BoardEdge {
            side,
            line: Line2 {
                normal,
                offset: normal.dot(&pa),
            },
            endpoints: [pa, pb],
        });
    }
    Ok(edges)
}

/// Liang-Barsky test of a segment against the pixel-centre rectangle
/// `[0, w-1] x [0, h-1]`.
fn segment_touches_image(a: Vector2<f64>, b: Vector2<f64>, w: f64, h: f64) -> bool {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let clips = [
        (-d.x, a.x),
        (d.x, w - 1.0 - a.x),
        (-d.y, a.y),
        (d.y, h - 1.0 - a.y),
    ];
    for (p, q) in clips {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    t0 <= t1
}
