//! Continuous 2D primitives and the role-tagged vector scene model.
//!
//! Coordinates are in pixels, sub-pixel precision, with the y axis pointing
//! down. Nothing here is discretized; that happens in [`crate::raster`].

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Side length of every generated canvas.
pub const CANVAS_SIZE: u32 = 224;
/// Minimum distance between any segment endpoint and the canvas border.
pub const MARGIN: f64 = 8.0;
/// Upper bound on stroke width.
pub const MAX_STROKE_WIDTH: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        libm::hypot(other.x - self.x, other.y - self.y)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }

    pub fn rotate_about(&self, center: &Point, degrees: f64) -> Point {
        rotate_about(*self, *center, degrees)
    }
}

/// Rotates `p` by `degrees` about `center`, counter-clockwise in the (x, y)
/// frame: (1,0) about the origin by 90° lands on (0,1). With y pointing down
/// that reads as clockwise on screen.
///
/// A rotation by exactly zero returns `p` unchanged, bit for bit.
pub fn rotate_about(p: Point, center: Point, degrees: f64) -> Point {
    if degrees == 0.0 {
        return p;
    }
    let rad = degrees.to_radians();
    let (s, c) = libm::sincos(rad);
    let dx = p.x - center.x;
    let dy = p.y - center.y;
    Point::new(center.x + dx * c - dy * s, center.y + dx * s + dy * c)
}

/// What an element means in the stimulus; drives its color in the raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementRole {
    /// Ground-truth geometry, drawn blue and dotted.
    Reference,
    /// The axis of perceived distortion, drawn red and solid.
    Target,
    /// Illusion-inducing context, drawn black and solid.
    Context,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dash {
    pub on: f64,
    pub off: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("zero-length segment")]
    ZeroLength,
    #[error("stroke width {0} outside (0, {MAX_STROKE_WIDTH}]")]
    BadStrokeWidth(f64),
    #[error("dash pattern must have positive on/off lengths")]
    BadDash,
}

/// A stroked straight line with butt caps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
    pub role: ElementRole,
    pub stroke_width: f64,
    pub dash: Option<Dash>,
}

impl Segment {
    pub fn new(
        a: Point,
        b: Point,
        role: ElementRole,
        stroke_width: f64,
        dash: Option<Dash>,
    ) -> Result<Self, GeometryError> {
        if !a.is_finite() || !b.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if a == b {
            return Err(GeometryError::ZeroLength);
        }
        if !(stroke_width > 0.0 && stroke_width <= MAX_STROKE_WIDTH) {
            return Err(GeometryError::BadStrokeWidth(stroke_width));
        }
        if let Some(d) = dash {
            if !(d.on > 0.0 && d.off > 0.0 && d.on.is_finite() && d.off.is_finite()) {
                return Err(GeometryError::BadDash);
            }
        }
        Ok(Self { a, b, role, stroke_width, dash })
    }

    pub fn length(&self) -> f64 {
        segment_length(self)
    }

    pub fn rotated(&self, center: Point, degrees: f64) -> Segment {
        Segment {
            a: rotate_about(self.a, center, degrees),
            b: rotate_about(self.b, center, degrees),
            ..*self
        }
    }

    /// Uniform scale about `center`; stroke width is left untouched.
    pub fn scaled(&self, center: Point, factor: f64) -> Segment {
        let f = |p: Point| Point::new(center.x + (p.x - center.x) * factor, center.y + (p.y - center.y) * factor);
        Segment { a: f(self.a), b: f(self.b), ..*self }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Segment {
        Segment { a: self.a.translate(dx, dy), b: self.b.translate(dx, dy), ..*self }
    }
}

pub fn segment_length(s: &Segment) -> f64 {
    s.a.distance(&s.b)
}

/// Vector description of one stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub width: u32,
    pub height: u32,
    /// Gray level of the background; 255 is white.
    pub background: u8,
    pub segments: Vec<Segment>,
}

impl Scene {
    /// Empty white canvas of the standard generation size.
    pub fn blank() -> Self {
        Self::with_size(CANVAS_SIZE, CANVAS_SIZE)
    }

    pub fn with_size(width: u32, height: u32) -> Self {
        Self { width, height, background: 255, segments: Vec::new() }
    }

    pub fn push(&mut self, segment: Segment) {
        self.segments.push(segment);
    }

    pub fn count_role(&self, role: ElementRole) -> usize {
        self.segments.iter().filter(|s| s.role == role).count()
    }

    pub fn segments_with_role(&self, role: ElementRole) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(move |s| s.role == role)
    }

    pub fn center(&self) -> Point {
        Point::new(self.width as f64 / 2.0, self.height as f64 / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    OutOfMargin { segment: usize, endpoint: Endpoint, point: Point },
    BadStrokeWidth { segment: usize, width: f64 },
    NonFinite { segment: usize },
    ZeroLength { segment: usize },
    BadDash { segment: usize },
}

/// Lists every invariant violation in `scene`; an empty list means renderable.
pub fn validate_scene(scene: &Scene) -> Vec<Violation> {
    let mut out = Vec::new();
    let (w, h) = (scene.width as f64, scene.height as f64);
    for (i, s) in scene.segments.iter().enumerate() {
        if !s.a.is_finite() || !s.b.is_finite() {
            out.push(Violation::NonFinite { segment: i });
            continue;
        }
        if s.a == s.b {
            out.push(Violation::ZeroLength { segment: i });
        }
        if !(s.stroke_width > 0.0 && s.stroke_width <= MAX_STROKE_WIDTH) {
            out.push(Violation::BadStrokeWidth { segment: i, width: s.stroke_width });
        }
        if let Some(d) = s.dash {
            if !(d.on > 0.0 && d.off > 0.0 && d.on.is_finite() && d.off.is_finite()) {
                out.push(Violation::BadDash { segment: i });
            }
        }
        for (endpoint, p) in [(Endpoint::A, s.a), (Endpoint::B, s.b)] {
            let inside = p.x >= MARGIN && p.x <= w - MARGIN && p.y >= MARGIN && p.y <= h - MARGIN;
            if !inside {
                out.push(Violation::OutOfMargin { segment: i, endpoint, point: p });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Segment {
        Segment::new(Point::new(ax, ay), Point::new(bx, by), ElementRole::Target, 2.0, None).unwrap()
    }

    #[test]
    fn three_four_five() {
        assert_eq!(seg(0.0, 0.0, 3.0, 4.0).length(), 5.0);
    }

    #[test]
    fn unit_diagonal_matches_hypot() {
        let l = seg(0.0, 0.0, 1.0, 1.0).length();
        assert!((l - libm::hypot(1.0, 1.0)).abs() < 1e-15);
        assert!((l - 1.414_213_562_373_095).abs() < 1e-12);
    }

    #[test]
    fn degenerate_segment_rejected() {
        let p = Point::new(10.0, 10.0);
        assert_eq!(
            Segment::new(p, p, ElementRole::Context, 2.0, None),
            Err(GeometryError::ZeroLength)
        );
    }

    #[test]
    fn stroke_width_bounds() {
        let (a, b) = (Point::new(0.0, 0.0), Point::new(1.0, 0.0));
        assert!(Segment::new(a, b, ElementRole::Target, 0.0, None).is_err());
        assert!(Segment::new(a, b, ElementRole::Target, 16.0, None).is_ok());
        assert!(Segment::new(a, b, ElementRole::Target, 16.01, None).is_err());
        assert!(Segment::new(Point::new(f64::NAN, 0.0), b, ElementRole::Target, 1.0, None).is_err());
    }

    #[test]
    fn quarter_turn() {
        let p = rotate_about(Point::new(1.0, 0.0), Point::new(0.0, 0.0), 90.0);
        assert!((p.x - 0.0).abs() < 1e-15 && (p.y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rotation_is_exact_identity() {
        let p = Point::new(0.123456789, -98.7654321);
        let c = Point::new(3.3, 4.4);
        assert_eq!(rotate_about(p, c, 0.0), p);
    }

    #[test]
    fn full_turn_matches_four_quarter_turns() {
        let o = Point::new(0.0, 0.0);
        let mut q = Point::new(2.0, 0.0);
        for _ in 0..4 {
            q = rotate_about(q, o, 90.0);
        }
        let full = rotate_about(Point::new(2.0, 0.0), o, 360.0);
        assert!((full.x - q.x).abs() < 1e-9 && (full.y - q.y).abs() < 1e-9);
        assert!((full.x - 2.0).abs() < 1e-9 && full.y.abs() < 1e-9);
    }

    #[test]
    fn centered_scene_validates() {
        let mut s = Scene::blank();
        s.push(seg(62.0, 62.0, 162.0, 162.0));
        s.push(seg(162.0, 62.0, 62.0, 162.0));
        assert!(validate_scene(&s).is_empty());
    }

    #[test]
    fn endpoint_inside_margin_is_reported() {
        let mut s = Scene::blank();
        s.push(seg(2.0, 100.0, 100.0, 100.0));
        let v = validate_scene(&s);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::OutOfMargin { segment: 0, endpoint: Endpoint::A, .. }));
    }

    #[test]
    fn bad_width_reported_not_thrown() {
        let mut s = Scene::blank();
        let mut bad = seg(50.0, 50.0, 60.0, 60.0);
        bad.stroke_width = 40.0;
        s.push(bad);
        assert!(matches!(validate_scene(&s)[..], [Violation::BadStrokeWidth { segment: 0, .. }]));
    }
}
