//! Deterministic anti-aliased rendering of [`Scene`]s.
//!
//! Pixel (i, j) covers [i - ½, i + ½) × [j - ½, j + ½), so a stroke centred on
//! an integer coordinate darkens whole pixel rows symmetrically.
//!
//! Strokes are filled at 4× resolution (every sub-pixel centre is tested
//! against the exact stroke rectangle, half-open on every side) and then
//! box-averaged down to the scene size with integer half-up rounding, so the
//! output is bit-identical across platforms.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{validate_scene, ElementRole, Scene, Segment, Violation};

pub const SUPERSAMPLE: usize = 4;

pub type Rgb = [u8; 3];

/// Fixed role colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Palette;

impl Palette {
    pub const REFERENCE: Rgb = [40, 80, 220];
    pub const TARGET: Rgb = [220, 30, 30];
    pub const CONTEXT: Rgb = [0, 0, 0];
    pub const BACKGROUND: Rgb = [255, 255, 255];

    pub fn color(role: ElementRole) -> Rgb {
        match role {
            ElementRole::Reference => Self::REFERENCE,
            ElementRole::Target => Self::TARGET,
            ElementRole::Context => Self::CONTEXT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RasterError {
    #[error("scene has {} invariant violation(s)", .0.len())]
    InvalidScene(Vec<Violation>),
    #[error("cannot box-filter {width}x{height} down to {target}")]
    IncompatibleSize { width: u32, height: u32, target: u32 },
    #[error("pixel buffer has {actual} bytes, expected {expected}")]
    BadBuffer { expected: usize, actual: usize },
}

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn filled(width: u32, height: u32, color: Rgb) -> Self {
        let n = width as usize * height as usize;
        let mut pixels = Vec::with_capacity(n * 3);
        for _ in 0..n {
            pixels.extend_from_slice(&color);
        }
        Self { width, height, pixels }
    }

    pub fn from_raw(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, RasterError> {
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(RasterError::BadBuffer { expected, actual: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, c: Rgb) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&c);
    }

    /// Sum of `255 - channel` over every pixel and channel.
    pub fn ink(&self) -> u64 {
        self.pixels.iter().map(|&c| 255 - c as u64).sum()
    }

    /// Number of pixels that differ from `background`.
    pub fn count_non_background(&self, background: Rgb) -> usize {
        self.pixels.chunks_exact(3).filter(|px| **px != background).count()
    }

    /// Luma (0.299 R + 0.587 G + 0.114 B), one value per pixel in [0, 255].
    pub fn luma(&self) -> Vec<f64> {
        self.pixels
            .chunks_exact(3)
            .map(|px| 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64)
            .collect()
    }

    /// Places `other` with its top-left corner at (`x`, `y`); pixels falling
    /// outside are dropped.
    pub fn blit(&mut self, other: &RasterImage, x: u32, y: u32) {
        for oy in 0..other.height {
            for ox in 0..other.width {
                let (tx, ty) = (x + ox, y + oy);
                if tx < self.width && ty < self.height {
                    self.set_pixel(tx, ty, other.pixel(ox, oy));
                }
            }
        }
    }
}

/// Renders `scene` in list order over its background.
pub fn rasterize(scene: &Scene) -> Result<RasterImage, RasterError> {
    let violations = validate_scene(scene);
    if !violations.is_empty() {
        return Err(RasterError::InvalidScene(violations));
    }
    let bg = scene.background;
    let mut fine = RasterImage::filled(
        scene.width * SUPERSAMPLE as u32,
        scene.height * SUPERSAMPLE as u32,
        [bg, bg, bg],
    );
    for seg in &scene.segments {
        let color = Palette::color(seg.role);
        for (t0, t1) in dash_pieces(seg) {
            fill_piece(&mut fine, seg, t0, t1, color);
        }
    }
    Ok(box_filter(&fine, SUPERSAMPLE, SUPERSAMPLE))
}

/// Arc-length intervals `[t0, t1)` that carry ink.
fn dash_pieces(seg: &Segment) -> Vec<(f64, f64)> {
    let len = seg.length();
    match seg.dash {
        None => vec![(0.0, len)],
        Some(d) => {
            let period = d.on + d.off;
            let mut out = Vec::new();
            let mut k = 0u32;
            loop {
                let start = k as f64 * period;
                if start >= len {
                    break;
                }
                out.push((start, (start + d.on).min(len)));
                k += 1;
            }
            out
        }
    }
}

/// Blends the stroke rectangle spanning arc length `[t0, t1)` and
/// perpendicular offset `[-w/2, w/2)` into `buf`, weighting each sub-pixel by
/// the exact area of the rectangle that covers it.
fn fill_piece(buf: &mut RasterImage, seg: &Segment, t0: f64, t1: f64, color: Rgb) {
    let k = SUPERSAMPLE as f64;
    let len = seg.length();
    let (ux, uy) = ((seg.b.x - seg.a.x) / len, (seg.b.y - seg.a.y) / len);
    let (nx, ny) = (-uy, ux);
    let hw = seg.stroke_width / 2.0 * k;
    // Sub-pixel units: canvas pixel i spans [i - ½, i + ½), so sub-pixel f
    // spans [f, f + 1) after this shift.
    let (ax, ay) = ((seg.a.x + 0.5) * k, (seg.a.y + 0.5) * k);
    let (t0, t1) = (t0 * k, t1 * k);
    let at = |t: f64, q: f64| (ax + ux * t + nx * q, ay + uy * t + ny * q);
    let ring = [at(t0, -hw), at(t1, -hw), at(t1, hw), at(t0, hw)];

    let inside = |x: f64, y: f64| {
        let (dx, dy) = (x - ax, y - ay);
        let t = dx * ux + dy * uy;
        let q = dx * nx + dy * ny;
        t >= t0 && t <= t1 && q >= -hw && q <= hw
    };

    let ymin = ring.iter().map(|c| c.1).fold(f64::MAX, f64::min);
    let ymax = ring.iter().map(|c| c.1).fold(f64::MIN, f64::max);
    let (w, h) = (buf.width as i64, buf.height as i64);
    let row_lo = (libm::floor(ymin) as i64).max(0);
    let row_hi = (libm::ceil(ymax) as i64 - 1).min(h - 1);
    for row in row_lo..=row_hi {
        let (y0, y1) = (row as f64, row as f64 + 1.0);
        let Some((lo, hi)) = x_extent(&ring, y0, y1) else { continue };
        let col_lo = (libm::floor(lo) as i64).max(0);
        let col_hi = (libm::ceil(hi) as i64 - 1).min(w - 1);
        for col in col_lo..=col_hi {
            let (x0, x1) = (col as f64, col as f64 + 1.0);
            let full = inside(x0, y0) && inside(x1, y0) && inside(x0, y1) && inside(x1, y1);
            let cover = if full { 1.0 } else { clipped_area(&ring, x0, y0) };
            if cover > 0.0 {
                blend(buf, col as u32, row as u32, color, cover);
            }
        }
    }
}

/// Horizontal extent of convex polygon `ring` within the strip `[y0, y1]`.
fn x_extent(ring: &[(f64, f64); 4], y0: f64, y1: f64) -> Option<(f64, f64)> {
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for i in 0..4 {
        let (p, q) = (ring[i], ring[(i + 1) % 4]);
        if p.1 >= y0 && p.1 <= y1 {
            lo = lo.min(p.0);
            hi = hi.max(p.0);
        }
        for y in [y0, y1] {
            if (p.1 - y) * (q.1 - y) < 0.0 {
                let x = p.0 + (q.0 - p.0) * (y - p.1) / (q.1 - p.1);
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Area of `ring` inside the unit cell with top-left corner `(x0, y0)`.
fn clipped_area(ring: &[(f64, f64); 4], x0: f64, y0: f64) -> f64 {
    // Sutherland-Hodgman against the four cell edges; a convex quad clipped
    // by four half-planes has at most eight vertices.
    let mut poly = [(0.0, 0.0); 8];
    let mut n = 4;
    poly[..4].copy_from_slice(ring);
    let planes: [(f64, f64, f64); 4] = [(1.0, 0.0, x0), (-1.0, 0.0, -(x0 + 1.0)), (0.0, 1.0, y0), (0.0, -1.0, -(y0 + 1.0))];
    for (px, py, c) in planes {
        let mut out = [(0.0, 0.0); 8];
        let mut m = 0;
        for i in 0..n {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            let (dp, dq) = (px * p.0 + py * p.1 - c, px * q.0 + py * q.1 - c);
            if dp >= 0.0 {
                out[m] = p;
                m += 1;
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                let t = dp / (dp - dq);
                out[m] = (p.0 + (q.0 - p.0) * t, p.1 + (q.1 - p.1) * t);
                m += 1;
            }
        }
        poly = out;
        n = m;
        if n < 3 {
            return 0.0;
        }
    }
    let mut twice = 0.0;
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        twice += p.0 * q.1 - q.0 * p.1;
    }
    (libm::fabs(twice) / 2.0).min(1.0)
}

fn blend(buf: &mut RasterImage, x: u32, y: u32, color: Rgb, cover: f64) {
    if cover >= 1.0 {
        buf.set_pixel(x, y, color);
        return;
    }
    let old = buf.pixel(x, y);
    let mut px = [0u8; 3];
    for c in 0..3 {
        let v = old[c] as f64 + (color[c] as f64 - old[c] as f64) * cover;
        px[c] = libm::floor(v + 0.5) as u8;
    }
    buf.set_pixel(x, y, px);
}

/// Box-filters `img` down to `target`×`target` (per-axis integer factor).
/// Each output channel is the mean of its box, rounded half-up.
pub fn downsample(img: &RasterImage, target: u32) -> Result<RasterImage, RasterError> {
    let err = RasterError::IncompatibleSize { width: img.width, height: img.height, target };
    if target == 0 || img.width % target != 0 || img.height % target != 0 {
        return Err(err);
    }
    let kx = (img.width / target) as usize;
    let ky = (img.height / target) as usize;
    Ok(box_filter(img, kx, ky))
}

fn box_filter(img: &RasterImage, kx: usize, ky: usize) -> RasterImage {
    let ow = img.width as usize / kx;
    let oh = img.height as usize / ky;
    let n = (kx * ky) as u64;
    let iw = img.width as usize;
    let mut out = Vec::with_capacity(ow * oh * 3);
    let mut acc = vec![0u64; ow * 3];
    for oy in 0..oh {
        acc.iter_mut().for_each(|a| *a = 0);
        for y in oy * ky..(oy + 1) * ky {
            let row = &img.pixels[y * iw * 3..(y + 1) * iw * 3];
            for (ox, cell) in acc.chunks_exact_mut(3).enumerate() {
                for px in row[ox * kx * 3..(ox + 1) * kx * 3].chunks_exact(3) {
                    cell[0] += px[0] as u64;
                    cell[1] += px[1] as u64;
                    cell[2] += px[2] as u64;
                }
            }
        }
        // floor(sum / n + 1/2) in exact integer arithmetic.
        out.extend(acc.iter().map(|&s| ((2 * s + n) / (2 * n)) as u8));
    }
    RasterImage { width: ow as u32, height: oh as u32, pixels: out }
}

pub const ORIENTATION_BINS: usize = 16;

/// Gradient-orientation histogram over `ORIENTATION_BINS` bins covering
/// [0°, 180°), weighted by Sobel gradient magnitude on luma.
pub fn orientation_histogram(img: &RasterImage) -> [f64; ORIENTATION_BINS] {
    let w = img.width as usize;
    let h = img.height as usize;
    let l = img.luma();
    let mut hist = [0.0; ORIENTATION_BINS];
    if w < 3 || h < 3 {
        return hist;
    }
    let at = |x: usize, y: usize| l[y * w + x];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let mag = libm::hypot(gx, gy);
            if mag < 1e-9 {
                continue;
            }
            let mut theta = libm::atan2(gy, gx);
            if theta < 0.0 {
                theta += core::f64::consts::PI;
            }
            let bin = ((theta / core::f64::consts::PI) * ORIENTATION_BINS as f64) as usize;
            hist[bin.min(ORIENTATION_BINS - 1)] += mag;
        }
    }
    hist
}

/// Share of total gradient mass a bin needs to count as occupied.
pub const OCCUPIED_BIN_SHARE: f64 = 0.05;

/// Number of orientation bins carrying at least [`OCCUPIED_BIN_SHARE`] of
/// the gradient mass; a proxy for how many distinct stroke angles survive.
pub fn occupied_orientation_bins(img: &RasterImage) -> usize {
    let hist = orientation_histogram(img);
    let total: f64 = hist.iter().sum();
    if total <= 0.0 {
        return 0;
    }
    hist.iter().filter(|&&m| m / total >= OCCUPIED_BIN_SHARE).count()
}
