//! Parametric generators for the five illusion families.
//!
//! Each generator builds the illusory figure in a local frame centred on the
//! origin, then a single rigid layout transform (rotation jitter, fit-to-canvas
//! scale, centre jitter) moves it onto the canvas. The control scene is the
//! transformed illusory scene with every `Context` segment removed, so the
//! shared `Reference` and `Target` segments are bitwise equal by construction.

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Dash, ElementRole, GeometryError, Point, Scene, Segment, CANVAS_SIZE, MARGIN};

pub const TARGET_WIDTH: f64 = 3.0;
pub const CONTEXT_WIDTH: f64 = 2.0;
pub const REFERENCE_WIDTH: f64 = 2.0;
pub const REFERENCE_DASH: Dash = Dash { on: 4.0, off: 4.0 };

/// Maximum rigid rotation applied to a whole scene, in degrees.
pub const ORIENTATION_JITTER: f64 = 15.0;
/// Maximum centre offset along each axis, in pixels.
pub const CENTER_JITTER: f64 = 10.0;

/// Relative shaft length difference at `d = 1` for Müller-Lyer.
pub const MULLER_LYER_DELTA_MAX: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IllusionFamily {
    HeringWundt,
    MullerLyer,
    Poggendorff,
    VerticalHorizontal,
    Zollner,
}

impl IllusionFamily {
    pub const ALL: [IllusionFamily; 5] = [
        IllusionFamily::HeringWundt,
        IllusionFamily::MullerLyer,
        IllusionFamily::Poggendorff,
        IllusionFamily::VerticalHorizontal,
        IllusionFamily::Zollner,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            IllusionFamily::HeringWundt => "hering_wundt",
            IllusionFamily::MullerLyer => "muller_lyer",
            IllusionFamily::Poggendorff => "poggendorff",
            IllusionFamily::VerticalHorizontal => "vertical_horizontal",
            IllusionFamily::Zollner => "zollner",
        }
    }

    /// Parses the canonical name plus a few short aliases (`hering`, `ml`, `vh`, ...).
    pub fn from_name(name: &str) -> Option<Self> {
        let lowered: alloc::string::String = name
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(|c| c.to_lowercase())
            .collect();
        Some(match lowered.as_str() {
            "heringwundt" | "hering" | "wundt" | "hw" => IllusionFamily::HeringWundt,
            "mullerlyer" | "müllerlyer" | "muellerlyer" | "ml" => IllusionFamily::MullerLyer,
            "poggendorff" | "pogg" => IllusionFamily::Poggendorff,
            "verticalhorizontal" | "vh" => IllusionFamily::VerticalHorizontal,
            "zollner" | "zöllner" | "zoellner" => IllusionFamily::Zollner,
            _ => return None,
        })
    }
}

impl fmt::Display for IllusionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IllusionError {
    #[error("{field} = {value} is outside [0, 1]")]
    InvalidParams { field: &'static str, value: f64 },
    #[error("generator produced invalid geometry: {0}")]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IllusionParams {
    pub family: IllusionFamily,
    /// Illusion strength `s`.
    pub strength: f64,
    /// Perception difference `d`.
    pub perception_diff: f64,
    pub layout_seed: u64,
}

impl IllusionParams {
    pub fn new(
        family: IllusionFamily,
        strength: f64,
        perception_diff: f64,
        layout_seed: u64,
    ) -> Result<Self, IllusionError> {
        let p = Self { family, strength, perception_diff, layout_seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), IllusionError> {
        if !(0.0..=1.0).contains(&self.strength) {
            return Err(IllusionError::InvalidParams { field: "strength", value: self.strength });
        }
        if !(0.0..=1.0).contains(&self.perception_diff) {
            return Err(IllusionError::InvalidParams { field: "perception_diff", value: self.perception_diff });
        }
        Ok(())
    }
}

/// Illusory scene (label 1) and its context-free control (label 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePair {
    pub illusory: Scene,
    pub control: Scene,
}

/// Meaning of `s` and `d` for one family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParameterDoc {
    pub family: IllusionFamily,
    pub description: &'static str,
    /// What the illusion strength controls.
    pub source: &'static str,
    /// What the perception difference controls.
    pub diff: &'static str,
}

pub fn family_parameter_doc(family: IllusionFamily) -> ParameterDoc {
    let (description, source, diff) = match family {
        IllusionFamily::HeringWundt => (
            "two red parallels crossed by a fan of black rays through the centre",
            "Angle and density of radiating lines",
            "Distance and length of parallels",
        ),
        IllusionFamily::MullerLyer => (
            "two stacked red shafts capped with black arrowheads (inward on one, outward on the other)",
            "Arrow angle",
            "Line length",
        ),
        IllusionFamily::Poggendorff => (
            "an oblique red transversal whose middle is occluded by two black vertical parallels",
            "Oblique angle",
            "Gap width between parallels",
        ),
        IllusionFamily::VerticalHorizontal => (
            "an inverted-T figure: red horizontal arm, black junction stem, red vertical arm",
            "Position of intersection point",
            "Arm lengths",
        ),
        IllusionFamily::Zollner => (
            "four red parallels, each crossed by short black strokes of alternating tilt",
            "Stroke angle relative to vertical",
            "Stroke intersection position",
        ),
    };
    ParameterDoc { family, description, source, diff }
}

/// Generates the matched pair for `params`. Deterministic in all four fields.
pub fn generate(params: &IllusionParams) -> Result<ScenePair, IllusionError> {
    params.validate()?;
    let s = params.strength;
    let d = params.perception_diff;
    let mut local = Vec::new();
    match params.family {
        IllusionFamily::HeringWundt => hering_wundt(&mut local, s, d)?,
        IllusionFamily::MullerLyer => muller_lyer(&mut local, s, d)?,
        IllusionFamily::Poggendorff => poggendorff(&mut local, s, d)?,
        IllusionFamily::VerticalHorizontal => vertical_horizontal(&mut local, s, d)?,
        IllusionFamily::Zollner => zollner(&mut local, s, d)?,
    }
    // Context first so the red and blue strokes stay on top.
    local.sort_by_key(|seg| match seg.role {
        ElementRole::Context => 0,
        ElementRole::Target => 1,
        ElementRole::Reference => 2,
    });

    let placed = place_on_canvas(&local, params.layout_seed);
    let mut illusory = Scene::blank();
    let mut control = Scene::blank();
    for seg in placed {
        if seg.role != ElementRole::Context {
            control.push(seg);
        }
        illusory.push(seg);
    }
    Ok(ScenePair { illusory, control })
}

/// Number of rays in a Hering-Wundt figure at strength `s`.
pub fn hering_ray_count(s: f64) -> usize {
    libm::round(8.0 + s * 24.0) as usize
}

/// Arrowhead half-angle in degrees for Müller-Lyer at strength `s`.
pub fn muller_lyer_fin_angle(s: f64) -> f64 {
    15.0 + s * 45.0
}

/// Zöllner stroke angle from the parallel, in degrees.
pub fn zollner_stroke_angle(s: f64) -> f64 {
    90.0 - s * 55.0
}

/// Poggendorff transversal angle from horizontal, in degrees.
pub fn poggendorff_angle(s: f64) -> f64 {
    20.0 + s * 40.0
}

pub const ZOLLNER_STROKES_PER_LINE: usize = 8;
const ZOLLNER_SPACING: f64 = 18.0;
const ZOLLNER_STROKE_LEN: f64 = 24.0;
const VH_JUNCTION_GAP: f64 = 40.0;

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn target(a: Point, b: Point) -> Result<Segment, GeometryError> {
    Segment::new(a, b, ElementRole::Target, TARGET_WIDTH, None)
}

fn context(a: Point, b: Point) -> Result<Segment, GeometryError> {
    Segment::new(a, b, ElementRole::Context, CONTEXT_WIDTH, None)
}

fn reference(a: Point, b: Point) -> Result<Segment, GeometryError> {
    Segment::new(a, b, ElementRole::Reference, REFERENCE_WIDTH, Some(REFERENCE_DASH))
}

fn hering_wundt(out: &mut Vec<Segment>, s: f64, d: f64) -> Result<(), GeometryError> {
    let sep = 40.0 + d * 60.0;
    let len = 120.0 + d * 60.0;
    let (hx, hy) = (sep / 2.0, len / 2.0);
    for x in [-hx, hx] {
        out.push(target(p(x, -hy), p(x, hy))?);
        out.push(reference(p(x, -hy), p(x, hy))?);
    }
    let n = hering_ray_count(s);
    let radius = 90.0;
    for k in 0..n {
        let theta = (k as f64 * 180.0 / n as f64).to_radians();
        let (sn, cs) = libm::sincos(theta);
        out.push(context(p(-radius * cs, -radius * sn), p(radius * cs, radius * sn))?);
    }
    Ok(())
}

fn muller_lyer(out: &mut Vec<Segment>, s: f64, d: f64) -> Result<(), GeometryError> {
    let fin = 20.0;
    let (sn, cs) = libm::sincos(muller_lyer_fin_angle(s).to_radians());
    let shafts = [(-30.0, 100.0, -1.0), (30.0, 100.0 * (1.0 + d * MULLER_LYER_DELTA_MAX), 1.0)];
    for (y, len, fin_dir) in shafts {
        let half = len / 2.0;
        out.push(target(p(-half, y), p(half, y))?);
        // fin_dir = -1 folds the fins back over the shaft (inward arrowheads),
        // +1 splays them beyond the ends (outward).
        for (end_x, outward) in [(-half, -1.0), (half, 1.0)] {
            for side in [-1.0, 1.0] {
                let tip = p(end_x + outward * fin_dir * fin * cs, y + side * fin * sn);
                out.push(context(p(end_x, y), tip)?);
            }
        }
    }
    for x in [-50.0, 50.0] {
        out.push(reference(p(x, -50.0), p(x, 50.0))?);
    }
    Ok(())
}

fn poggendorff(out: &mut Vec<Segment>, s: f64, d: f64) -> Result<(), GeometryError> {
    let gap = 30.0 + d * 60.0;
    let (sn, cs) = libm::sincos(poggendorff_angle(s).to_radians());
    // Unit direction rising to the right (y points down).
    let (ux, uy) = (cs, -sn);
    let edge = (gap / 2.0 + CONTEXT_WIDTH / 2.0) / cs;
    let piece = 40.0;
    let at = |t: f64| p(t * ux, t * uy);
    out.push(target(at(-edge - piece), at(-edge))?);
    out.push(target(at(edge), at(edge + piece))?);
    out.push(reference(at(-edge), at(edge))?);
    let half = edge * sn + 30.0;
    for x in [-gap / 2.0, gap / 2.0] {
        out.push(context(p(x, -half), p(x, half))?);
    }
    Ok(())
}

fn vertical_horizontal(out: &mut Vec<Segment>, s: f64, d: f64) -> Result<(), GeometryError> {
    let arm = 120.0;
    let vertical = arm * (1.0 + (d - 0.5) * 0.4);
    let t = 0.1 + s * 0.8;
    let height = VH_JUNCTION_GAP + vertical;
    let base_y = height / 2.0;
    let jx = -arm / 2.0 + t * arm;
    let foot = base_y - VH_JUNCTION_GAP;
    out.push(target(p(-arm / 2.0, base_y), p(arm / 2.0, base_y))?);
    out.push(target(p(jx, foot), p(jx, foot - vertical))?);
    out.push(context(p(jx, base_y), p(jx, foot))?);
    let rx = arm / 2.0 + 12.0;
    out.push(reference(p(rx, foot), p(rx, foot - arm))?);
    Ok(())
}

fn zollner(out: &mut Vec<Segment>, s: f64, d: f64) -> Result<(), GeometryError> {
    let xs = [-54.0, -18.0, 18.0, 54.0];
    let half = 75.0;
    let (sn, cs) = libm::sincos(zollner_stroke_angle(s).to_radians());
    let phase = (d - 0.5) * ZOLLNER_SPACING;
    let r = ZOLLNER_STROKE_LEN / 2.0;
    for (i, &x) in xs.iter().enumerate() {
        out.push(target(p(x, -half), p(x, half))?);
        let tilt = if i % 2 == 0 { 1.0 } else { -1.0 };
        for k in 0..ZOLLNER_STROKES_PER_LINE {
            let cy = -63.0 + k as f64 * ZOLLNER_SPACING + phase;
            let (dx, dy) = (tilt * r * sn, r * cs);
            out.push(context(p(x - dx, cy - dy), p(x + dx, cy + dy))?);
        }
    }
    for x in [xs[0], xs[3]] {
        out.push(reference(p(x, -half), p(x, half))?);
    }
    Ok(())
}

/// Rigid layout transform shared by illusory and control scenes.
///
/// Rotation jitter first; if the rotated figure no longer fits inside the
/// margin it is scaled uniformly about the origin; the centre jitter is then
/// clamped so that every endpoint stays inside the margin.
fn place_on_canvas(local: &[Segment], seed: u64) -> Vec<Segment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle = rng.random_range(-ORIENTATION_JITTER..=ORIENTATION_JITTER);
    let jx = rng.random_range(-CENTER_JITTER..=CENTER_JITTER);
    let jy = rng.random_range(-CENTER_JITTER..=CENTER_JITTER);

    let origin = Point::new(0.0, 0.0);
    let mut segs: Vec<Segment> = local.iter().map(|s| s.rotated(origin, angle)).collect();

    let limit = CANVAS_SIZE as f64 / 2.0 - MARGIN - 1e-6;
    let extent = segs
        .iter()
        .flat_map(|s| [s.a, s.b])
        .fold(0.0f64, |m, q| m.max(q.x.abs()).max(q.y.abs()));
    if extent > limit {
        let factor = limit / extent;
        segs = segs.iter().map(|s| s.scaled(origin, factor)).collect();
    }

    let (mut min_x, mut max_x, mut min_y, mut max_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for q in segs.iter().flat_map(|s| [s.a, s.b]) {
        min_x = min_x.min(q.x);
        max_x = max_x.max(q.x);
        min_y = min_y.min(q.y);
        max_y = max_y.max(q.y);
    }
    let dx = jx.clamp(-limit - min_x, limit - max_x);
    let dy = jy.clamp(-limit - min_y, limit - max_y);
    let c = CANVAS_SIZE as f64 / 2.0;
    segs.iter().map(|s| s.translated(c + dx, c + dy)).collect()
}
