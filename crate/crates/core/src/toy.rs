//! Small synthetic object-recognition tasks used as the target dataset in
//! fusion runs and as a control task for depth studies.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::derive_seed;
use crate::geometry::{ElementRole, Point, Scene, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ToyTask {
    /// Seven-segment digits 0-9 drawn in black with random pose.
    Digits,
    /// Class `k` shows `k / 3 + 1` thick strokes in the `k % 3`-th role color.
    Blobs { n_classes: usize },
}

impl ToyTask {
    pub fn n_classes(&self) -> usize {
        match *self {
            ToyTask::Digits => 10,
            ToyTask::Blobs { n_classes } => n_classes,
        }
    }

    /// Scene for sample `index` of `class`. Deterministic in all arguments.
    pub fn scene(&self, class: usize, index: u64, seed: u64) -> Scene {
        assert!(class < self.n_classes(), "class {class} out of range");
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 0x70E, class as u64, index]));
        match self {
            ToyTask::Digits => digit(class, &mut rng),
            ToyTask::Blobs { .. } => blobs(class, &mut rng),
        }
    }
}

// Segments a..g as (from, to) corners of a unit box with the origin at its
// center, x in [-0.5, 0.5] and y in [-1, 1].
const SEGMENTS: [((f64, f64), (f64, f64)); 7] = [
    ((-0.5, -1.0), (0.5, -1.0)),
    ((0.5, -1.0), (0.5, 0.0)),
    ((0.5, 0.0), (0.5, 1.0)),
    ((-0.5, 1.0), (0.5, 1.0)),
    ((-0.5, 0.0), (-0.5, 1.0)),
    ((-0.5, -1.0), (-0.5, 0.0)),
    ((-0.5, 0.0), (0.5, 0.0)),
];

const LIT: [u8; 10] = [
    0b0111111, 0b0000110, 0b1011011, 0b1001111, 0b1100110,
    0b1101101, 0b1111101, 0b0000111, 0b1111111, 0b1101111,
];

fn digit(class: usize, rng: &mut ChaCha8Rng) -> Scene {
    let scale = rng.random_range(45.0..60.0);
    let angle = rng.random_range(-10.0..10.0);
    let (dx, dy) = (rng.random_range(-25.0..25.0), rng.random_range(-10.0..10.0));
    let width = rng.random_range(12.0..16.0);
    let center = Point::new(0.0, 0.0);
    let mut scene = Scene::blank();
    let c = f64::from(scene.width) / 2.0;
    for (k, &(a, b)) in SEGMENTS.iter().enumerate() {
        if LIT[class] >> k & 1 == 0 {
            continue;
        }
        let seg = Segment::new(
            Point::new(a.0 * scale, a.1 * scale),
            Point::new(b.0 * scale, b.1 * scale),
            ElementRole::Context,
            width,
            None,
        )
        .expect("valid digit stroke");
        scene.push(seg.rotated(center, angle).translated(c + dx, c + dy));
    }
    scene
}

fn blobs(class: usize, rng: &mut ChaCha8Rng) -> Scene {
    const ROLES: [ElementRole; 3] = [ElementRole::Target, ElementRole::Reference, ElementRole::Context];
    let role = ROLES[class % 3];
    let count = class / 3 + 1;
    let mut scene = Scene::blank();
    let c = f64::from(scene.width) / 2.0;
    let mut placed: Vec<Point> = Vec::with_capacity(count);
    while placed.len() < count {
        let p = Point::new(c + rng.random_range(-70.0..70.0), c + rng.random_range(-70.0..70.0));
        // Keep strokes apart so the count stays legible after downsampling.
        if placed.iter().any(|q| q.distance(&p) < 45.0) {
            continue;
        }
        let len = rng.random_range(20.0..32.0);
        let theta = rng.random_range(0.0..core::f64::consts::PI);
        let (s, co) = libm::sincos(theta);
        let half = Point::new(co * len / 2.0, s * len / 2.0);
        let seg = Segment::new(
            Point::new(p.x - half.x, p.y - half.y),
            Point::new(p.x + half.x, p.y + half.y),
            role,
            rng.random_range(12.0..16.0),
            None,
        )
        .expect("valid blob stroke");
        scene.push(seg);
        placed.push(p);
    }
    scene
}
