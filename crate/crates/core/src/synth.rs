//! Seeded synthetic lesions with ground-truth masks.
//!
//! Benign fixtures are single-tone shapes whose edge fades into the skin over
//! a wide ramp. Malignant fixtures are three-lobed, sharply bounded and split into
//! sectors of four distinct pigments. Both families come in plain, hair,
//! dot, network and (malignant only) streak variants.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::asymmetry;
use crate::image::ImageBuffer;
use crate::scoring::Label;
use crate::segmentation::BinaryMask;

pub const FIXTURE_SIZE: usize = 220;
pub const DEFAULT_PER_CLASS: usize = 24;

const SKIN: [f64; 3] = [225.0, 190.0, 170.0];
const BENIGN_TONE: [f64; 3] = [185.0, 147.0, 127.0];
const BENIGN_NETWORK: [f64; 3] = [158.0, 120.0, 100.0];
/// Ramp width in pixels for benign edges; keeps the radial gradient low.
const SOFT_RAMP: f64 = 36.0;
const NOISE: i32 = 3;
const HAIR: [f64; 3] = [70.0, 55.0, 48.0];
const PIGMENTS: [[f64; 3]; 5] = [
    [38.0, 30.0, 30.0],
    [100.0, 62.0, 42.0],
    [152.0, 104.0, 70.0],
    [88.0, 104.0, 132.0],
    [158.0, 58.0, 60.0],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    Disk,
    HairDisk,
    HalfDisk,
    DotsDisk,
    NetworkDisk,
    Irregular,
    IrregularHair,
    IrregularDots,
    IrregularNetwork,
    IrregularStreaks,
}

impl FixtureKind {
    pub const BENIGN: [FixtureKind; 5] = [
        FixtureKind::Disk,
        FixtureKind::HairDisk,
        FixtureKind::HalfDisk,
        FixtureKind::DotsDisk,
        FixtureKind::NetworkDisk,
    ];
    pub const MALIGNANT: [FixtureKind; 5] = [
        FixtureKind::Irregular,
        FixtureKind::IrregularHair,
        FixtureKind::IrregularDots,
        FixtureKind::IrregularNetwork,
        FixtureKind::IrregularStreaks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixtureKind::Disk => "disk",
            FixtureKind::HairDisk => "hair_disk",
            FixtureKind::HalfDisk => "half_disk",
            FixtureKind::DotsDisk => "dots_disk",
            FixtureKind::NetworkDisk => "network_disk",
            FixtureKind::Irregular => "irregular",
            FixtureKind::IrregularHair => "irregular_hair",
            FixtureKind::IrregularDots => "irregular_dots",
            FixtureKind::IrregularNetwork => "irregular_network",
            FixtureKind::IrregularStreaks => "irregular_streaks",
        }
    }

    pub fn label(self) -> Label {
        if Self::BENIGN.contains(&self) {
            Label::Benign
        } else {
            Label::Malignant
        }
    }

    /// Full disks, with or without overlays.
    pub fn is_disk(self) -> bool {
        matches!(
            self,
            FixtureKind::Disk | FixtureKind::HairDisk | FixtureKind::DotsDisk | FixtureKind::NetworkDisk
        )
    }

    pub fn has_hair(self) -> bool {
        matches!(self, FixtureKind::HairDisk | FixtureKind::IrregularHair)
    }
}

/// Construction record written next to each fixture image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureTruth {
    pub image_id: String,
    pub label: Label,
    pub dx: String,
    pub kind: FixtureKind,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub center: (f64, f64),
    /// Disk radius at mid-ramp, or the mean lobe radius.
    pub radius: f64,
    pub mask_area: usize,
    pub pigments: Vec<[u8; 3]>,
    pub hair_count: usize,
    pub dot_centers: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub truth: FixtureTruth,
    pub image: ImageBuffer,
    pub mask: BinaryMask,
}

/// `per_class` benign and `per_class` malignant fixtures, alternating,
/// cycling through the variants of each family.
pub fn generate_corpus(seed: u64, per_class: usize) -> Vec<Fixture> {
    let mut out = Vec::with_capacity(2 * per_class);
    for i in 0..per_class {
        for (family, j) in [(&FixtureKind::BENIGN, 2 * i), (&FixtureKind::MALIGNANT, 2 * i + 1)] {
            let kind = family[i % family.len()];
            let id = format!("fx_{j:03}_{}", kind.name());
            out.push(generate_fixture(&id, kind, fixture_seed(seed, j)));
        }
    }
    out
}

/// Ground-truth reflection differences of malignant shapes stay at or
/// above this, well clear of the asymmetry threshold.
const MIN_LOBE_ASYMMETRY: f64 = 0.2;
const MAX_LAYOUT_ATTEMPTS: usize = 64;

type Lobe = (f64, f64, f64);

/// A main disk with two smaller lobes roughly 100 degrees apart, recentered
/// on the pixel centroid of the union. Layouts that come out too close to
/// mirror-symmetric about either principal axis are redrawn.
fn lobe_layout(rng: &mut ChaCha8Rng, center: (f64, f64), size: usize) -> (f64, [Lobe; 3]) {
    let mut layout = draw_lobes(rng, center, size);
    for _ in 1..MAX_LAYOUT_ATTEMPTS {
        let (_, lobes) = layout;
        let mask = BinaryMask::from_fn(size, size, |x, y| {
            lobes
                .iter()
                .any(|&(lx, ly, r)| (x as f64 - lx).hypot(y as f64 - ly) <= r)
        });
        match asymmetry(&mask) {
            Ok(a) if a.d_major.min(a.d_minor) >= MIN_LOBE_ASYMMETRY => break,
            _ => layout = draw_lobes(rng, center, size),
        }
    }
    layout
}

fn draw_lobes(rng: &mut ChaCha8Rng, center: (f64, f64), size: usize) -> (f64, [Lobe; 3]) {
    let base = rng.gen_range(38.0..46.0);
    let a0 = rng.gen_range(0.0..TAU);
    let a1 = a0 + rng.gen_range(1.7..2.0);
    let raw = [
        (0.0, 0.0, base),
        (base * rng.gen_range(0.9..1.0), a0, base * rng.gen_range(0.6..0.7)),
        (base * rng.gen_range(0.85..0.95), a1, base * rng.gen_range(0.45..0.5)),
    ];
    let mut lobes = raw.map(|(d, a, r)| (d * a.cos(), d * a.sin(), r));
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
    for y in -(size as i64)..size as i64 {
        for x in -(size as i64)..size as i64 {
            let (x, y) = (x as f64, y as f64);
            if lobes.iter().any(|&(lx, ly, r)| (x - lx).hypot(y - ly) <= r) {
                sx += x;
                sy += y;
                n += 1.0;
            }
        }
    }
    for l in &mut lobes {
        l.0 += center.0 - (sx / n).round();
        l.1 += center.1 - (sy / n).round();
    }
    (base, lobes)
}

fn fixture_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn generate_fixture(image_id: &str, kind: FixtureKind, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = FIXTURE_SIZE;
    let c = size as f64 / 2.0;
    let center = (c + rng.gen_range(-6.0..6.0), c + rng.gen_range(-6.0..6.0));
    let mut canvas = Canvas::new(size);
    let mut truth = FixtureTruth {
        image_id: image_id.to_string(),
        label: kind.label(),
        dx: if kind.label() == Label::Malignant { "mel" } else { "nv" }.to_string(),
        kind,
        seed,
        width: size,
        height: size,
        center,
        radius: 0.0,
        mask_area: 0,
        pigments: Vec::new(),
        hair_count: 0,
        dot_centers: Vec::new(),
    };

    let mask = if kind.label() == Label::Benign {
        let half = kind == FixtureKind::HalfDisk;
        let radius = if half {
            rng.gen_range(72.0..80.0)
        } else {
            rng.gen_range(58.0..66.0)
        };
        truth.radius = radius;
        let flat_angle = rng.gen_range(0.0..TAU);
        let (fc, fs) = (flat_angle.cos(), flat_angle.sin());
        // the half-disk keeps the side of its diameter facing `flat_angle`;
        // its center moves back so the lesion stays centered
        let origin = if half {
            (center.0 - radius / 2.0 * fc, center.1 - radius / 2.0 * fs)
        } else {
            center
        };
        // signed distance, negative inside
        let sd = |x: f64, y: f64| {
            let (dx, dy) = (x - origin.0, y - origin.1);
            let d = dx.hypot(dy) - radius;
            if half {
                d.max(-(dx * fc + dy * fs))
            } else {
                d
            }
        };
        canvas.paint(|x, y| {
            let t = ((sd(x, y) + SOFT_RAMP / 2.0) / SOFT_RAMP).clamp(0.0, 1.0);
            Some(mix(BENIGN_TONE, SKIN, t))
        });
        truth.pigments.push(to_u8(BENIGN_TONE));
        let inner = |x: f64, y: f64, margin: f64| sd(x, y) <= -margin;
        match kind {
            FixtureKind::DotsDisk => {
                truth.dot_centers = place_dots(&mut rng, center, radius, 6, |x, y| inner(x, y, 16.0));
                paint_dots(&mut canvas, &truth.dot_centers, [92.0, 62.0, 50.0]);
            }
            FixtureKind::NetworkDisk => paint_network(&mut canvas, &mut rng, BENIGN_NETWORK, |x, y| inner(x, y, 10.0)),
            _ => {}
        }
        BinaryMask::from_fn(size, size, |x, y| sd(x as f64, y as f64) <= 0.0)
    } else {
        let (base, lobes) = lobe_layout(&mut rng, center, size);
        truth.radius = base;
        // depth inside the union, bounded below by the deepest lobe
        let depth = move |x: f64, y: f64| {
            lobes
                .iter()
                .map(|&(lx, ly, r)| r - (x - lx).hypot(y - ly))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let inside = move |x: f64, y: f64| depth(x, y) >= 0.0;
        let mut palette = PIGMENTS.to_vec();
        palette.shuffle(&mut rng);
        palette.truncate(4);
        truth.pigments = palette.iter().map(|&p| to_u8(p)).collect();
        let sector0 = rng.gen_range(0.0..TAU);
        canvas.paint(|x, y| {
            if !inside(x, y) {
                return Some(SKIN);
            }
            let t = (y - center.1).atan2(x - center.0);
            let sector = (((t - sector0).rem_euclid(TAU)) / (TAU / 4.0)) as usize;
            Some(palette[sector.min(3)])
        });
        let boundary_radius = |t: f64| {
            let mut r = 0.0;
            while inside(center.0 + (r + 0.5) * t.cos(), center.1 + (r + 0.5) * t.sin()) {
                r += 0.5;
            }
            r
        };
        match kind {
            FixtureKind::IrregularDots => {
                truth.dot_centers = place_dots(&mut rng, center, 2.0 * base, 6, |x, y| depth(x, y) >= 14.0);
                paint_dots(&mut canvas, &truth.dot_centers, [18.0, 14.0, 14.0]);
            }
            FixtureKind::IrregularNetwork => {
                paint_network(&mut canvas, &mut rng, [22.0, 18.0, 18.0], |x, y| depth(x, y) >= 8.0)
            }
            FixtureKind::IrregularStreaks => {
                for k in 0..10 {
                    let t = sector0 + k as f64 * TAU / 10.0 + rng.gen_range(-0.1..0.1);
                    let rb = boundary_radius(t);
                    paint_segment(
                        &mut canvas,
                        polar_point(center, rb - 24.0, t),
                        polar_point(center, rb + 10.0, t),
                        1.0,
                        [24.0, 20.0, 20.0],
                    );
                }
            }
            _ => {}
        }
        BinaryMask::from_fn(size, size, |x, y| inside(x as f64, y as f64))
    };

    if kind.has_hair() {
        let count = rng.gen_range(3..=5);
        truth.hair_count = count;
        for _ in 0..count {
            let a = (rng.gen_range(0.0..size as f64), 0.0);
            let b = (rng.gen_range(0.0..size as f64), size as f64 - 1.0);
            let (a, b) = if rng.gen_bool(0.5) {
                (a, b)
            } else {
                ((a.1, a.0), (b.1, b.0))
            };
            paint_segment(&mut canvas, a, b, 0.5, HAIR);
        }
    }

    truth.mask_area = mask.area();
    let image = canvas.finish(&mut rng);
    Fixture { truth, image, mask }
}

fn polar_point(center: (f64, f64), r: f64, t: f64) -> (f64, f64) {
    (center.0 + r * t.cos(), center.1 + r * t.sin())
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    std::array::from_fn(|i| a[i] * (1.0 - t) + b[i] * t)
}

fn to_u8(c: [f64; 3]) -> [u8; 3] {
    c.map(|v| v.round().clamp(0.0, 255.0) as u8)
}

/// Up to `count` dot centers, at least 16 px apart, where `fits` holds.
fn place_dots(
    rng: &mut ChaCha8Rng,
    center: (f64, f64),
    reach: f64,
    count: usize,
    fits: impl Fn(f64, f64) -> bool,
) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for _ in 0..2000 {
        if out.len() == count {
            break;
        }
        let r = reach * rng.gen::<f64>().sqrt();
        let p = polar_point(center, r, rng.gen_range(0.0..TAU));
        let p = (p.0.round(), p.1.round());
        if fits(p.0, p.1) && out.iter().all(|q| (p.0 - q.0).hypot(p.1 - q.1) >= 16.0) {
            out.push(p);
        }
    }
    out
}

fn paint_dots(canvas: &mut Canvas, centers: &[(f64, f64)], color: [f64; 3]) {
    canvas.paint(|x, y| {
        centers
            .iter()
            .any(|&(cx, cy)| (x - cx).powi(2) + (y - cy).powi(2) <= 16.0)
            .then_some(color)
    });
}

/// Two-pixel lines every 12 pixels, slightly rotated, where `keep` holds.
fn paint_network(canvas: &mut Canvas, rng: &mut ChaCha8Rng, color: [f64; 3], keep: impl Fn(f64, f64) -> bool) {
    let angle: f64 = rng.gen_range(-0.3..0.3);
    let offset = (rng.gen_range(0.0..12.0), rng.gen_range(0.0..12.0));
    let (c, s) = (angle.cos(), angle.sin());
    canvas.paint(|x, y| {
        let u = (x * c + y * s + offset.0).rem_euclid(12.0);
        let v = (-x * s + y * c + offset.1).rem_euclid(12.0);
        ((u < 2.0 || v < 2.0) && keep(x, y)).then_some(color)
    });
}

/// Paints pixels within `half_width` of the segment `a`–`b`.
fn paint_segment(canvas: &mut Canvas, a: (f64, f64), b: (f64, f64), half_width: f64, color: [f64; 3]) {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    canvas.paint(|x, y| {
        let t = (((x - a.0) * dx + (y - a.1) * dy) / len2).clamp(0.0, 1.0);
        let (px, py) = (a.0 + t * dx, a.1 + t * dy);
        ((x - px).hypot(y - py) <= half_width).then_some(color)
    });
}

struct Canvas {
    size: usize,
    rgb: Vec<[f64; 3]>,
}

impl Canvas {
    fn new(size: usize) -> Self {
        Self {
            size,
            rgb: vec![SKIN; size * size],
        }
    }

    fn paint(&mut self, mut f: impl FnMut(f64, f64) -> Option<[f64; 3]>) {
        for y in 0..self.size {
            for x in 0..self.size {
                if let Some(c) = f(x as f64, y as f64) {
                    self.rgb[y * self.size + x] = c;
                }
            }
        }
    }

    /// Quantizes with small uniform per-channel noise.
    fn finish(self, rng: &mut ChaCha8Rng) -> ImageBuffer {
        let mut data = Vec::with_capacity(self.rgb.len() * 3);
        for px in &self.rgb {
            for &v in px {
                let n = rng.gen_range(-NOISE..=NOISE) as f64;
                data.push((v + n).round().clamp(0.0, 255.0) as u8);
            }
        }
        ImageBuffer::new(self.size, self.size, 3, data).expect("canvas dimensions are consistent")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_balanced_and_deterministic() {
        let a = generate_corpus(7, DEFAULT_PER_CLASS);
        assert_eq!(a.len(), 48);
        let malignant = a.iter().filter(|f| f.truth.label == Label::Malignant).count();
        assert_eq!(malignant, 24);
        let b = generate_corpus(7, DEFAULT_PER_CLASS);
        assert_eq!(a, b);
        assert_ne!(a[0].image, generate_corpus(8, 1)[0].image);
    }

    #[test]
    fn masks_are_sane() {
        for f in generate_corpus(1, 10) {
            assert_eq!((f.mask.width(), f.mask.height()), (FIXTURE_SIZE, FIXTURE_SIZE));
            assert!(f.mask.area() > 2000, "{}", f.truth.image_id);
            assert!(f.mask.coverage() < 0.6);
            assert_eq!(f.mask.area(), f.truth.mask_area);
            // lesion never touches the frame
            for i in 0..FIXTURE_SIZE {
                assert!(!f.mask.get(i, 0) && !f.mask.get(0, i));
                assert!(!f.mask.get(i, FIXTURE_SIZE - 1) && !f.mask.get(FIXTURE_SIZE - 1, i));
            }
        }
    }

    #[test]
    fn ids_are_unique() {
        let c = generate_corpus(3, 12);
        let mut ids: Vec<_> = c.iter().map(|f| f.truth.image_id.clone()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 24);
    }
}
