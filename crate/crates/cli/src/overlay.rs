//! Diagnostic images: mask, cluster swatch, border rays and structures.

use abcd_core::color::ColorResult;
use abcd_core::geometry::BORDER_GRADIENT_THRESHOLD;
use abcd_core::image::lab_to_rgb;
use abcd_core::structures::StructureDetail;
use abcd_core::{BinaryMask, BorderResult, ImageBuffer};

const BOUNDARY: [u8; 3] = [0, 220, 0];
const RAY_STRONG: [u8; 3] = [230, 20, 20];
const RAY_WEAK: [u8; 3] = [240, 220, 0];
const SKELETON: [u8; 3] = [30, 90, 255];
const BRANCH: [u8; 3] = [255, 0, 255];
const BLOB: [u8; 3] = [0, 230, 230];
const STREAK: [u8; 3] = [255, 80, 0];

pub const SWATCH_WIDTH: usize = 240;
pub const SWATCH_HEIGHT: usize = 40;

struct Canvas {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Canvas {
    fn from_image(img: &ImageBuffer) -> Self {
        let mut data = Vec::with_capacity(img.width() * img.height() * 3);
        for y in 0..img.height() {
            for x in 0..img.width() {
                data.extend_from_slice(&img.rgb(x, y));
            }
        }
        Self {
            width: img.width(),
            height: img.height(),
            data,
        }
    }

    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            let i = (y as usize * self.width + x as usize) * 3;
            self.data[i..i + 3].copy_from_slice(&c);
        }
    }

    fn line(&mut self, (x0, y0): (f64, f64), (x1, y1): (f64, f64), c: [u8; 3]) {
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as usize;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            self.put(
                (x0 + t * (x1 - x0)).round() as i64,
                (y0 + t * (y1 - y0)).round() as i64,
                c,
            );
        }
    }

    fn square(&mut self, x: i64, y: i64, half: i64, c: [u8; 3]) {
        for dy in -half..=half {
            for dx in -half..=half {
                self.put(x + dx, y + dy, c);
            }
        }
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, c: [u8; 3]) {
        let n = (r * 8.0).ceil().max(16.0) as usize;
        for i in 0..n {
            let t = i as f64 / n as f64 * std::f64::consts::TAU;
            self.put((cx + r * t.cos()).round() as i64, (cy + r * t.sin()).round() as i64, c);
        }
    }

    fn outline(&mut self, mask: &BinaryMask, c: [u8; 3]) {
        for y in 0..mask.height() {
            for x in 0..mask.width() {
                if mask.is_boundary(x, y) {
                    self.put(x as i64, y as i64, c);
                }
            }
        }
    }

    fn into_image(self) -> ImageBuffer {
        ImageBuffer::new(self.width, self.height, 3, self.data).expect("canvas is sized")
    }
}

/// Horizontal bands, one per counted cluster, widths proportional to
/// pixel fraction. Empty results give a flat gray swatch.
pub fn cluster_swatch(color: &ColorResult) -> ImageBuffer {
    let total: f64 = color.clusters.iter().map(|c| c.fraction).sum();
    let mut bands: Vec<(usize, [u8; 3])> = Vec::new();
    let mut edge = 0.0;
    for c in &color.clusters {
        edge += c.fraction / total;
        bands.push(((edge * SWATCH_WIDTH as f64).round() as usize, lab_to_rgb(c.center)));
    }
    ImageBuffer::from_rgb_fn(SWATCH_WIDTH, SWATCH_HEIGHT, |x, _| {
        bands.iter().find(|(end, _)| x < *end).map_or([128, 128, 128], |b| b.1)
    })
}

/// Lesion outline plus the eight border rays, colored by whether the
/// gradient at the boundary point counts toward B.
pub fn ray_overlay(image: &ImageBuffer, mask: &BinaryMask, border: &BorderResult) -> ImageBuffer {
    let mut canvas = Canvas::from_image(image);
    canvas.outline(mask, BOUNDARY);
    for (&(px, py), &g) in border.points.iter().zip(&border.gradients) {
        let c = if g > BORDER_GRADIENT_THRESHOLD {
            RAY_STRONG
        } else {
            RAY_WEAK
        };
        canvas.line(border.center, (px as f64, py as f64), c);
        canvas.square(px as i64, py as i64, 2, c);
    }
    canvas.into_image()
}

/// Skeleton, branch points, detected blobs and streak segments.
pub fn structure_overlay(image: &ImageBuffer, mask: &BinaryMask, detail: &StructureDetail) -> ImageBuffer {
    let mut canvas = Canvas::from_image(image);
    canvas.outline(mask, BOUNDARY);
    for (x, y) in detail.network.skeleton.points() {
        canvas.put(x as i64, y as i64, SKELETON);
    }
    for &(x, y) in &detail.network.branch_points {
        canvas.square(x as i64, y as i64, 1, BRANCH);
    }
    for b in &detail.blobs {
        canvas.circle(b.x as f64, b.y as f64, b.radius(), BLOB);
    }
    for s in &detail.streaks.segments {
        canvas.line((s.x0 as f64, s.y0 as f64), (s.x1 as f64, s.y1 as f64), STREAK);
    }
    canvas.into_image()
}

#[cfg(test)]
mod tests {
    use super::*;
    use abcd_core::color::ColorCluster;
    use abcd_core::LabPixel;

    #[test]
    fn swatch_bands_follow_fractions() {
        let cluster = |l, fraction| ColorCluster {
            center: LabPixel::new(l, 0.0, 0.0),
            pixel_count: 0,
            fraction,
        };
        let result = ColorResult {
            clusters: vec![cluster(10.0, 0.25), cluster(90.0, 0.75)],
            c_score: 2,
        };
        let sw = cluster_swatch(&result);
        assert_eq!((sw.width(), sw.height()), (SWATCH_WIDTH, SWATCH_HEIGHT));
        assert_eq!(sw.rgb(59, 0), sw.rgb(0, 39));
        assert_ne!(sw.rgb(59, 0), sw.rgb(60, 0));
        assert_eq!(sw.rgb(60, 0), sw.rgb(SWATCH_WIDTH - 1, 0));
    }

    #[test]
    fn rays_reach_their_points() {
        let mask = BinaryMask::from_fn(40, 40, |x, y| (x as f64 - 20.0).hypot(y as f64 - 20.0) <= 10.0);
        let img = ImageBuffer::from_rgb_fn(40, 40, |_, _| [0, 0, 0]);
        let border = BorderResult {
            center: (20.0, 20.0),
            points: [(30, 20); 8],
            gradients: [20.0; 8],
            b_score: 8,
        };
        let out = ray_overlay(&img, &mask, &border);
        assert_eq!(out.rgb(25, 20), RAY_STRONG);
        assert_eq!(out.rgb(20, 10), BOUNDARY);
        assert_eq!(out.rgb(2, 2), [0, 0, 0]);
    }
}
