//! Asymmetry (A) and border (B) scores.
//!
//! Asymmetry aligns the lesion's principal axis with the horizontal, then
//! reflects one half onto the other about the horizontal and vertical
//! lines through the centroid and measures `1 − IoU` for each. Border
//! irregularity probes eight rays from the centroid and compares the mean
//! intensity just inside and just outside the farthest lesion pixel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::segmentation::BinaryMask;

pub const ASYMMETRY_THRESHOLD: f64 = 0.15;
pub const BORDER_GRADIENT_THRESHOLD: f64 = 10.0;
/// Samples taken on each side of a boundary point.
pub const BORDER_PATCH_LEN: usize = 5;
pub const RAY_COUNT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryResult {
    /// Principal axis angle in radians, in `[0, π)`.
    pub angle: f64,
    /// `1 − IoU` of the halves reflected across the major axis.
    pub d_major: f64,
    /// `1 − IoU` of the halves reflected across the minor axis.
    pub d_minor: f64,
    pub a_score: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorderResult {
    pub center: (f64, f64),
    pub points: [(usize, usize); RAY_COUNT],
    pub gradients: [f64; RAY_COUNT],
    pub b_score: u8,
}

/// Angle of the dominant eigenvector of the foreground coordinate
/// covariance, normalized to `[0, π)`. Image coordinates: x right, y down.
pub fn principal_axis(mask: &BinaryMask) -> Result<f64> {
    let n = mask.area();
    if n < 2 {
        return Err(Error::TooFewPixels(n));
    }
    let (cx, cy) = mask.centroid().expect("non-empty");
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in mask.points() {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let mut theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    if theta < 0.0 {
        theta += PI;
    }
    if theta >= PI {
        theta -= PI;
    }
    Ok(theta)
}

/// Dense square canvas holding a rotated mask.
struct Canvas {
    side: usize,
    data: Vec<bool>,
}

impl Canvas {
    #[inline]
    fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.side + x]
    }
}

/// Rotates the mask by `−angle` about its centroid (nearest neighbor,
/// inverse mapping) onto a canvas large enough to hold every pixel.
fn rotate_to_axis(mask: &BinaryMask, angle: f64) -> Canvas {
    let (cx, cy) = mask.centroid().expect("non-empty");
    let rmax = mask
        .points()
        .map(|(x, y)| ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt())
        .fold(0.0, f64::max);
    let half = rmax.ceil() as i64 + 2;
    let side = (2 * half + 1) as usize;
    let (s, c) = angle.sin_cos();
    let mut data = vec![false; side * side];
    for v in -half..=half {
        for u in -half..=half {
            let x = cx + u as f64 * c - v as f64 * s;
            let y = cy + u as f64 * s + v as f64 * c;
            let (sx, sy) = (x.round() as i64, y.round() as i64);
            if mask.get_signed(sx, sy) {
                data[(v + half) as usize * side + (u + half) as usize] = true;
            }
        }
    }
    Canvas { side, data }
}

/// `1 − IoU` between one half and the reflection of the other. With
/// `across_rows` the reflection line is horizontal at `axis2 / 2`.
fn half_reflection_asymmetry(canvas: &Canvas, axis2: i64, across_rows: bool) -> f64 {
    let n = canvas.side as i64;
    let (mut a_count, mut b_count, mut inter) = (0usize, 0usize, 0usize);
    for i in 0..n {
        for j in 0..n {
            // `i` runs across the reflected coordinate, `j` along the axis.
            let (x, y) = if across_rows { (j, i) } else { (i, j) };
            let mirrored = axis2 - i;
            if 2 * i < axis2 {
                let a = canvas.get(x as usize, y as usize);
                let b = (0..n).contains(&mirrored) && {
                    let (mx, my) = if across_rows { (j, mirrored) } else { (mirrored, j) };
                    canvas.get(mx as usize, my as usize)
                };
                a_count += a as usize;
                b_count += b as usize;
                inter += (a && b) as usize;
            } else if 2 * i > axis2 && !(0..n).contains(&mirrored) && canvas.get(x as usize, y as usize) {
                // reflected pixel lands off-canvas; still part of the union
                b_count += 1;
            }
        }
    }
    let union = a_count + b_count - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

fn canvas_centroid(canvas: &Canvas) -> (f64, f64) {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for y in 0..canvas.side {
        for x in 0..canvas.side {
            if canvas.get(x, y) {
                sx += x as f64;
                sy += y as f64;
                n += 1;
            }
        }
    }
    (sx / n.max(1) as f64, sy / n.max(1) as f64)
}

/// Reflection asymmetry of an already-aligned mask about the horizontal
/// (`across_major = true`) or vertical line through its centroid.
pub fn reflection_asymmetry(mask: &BinaryMask, across_major: bool) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let side = mask.width().max(mask.height());
    let canvas = Canvas {
        side,
        data: (0..side * side)
            .map(|i| {
                let (x, y) = (i % side, i / side);
                x < mask.width() && y < mask.height() && mask.get(x, y)
            })
            .collect(),
    };
    let (cx, cy) = canvas_centroid(&canvas);
    let axis2 = if across_major {
        (2.0 * cy).round()
    } else {
        (2.0 * cx).round()
    } as i64;
    Ok(half_reflection_asymmetry(&canvas, axis2, across_major))
}

/// `(d_major, d_minor)` after aligning the principal axis horizontally.
pub fn axis_asymmetry(mask: &BinaryMask) -> Result<(f64, f64)> {
    let angle = principal_axis(mask)?;
    let canvas = rotate_to_axis(mask, angle);
    let (cx, cy) = canvas_centroid(&canvas);
    let d_major = half_reflection_asymmetry(&canvas, (2.0 * cy).round() as i64, true);
    let d_minor = half_reflection_asymmetry(&canvas, (2.0 * cx).round() as i64, false);
    Ok((d_major, d_minor))
}

/// Number of axes whose asymmetry strictly exceeds 0.15.
pub fn a_score(d_major: f64, d_minor: f64) -> u8 {
    (d_major > ASYMMETRY_THRESHOLD) as u8 + (d_minor > ASYMMETRY_THRESHOLD) as u8
}

pub fn asymmetry(mask: &BinaryMask) -> Result<AsymmetryResult> {
    let angle = principal_axis(mask)?;
    let (d_major, d_minor) = axis_asymmetry(mask)?;
    Ok(AsymmetryResult {
        angle,
        d_major,
        d_minor,
        a_score: a_score(d_major, d_minor),
    })
}

/// Unit direction of ray `k` (angle `k·45°`, y down).
pub fn ray_direction(k: usize) -> (f64, f64) {
    let t = k as f64 * PI / 4.0;
    (t.cos(), t.sin())
}

/// Farthest foreground pixel along each of the eight rays from the centroid.
pub fn radial_boundary_points(mask: &BinaryMask) -> Result<[(usize, usize); RAY_COUNT]> {
    let (cx, cy) = mask.centroid().ok_or(Error::EmptyMask)?;
    if !mask.get_signed(cx.round() as i64, cy.round() as i64) {
        return Err(Error::CentroidOutsideMask { x: cx, y: cy });
    }
    let limit = (mask.width() + mask.height()) as i64;
    let mut out = [(0, 0); RAY_COUNT];
    for (k, slot) in out.iter_mut().enumerate() {
        let (dx, dy) = ray_direction(k);
        let mut last = (cx.round() as usize, cy.round() as usize);
        for t in 0..=limit {
            let x = (cx + t as f64 * dx).round() as i64;
            let y = (cy + t as f64 * dy).round() as i64;
            if x < 0 || y < 0 || x >= mask.width() as i64 || y >= mask.height() as i64 {
                break;
            }
            if mask.get(x as usize, y as usize) {
                last = (x as usize, y as usize);
            }
        }
        *slot = last;
    }
    Ok(out)
}

/// Absolute difference between the mean of the samples at steps
/// `1..=5` inward (against `direction`) and outward from `point`.
/// Samples outside the image are skipped; an empty side yields 0.
pub fn segment_gradient(gray: &GrayImage, point: (usize, usize), direction: (f64, f64)) -> f64 {
    let mean_along = |sign: f64| -> Option<f64> {
        let (mut sum, mut n) = (0.0, 0usize);
        for s in 1..=BORDER_PATCH_LEN {
            let x = (point.0 as f64 + sign * s as f64 * direction.0).round() as i64;
            let y = (point.1 as f64 + sign * s as f64 * direction.1).round() as i64;
            if let Some(v) = gray.get_checked(x, y) {
                sum += v as f64;
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    };
    match (mean_along(-1.0), mean_along(1.0)) {
        (Some(inner), Some(outer)) => (inner - outer).abs(),
        _ => 0.0,
    }
}

/// Number of gradients strictly above 10.
pub fn b_score(gradients: &[f64; RAY_COUNT]) -> u8 {
    gradients.iter().filter(|&&g| g > BORDER_GRADIENT_THRESHOLD).count() as u8
}

pub fn border(gray: &GrayImage, mask: &BinaryMask) -> Result<BorderResult> {
    let points = radial_boundary_points(mask)?;
    let mut gradients = [0.0; RAY_COUNT];
    for (k, g) in gradients.iter_mut().enumerate() {
        *g = segment_gradient(gray, points[k], ray_direction(k));
    }
    Ok(BorderResult {
        center: mask.centroid().expect("non-empty"),
        points,
        gradients,
        b_score: b_score(&gradients),
    })
}
