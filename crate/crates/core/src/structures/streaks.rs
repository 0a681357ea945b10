use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::image::GrayImage;
use crate::segmentation::BinaryMask;

use super::{gaussian_blur, StreakParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSegment {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl LineSegment {
    pub fn length(&self) -> f64 {
        ((self.x1 as f64 - self.x0 as f64).powi(2) + (self.y1 as f64 - self.y0 as f64).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreakDetail {
    /// Edge pixels that took part in the line search.
    pub edges: BinaryMask,
    pub segments: Vec<LineSegment>,
}

/// 3×3 Sobel derivatives with edge replication.
fn sobel(src: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let at = |x: i64, y: i64| src[(y.clamp(0, h as i64 - 1) as usize) * w + x.clamp(0, w as i64 - 1) as usize];
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let i = y as usize * w + x as usize;
            gx[i] = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            gy[i] = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
        }
    }
    (gx, gy)
}

struct CannyOutput {
    edges: BinaryMask,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

fn canny_full(gray: &GrayImage, low: f64, high: f64) -> CannyOutput {
    let (w, h) = (gray.width(), gray.height());
    let src: Vec<f64> = gray.data().iter().map(|&v| v as f64).collect();
    let (gx, gy) = sobel(&src, w, h);
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    let m = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    // non-maximum suppression along the quantized gradient direction
    let mut thin = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let i = y as usize * w + x as usize;
            let v = mag[i];
            if v <= low {
                continue;
            }
            let angle = gy[i].atan2(gx[i]).to_degrees().rem_euclid(180.0);
            let (dx, dy) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            if v > m(x - dx, y - dy) && v >= m(x + dx, y + dy) {
                thin[i] = v;
            }
        }
    }

    // hysteresis: weak pixels survive when 8-connected to a strong one
    let mut edges = BinaryMask::new(w, h);
    let mut queue = VecDeque::new();
    for (i, &v) in thin.iter().enumerate() {
        if v > high {
            edges.set(i % w, i / w, true);
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if thin[j] > low && !edges.get(nx as usize, ny as usize) {
                    edges.set(nx as usize, ny as usize, true);
                    queue.push_back(j);
                }
            }
        }
    }
    CannyOutput { edges, gx, gy }
}

/// Canny edge map: 3×3 Sobel, non-maximum suppression, hysteresis.
pub fn canny(gray: &GrayImage, low: f64, high: f64) -> BinaryMask {
    canny_full(gray, low, high).edges
}

/// Chessboard distance from every pixel to the nearest pixel of `target`;
/// `u32::MAX` when the target is empty.
fn distance_to(target: &BinaryMask) -> Vec<u32> {
    let (w, h) = (target.width(), target.height());
    let inf = u32::MAX / 2;
    let mut d: Vec<u32> = target.data().iter().map(|&v| if v { 0 } else { inf }).collect();
    for y in 0..h {
        for x in 0..w {
            let mut v = d[y * w + x];
            if x > 0 {
                v = v.min(d[y * w + x - 1] + 1);
            }
            if y > 0 {
                v = v.min(d[(y - 1) * w + x] + 1);
                if x > 0 {
                    v = v.min(d[(y - 1) * w + x - 1] + 1);
                }
                if x + 1 < w {
                    v = v.min(d[(y - 1) * w + x + 1] + 1);
                }
            }
            d[y * w + x] = v;
        }
    }
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let mut v = d[y * w + x];
            if x + 1 < w {
                v = v.min(d[y * w + x + 1] + 1);
            }
            if y + 1 < h {
                v = v.min(d[(y + 1) * w + x] + 1);
                if x + 1 < w {
                    v = v.min(d[(y + 1) * w + x + 1] + 1);
                }
                if x > 0 {
                    v = v.min(d[(y + 1) * w + x - 1] + 1);
                }
            }
            d[y * w + x] = v;
        }
    }
    d
}

/// Pixels within `radius` (chessboard) of the lesion boundary, on either side.
fn boundary_band(mask: &BinaryMask, radius: u32) -> BinaryMask {
    let to_bg = distance_to(&mask.invert());
    let to_fg = distance_to(mask);
    let w = mask.width();
    BinaryMask::from_fn(w, mask.height(), |x, y| {
        let i = y * w + x;
        if mask.get(x, y) {
            to_bg[i] <= radius
        } else {
            to_fg[i] <= radius
        }
    })
}

/// Probabilistic Hough transform: random-order voting with early line
/// extraction and removal of the supporting pixels.
pub fn probabilistic_hough(
    edges: &BinaryMask,
    rho_res: f64,
    theta_res: f64,
    threshold: usize,
    min_length: f64,
    max_gap: usize,
    seed: u64,
) -> Vec<LineSegment> {
    let (w, h) = (edges.width(), edges.height());
    let num_angle = ((std::f64::consts::PI / theta_res).round() as usize).max(1);
    let num_rho = (((w + h) * 2 + 1) as f64 / rho_res).round() as usize;
    let offset = (num_rho - 1) as f64 / 2.0;
    let trig: Vec<(f64, f64)> = (0..num_angle)
        .map(|n| {
            let t = n as f64 * theta_res;
            (t.cos() / rho_res, t.sin() / rho_res)
        })
        .collect();
    let rho_index = |x: usize, y: usize, n: usize| -> usize {
        let (c, s) = trig[n];
        ((x as f64 * c + y as f64 * s).round() + offset) as usize
    };

    let mut acc = vec![0i32; num_angle * num_rho];
    let mut live = edges.clone();
    let mut points: Vec<(usize, usize)> = edges.points().collect();
    points.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut segments = Vec::new();
    for &(px, py) in &points {
        if !live.get(px, py) {
            continue;
        }
        let mut best = (0usize, threshold as i32 - 1);
        for n in 0..num_angle {
            let cell = &mut acc[n * num_rho + rho_index(px, py, n)];
            *cell += 1;
            if *cell > best.1 {
                best = (n, *cell);
            }
        }
        if best.1 < threshold as i32 {
            continue;
        }

        // walk along the line in both directions, tolerating short gaps
        let theta = best.0 as f64 * theta_res;
        let (a, b) = (-theta.sin(), theta.cos());
        let (sx, sy) = if a.abs() > b.abs() {
            (a.signum(), b / a.abs())
        } else {
            (a / b.abs(), b.signum())
        };
        let at = |k: f64, t: i64| -> Option<(usize, usize)> {
            let x = (px as f64 + k * t as f64 * sx).round() as i64;
            let y = (py as f64 + k * t as f64 * sy).round() as i64;
            (x >= 0 && y >= 0 && x < w as i64 && y < h as i64).then_some((x as usize, y as usize))
        };
        let mut ends = [(px, py); 2];
        let mut reach = [0i64; 2];
        for (k, dir) in [1.0, -1.0].into_iter().enumerate() {
            let mut gap = 0;
            let mut t = 0i64;
            while let Some((x, y)) = at(dir, t) {
                if live.get(x, y) {
                    gap = 0;
                    ends[k] = (x, y);
                    reach[k] = t;
                } else {
                    gap += 1;
                    if gap > max_gap {
                        break;
                    }
                }
                t += 1;
            }
        }
        let span_x = (ends[1].0 as f64 - ends[0].0 as f64).abs();
        let span_y = (ends[1].1 as f64 - ends[0].1 as f64).abs();
        let good = span_x >= min_length || span_y >= min_length;

        for (k, dir) in [1.0, -1.0].into_iter().enumerate() {
            for t in 0..=reach[k] {
                let Some((x, y)) = at(dir, t) else { break };
                if live.get(x, y) {
                    if good {
                        for n in 0..num_angle {
                            acc[n * num_rho + rho_index(x, y, n)] -= 1;
                        }
                    }
                    live.set(x, y, false);
                }
            }
        }
        if good {
            segments.push(LineSegment {
                x0: ends[0].0,
                y0: ends[0].1,
                x1: ends[1].0,
                y1: ends[1].1,
            });
        }
    }
    segments
}

/// Canny edges in the boundary band, minus edges running along the mask
/// outline itself, fed to the probabilistic Hough transform.
pub(crate) fn streak_detail(gray: &GrayImage, mask: &BinaryMask, params: &StreakParams, seed: u64) -> StreakDetail {
    let (w, h) = (gray.width(), gray.height());
    let area = mask.area() as f64;
    let eq_diameter = 2.0 * (area / std::f64::consts::PI).sqrt();
    let band = boundary_band(mask, (params.band_fraction * eq_diameter).ceil() as u32);

    let canny = canny_full(gray, params.canny_low, params.canny_high);
    let mask_f: Vec<f64> = mask.data().iter().map(|&v| v as u8 as f64).collect();
    let (mx, my) = sobel(&gaussian_blur(&mask_f, w, h, 2.0), w, h);
    let cos_limit = params.contour_angle_deg.to_radians().cos();

    let edges = BinaryMask::from_fn(w, h, |x, y| {
        let i = y * w + x;
        if !canny.edges.get(x, y) || !band.get(x, y) {
            return false;
        }
        let (nx, ny) = (mx[i], my[i]);
        let mn = nx.hypot(ny);
        // 0.05 of the unit step's peak Sobel response marks the contour zone
        if mn < 0.05 {
            return true;
        }
        let g = canny.gx[i].hypot(canny.gy[i]);
        let cos = ((canny.gx[i] * nx + canny.gy[i] * ny) / (g * mn)).abs();
        cos < cos_limit
    });
    let segments = probabilistic_hough(
        &edges,
        params.rho_resolution,
        params.theta_resolution_deg.to_radians(),
        params.hough_threshold,
        params.min_length_fraction * eq_diameter,
        params.max_gap,
        seed,
    );
    StreakDetail { edges, segments }
}

/// Streaks present when more than `min_segments` line segments are found.
pub fn streaks_present(gray: &GrayImage, mask: &BinaryMask, params: &StreakParams, seed: u64) -> bool {
    streak_detail(gray, mask, params, seed).segments.len() > params.min_segments
}
