use serde::{Deserialize, Serialize};

use crate::image::GrayImage;
use crate::segmentation::BinaryMask;

use super::{chessboard_depth, gaussian_blur, DotsParams};

/// A dark blob found by the scale-normalized Laplacian of Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub x: usize,
    pub y: usize,
    pub sigma: f64,
    pub response: f64,
}

impl Blob {
    /// Approximate blob radius, `σ·√2`.
    pub fn radius(&self) -> f64 {
        self.sigma * std::f64::consts::SQRT_2
    }
}

/// `σ² ∇²(G_σ ∗ I)` on the unit-scaled image; positive over dark blobs.
fn scale_normalized_log(unit: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let g = gaussian_blur(unit, w, h, sigma);
    let at = |x: i64, y: i64| g[(y.clamp(0, h as i64 - 1) as usize) * w + x.clamp(0, w as i64 - 1) as usize];
    let s2 = sigma * sigma;
    let mut out = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let lap = at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4.0 * at(x, y);
            out[y as usize * w + x as usize] = s2 * lap;
        }
    }
    out
}

/// Multi-scale LoG blobs inside the mask interior, strongest first, after
/// suppressing weaker blobs that overlap a stronger one.
pub fn detect_blobs(gray: &GrayImage, mask: &BinaryMask, params: &DotsParams) -> Vec<Blob> {
    let (w, h) = (gray.width(), gray.height());
    if params.sigmas.is_empty() {
        return Vec::new();
    }
    let unit = gray.to_unit_f64();
    let stack: Vec<Vec<f64>> = params
        .sigmas
        .iter()
        .map(|&s| scale_normalized_log(&unit, w, h, s))
        .collect();
    let depth = chessboard_depth(mask);

    let mut candidates = Vec::new();
    for (si, &sigma) in params.sigmas.iter().enumerate() {
        let min_depth = (params.interior_margin * sigma).ceil() as u32;
        let layer = &stack[si];
        for y in 1..h.saturating_sub(1) {
            for x in 1..w.saturating_sub(1) {
                let i = y * w + x;
                let v = layer[i];
                if v < params.response_threshold || depth[i] < min_depth.max(1) {
                    continue;
                }
                let lo = si.saturating_sub(1);
                let hi = (si + 1).min(stack.len() - 1);
                let is_max =
                    (lo..=hi).all(|sj| (y - 1..=y + 1).all(|ny| (x - 1..=x + 1).all(|nx| stack[sj][ny * w + nx] <= v)));
                if is_max {
                    candidates.push(Blob {
                        x,
                        y,
                        sigma,
                        response: v,
                    });
                }
            }
        }
    }

    candidates.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then(a.sigma.total_cmp(&b.sigma))
            .then((a.y, a.x).cmp(&(b.y, b.x)))
    });
    let mut kept: Vec<Blob> = Vec::new();
    for c in candidates {
        let overlaps = kept.iter().any(|k| {
            let d = ((k.x as f64 - c.x as f64).powi(2) + (k.y as f64 - c.y as f64).powi(2)).sqrt();
            d < k.radius().max(c.radius())
        });
        if !overlaps {
            kept.push(c);
        }
    }
    kept
}

/// Dots/globules present when at least `min_count` blobs are found.
pub fn dots_globules_present(gray: &GrayImage, mask: &BinaryMask, params: &DotsParams) -> bool {
    detect_blobs(gray, mask, params).len() >= params.min_count
}
