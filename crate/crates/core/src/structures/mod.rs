//! Dermoscopic structures (D): four independent binary detectors whose
//! flags are summed.

mod blobs;
mod network;
mod streaks;
mod structureless;

pub use blobs::{detect_blobs, dots_globules_present, Blob};
pub use network::{branch_points, pigment_network_present, skeletonize, NetworkDetail};
pub use streaks::{canny, probabilistic_hough, streaks_present, LineSegment, StreakDetail};
pub use structureless::{local_variances, structureless_present};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::segmentation::BinaryMask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StructurelessParams {
    /// Side of the square window for local variance.
    pub window: usize,
    /// Median local variance strictly below this marks the lesion structureless.
    pub max_median_variance: f64,
}

impl Default for StructurelessParams {
    fn default() -> Self {
        Self {
            window: 5,
            max_median_variance: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DotsParams {
    pub sigmas: Vec<f64>,
    /// Minimum scale-normalized LoG response on the [0, 1] image.
    pub response_threshold: f64,
    /// Blob centers must lie at least `interior_margin · σ` inside the mask.
    pub interior_margin: f64,
    pub min_count: usize,
}

impl Default for DotsParams {
    fn default() -> Self {
        Self {
            sigmas: vec![2.0, 3.0, 4.0, 6.0, 8.0],
            response_threshold: 0.08,
            interior_margin: 3.0,
            min_count: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkParams {
    /// Side of the local-mean window.
    pub window: usize,
    /// A pixel is dark when it is below the local mean minus this offset.
    pub offset: f64,
    /// Network present when branch points strictly exceed this count.
    pub min_branch_points: usize,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            window: 15,
            offset: 5.0,
            min_branch_points: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StreakParams {
    pub canny_low: f64,
    pub canny_high: f64,
    pub rho_resolution: f64,
    pub theta_resolution_deg: f64,
    pub hough_threshold: usize,
    /// Minimum segment length as a fraction of the mask's equivalent diameter.
    pub min_length_fraction: f64,
    pub max_gap: usize,
    /// Boundary band half-width as a fraction of the equivalent diameter.
    pub band_fraction: f64,
    /// Edges whose gradient is within this angle of the mask contour normal
    /// are treated as the lesion outline, not streaks.
    pub contour_angle_deg: f64,
    /// Streaks present when segments strictly exceed this count.
    pub min_segments: usize,
}

impl Default for StreakParams {
    fn default() -> Self {
        Self {
            canny_low: 50.0,
            canny_high: 150.0,
            rho_resolution: 1.0,
            theta_resolution_deg: 1.0,
            hough_threshold: 10,
            min_length_fraction: 0.10,
            max_gap: 3,
            band_fraction: 0.10,
            contour_angle_deg: 30.0,
            min_segments: 5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StructureParams {
    pub structureless: StructurelessParams,
    pub dots: DotsParams,
    pub network: NetworkParams,
    pub streaks: StreakParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuresResult {
    pub structureless: bool,
    pub dots_globules: bool,
    pub pigment_network: bool,
    pub streaks: bool,
    pub d_score: u8,
    pub median_local_variance: f64,
    pub blob_count: usize,
    pub branch_point_count: usize,
    pub segment_count: usize,
}

/// Detector outputs kept for overlays.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureDetail {
    pub blobs: Vec<Blob>,
    pub network: NetworkDetail,
    pub streaks: StreakDetail,
}

/// Sum of the four presence flags.
pub fn d_score(flags: [bool; 4]) -> u8 {
    flags.iter().filter(|&&f| f).count() as u8
}

pub fn structures(
    gray: &GrayImage,
    mask: &BinaryMask,
    params: &StructureParams,
    seed: u64,
) -> Result<(StructuresResult, StructureDetail)> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let variances = local_variances(gray, mask, params.structureless.window);
    let median = median(&variances);
    let structureless = median < params.structureless.max_median_variance;

    let blobs = detect_blobs(gray, mask, &params.dots);
    let dots_globules = blobs.len() >= params.dots.min_count;

    let network = network::network_detail(gray, mask, &params.network);
    let pigment_network = network.branch_points.len() > params.network.min_branch_points;

    let streak = streaks::streak_detail(gray, mask, &params.streaks, seed);
    let streaks = streak.segments.len() > params.streaks.min_segments;

    let flags = [structureless, dots_globules, pigment_network, streaks];
    Ok((
        StructuresResult {
            structureless,
            dots_globules,
            pigment_network,
            streaks,
            d_score: d_score(flags),
            median_local_variance: median,
            blob_count: blobs.len(),
            branch_point_count: network.branch_points.len(),
            segment_count: streak.segments.len(),
        },
        StructureDetail {
            blobs,
            network,
            streaks: streak,
        },
    ))
}

/// Median with the two middle values averaged for even lengths; 0 if empty.
pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Separable Gaussian blur of a row-major float plane with edge replication.
pub(crate) fn gaussian_blur(src: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= sum);

    let (w, h) = (width as i64, height as i64);
    let mut tmp = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let sx = (x + i as i64 - radius).clamp(0, w - 1);
                acc += k * src[(y * w + sx) as usize];
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let sy = (y + i as i64 - radius).clamp(0, h - 1);
                acc += k * tmp[(sy * w + x) as usize];
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    out
}

/// Chessboard distance from each foreground pixel to the nearest
/// background or out-of-image pixel (0 on background).
pub(crate) fn chessboard_depth(mask: &BinaryMask) -> Vec<u32> {
    let (w, h) = (mask.width(), mask.height());
    let mut d = vec![0u32; w * h];
    let big = (w + h) as u32;
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let mut v = big;
            if x == 0 || y == 0 {
                v = 1;
            } else {
                for (nx, ny) in [(x - 1, y - 1), (x, y - 1), (x - 1, y)] {
                    v = v.min(d[ny * w + nx] + 1);
                }
                if x + 1 < w {
                    v = v.min(d[(y - 1) * w + x + 1] + 1);
                } else {
                    v = 1;
                }
            }
            d[y * w + x] = v;
        }
    }
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            if !mask.get(x, y) {
                continue;
            }
            let mut v = d[y * w + x];
            if x + 1 == w || y + 1 == h {
                v = 1;
            } else {
                for (nx, ny) in [(x + 1, y + 1), (x, y + 1), (x + 1, y)] {
                    v = v.min(d[ny * w + nx] + 1);
                }
                if x > 0 {
                    v = v.min(d[(y + 1) * w + x - 1] + 1);
                } else {
                    v = 1;
                }
            }
            d[y * w + x] = v;
        }
    }
    d
}
