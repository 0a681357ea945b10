//! Raster types, color conversion and the 3×3 noise-removal filters that
//! define the three preprocessing streams.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 8-bit raster with 1 (gray) or 3 (red, green, blue) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedChannels(channels));
        }
        if width == 0 || height == 0 || data.len() != width * height * channels {
            return Err(Error::InvalidDimensions {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds an RGB image by evaluating `f(x, y)` at every pixel.
    pub fn from_rgb_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            channels: 3,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Pixel as RGB; gray images replicate the single sample.
    #[inline]
    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * self.channels;
        if self.channels == 3 {
            [self.data[i], self.data[i + 1], self.data[i + 2]]
        } else {
            let v = self.data[i];
            [v, v, v]
        }
    }
}

impl From<GrayImage> for ImageBuffer {
    fn from(g: GrayImage) -> Self {
        Self {
            width: g.width,
            height: g.height,
            channels: 1,
            data: g.data,
        }
    }
}

/// Single-channel 8-bit luminance image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Sample at signed coordinates, `None` outside the image.
    #[inline]
    pub fn get_checked(&self, x: i64, y: i64) -> Option<u8> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            None
        } else {
            Some(self.get(x as usize, y as usize))
        }
    }

    /// Samples scaled to [0, 1].
    pub fn to_unit_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64 / 255.0).collect()
    }
}

/// CIELAB color (D65 white).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabPixel {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl LabPixel {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }

    #[inline]
    pub fn distance_sq(&self, other: &LabPixel) -> f64 {
        let dl = self.l - other.l;
        let da = self.a - other.a;
        let db = self.b - other.b;
        dl * dl + da * da + db * db
    }

    #[inline]
    pub fn distance(&self, other: &LabPixel) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

/// The three preprocessing streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterKind {
    #[serde(rename = "flat")]
    FlatAverage3,
    #[serde(rename = "gaussian")]
    Gaussian3Sigma1,
    #[serde(rename = "median")]
    Median3,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [
        FilterKind::Median3,
        FilterKind::Gaussian3Sigma1,
        FilterKind::FlatAverage3,
    ];

    /// Short stream name used on the command line and in reports.
    pub fn stream_name(self) -> &'static str {
        match self {
            FilterKind::FlatAverage3 => "flat",
            FilterKind::Gaussian3Sigma1 => "gaussian",
            FilterKind::Median3 => "median",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.stream_name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(FilterKind::FlatAverage3),
            "gaussian" => Ok(FilterKind::Gaussian3Sigma1),
            "median" => Ok(FilterKind::Median3),
            other => Err(Error::InvalidArgument(format!(
                "unknown stream '{other}' (expected median, gaussian or flat)"
            ))),
        }
    }
}

/// Luma conversion with weights 0.299/0.587/0.114; gray input passes through.
pub fn to_grayscale(img: &ImageBuffer) -> Result<GrayImage> {
    match img.channels {
        1 => Ok(GrayImage {
            width: img.width,
            height: img.height,
            data: img.data.clone(),
        }),
        3 => {
            let data = img.data.chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect();
            Ok(GrayImage {
                width: img.width,
                height: img.height,
                data,
            })
        }
        c => Err(Error::UnsupportedChannels(c)),
    }
}

#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
    y.round().clamp(0.0, 255.0) as u8
}

/// Normalized 3×3 Gaussian kernel with σ = 1, indexed `[dy + 1][dx + 1]`.
pub fn gaussian_kernel_3x3() -> [[f64; 3]; 3] {
    let mut k = [[0.0; 3]; 3];
    let mut sum = 0.0;
    for (dy, row) in k.iter_mut().enumerate() {
        for (dx, w) in row.iter_mut().enumerate() {
            let (fx, fy) = (dx as f64 - 1.0, dy as f64 - 1.0);
            *w = (-(fx * fx + fy * fy) / 2.0).exp();
            sum += *w;
        }
    }
    for row in k.iter_mut() {
        for w in row.iter_mut() {
            *w /= sum;
        }
    }
    k
}

/// Uniform 3×3 kernel.
pub fn flat_kernel_3x3() -> [[f64; 3]; 3] {
    [[1.0 / 9.0; 3]; 3]
}

/// Images that the preprocessing filters can be applied to.
pub trait Filterable: Sized {
    fn apply_filter(&self, kind: FilterKind) -> Self;
}

impl Filterable for GrayImage {
    fn apply_filter(&self, kind: FilterKind) -> Self {
        let mut out = vec![0u8; self.data.len()];
        filter_plane(&self.data, self.width, self.height, 1, 0, kind, &mut out);
        GrayImage {
            width: self.width,
            height: self.height,
            data: out,
        }
    }
}

impl Filterable for ImageBuffer {
    fn apply_filter(&self, kind: FilterKind) -> Self {
        let mut out = vec![0u8; self.data.len()];
        for c in 0..self.channels {
            filter_plane(&self.data, self.width, self.height, self.channels, c, kind, &mut out);
        }
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: out,
        }
    }
}

/// Applies one of the 3×3 stream filters with edge replication at the borders.
pub fn apply_filter<I: Filterable>(img: &I, kind: FilterKind) -> I {
    img.apply_filter(kind)
}

fn filter_plane(
    src: &[u8],
    width: usize,
    height: usize,
    stride: usize,
    channel: usize,
    kind: FilterKind,
    out: &mut [u8],
) {
    let at = |x: i64, y: i64| -> u8 {
        let cx = x.clamp(0, width as i64 - 1) as usize;
        let cy = y.clamp(0, height as i64 - 1) as usize;
        src[(cy * width + cx) * stride + channel]
    };
    let kernel = match kind {
        FilterKind::FlatAverage3 => Some(flat_kernel_3x3()),
        FilterKind::Gaussian3Sigma1 => Some(gaussian_kernel_3x3()),
        FilterKind::Median3 => None,
    };
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            let v = match &kernel {
                Some(k) => {
                    let mut acc = 0.0;
                    for dy in -1..=1 {
                        for dx in -1..=1 {
                            acc += k[(dy + 1) as usize][(dx + 1) as usize] * at(x + dx, y + dy) as f64;
                        }
                    }
                    acc.round().clamp(0.0, 255.0) as u8
                }
                None => {
                    let mut win = [0u8; 9];
                    let mut i = 0;
                    for dy in -1..=1 {
                        for dx in -1..=1 {
                            win[i] = at(x + dx, y + dy);
                            i += 1;
                        }
                    }
                    win.sort_unstable();
                    win[4]
                }
            };
            out[(y as usize * width + x as usize) * stride + channel] = v;
        }
    }
}

const D65: [f64; 3] = [0.95047, 1.0, 1.08883];

#[inline]
fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn linear_to_srgb(c: f64) -> u8 {
    let c = c.clamp(0.0, 1.0);
    let v = if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    };
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

const EPSILON: f64 = 216.0 / 24389.0; // (6/29)^3
const KAPPA: f64 = 24389.0 / 27.0;

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

#[inline]
fn lab_f_inv(f: f64) -> f64 {
    let t = f * f * f;
    if t > EPSILON {
        t
    } else {
        (116.0 * f - 16.0) / KAPPA
    }
}

/// sRGB → linear RGB → XYZ (D65) → CIELAB.
pub fn rgb_to_lab(r: u8, g: u8, b: u8) -> LabPixel {
    let (rl, gl, bl) = (srgb_to_linear(r), srgb_to_linear(g), srgb_to_linear(b));
    let x = 0.412_456_4 * rl + 0.357_576_1 * gl + 0.180_437_5 * bl;
    let y = 0.212_672_9 * rl + 0.715_152_2 * gl + 0.072_175_0 * bl;
    let z = 0.019_333_9 * rl + 0.119_192_0 * gl + 0.950_304_1 * bl;
    let fx = lab_f(x / D65[0]);
    let fy = lab_f(y / D65[1]);
    let fz = lab_f(z / D65[2]);
    LabPixel {
        l: (116.0 * fy - 16.0).clamp(0.0, 100.0),
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// Inverse of [`rgb_to_lab`], clamped into the sRGB gamut. Used for swatches.
pub fn lab_to_rgb(lab: LabPixel) -> [u8; 3] {
    let fy = (lab.l + 16.0) / 116.0;
    let fx = fy + lab.a / 500.0;
    let fz = fy - lab.b / 200.0;
    let x = lab_f_inv(fx) * D65[0];
    let y = lab_f_inv(fy) * D65[1];
    let z = lab_f_inv(fz) * D65[2];
    let rl = 3.240_454_2 * x - 1.537_138_5 * y - 0.498_531_4 * z;
    let gl = -0.969_266_0 * x + 1.876_010_8 * y + 0.041_556_0 * z;
    let bl = 0.055_643_4 * x - 0.204_025_9 * y + 1.057_225_2 * z;
    [linear_to_srgb(rl), linear_to_srgb(gl), linear_to_srgb(bl)]
}
