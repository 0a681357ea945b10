//! Lesion segmentation: Otsu threshold on the blurred grayscale image,
//! morphological cleanup, and isolation of the largest component.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::image::{apply_filter, FilterKind, GrayImage};

/// Smallest image side accepted by [`segment_lesion`].
pub const MIN_SEGMENT_SIDE: usize = 32;
/// Masks covering more than this fraction of the image are treated as failures.
pub const MAX_COVERAGE: f64 = 0.95;

/// Per-pixel lesion membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    /// Membership at signed coordinates; outside the image is background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height && self.get(x as usize, y as usize)
    }

    pub fn area(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    pub fn coverage(&self) -> f64 {
        self.area() as f64 / self.data.len() as f64
    }

    /// Foreground coordinates in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    /// Mean foreground coordinate `(x, y)`, `None` for an empty mask.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for (x, y) in self.points() {
            sx += x as f64;
            sy += y as f64;
            n += 1;
        }
        (n > 0).then(|| (sx / n as f64, sy / n as f64))
    }

    /// Foreground pixel with at least one background (or out-of-image) 8-neighbor.
    pub fn is_boundary(&self, x: usize, y: usize) -> bool {
        if !self.get(x, y) {
            return false;
        }
        let (x, y) = (x as i64, y as i64);
        for dy in -1..=1 {
            for dx in -1..=1 {
                if (dx != 0 || dy != 0) && !self.get_signed(x + dx, y + dy) {
                    return true;
                }
            }
        }
        false
    }

    pub fn intersection_count(&self, other: &BinaryMask) -> usize {
        self.data.iter().zip(&other.data).filter(|(a, b)| **a && **b).count()
    }

    /// Intersection over union; two empty masks count as identical.
    pub fn iou(&self, other: &BinaryMask) -> f64 {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let inter = self.intersection_count(other);
        let union = self.data.iter().zip(&other.data).filter(|(a, b)| **a || **b).count();
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Mask as 0/255 samples.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| if self.get(x, y) { 255 } else { 0 })
    }

    /// Pixels above 127 become foreground.
    pub fn from_gray(img: &GrayImage) -> Self {
        Self::from_fn(img.width(), img.height(), |x, y| img.get(x, y) > 127)
    }

    pub fn invert(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| !v).collect(),
        }
    }
}

/// A labelled 8-connected foreground component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub area: usize,
    /// Top-left corner of the bounding box as `(row, col)`.
    pub top_left: (usize, usize),
    pub pixels: Vec<usize>,
}

/// 8-connected components in order of their first pixel (row-major).
pub fn connected_components(mask: &BinaryMask) -> Vec<Component> {
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut comps = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.data[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        let (mut min_row, mut min_col) = (usize::MAX, usize::MAX);
        while let Some(i) = queue.pop_front() {
            pixels.push(i);
            let (x, y) = (i % w, i / w);
            min_row = min_row.min(y);
            min_col = min_col.min(x);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.data[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        pixels.sort_unstable();
        comps.push(Component {
            area: pixels.len(),
            top_left: (min_row, min_col),
            pixels,
        });
    }
    comps
}

/// Otsu threshold over the 256-bin histogram. Foreground is `pixel <= t`.
///
/// Returns the smallest `t` maximizing the between-class variance among
/// thresholds that leave both classes non-empty; a single-intensity image
/// returns that intensity.
pub fn otsu_threshold(img: &GrayImage) -> u8 {
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(i, &c)| i as u64 * c).sum();

    let mut best: Option<(u8, BetweenClass)> = None;
    let (mut n0, mut s0) = (0u64, 0u64);
    for (t, &count) in hist.iter().enumerate().take(255) {
        n0 += count;
        s0 += t as u64 * count;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let score = BetweenClass::new(total, total_sum, n0, s0);
        match &best {
            Some((_, b)) if !score.greater_than(b) => {}
            _ => best = Some((t as u8, score)),
        }
    }
    match best {
        Some((t, _)) => t,
        None => img.data()[0],
    }
}

/// Between-class variance kept as the exact fraction
/// `(N·S0 − n0·S)² / (n0·n1)` (a positive multiple of σ_B²).
#[derive(Debug, Clone, Copy)]
struct BetweenClass {
    num: u128,
    den: u128,
}

impl BetweenClass {
    fn new(total: u64, total_sum: u64, n0: u64, s0: u64) -> Self {
        let a = total as i128 * s0 as i128 - n0 as i128 * total_sum as i128;
        let diff = a.unsigned_abs();
        Self {
            num: diff * diff,
            den: n0 as u128 * (total - n0) as u128,
        }
    }

    fn greater_than(&self, other: &Self) -> bool {
        match (self.num.checked_mul(other.den), other.num.checked_mul(self.den)) {
            (Some(l), Some(r)) => l > r,
            _ => (self.num as f64 / self.den as f64) > (other.num as f64 / other.den as f64),
        }
    }
}

/// Offsets of the 5×5 elliptical structuring element.
pub fn ellipse_5x5() -> Vec<(i64, i64)> {
    const ROWS: [&str; 5] = ["..#..", "#####", "#####", "#####", "..#.."];
    let mut out = Vec::new();
    for (dy, row) in ROWS.iter().enumerate() {
        for (dx, c) in row.chars().enumerate() {
            if c == '#' {
                out.push((dx as i64 - 2, dy as i64 - 2));
            }
        }
    }
    out
}

/// Erosion; neighbors outside the image are ignored.
pub fn erode(mask: &BinaryMask, element: &[(i64, i64)]) -> BinaryMask {
    morph(mask, element, true)
}

/// Dilation; neighbors outside the image are ignored.
pub fn dilate(mask: &BinaryMask, element: &[(i64, i64)]) -> BinaryMask {
    morph(mask, element, false)
}

fn morph(mask: &BinaryMask, element: &[(i64, i64)], erode: bool) -> BinaryMask {
    let (w, h) = (mask.width as i64, mask.height as i64);
    BinaryMask::from_fn(mask.width, mask.height, |x, y| {
        let mut any = false;
        let mut all = true;
        for &(dx, dy) in element {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                continue;
            }
            let v = mask.get(nx as usize, ny as usize);
            any |= v;
            all &= v;
        }
        if erode {
            all
        } else {
            any
        }
    })
}

pub fn opening(mask: &BinaryMask, element: &[(i64, i64)]) -> BinaryMask {
    dilate(&erode(mask, element), element)
}

pub fn closing(mask: &BinaryMask, element: &[(i64, i64)]) -> BinaryMask {
    erode(&dilate(mask, element), element)
}

/// Background regions not 4-connected to the image border become foreground.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            let on_border = x == 0 || y == 0 || x + 1 == w || y + 1 == h;
            let i = y * w + x;
            if on_border && !mask.data[i] {
                outside[i] = true;
                queue.push_back(i);
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let mut visit = |j: usize| {
            if !mask.data[j] && !outside[j] {
                outside[j] = true;
                queue.push_back(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < w {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - w);
        }
        if y + 1 < h {
            visit(i + w);
        }
    }
    BinaryMask {
        width: w,
        height: h,
        data: outside.iter().map(|o| !o).collect(),
    }
}

/// Opening then closing with the 5×5 ellipse, then hole filling.
pub fn morph_clean(mask: &BinaryMask) -> BinaryMask {
    let se = ellipse_5x5();
    fill_holes(&closing(&opening(mask, &se), &se))
}

/// Keeps only the largest 8-connected component, hole-filled. Equal areas
/// are resolved in favor of the bounding box that starts first (row-major).
pub fn largest_component_fill(mask: &BinaryMask) -> Result<BinaryMask> {
    let comps = connected_components(mask);
    let best = comps
        .iter()
        .min_by(|a, b| b.area.cmp(&a.area).then(a.top_left.cmp(&b.top_left)))
        .ok_or(Error::EmptyMask)?;
    let mut out = BinaryMask::new(mask.width, mask.height);
    for &i in &best.pixels {
        out.data[i] = true;
    }
    Ok(fill_holes(&out))
}

/// Full segmentation: σ=1 Gaussian blur, Otsu (dark foreground),
/// morphological cleanup, largest component.
pub fn segment_lesion(img: &GrayImage) -> Result<BinaryMask> {
    if img.width() < MIN_SEGMENT_SIDE || img.height() < MIN_SEGMENT_SIDE {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min: MIN_SEGMENT_SIDE,
        });
    }
    let blurred = apply_filter(img, FilterKind::Gaussian3Sigma1);
    let t = otsu_threshold(&blurred);
    let raw = BinaryMask::from_fn(img.width(), img.height(), |x, y| blurred.get(x, y) <= t);
    let cleaned = morph_clean(&raw);
    let mask =
        largest_component_fill(&cleaned).map_err(|_| Error::DegenerateMask("no foreground after cleanup".into()))?;
    let coverage = mask.coverage();
    if coverage > MAX_COVERAGE {
        return Err(Error::DegenerateMask(format!(
            "mask covers {:.1}% of the image",
            coverage * 100.0
        )));
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(w: usize, h: usize, x0: usize, y0: usize, side: usize) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| x >= x0 && x < x0 + side && y >= y0 && y < y0 + side)
    }

    fn disk_image(w: usize, h: usize, cx: f64, cy: f64, r: f64, fg: u8, bg: u8) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= r * r {
                fg
            } else {
                bg
            }
        })
    }

    fn disk_mask(w: usize, h: usize, cx: f64, cy: f64, r: f64) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            dx * dx + dy * dy <= r * r
        })
    }

    #[test]
    fn otsu_bimodal_returns_smallest_maximizer() {
        let img = GrayImage::from_fn(16, 16, |x, _| if x < 8 { 0 } else { 255 });
        assert_eq!(otsu_threshold(&img), 0);
    }

    #[test]
    fn otsu_constant_image() {
        assert_eq!(otsu_threshold(&GrayImage::filled(10, 10, 9)), 9);
    }

    #[test]
    fn otsu_separates_two_levels() {
        let img = GrayImage::from_fn(20, 20, |x, _| if x < 5 { 40 } else { 180 });
        let t = otsu_threshold(&img);
        assert!((40..180).contains(&t));
    }

    #[test]
    fn structuring_element_shape() {
        let se = ellipse_5x5();
        assert_eq!(se.len(), 17);
        assert!(se.contains(&(0, -2)) && se.contains(&(-2, 0)) && !se.contains(&(-2, -2)));
    }

    #[test]
    fn morph_clean_all_background() {
        let m = BinaryMask::new(30, 30);
        assert_eq!(morph_clean(&m), m);
    }

    #[test]
    fn morph_clean_fills_interior_hole() {
        let mut m = square(40, 40, 10, 10, 20);
        m.set(20, 20, false);
        let cleaned = morph_clean(&m);
        assert!(cleaned.get(20, 20));
        // the ellipse's top and bottom rows are a single pixel, so no
        // placement inside the square reaches the two outermost pixels of
        // the first and last rows
        let want = BinaryMask::from_fn(40, 40, |x, y| {
            let inside = (10..30).contains(&x) && (10..30).contains(&y);
            let dx = (x as i64 - 10).min(29 - x as i64);
            let dy = (y as i64 - 10).min(29 - y as i64);
            inside && !(dy == 0 && dx < 2)
        });
        assert_eq!(cleaned, want);
    }

    #[test]
    fn morph_clean_removes_isolated_pixel() {
        let mut m = BinaryMask::new(50, 50);
        m.set(25, 25, true);
        assert!(morph_clean(&m).is_empty());
    }

    #[test]
    fn largest_component_wins() {
        let mut m = square(40, 40, 2, 2, 3);
        for (x, y) in square(40, 40, 20, 20, 5).points().collect::<Vec<_>>() {
            m.set(x, y, true);
        }
        let out = largest_component_fill(&m).unwrap();
        assert_eq!(out, square(40, 40, 20, 20, 5));
    }

    #[test]
    fn single_component_unchanged() {
        let m = disk_mask(40, 40, 20.0, 20.0, 8.0);
        assert_eq!(largest_component_fill(&m).unwrap(), m);
    }

    #[test]
    fn equal_components_tie_break_by_bounding_box() {
        // Same area; the second square starts on an earlier row.
        let mut m = square(40, 40, 1, 20, 4);
        for (x, y) in square(40, 40, 30, 5, 4).points().collect::<Vec<_>>() {
            m.set(x, y, true);
        }
        // Oracle: enumerate components, pick min (row, col) among max area.
        let comps = connected_components(&m);
        let max_area = comps.iter().map(|c| c.area).max().unwrap();
        let expected = comps
            .iter()
            .filter(|c| c.area == max_area)
            .map(|c| c.top_left)
            .min()
            .unwrap();
        assert_eq!(expected, (5, 30));
        assert_eq!(largest_component_fill(&m).unwrap(), square(40, 40, 30, 5, 4));
    }

    #[test]
    fn empty_mask_errors() {
        assert_eq!(largest_component_fill(&BinaryMask::new(5, 5)), Err(Error::EmptyMask));
    }

    #[test]
    fn segments_dark_disk() {
        let img = disk_image(256, 256, 128.0, 128.0, 50.0, 60, 200);
        let mask = segment_lesion(&img).unwrap();
        let truth = disk_mask(256, 256, 128.0, 128.0, 50.0);
        assert!(mask.iou(&truth) >= 0.95, "iou {}", mask.iou(&truth));
        assert_eq!(connected_components(&mask).len(), 1);
        assert_eq!(fill_holes(&mask), mask);
    }

    #[test]
    fn segments_disk_with_hairlines() {
        let mut img = disk_image(256, 256, 128.0, 128.0, 50.0, 60, 200);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (x0, y0) = (rng.gen_range(0.0..256.0), rng.gen_range(0.0..256.0));
            let ang: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            for s in -120..120 {
                let x = (x0 + s as f64 * ang.cos()).round() as i64;
                let y = (y0 + s as f64 * ang.sin()).round() as i64;
                if (0..256).contains(&x) && (0..256).contains(&y) {
                    img.set(x as usize, y as usize, 235);
                }
            }
        }
        let mask = segment_lesion(&img).unwrap();
        let truth = disk_mask(256, 256, 128.0, 128.0, 50.0);
        assert!(mask.iou(&truth) >= 0.90, "iou {}", mask.iou(&truth));
    }

    #[test]
    fn constant_image_is_degenerate() {
        assert!(matches!(
            segment_lesion(&GrayImage::filled(64, 64, 120)),
            Err(Error::DegenerateMask(_))
        ));
    }

    #[test]
    fn inverted_polarity_fails() {
        let img = disk_image(128, 128, 64.0, 64.0, 30.0, 200, 60);
        assert!(matches!(segment_lesion(&img), Err(Error::DegenerateMask(_))));
    }

    #[test]
    fn small_image_rejected() {
        assert!(matches!(
            segment_lesion(&GrayImage::filled(16, 64, 0)),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn mask_follows_translation() {
        let a = segment_lesion(&disk_image(128, 128, 60.0, 62.0, 25.0, 50, 210)).unwrap();
        let b = segment_lesion(&disk_image(128, 128, 67.0, 66.0, 25.0, 50, 210)).unwrap();
        for y in 10..110 {
            for x in 10..110 {
                assert_eq!(a.get(x, y), b.get(x + 7, y + 4));
            }
        }
    }
}
