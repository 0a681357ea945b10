use crate::image::GrayImage;
use crate::segmentation::BinaryMask;

use super::NetworkParams;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDetail {
    pub dark: BinaryMask,
    pub skeleton: BinaryMask,
    pub branch_points: Vec<(usize, usize)>,
}

/// Mask pixels darker than the mean of the in-mask pixels of their
/// `window × window` neighborhood minus `offset`.
pub fn dark_pixels(gray: &GrayImage, mask: &BinaryMask, window: usize, offset: f64) -> BinaryMask {
    let (w, h) = (gray.width(), gray.height());
    let stride = w + 1;
    let mut sum = vec![0u64; stride * (h + 1)];
    let mut cnt = vec![0u64; stride * (h + 1)];
    for y in 1..=h {
        let (mut rs, mut rc) = (0u64, 0u64);
        for x in 1..=w {
            if mask.get(x - 1, y - 1) {
                rs += gray.get(x - 1, y - 1) as u64;
                rc += 1;
            }
            sum[y * stride + x] = sum[(y - 1) * stride + x] + rs;
            cnt[y * stride + x] = cnt[(y - 1) * stride + x] + rc;
        }
    }
    let boxed = |t: &[u64], x0: usize, y0: usize, x1: usize, y1: usize| {
        t[y1 * stride + x1] + t[y0 * stride + x0] - t[y0 * stride + x1] - t[y1 * stride + x0]
    };
    let r = window / 2;
    BinaryMask::from_fn(w, h, |x, y| {
        if !mask.get(x, y) {
            return false;
        }
        let (x0, y0) = (x.saturating_sub(r), y.saturating_sub(r));
        let (x1, y1) = ((x + r + 1).min(w), (y + r + 1).min(h));
        let n = boxed(&cnt, x0, y0, x1, y1);
        let mean = boxed(&sum, x0, y0, x1, y1) as f64 / n as f64;
        (gray.get(x, y) as f64) < mean - offset
    })
}

/// Clockwise 8-neighborhood starting north: P2..P9.
const RING: [(i64, i64); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

/// Zhang–Suen iterative thinning to one-pixel-wide, connectivity-preserving lines.
pub fn skeletonize(mask: &BinaryMask) -> BinaryMask {
    let mut img = mask.clone();
    let (w, h) = (mask.width(), mask.height());
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut remove = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if !img.get(x, y) {
                        continue;
                    }
                    let p: [bool; 8] = RING.map(|(dx, dy)| img.get_signed(x as i64 + dx, y as i64 + dy));
                    let b = p.iter().filter(|&&v| v).count();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
                    if a != 1 {
                        continue;
                    }
                    // p[0]=N(P2), p[2]=E(P4), p[4]=S(P6), p[6]=W(P8)
                    let ok = if pass == 0 {
                        !(p[0] && p[2] && p[4]) && !(p[2] && p[4] && p[6])
                    } else {
                        !(p[0] && p[2] && p[6]) && !(p[0] && p[4] && p[6])
                    };
                    if ok {
                        remove.push((x, y));
                    }
                }
            }
            changed |= !remove.is_empty();
            for (x, y) in remove {
                img.set(x, y, false);
            }
        }
        if !changed {
            return img;
        }
    }
}

/// Skeleton pixels with three or more skeleton 8-neighbors.
pub fn branch_points(skeleton: &BinaryMask) -> Vec<(usize, usize)> {
    skeleton
        .points()
        .filter(|&(x, y)| {
            RING.iter()
                .filter(|(dx, dy)| skeleton.get_signed(x as i64 + dx, y as i64 + dy))
                .count()
                >= 3
        })
        .collect()
}

pub(crate) fn network_detail(gray: &GrayImage, mask: &BinaryMask, params: &NetworkParams) -> NetworkDetail {
    let dark = dark_pixels(gray, mask, params.window, params.offset);
    let skeleton = skeletonize(&dark);
    let branch_points = branch_points(&skeleton);
    NetworkDetail {
        dark,
        skeleton,
        branch_points,
    }
}

/// Pigment network present when branch points strictly exceed the threshold.
pub fn pigment_network_present(gray: &GrayImage, mask: &BinaryMask, params: &NetworkParams) -> bool {
    network_detail(gray, mask, params).branch_points.len() > params.min_branch_points
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lesion(w: usize, h: usize) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| {
            let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
            (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= (0.45 * w as f64).powi(2)
        })
    }

    #[test]
    fn uniform_lesion_has_no_network() {
        let g = GrayImage::filled(120, 120, 110);
        let m = lesion(120, 120);
        let d = network_detail(&g, &m, &NetworkParams::default());
        assert!(d.dark.is_empty());
        assert!(!pigment_network_present(&g, &m, &NetworkParams::default()));
    }

    #[test]
    fn straight_line_has_no_branches() {
        let g = GrayImage::from_fn(120, 120, |_, y| if (58..61).contains(&y) { 40 } else { 120 });
        let m = lesion(120, 120);
        let d = network_detail(&g, &m, &NetworkParams::default());
        assert!(!d.dark.is_empty());
        assert!(d.branch_points.is_empty(), "{:?}", d.branch_points);
    }

    #[test]
    fn grid_network_detected() {
        // dark 2-px lines every 12 px; junction count inside the lesion
        // is well above 20
        let g = GrayImage::from_fn(160, 160, |x, y| if x % 12 < 2 || y % 12 < 2 { 50 } else { 130 });
        let m = lesion(160, 160);
        let junctions = (0..160)
            .step_by(12)
            .flat_map(|y| (0..160).step_by(12).map(move |x| (x, y)))
            .filter(|&(x, y)| m.get(x, y))
            .count();
        assert!(junctions > 20);
        let d = network_detail(&g, &m, &NetworkParams::default());
        assert!(d.branch_points.len() > 20, "{}", d.branch_points.len());
        assert!(pigment_network_present(&g, &m, &NetworkParams::default()));
    }

    #[test]
    fn skeleton_of_thick_bar_is_thin() {
        let m = BinaryMask::from_fn(40, 20, |x, y| (5..35).contains(&x) && (6..13).contains(&y));
        let s = skeletonize(&m);
        assert!(!s.is_empty());
        for x in 0..40 {
            let col = (0..20).filter(|&y| s.get(x, y)).count();
            assert!(col <= 1, "column {x} has {col} pixels");
        }
    }
}
