use crate::image::GrayImage;
use crate::segmentation::BinaryMask;

use super::{median, StructurelessParams};

/// Summed-area tables of values and squared values, one row/column padded.
struct Integral {
    w: usize,
    sum: Vec<u64>,
    sq: Vec<u64>,
}

impl Integral {
    fn new(gray: &GrayImage) -> Self {
        let (w, h) = (gray.width() + 1, gray.height() + 1);
        let mut sum = vec![0u64; w * h];
        let mut sq = vec![0u64; w * h];
        for y in 1..h {
            let (mut rs, mut rq) = (0u64, 0u64);
            for x in 1..w {
                let v = gray.get(x - 1, y - 1) as u64;
                rs += v;
                rq += v * v;
                sum[y * w + x] = sum[(y - 1) * w + x] + rs;
                sq[y * w + x] = sq[(y - 1) * w + x] + rq;
            }
        }
        Self { w, sum, sq }
    }

    /// Sums over the half-open box `[x0, x1) × [y0, y1)`.
    fn boxed(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> (u64, u64) {
        let at = |t: &[u64], x: usize, y: usize| t[y * self.w + x];
        let s = at(&self.sum, x1, y1) + at(&self.sum, x0, y0) - at(&self.sum, x0, y1) - at(&self.sum, x1, y0);
        let q = at(&self.sq, x1, y1) + at(&self.sq, x0, y0) - at(&self.sq, x0, y1) - at(&self.sq, x1, y0);
        (s, q)
    }
}

/// Population variance of the `window × window` neighborhood (clipped to
/// the image) at every mask pixel, in row-major mask order.
pub fn local_variances(gray: &GrayImage, mask: &BinaryMask, window: usize) -> Vec<f64> {
    let table = Integral::new(gray);
    let r = window / 2;
    let (w, h) = (gray.width(), gray.height());
    mask.points()
        .map(|(x, y)| {
            let (x0, y0) = (x.saturating_sub(r), y.saturating_sub(r));
            let (x1, y1) = ((x + r + 1).min(w), (y + r + 1).min(h));
            let n = ((x1 - x0) * (y1 - y0)) as u64;
            let (s, q) = table.boxed(x0, y0, x1, y1);
            // n·Σx² − (Σx)² is exact in integers
            (n * q - s * s) as f64 / (n * n) as f64
        })
        .collect()
}

/// Median local variance inside the mask strictly below the threshold.
pub fn structureless_present(gray: &GrayImage, mask: &BinaryMask, params: &StructurelessParams) -> bool {
    median(&local_variances(gray, mask, params.window)) < params.max_median_variance
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn full(w: usize, h: usize) -> BinaryMask {
        BinaryMask::from_fn(w, h, |_, _| true)
    }

    #[test]
    fn constant_lesion_is_structureless() {
        let g = GrayImage::filled(30, 30, 77);
        let p = StructurelessParams::default();
        assert!(structureless_present(&g, &full(30, 30), &p));
        assert!(local_variances(&g, &full(30, 30), 5).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_noise_is_not_structureless() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = GrayImage::from_fn(64, 64, |_, _| rng.gen());
        let v = local_variances(&g, &full(64, 64), 5);
        // population variance of U{0..255} is (256² − 1)/12 ≈ 5461
        let med = median(&v);
        assert!(med > 3000.0, "median variance {med}");
        assert!(!structureless_present(
            &g,
            &full(64, 64),
            &StructurelessParams::default()
        ));
    }

    #[test]
    fn checkerboard_is_not_structureless() {
        let g = GrayImage::from_fn(32, 32, |x, y| if (x + y) % 2 == 0 { 0 } else { 255 });
        assert!(!structureless_present(
            &g,
            &full(32, 32),
            &StructurelessParams::default()
        ));
    }

    #[test]
    fn variance_matches_direct_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = GrayImage::from_fn(12, 9, |_, _| rng.gen_range(0..40));
        let m = full(12, 9);
        let v = local_variances(&g, &m, 5);
        for (i, (x, y)) in m.points().enumerate() {
            let mut vals = Vec::new();
            for yy in y.saturating_sub(2)..(y + 3).min(9) {
                for xx in x.saturating_sub(2)..(x + 3).min(12) {
                    vals.push(g.get(xx, yy) as f64);
                }
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!((v[i] - var).abs() < 1e-9);
        }
    }

    #[test]
    fn offset_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let base: Vec<u8> = (0..40 * 40).map(|_| rng.gen_range(50..60)).collect();
        let a = GrayImage::new(40, 40, base.clone()).unwrap();
        let b = GrayImage::new(40, 40, base.iter().map(|v| v + 100).collect()).unwrap();
        let m = full(40, 40);
        assert_eq!(local_variances(&a, &m, 5), local_variances(&b, &m, 5));
    }
}
