//! Color diversity (C): K-Means over the lesion's LAB pixels, followed by
//! a significance filter and merging of near-identical cluster centers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{rgb_to_lab, ImageBuffer, LabPixel};
use crate::segmentation::BinaryMask;

pub const MAX_C_SCORE: u8 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorCluster {
    pub center: LabPixel,
    pub pixel_count: usize,
    /// `pixel_count` over the lesion area.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorResult {
    pub clusters: Vec<ColorCluster>,
    pub c_score: u8,
}

/// Color-stage tunables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ColorParams {
    pub k: usize,
    pub min_fraction: f64,
    pub merge_distance: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for ColorParams {
    fn default() -> Self {
        Self {
            k: 5,
            min_fraction: 0.05,
            merge_distance: 10.0,
            max_iterations: 100,
            tolerance: 1e-4,
        }
    }
}

/// Result of a K-Means run with its per-iteration objective.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansTrace {
    /// Non-empty clusters in center-index order.
    pub clusters: Vec<ColorCluster>,
    /// Sum of squared distances after each assignment step.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

fn distinct_count(pixels: &[LabPixel]) -> usize {
    let mut keys: Vec<[u64; 3]> = pixels
        .iter()
        .map(|p| [p.l.to_bits(), p.a.to_bits(), p.b.to_bits()])
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// k-means++ seeding driven by a ChaCha8 generator.
fn seed_centers(pixels: &[LabPixel], k: usize, rng: &mut ChaCha8Rng) -> Vec<LabPixel> {
    let mut centers = Vec::with_capacity(k);
    centers.push(pixels[rng.gen_range(0..pixels.len())]);
    let mut d2: Vec<f64> = pixels.iter().map(|p| p.distance_sq(&centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    if target < d {
                        chosen = Some(i);
                        break;
                    }
                    target -= d;
                }
            }
            // rounding can exhaust the walk; fall back to the last candidate
            chosen.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("total > 0"))
        } else {
            break;
        };
        let c = pixels[next];
        centers.push(c);
        for (d, p) in d2.iter_mut().zip(pixels) {
            *d = d.min(p.distance_sq(&c));
        }
    }
    centers
}

fn nearest(p: &LabPixel, centers: &[LabPixel]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = p.distance_sq(c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ seeding; see [`kmeans_lab`].
pub fn kmeans_lab_traced(pixels: &[LabPixel], k: usize, seed: u64, params: &ColorParams) -> Result<KMeansTrace> {
    if pixels.is_empty() {
        return Err(Error::InvalidArgument("k-means needs at least one pixel".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let k = k.min(distinct_count(pixels));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(pixels, k, &mut rng);
    let k = centers.len();
    let mut assign = vec![0usize; pixels.len()];
    let mut objective = Vec::new();
    let mut iterations = 0;

    loop {
        iterations += 1;
        let mut obj = 0.0;
        for (a, p) in assign.iter_mut().zip(pixels) {
            let (j, d) = nearest(p, &centers);
            *a = j;
            obj += d;
        }
        objective.push(obj);

        let mut sums = vec![[0.0f64; 3]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assign.iter().zip(pixels) {
            sums[a][0] += p.l;
            sums[a][1] += p.a;
            sums[a][2] += p.b;
            counts[a] += 1;
        }
        let mut moved: f64 = 0.0;
        let mut reseeded = false;
        for j in 0..k {
            let next = if counts[j] > 0 {
                let n = counts[j] as f64;
                LabPixel::new(sums[j][0] / n, sums[j][1] / n, sums[j][2] / n)
            } else {
                // re-seed at the pixel farthest from its own center
                reseeded = true;
                let far = assign
                    .iter()
                    .zip(pixels)
                    .enumerate()
                    .map(|(i, (&a, p))| (i, p.distance_sq(&centers[a])))
                    .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
                pixels[far.0]
            };
            moved = moved.max(next.distance(&centers[j]));
            centers[j] = next;
        }
        if (!reseeded && moved < params.tolerance) || iterations >= params.max_iterations {
            break;
        }
    }

    // final assignment against the settled centers
    let mut counts = vec![0usize; k];
    for p in pixels {
        counts[nearest(p, &centers).0] += 1;
    }
    let total = pixels.len() as f64;
    let clusters = centers
        .into_iter()
        .zip(counts)
        .filter(|(_, n)| *n > 0)
        .map(|(center, n)| ColorCluster {
            center,
            pixel_count: n,
            fraction: n as f64 / total,
        })
        .collect();
    Ok(KMeansTrace {
        clusters,
        objective,
        iterations,
    })
}

/// Seeded deterministic K-Means in LAB. Empty clusters are dropped.
pub fn kmeans_lab(pixels: &[LabPixel], k: usize, seed: u64) -> Result<Vec<ColorCluster>> {
    kmeans_lab_traced(pixels, k, seed, &ColorParams::default()).map(|t| t.clusters)
}

/// Clusters covering at least `min_fraction` of the lesion.
pub fn significant_clusters(clusters: &[ColorCluster], min_fraction: f64) -> Vec<ColorCluster> {
    clusters
        .iter()
        .filter(|c| c.fraction >= min_fraction)
        .cloned()
        .collect()
}

/// Repeatedly merges the closest pair closer than `min_distance` into its
/// pixel-weighted mean until every pair is at least `min_distance` apart.
pub fn merge_close_clusters(clusters: &[ColorCluster], min_distance: f64) -> Vec<ColorCluster> {
    let mut out = clusters.to_vec();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                let d = out[i].center.distance(&out[j].center);
                if d < min_distance && best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        let Some((i, j, _)) = best else { break };
        let b = out.remove(j);
        let a = &mut out[i];
        let (na, nb) = (a.pixel_count as f64, b.pixel_count as f64);
        let n = na + nb;
        let w = |x: f64, y: f64| if n > 0.0 { (x * na + y * nb) / n } else { (x + y) / 2.0 };
        a.center = LabPixel::new(
            w(a.center.l, b.center.l),
            w(a.center.a, b.center.a),
            w(a.center.b, b.center.b),
        );
        a.pixel_count += b.pixel_count;
        a.fraction += b.fraction;
    }
    out
}

/// LAB values of the masked pixels in row-major order.
pub fn masked_lab_pixels(image: &ImageBuffer, mask: &BinaryMask) -> Vec<LabPixel> {
    mask.points()
        .map(|(x, y)| {
            let [r, g, b] = image.rgb(x, y);
            rgb_to_lab(r, g, b)
        })
        .collect()
}

pub fn c_score(image: &ImageBuffer, mask: &BinaryMask, seed: u64, params: &ColorParams) -> Result<ColorResult> {
    let pixels = masked_lab_pixels(image, mask);
    if pixels.is_empty() {
        return Err(Error::EmptyMask);
    }
    let clusters = kmeans_lab_traced(&pixels, params.k, seed, params)?.clusters;
    let kept = significant_clusters(&clusters, params.min_fraction);
    let merged = merge_close_clusters(&kept, params.merge_distance);
    let c_score = merged.len().clamp(1, MAX_C_SCORE as usize) as u8;
    Ok(ColorResult {
        clusters: merged,
        c_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cluster(l: f64, n: usize, total: usize) -> ColorCluster {
        ColorCluster {
            center: LabPixel::new(l, 0.0, 0.0),
            pixel_count: n,
            fraction: n as f64 / total as f64,
        }
    }

    fn two_groups() -> (Vec<LabPixel>, LabPixel, LabPixel) {
        let mut pixels = Vec::new();
        for i in 0..50 {
            let j = (i % 5) as f64 * 0.2;
            pixels.push(LabPixel::new(30.0 + j, 10.0 - j, 5.0));
            pixels.push(LabPixel::new(90.0 - j, 10.0 + j, 5.0));
        }
        let mean = |sel: &dyn Fn(&LabPixel) -> bool| {
            let g: Vec<_> = pixels.iter().filter(|p| sel(p)).collect();
            let n = g.len() as f64;
            LabPixel::new(
                g.iter().map(|p| p.l).sum::<f64>() / n,
                g.iter().map(|p| p.a).sum::<f64>() / n,
                g.iter().map(|p| p.b).sum::<f64>() / n,
            )
        };
        let lo = mean(&|p| p.l < 60.0);
        let hi = mean(&|p| p.l >= 60.0);
        (pixels, lo, hi)
    }

    #[test]
    fn identical_pixels_single_cluster() {
        let pixels = vec![LabPixel::new(40.0, 12.0, -3.0); 200];
        let c = kmeans_lab(&pixels, 5, 7).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].pixel_count, 200);
        assert_eq!(c[0].center, LabPixel::new(40.0, 12.0, -3.0));
    }

    #[test]
    fn two_groups_recovered() {
        let (pixels, lo, hi) = two_groups();
        assert!((lo.distance(&hi) - 60.0).abs() < 1.0);
        let mut c = kmeans_lab(&pixels, 2, 11).unwrap();
        c.sort_by(|a, b| a.center.l.total_cmp(&b.center.l));
        assert_eq!(c.len(), 2);
        assert!(c[0].center.distance(&lo) < 1.0);
        assert!(c[1].center.distance(&hi) < 1.0);
    }

    #[test]
    fn empty_input_errors() {
        assert!(kmeans_lab(&[], 5, 0).is_err());
    }

    #[test]
    fn significance_threshold_inclusive() {
        let c = [cluster(10.0, 90, 100), cluster(40.0, 6, 100), cluster(70.0, 4, 100)];
        assert_eq!(significant_clusters(&c, 0.05).len(), 2);
        let c = [cluster(10.0, 100, 100)];
        assert_eq!(significant_clusters(&c, 0.05).len(), 1);
        let c = [cluster(10.0, 5, 100), cluster(40.0, 95, 100)];
        assert_eq!(significant_clusters(&c, 0.05).len(), 2);
    }

    #[test]
    fn merge_two_close_centers() {
        let c = [cluster(50.0, 30, 40), cluster(55.0, 10, 40)];
        let m = merge_close_clusters(&c, 10.0);
        assert_eq!(m.len(), 1);
        assert!((m[0].center.l - 51.25).abs() < 1e-12);
        assert_eq!(m[0].pixel_count, 40);
        assert!((m[0].fraction - 1.0).abs() < 1e-12);
    }

    #[test]
    fn merge_leaves_distant_centers() {
        let c = [cluster(10.0, 1, 3), cluster(20.0, 1, 3), cluster(40.0, 1, 3)];
        assert_eq!(merge_close_clusters(&c, 10.0), c.to_vec());
    }

    #[test]
    fn merge_collinear_chain() {
        // Centers at L = 0, 6, 12. Equal distances: the lower-index pair
        // (0, 6) merges first.
        // Equal counts: merged center 3, 9 away from 12 → merges again.
        let c = [cluster(0.0, 10, 30), cluster(6.0, 10, 30), cluster(12.0, 10, 30)];
        let m = merge_close_clusters(&c, 10.0);
        assert_eq!(m.len(), 1);
        assert!((m[0].center.l - 6.0).abs() < 1e-12);
        // Heavy first cluster: merged center (0·90 + 6·10)/100 = 0.6,
        // 11.4 away from 12 → stops at two.
        let c = [cluster(0.0, 90, 110), cluster(6.0, 10, 110), cluster(12.0, 10, 110)];
        let m = merge_close_clusters(&c, 10.0);
        assert_eq!(m.len(), 2);
        assert!((m[0].center.l - 0.6).abs() < 1e-12);
        assert!((m[1].center.l - 12.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_lesion_scores_one() {
        let img = ImageBuffer::from_rgb_fn(40, 40, |_, _| [150, 90, 60]);
        let mask = BinaryMask::from_fn(40, 40, |x, y| (5..35).contains(&x) && (5..35).contains(&y));
        let r = c_score(&img, &mask, 1, &ColorParams::default()).unwrap();
        assert_eq!(r.c_score, 1);
    }

    #[test]
    fn two_region_lesion_scores_two() {
        let a = [120u8, 70, 40];
        let b = [60u8, 80, 140];
        let img = ImageBuffer::from_rgb_fn(60, 60, |x, _| if x < 30 { a } else { b });
        let mask = BinaryMask::from_fn(60, 60, |x, y| (5..55).contains(&x) && (5..55).contains(&y));
        let r = c_score(&img, &mask, 3, &ColorParams::default()).unwrap();
        assert_eq!(r.c_score, 2);
        let la = rgb_to_lab(a[0], a[1], a[2]);
        let lb = rgb_to_lab(b[0], b[1], b[2]);
        assert!(la.distance(&lb) >= 30.0);
        for c in &r.clusters {
            assert!(c.center.distance(&la) < 1e-6 || c.center.distance(&lb) < 1e-6);
        }
    }

    fn lab_strategy() -> impl Strategy<Value = Vec<LabPixel>> {
        proptest::collection::vec(
            (0.0..100.0f64, -60.0..60.0f64, -60.0..60.0f64).prop_map(|(l, a, b)| LabPixel::new(l, a, b)),
            1..120,
        )
    }

    proptest! {
        #[test]
        fn kmeans_is_deterministic_and_conserves_pixels(pixels in lab_strategy(), seed in 0u64..1000) {
            let a = kmeans_lab(&pixels, 5, seed).unwrap();
            let b = kmeans_lab(&pixels, 5, seed).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.iter().map(|c| c.pixel_count).sum::<usize>(), pixels.len());
            let merged = merge_close_clusters(&a, 10.0);
            prop_assert_eq!(merged.iter().map(|c| c.pixel_count).sum::<usize>(), pixels.len());
            for i in 0..merged.len() {
                for j in i + 1..merged.len() {
                    prop_assert!(merged[i].center.distance(&merged[j].center) >= 10.0);
                }
            }
            let fsum: f64 = a.iter().map(|c| c.fraction).sum();
            prop_assert!(fsum <= 1.0 + 1e-9);
        }

        #[test]
        fn kmeans_objective_nonincreasing(pixels in lab_strategy(), seed in 0u64..1000) {
            let t = kmeans_lab_traced(&pixels, 5, seed, &ColorParams::default()).unwrap();
            for w in t.objective.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-9, "{:?}", t.objective);
            }
        }
    }
}
