//! Seeded generators for synthetic datasets and per-trial random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};

use crate::transform::{Point2D, PointSet2D};

/// Independent generator for trial `stream` of an experiment seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a tag into a seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `n` copies of 0.5.
pub fn repeating_single_value(n: usize) -> Vec<f64> {
    vec![0.5; n]
}

/// `i / (n - 1)` for `i = 0..n`; a single element sits at 0.5.
pub fn equally_spaced(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn uniform_sorted<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Exponential draws divided by their maximum, sorted.
pub fn exponential_sorted<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    v.sort_by(f64::total_cmp);
    if let Some(&max) = v.last() {
        if max > 0.0 {
            v.iter_mut().for_each(|x| *x /= max);
        }
    }
    v
}

/// Two Gaussian blobs in the unit square (60% around (0.3, 0.35) with
/// sigma 0.05, 40% around (0.7, 0.65) with sigma 0.08); draws outside the
/// square are redrawn.
pub fn clustered_2d<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PointSet2D {
    let blobs = [((0.3, 0.35), 0.05), ((0.7, 0.65), 0.08)];
    (0..n)
        .map(|_| {
            let ((cx, cy), sigma) = if rng.gen_bool(0.6) { blobs[0] } else { blobs[1] };
            let normal = Normal::new(0.0, sigma).expect("positive sigma");
            loop {
                let p = Point2D::new(cx + normal.sample(rng), cy + normal.sample(rng));
                if (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y) {
                    return p;
                }
            }
        })
        .collect()
}

pub const MEDIAN_SET_ONES: usize = 63;
pub const MEDIAN_SET_EXPONENTIALS: usize = 66;

/// Sorted 129-value set of 66 scaled exponentials and 63 ones whose median
/// has local sensitivity `target` (in `(0, 1)`).
///
/// The largest exponential is scaled to 1; the others are scaled so the
/// median (the 65th smallest value) sits at `1 - target`. Draws are repeated
/// until the gap below the median does not exceed `target`.
pub fn median_set<R: Rng + ?Sized>(target: f64, rng: &mut R) -> Vec<f64> {
    assert!(target > 0.0 && target < 1.0, "local sensitivity target must lie in (0, 1)");
    let m = MEDIAN_SET_EXPONENTIALS;
    loop {
        let mut e: Vec<f64> = (0..m).map(|_| Exp1.sample(rng)).collect();
        e.sort_by(f64::total_cmp);
        let pivot = e[m - 2];
        let scale = (1.0 - target) / pivot;
        let mut v: Vec<f64> = e[..m - 1].iter().map(|x| x * scale).collect();
        v.push(1.0);
        v.extend(std::iter::repeat_n(1.0, MEDIAN_SET_ONES));
        let med = v.len() / 2;
        if v[med] - v[med - 1] <= target {
            return v;
        }
    }
}
