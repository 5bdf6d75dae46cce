//! Two-dimensional Haar decomposition of an equi-width histogram with noisy
//! coefficients.
//!
//! Each step replaces a 2x2 block `[a b; c d]` (`a` lower-left, `b` to its
//! right, `c` above) by its sum and three details
//!
//! ```text
//! h = (a - b + c - d) / 3,  v = (a + b - c - d) / 3,  g = (a - b - c + d) / 3
//! ```
//!
//! and recurses on the block sums, so the final coefficient (DC) is the total
//! count. A unit change in one bin moves the three details of every level by
//! `1/3` each and the DC by 1, an L1 change of at most `q + 1` over `q`
//! levels; replacing a record therefore moves the coefficients by at most
//! `2(q + 1)`, and every detail coefficient receives `Lap(2(q + 1)/epsilon)`.
//! The DC is pinned to the public size `n`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{grid_counts, overlap_sum};
use crate::error::{check_epsilon, Error, Result};
use crate::io::{self, Meta};
use crate::mechanism::Noise;
use crate::transform::{Point2D, Rect};

pub const MAX_LEVELS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyWaveletTransform {
    pub kind: String,
    pub levels: u32,
    #[serde(serialize_with = "io::ser_f64")]
    pub epsilon: f64,
    /// Laplace scale applied to every detail coefficient.
    #[serde(serialize_with = "io::ser_f64")]
    pub noise_scale: f64,
    pub weighting: String,
    #[serde(serialize_with = "io::ser_rect", deserialize_with = "io::de_rect")]
    pub domain_rect: Rect,
    pub n: usize,
    pub noise: Noise,
    /// `side x side` coefficients in the usual nonstandard layout, row-major by y.
    #[serde(serialize_with = "io::ser_f64_seq")]
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub meta: Meta,
}

impl NoisyWaveletTransform {
    pub fn side(&self) -> usize {
        1 << self.levels
    }

    /// Histogram recovered from the (noisy) coefficients.
    pub fn histogram(&self) -> Vec<f64> {
        haar_inverse(&self.coefficients, self.side())
    }
}

/// Forward transform of a `side x side` grid (row-major by y).
pub fn haar_forward(grid: &[f64], side: usize) -> Vec<f64> {
    assert!(side.is_power_of_two() && grid.len() == side * side);
    let mut out = grid.to_vec();
    let mut tmp = vec![0.0; side * side];
    let mut s = side;
    while s > 1 {
        let h = s / 2;
        for iy in 0..h {
            for ix in 0..h {
                let a = out[(2 * iy) * side + 2 * ix];
                let b = out[(2 * iy) * side + 2 * ix + 1];
                let c = out[(2 * iy + 1) * side + 2 * ix];
                let d = out[(2 * iy + 1) * side + 2 * ix + 1];
                tmp[iy * side + ix] = a + b + c + d;
                tmp[iy * side + ix + h] = (a - b + c - d) / 3.0;
                tmp[(iy + h) * side + ix] = (a + b - c - d) / 3.0;
                tmp[(iy + h) * side + ix + h] = (a - b - c + d) / 3.0;
            }
        }
        for iy in 0..s {
            out[iy * side..iy * side + s].copy_from_slice(&tmp[iy * side..iy * side + s]);
        }
        s = h;
    }
    out
}

pub fn haar_inverse(coeffs: &[f64], side: usize) -> Vec<f64> {
    assert!(side.is_power_of_two() && coeffs.len() == side * side);
    let mut out = coeffs.to_vec();
    let mut tmp = vec![0.0; side * side];
    let mut s = 2;
    while s <= side {
        let h = s / 2;
        for iy in 0..h {
            for ix in 0..h {
                let sum = out[iy * side + ix];
                let dh = 3.0 * out[iy * side + ix + h];
                let dv = 3.0 * out[(iy + h) * side + ix];
                let dg = 3.0 * out[(iy + h) * side + ix + h];
                tmp[(2 * iy) * side + 2 * ix] = (sum + dh + dv + dg) / 4.0;
                tmp[(2 * iy) * side + 2 * ix + 1] = (sum - dh + dv - dg) / 4.0;
                tmp[(2 * iy + 1) * side + 2 * ix] = (sum + dh - dv - dg) / 4.0;
                tmp[(2 * iy + 1) * side + 2 * ix + 1] = (sum - dh - dv + dg) / 4.0;
            }
        }
        for iy in 0..s {
            out[iy * side..iy * side + s].copy_from_slice(&tmp[iy * side..iy * side + s]);
        }
        s *= 2;
    }
    out
}

pub fn wavelet_publish<R: Rng + ?Sized>(
    points: &[Point2D],
    levels: u32,
    epsilon: f64,
    domain: &Rect,
    noise: Noise,
    rng: &mut R,
) -> Result<NoisyWaveletTransform> {
    check_epsilon(epsilon)?;
    if !(1..=MAX_LEVELS).contains(&levels) {
        return Err(Error::InvalidParameter(format!("wavelet levels must lie in 1..={MAX_LEVELS}, got {levels}")));
    }
    domain.validate()?;
    let side = 1usize << levels;
    let counts = grid_counts(points, side, side, domain)?;
    let mut coefficients = haar_forward(&counts, side);
    let noise_scale = 2.0 * (levels as f64 + 1.0) / epsilon;
    for c in coefficients.iter_mut().skip(1) {
        *c += noise.draw(noise_scale, rng);
    }
    coefficients[0] = points.len() as f64;
    Ok(NoisyWaveletTransform {
        kind: "haar_wavelet".into(),
        levels,
        epsilon,
        noise_scale,
        weighting: "uniform".into(),
        domain_rect: *domain,
        n: points.len(),
        noise,
        coefficients,
        meta: Meta::new(None),
    })
}

/// Range count from a recovered histogram; pass the result of
/// [`NoisyWaveletTransform::histogram`] to avoid repeating the inverse
/// transform across queries.
pub fn wavelet_range_count_with(w: &NoisyWaveletTransform, histogram: &[f64], query: &Rect) -> f64 {
    if query.width() <= 0.0 || query.height() <= 0.0 {
        return 0.0;
    }
    if query.contains_rect(&w.domain_rect) {
        return w.coefficients[0];
    }
    let side = w.side();
    overlap_sum(histogram, side, side, &w.domain_rect, query)
}

pub fn wavelet_range_count(w: &NoisyWaveletTransform, query: &Rect) -> f64 {
    wavelet_range_count_with(w, &w.histogram(), query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_random_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for levels in 1..=6 {
            let side = 1 << levels;
            let grid: Vec<f64> = (0..side * side).map(|_| rng.gen_range(-50.0..200.0)).collect();
            let back = haar_inverse(&haar_forward(&grid, side), side);
            for (a, b) in grid.iter().zip(&back) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unit_change_moves_coefficients_by_at_most_levels_plus_one() {
        let levels = 4;
        let side = 1 << levels;
        let base = vec![0.0; side * side];
        for cell in 0..side * side {
            let mut g = base.clone();
            g[cell] = 1.0;
            let c = haar_forward(&g, side);
            let l1: f64 = c.iter().map(|v| v.abs()).sum();
            assert!((l1 - (levels as f64 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = wavelet_publish(&[Point2D::new(0.2, 0.7)], 1, 1.0, &Rect::unit(), Noise::On, &mut rng).unwrap();
        assert_eq!(w.coefficients.len(), 4);
        assert_eq!(w.coefficients[0], 1.0);
        assert!(w.coefficients[1..].iter().all(|c| c.abs() > 0.0));
        assert_eq!(w.noise_scale, 4.0);
    }

    #[test]
    fn zero_noise_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Point2D> = (0..300).map(|_| Point2D::new(rng.gen(), rng.gen())).collect();
        let w = wavelet_publish(&pts, 3, 1.0, &Rect::unit(), Noise::Off, &mut rng).unwrap();
        let exact = grid_counts(&pts, 8, 8, &Rect::unit()).unwrap();
        for (a, b) in w.histogram().iter().zip(&exact) {
            assert!((a - b).abs() < 1e-9);
        }
        let q = Rect::new(0.25, 0.0, 0.75, 0.5).unwrap();
        let direct = pts.iter().filter(|p| p.x >= 0.25 && p.x < 0.75 && p.y < 0.5).count() as f64;
        assert!((wavelet_range_count(&w, &q) - direct).abs() < 1e-9);
        assert_eq!(wavelet_range_count(&w, &Rect::unit()), 300.0);
    }

    #[test]
    fn noisy_full_domain_is_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point2D> = (0..50).map(|_| Point2D::new(rng.gen(), rng.gen())).collect();
        let w = wavelet_publish(&pts, 5, 0.5, &Rect::unit(), Noise::On, &mut rng).unwrap();
        assert_eq!(wavelet_range_count(&w, &Rect::unit()), 50.0);
        let sum: f64 = w.histogram().iter().sum();
        assert!((sum - 50.0).abs() < 1e-6);
    }

    #[test]
    fn disjoint_queries_add_up() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Point2D> = (0..100).map(|_| Point2D::new(rng.gen(), rng.gen())).collect();
        let w = wavelet_publish(&pts, 4, 1.0, &Rect::unit(), Noise::On, &mut rng).unwrap();
        let a = Rect::new(0.0, 0.0, 0.3, 0.6).unwrap();
        let b = Rect::new(0.3, 0.0, 0.55, 0.6).unwrap();
        let ab = Rect::new(0.0, 0.0, 0.55, 0.6).unwrap();
        let sum = wavelet_range_count(&w, &a) + wavelet_range_count(&w, &b);
        assert!((sum - wavelet_range_count(&w, &ab)).abs() < 1e-9);
    }

    #[test]
    fn parameter_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = [Point2D::new(0.5, 0.5)];
        assert!(wavelet_publish(&p, 11, 1.0, &Rect::unit(), Noise::On, &mut rng).is_err());
        assert!(wavelet_publish(&p, 0, 1.0, &Rect::unit(), Noise::On, &mut rng).is_err());
        assert!(wavelet_publish(&p, 2, -1.0, &Rect::unit(), Noise::On, &mut rng).is_err());
    }
}
