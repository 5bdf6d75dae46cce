//! Analytics computed from a reconstruction: density, range counts, median.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mechanism::Release;
use crate::regression::reconstruct_values;
use crate::transform::{cell_to_index, HilbertConfig, Point2D, PointSet2D, Rect};

/// Piecewise-constant density on `[0, 1]` whose bins are the 1D Voronoi
/// cells of the distinct values.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    breakpoints: Vec<f64>,
    densities: Vec<f64>,
    // probability mass below each breakpoint
    mass_below: Vec<f64>,
}

impl DensityEstimate {
    /// Interval boundaries, `0 = b_0 < b_1 < ... < b_m = 1`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints.windows(2).zip(&self.densities).map(|(w, &d)| (w[0], w[1], d))
    }

    pub fn total_mass(&self) -> f64 {
        *self.mass_below.last().unwrap()
    }

    /// Probability mass below `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return self.total_mass();
        }
        let i = self.breakpoints.partition_point(|&b| b <= x) - 1;
        self.mass_below[i] + self.densities[i] * (x - self.breakpoints[i])
    }

    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            0.0
        } else {
            self.cdf(hi) - self.cdf(lo)
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["breakpoint_lo", "breakpoint_hi", "density"])?;
        for (lo, hi, d) in self.bins() {
            w.write_record([crate::io::fmt17(lo), crate::io::fmt17(hi), crate::io::fmt17(d)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn density_from_values(values: &[f64]) -> Result<DensityEstimate> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutsideUnitInterval { index, value });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for v in sorted {
        match distinct.last_mut() {
            Some((u, c)) if *u == v => *c += 1,
            _ => distinct.push((v, 1)),
        }
    }
    let n = values.len() as f64;
    let mut breakpoints = Vec::with_capacity(distinct.len() + 1);
    breakpoints.push(0.0);
    breakpoints.extend(distinct.windows(2).map(|w| 0.5 * (w[0].0 + w[1].0)));
    breakpoints.push(1.0);
    let mut densities = Vec::with_capacity(distinct.len());
    let mut mass_below = Vec::with_capacity(breakpoints.len());
    mass_below.push(0.0);
    let mut seen = 0usize;
    for (i, &(_, count)) in distinct.iter().enumerate() {
        let width = breakpoints[i + 1] - breakpoints[i];
        densities.push(count as f64 / (n * width));
        seen += count;
        mass_below.push(seen as f64 / n);
    }
    Ok(DensityEstimate { breakpoints, densities, mass_below })
}

/// Rectangular range query in domain coordinates.
pub type RectQuery = Rect;

/// Answers range-count queries from reconstructed curve positions by
/// integrating their density over the Hilbert cells each query touches.
#[derive(Debug, Clone)]
pub struct RangeCounter {
    density: DensityEstimate,
    cfg: HilbertConfig,
    n: usize,
}

impl RangeCounter {
    pub fn new(values1d: &[f64], cfg: HilbertConfig, n: usize) -> Result<Self> {
        Ok(Self { density: density_from_values(values1d)?, cfg, n })
    }

    pub fn from_release(release: &Release) -> Result<Self> {
        Self::new(&reconstruct_values(release)?, release.hilbert, release.n())
    }

    pub fn density(&self) -> &DensityEstimate {
        &self.density
    }

    /// Probability mass inside `query`, accumulated cell by cell in row-major order.
    pub fn probability(&self, query: &RectQuery) -> f64 {
        let domain = self.cfg.domain();
        if query.width() <= 0.0 || query.height() <= 0.0 {
            return 0.0;
        }
        if query.contains_rect(&domain) {
            return 1.0;
        }
        let q = domain.rect_to_unit(query);
        let q = Rect {
            min_x: q.min_x.max(0.0),
            min_y: q.min_y.max(0.0),
            max_x: q.max_x.min(1.0),
            max_y: q.max_y.min(1.0),
        };
        if q.max_x <= q.min_x || q.max_y <= q.min_y {
            return 0.0;
        }
        let side = self.cfg.side();
        let sidef = side as f64;
        let cells = self.cfg.cells() as f64;
        let span = |lo: f64, hi: f64| {
            let a = ((lo * sidef).floor() as u64).min(side - 1);
            let b = ((hi * sidef).ceil() as u64).clamp(a + 1, side);
            a..b
        };
        let cell_area = 1.0 / (sidef * sidef);
        let mut total = 0.0;
        for cy in span(q.min_y, q.max_y) {
            for cx in span(q.min_x, q.max_x) {
                let cell = Rect {
                    min_x: cx as f64 / sidef,
                    min_y: cy as f64 / sidef,
                    max_x: (cx + 1) as f64 / sidef,
                    max_y: (cy + 1) as f64 / sidef,
                };
                let frac = cell.intersection_area(&q) / cell_area;
                if frac <= 0.0 {
                    continue;
                }
                let d = cell_to_index(self.cfg.order(), cx, cy) as f64;
                total += frac * self.density.integrate(d / cells, (d + 1.0) / cells);
            }
        }
        total
    }

    pub fn count(&self, query: &RectQuery) -> f64 {
        if query.contains_rect(&self.cfg.domain()) && query.width() > 0.0 && query.height() > 0.0 {
            return self.n as f64;
        }
        self.probability(query) * self.n as f64
    }
}

pub fn range_count(values1d: &[f64], query: &RectQuery, cfg: &HilbertConfig, n: usize) -> Result<f64> {
    Ok(RangeCounter::new(values1d, *cfg, n)?.count(query))
}

/// Lower-middle element of the reconstruction and its location.
pub fn median_from_release(release: &Release) -> Result<(f64, Point2D)> {
    let values = reconstruct_values(release)?;
    let v = values[values.len().div_ceil(2) - 1];
    Ok((v, release.hilbert.value_to_domain(v)))
}

/// Spreads each group of coincident points uniformly over a disc around
/// their location, for plotting only. The radius is half the distance to
/// the nearest other distinct location, capped at one grid cell.
pub fn diffuse_for_viz<R: Rng + ?Sized>(points: &[Point2D], cfg: &HilbertConfig, rng: &mut R) -> PointSet2D {
    let key = |p: &Point2D| (p.x.to_bits(), p.y.to_bits());
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut distinct: Vec<(Point2D, usize)> = Vec::new();
    for p in points {
        let slot = *index.entry(key(p)).or_insert_with(|| {
            distinct.push((*p, 0));
            distinct.len() - 1
        });
        distinct[slot].1 += 1;
    }
    let domain = cfg.domain();
    let cap = domain.width().min(domain.height()) / cfg.side() as f64;
    let nearest = nearest_distinct(&distinct.iter().map(|d| d.0).collect::<Vec<_>>());
    points
        .iter()
        .map(|p| {
            let slot = index[&key(p)];
            if distinct[slot].1 < 2 {
                return *p;
            }
            let radius = (0.5 * nearest[slot]).min(cap);
            let r = radius * rng.gen::<f64>().sqrt();
            let theta = 2.0 * PI * rng.gen::<f64>();
            Point2D::new(p.x + r * theta.cos(), p.y + r * theta.sin())
        })
        .collect()
}

/// Distance from each point to its nearest other point (infinite when alone),
/// by a sweep over x.
fn nearest_distinct(pts: &[Point2D]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| pts[a].x.total_cmp(&pts[b].x));
    let mut best = vec![f64::INFINITY; pts.len()];
    for (pos, &i) in order.iter().enumerate() {
        let right = order[pos + 1..].iter();
        let left = order[..pos].iter().rev();
        for side in [&mut right.copied() as &mut dyn Iterator<Item = usize>, &mut left.copied()] {
            for j in side {
                if (pts[j].x - pts[i].x).abs() >= best[i] {
                    break;
                }
                best[i] = best[i].min(pts[i].dist(&pts[j]));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::Meta;
    use crate::mechanism::{publish, GroupSize, Noise};
    use crate::regression::reconstruct;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn density_examples() {
        let d = density_from_values(&[0.5, 0.5]).unwrap();
        assert_eq!(d.breakpoints(), &[0.0, 1.0]);
        assert_eq!(d.densities(), &[1.0]);

        let d = density_from_values(&[0.25, 0.75]).unwrap();
        assert_eq!(d.breakpoints(), &[0.0, 0.5, 1.0]);
        assert_eq!(d.densities(), &[1.0, 1.0]);

        let d = density_from_values(&[0.2, 0.2, 0.8, 0.2]).unwrap();
        assert_eq!(d.breakpoints(), &[0.0, 0.5, 1.0]);
        assert_eq!(d.densities(), &[1.5, 0.5]);

        assert!(density_from_values(&[]).is_err());
        assert!(density_from_values(&[1.2]).is_err());
    }

    #[test]
    fn density_mass_and_cdf() {
        let d = density_from_values(&[0.0, 0.1, 0.1, 0.35, 0.9, 1.0]).unwrap();
        assert_eq!(d.total_mass(), 1.0);
        let integral: f64 = d.bins().map(|(lo, hi, v)| v * (hi - lo)).sum();
        assert!((integral - 1.0).abs() < 1e-12);
        assert_eq!(d.cdf(0.0), 0.0);
        assert_eq!(d.cdf(1.0), 1.0);
        assert!((d.integrate(0.0, 0.05) - 1.0 / 6.0).abs() < 1e-12);
    }

    fn cfg() -> HilbertConfig {
        HilbertConfig::unit(6).unwrap()
    }

    #[test]
    fn range_count_whole_and_empty() {
        let values = [0.1, 0.4, 0.4, 0.8];
        let c = cfg();
        assert_eq!(range_count(&values, &Rect::unit(), &c, 4).unwrap(), 4.0);
        let big = Rect::new(-1.0, -1.0, 2.0, 2.0).unwrap();
        assert_eq!(range_count(&values, &big, &c, 4).unwrap(), 4.0);
        let outside = Rect::new(2.0, 2.0, 3.0, 3.0).unwrap();
        assert_eq!(range_count(&values, &outside, &c, 4).unwrap(), 0.0);
        let degenerate = Rect { min_x: 0.2, min_y: 0.2, max_x: 0.2, max_y: 0.6 };
        assert_eq!(range_count(&values, &degenerate, &c, 4).unwrap(), 0.0);
    }

    #[test]
    fn accumulated_probability_over_all_cells_is_one() {
        let values = [0.05, 0.3, 0.3, 0.31, 0.77];
        let rc = RangeCounter::new(&values, cfg(), 5).unwrap();
        let halves = [
            Rect::new(0.0, 0.0, 0.5, 1.0).unwrap(),
            Rect::new(0.5, 0.0, 1.0, 1.0).unwrap(),
        ];
        let total: f64 = halves.iter().map(|q| rc.probability(q)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn half_of_points_in_cell_aligned_query() {
        // points in the left and right halves; zero noise, k = 1
        let c = HilbertConfig::unit(5).unwrap();
        let mut pts = Vec::new();
        for i in 0..20 {
            let y = (i as f64 + 0.5) / 20.0;
            pts.push(Point2D::new(0.2, y));
            pts.push(Point2D::new(0.8, y));
        }
        let r = publish(&pts, 1.0, GroupSize::Fixed(1), &c, Noise::Off, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        let rec = reconstruct(&r).unwrap();
        let left = Rect::new(0.0, 0.0, 0.5, 1.0).unwrap();
        let direct = rec.points2d.iter().filter(|p| left.contains(p)).count() as f64;
        let est = RangeCounter::from_release(&r).unwrap().count(&left);
        assert_eq!(direct, 20.0);
        // Voronoi bins straddle the split only where neighbouring curve cells do
        assert!((est - direct).abs() <= 2.0, "estimate {est}");
    }

    fn release(sums: Vec<f64>, k: usize, tail: usize) -> Release {
        Release {
            noisy_sums: sums,
            group_size: k,
            tail_size: tail,
            epsilon: 1.0,
            hilbert: HilbertConfig::unit(10).unwrap(),
            noise: Noise::Off,
            meta: Meta::default(),
        }
    }

    #[test]
    fn median_examples() {
        let r = release(vec![0.1, 0.7, 0.3, 0.9, 0.5], 1, 1);
        // unsorted sums pool, so use a monotone input for the exact case
        let r_sorted = release(vec![0.1, 0.3, 0.5, 0.7, 0.9], 1, 1);
        assert_eq!(median_from_release(&r_sorted).unwrap().0, 0.5);
        assert!(median_from_release(&r).is_ok());

        // k | n: groups {0.1,0.2}, {0.4,0.6}, {0.8,0.9}; lower middle (3rd) is in group 2
        let r = release(vec![0.30000000000000004, 1.0, 1.7000000000000002], 2, 2);
        let (v, p) = median_from_release(&r).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert_eq!(p, r.hilbert.value_to_domain(v));

        let single = release(vec![0.25], 1, 1);
        assert_eq!(median_from_release(&single).unwrap().0, 0.25);
    }

    #[test]
    fn diffusion_preserves_singletons_and_bounds_radius() {
        let c = HilbertConfig::unit(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let distinct = vec![Point2D::new(0.1, 0.1), Point2D::new(0.9, 0.9)];
        assert_eq!(diffuse_for_viz(&distinct, &c, &mut rng), distinct);

        let a = Point2D::new(0.5, 0.5);
        let b = Point2D::new(0.52, 0.5);
        let pts = vec![a, a, a, a, b];
        let out = diffuse_for_viz(&pts, &c, &mut rng);
        assert_eq!(out.len(), 5);
        assert_eq!(out[4], b);
        let radius = (0.5 * 0.02f64).min(1.0 / 16.0);
        for p in &out[..4] {
            assert!(p.dist(&a) <= radius + 1e-15);
        }
        assert!(out[..4].iter().any(|p| *p != a));
    }

    #[test]
    fn nearest_neighbor_sweep_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<Point2D> = (0..200).map(|_| Point2D::new(rng.gen(), rng.gen())).collect();
        let fast = nearest_distinct(&pts);
        for (i, p) in pts.iter().enumerate() {
            let brute = pts
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| p.dist(q))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(fast[i], brute);
        }
    }
}
