//! Hilbert-curve projection between a discretized rectangle and the unit interval.
//!
//! Order `p` splits the unit square into a `2^p x 2^p` grid. The forward map
//! sends a point to the midpoint of its cell's slot on the curve,
//! `(index + 0.5) / 4^p`; the inverse sends a curve position back to the
//! center of the cell that owns it. Both directions snap to cells, so the
//! round trip is exact on cell centers.
//!
//! The order-1 curve visits `(0,0), (0,1), (1,1), (1,0)`; higher orders follow
//! the usual rotate/reflect recursion. Curve positions are `f64`, so distinct
//! cells stay distinguishable up to `p = 26`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ORDER: u32 = 10;
pub const MAX_ORDER: u32 = 31;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A multiset of raw points, in domain coordinates.
pub type PointSet2D = Vec<Point2D>;

/// A point inside the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint2D {
    x: f64,
    y: f64,
}

impl UnitPoint2D {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite(x, y));
        }
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::OutsideDomain { index: 0, x, y });
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

/// Axis-aligned rectangle `[min_x, max_x] x [min_y, max_y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self> {
        let r = Self { min_x, min_y, max_x, max_y };
        r.validate()?;
        Ok(r)
    }

    pub const fn unit() -> Self {
        Self { min_x: 0.0, min_y: 0.0, max_x: 1.0, max_y: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.min_x, self.min_y, self.max_x, self.max_y]
            .iter()
            .all(|v| v.is_finite());
        if finite && self.max_x > self.min_x && self.max_y > self.min_y {
            Ok(())
        } else {
            Err(Error::DegenerateDomain(self.as_array()))
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.min_x, self.min_y, self.max_x, self.max_y]
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: &Point2D) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.min_x <= other.min_x
            && self.min_y <= other.min_y
            && self.max_x >= other.max_x
            && self.max_y >= other.max_y
    }

    /// Area of the overlap with `other`, zero when disjoint.
    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let w = self.max_x.min(other.max_x) - self.min_x.max(other.min_x);
        let h = self.max_y.min(other.max_y) - self.min_y.max(other.min_y);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Affine map into the unit square. No range check.
    pub fn to_unit(&self, p: &Point2D) -> (f64, f64) {
        (
            (p.x - self.min_x) / self.width(),
            (p.y - self.min_y) / self.height(),
        )
    }

    pub fn from_unit(&self, x: f64, y: f64) -> Point2D {
        Point2D::new(self.min_x + x * self.width(), self.min_y + y * self.height())
    }

    /// Maps a rectangle given in domain coordinates into unit-square coordinates.
    pub fn rect_to_unit(&self, r: &Rect) -> Rect {
        let (x0, y0) = self.to_unit(&Point2D::new(r.min_x, r.min_y));
        let (x1, y1) = self.to_unit(&Point2D::new(r.max_x, r.max_y));
        Rect { min_x: x0, min_y: y0, max_x: x1, max_y: y1 }
    }
}

/// Curve order plus the rectangle raw coordinates are rescaled from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HilbertConfig {
    order: u32,
    domain: Rect,
}

impl Default for HilbertConfig {
    fn default() -> Self {
        Self { order: DEFAULT_ORDER, domain: Rect::unit() }
    }
}

impl HilbertConfig {
    pub fn new(order: u32, domain: Rect) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::InvalidOrder(order));
        }
        domain.validate()?;
        Ok(Self { order, domain })
    }

    pub fn unit(order: u32) -> Result<Self> {
        Self::new(order, Rect::unit())
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    /// Cells per grid side, `2^p`.
    pub fn side(&self) -> u64 {
        1u64 << self.order
    }

    /// Total number of cells, `4^p`.
    pub fn cells(&self) -> u64 {
        1u64 << (2 * self.order)
    }

    /// Grid cell `(cx, cy)` holding a unit-square coordinate; the upper edge
    /// belongs to the last cell.
    pub fn cell_of(&self, x: f64, y: f64) -> (u64, u64) {
        let side = self.side();
        let snap = |v: f64| ((v * side as f64).floor().max(0.0) as u64).min(side - 1);
        (snap(x), snap(y))
    }

    pub fn cell_center(&self, cx: u64, cy: u64) -> (f64, f64) {
        let side = self.side() as f64;
        ((cx as f64 + 0.5) / side, (cy as f64 + 0.5) / side)
    }

    /// Curve index of the cell owning curve position `v`, with `v >= 1`
    /// folded into the last cell.
    pub fn index_of_value(&self, v: f64) -> u64 {
        let cells = self.cells();
        ((v * cells as f64).floor().max(0.0) as u64).min(cells - 1)
    }

    pub fn value_of_index(&self, d: u64) -> f64 {
        (d as f64 + 0.5) / self.cells() as f64
    }

    /// Inverse map to a domain point, tolerating positions in `[0, 1]`.
    pub fn value_to_domain(&self, v: f64) -> Point2D {
        let (cx, cy) = index_to_cell(self.order, self.index_of_value(v));
        let (ux, uy) = self.cell_center(cx, cy);
        self.domain.from_unit(ux, uy)
    }

    /// Forward map of a domain point. Fails outside the domain.
    pub fn domain_to_value(&self, p: &Point2D) -> Result<f64> {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::NonFinite(p.x, p.y));
        }
        if !self.domain.contains(p) {
            return Err(Error::OutsideDomain { index: 0, x: p.x, y: p.y });
        }
        let (ux, uy) = self.domain.to_unit(p);
        let (cx, cy) = self.cell_of(ux, uy);
        Ok(self.value_of_index(cell_to_index(self.order, cx, cy)))
    }
}

fn rotate(side: u64, x: &mut u64, y: &mut u64, rx: u64, ry: u64) {
    if ry == 0 {
        if rx == 1 {
            *x = side - 1 - *x;
            *y = side - 1 - *y;
        }
        std::mem::swap(x, y);
    }
}

/// Curve index of grid cell `(x, y)` at order `order`.
pub fn cell_to_index(order: u32, mut x: u64, mut y: u64) -> u64 {
    let side = 1u64 << order;
    let mut d = 0u64;
    let mut s = side >> 1;
    while s > 0 {
        let rx = u64::from(x & s > 0);
        let ry = u64::from(y & s > 0);
        d += s * s * ((3 * rx) ^ ry);
        rotate(side, &mut x, &mut y, rx, ry);
        s >>= 1;
    }
    d
}

/// Grid cell at curve index `d`.
pub fn index_to_cell(order: u32, d: u64) -> (u64, u64) {
    let side = 1u64 << order;
    let (mut x, mut y) = (0u64, 0u64);
    let mut t = d;
    let mut s = 1u64;
    while s < side {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        rotate(s, &mut x, &mut y, rx, ry);
        x += s * rx;
        y += s * ry;
        t /= 4;
        s <<= 1;
    }
    (x, y)
}

pub fn hilbert_forward(pt: UnitPoint2D, cfg: &HilbertConfig) -> f64 {
    let (cx, cy) = cfg.cell_of(pt.x, pt.y);
    cfg.value_of_index(cell_to_index(cfg.order, cx, cy))
}

pub fn hilbert_inverse(v: f64, cfg: &HilbertConfig) -> Result<UnitPoint2D> {
    if !(0.0..1.0).contains(&v) {
        return Err(Error::CurvePosition(v));
    }
    let (cx, cy) = index_to_cell(cfg.order, cfg.index_of_value(v));
    let (x, y) = cfg.cell_center(cx, cy);
    Ok(UnitPoint2D { x, y })
}

/// Projects every point onto the curve. Output order follows input order.
pub fn map_dataset(points: &[Point2D], cfg: &HilbertConfig) -> Result<Vec<f64>> {
    points
        .iter()
        .enumerate()
        .map(|(index, p)| {
            cfg.domain_to_value(p).map_err(|e| match e {
                Error::OutsideDomain { x, y, .. } => Error::OutsideDomain { index, x, y },
                other => other,
            })
        })
        .collect()
}

/// Snaps each point to the center of its grid cell, in domain coordinates.
pub fn quantize(points: &[Point2D], cfg: &HilbertConfig) -> Result<PointSet2D> {
    map_dataset(points, cfg).map(|vs| vs.into_iter().map(|v| cfg.value_to_domain(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(p: u32) -> HilbertConfig {
        HilbertConfig::unit(p).unwrap()
    }

    #[test]
    fn order_one_orientation() {
        let visits: Vec<_> = (0..4).map(|d| index_to_cell(1, d)).collect();
        assert_eq!(visits, vec![(0, 0), (0, 1), (1, 1), (1, 0)]);
    }

    #[test]
    fn forward_examples() {
        let c = cfg(1);
        let v = hilbert_forward(UnitPoint2D::new(0.25, 0.25).unwrap(), &c);
        assert_eq!(v, 0.125);
        let v = hilbert_forward(UnitPoint2D::new(0.75, 0.25).unwrap(), &c);
        assert_eq!(v, 0.875);
    }

    #[test]
    fn order_two_centers_are_distinct_and_adjacent() {
        let c = cfg(2);
        let mut values = Vec::new();
        for cx in 0..4 {
            for cy in 0..4 {
                let (x, y) = c.cell_center(cx, cy);
                values.push(hilbert_forward(UnitPoint2D::new(x, y).unwrap(), &c));
            }
        }
        values.sort_by(f64::total_cmp);
        let expected: Vec<f64> = (0..16).map(|i| (i as f64 + 0.5) / 16.0).collect();
        assert_eq!(values, expected);
    }

    #[test]
    fn consecutive_indices_are_grid_neighbors() {
        for p in 1..=6 {
            for d in 1..(1u64 << (2 * p)) {
                let (x0, y0) = index_to_cell(p, d - 1);
                let (x1, y1) = index_to_cell(p, d);
                assert_eq!(x0.abs_diff(x1) + y0.abs_diff(y1), 1, "order {p} index {d}");
            }
        }
    }

    #[test]
    fn index_round_trip_exhaustive() {
        for p in 1..=5 {
            for d in 0..(1u64 << (2 * p)) {
                let (x, y) = index_to_cell(p, d);
                assert_eq!(cell_to_index(p, x, y), d);
            }
        }
    }

    #[test]
    fn inverse_examples() {
        let c = cfg(1);
        let a = hilbert_inverse(0.0, &c).unwrap();
        assert_eq!((a.x(), a.y()), (0.25, 0.25));
        let b = hilbert_inverse(0.99, &c).unwrap();
        assert_eq!((b.x(), b.y()), (0.75, 0.25));
        assert!(matches!(hilbert_inverse(1.0, &c), Err(Error::CurvePosition(_))));
        assert!(hilbert_inverse(-0.1, &c).is_err());
    }

    #[test]
    fn centers_round_trip() {
        for p in [1, 3, 6] {
            let c = cfg(p);
            for cx in 0..c.side() {
                for cy in 0..c.side() {
                    let (x, y) = c.cell_center(cx, cy);
                    let v = hilbert_forward(UnitPoint2D::new(x, y).unwrap(), &c);
                    let back = hilbert_inverse(v, &c).unwrap();
                    assert_eq!((back.x(), back.y()), (x, y));
                }
            }
        }
    }

    #[test]
    fn locality_bound_beyond_immediate_neighbors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [8, 10, 12] {
            let c = cfg(p);
            for _ in 0..20_000 {
                let u: f64 = rng.gen();
                let v: f64 = if rng.gen_bool(0.5) {
                    (u + rng.gen::<f64>() * 1e-3).min(0.999_999)
                } else {
                    rng.gen()
                };
                if c.index_of_value(u).abs_diff(c.index_of_value(v)) < 2 {
                    continue;
                }
                let a = hilbert_inverse(u, &c).unwrap();
                let b = hilbert_inverse(v, &c).unwrap();
                let d = (a.x() - b.x()).hypot(a.y() - b.y());
                assert!(d <= 3.0 * (u - v).abs().sqrt(), "p={p} u={u} v={v} d={d}");
            }
        }
    }

    #[test]
    fn map_dataset_semantics() {
        let c = cfg(1);
        assert!(map_dataset(&[], &c).unwrap().is_empty());
        assert_eq!(map_dataset(&[Point2D::new(0.25, 0.25)], &c).unwrap(), vec![0.125]);
        let dup = map_dataset(&[Point2D::new(0.6, 0.1), Point2D::new(0.6, 0.1)], &c).unwrap();
        assert_eq!(dup.len(), 2);
        assert_eq!(dup[0], dup[1]);
    }

    #[test]
    fn map_dataset_reports_offender() {
        let c = cfg(4);
        let pts = [Point2D::new(0.1, 0.1), Point2D::new(1.5, 0.2)];
        match map_dataset(&pts, &c) {
            Err(Error::OutsideDomain { index, x, .. }) => {
                assert_eq!(index, 1);
                assert_eq!(x, 1.5);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            map_dataset(&[Point2D::new(f64::NAN, 0.0)], &c),
            Err(Error::NonFinite(..))
        ));
    }

    #[test]
    fn rescaled_domain() {
        let dom = Rect::new(-130.0, 20.0, -60.0, 55.0).unwrap();
        let c = HilbertConfig::new(1, dom).unwrap();
        // lower-left quadrant is cell (0, 0)
        let v = c.domain_to_value(&Point2D::new(-120.0, 25.0)).unwrap();
        assert_eq!(v, 0.125);
        let p = c.value_to_domain(v);
        assert_eq!(p, Point2D::new(-112.5, 28.75));
    }

    #[test]
    fn config_validation() {
        assert!(matches!(HilbertConfig::unit(0), Err(Error::InvalidOrder(0))));
        assert!(matches!(HilbertConfig::unit(32), Err(Error::InvalidOrder(32))));
        assert!(HilbertConfig::unit(31).is_ok());
        assert!(Rect::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(UnitPoint2D::new(f64::INFINITY, 0.0).is_err());
    }
}
