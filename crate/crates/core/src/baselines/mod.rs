//! Comparison mechanisms: equi-width histogram, Haar-wavelet histogram and
//! the smooth-sensitivity median.

pub mod histogram;
pub mod smooth;
pub mod wavelet;

pub use histogram::{bins_for_cell_width, equiwidth_publish, equiwidth_range_count, NoisyHistogram2D};
pub use smooth::{
    local_sensitivity_median, smooth_sensitivity, smooth_sensitivity_median, SmoothSensitivityResult,
};
pub use wavelet::{wavelet_publish, wavelet_range_count, NoisyWaveletTransform};

use crate::error::{Error, Result};
use crate::transform::{Point2D, Rect};

/// Exact counts on a `bx x by` grid over `domain`, row-major by y.
pub(crate) fn grid_counts(points: &[Point2D], bx: usize, by: usize, domain: &Rect) -> Result<Vec<f64>> {
    let mut counts = vec![0.0; bx * by];
    for (index, p) in points.iter().enumerate() {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::NonFinite(p.x, p.y));
        }
        if !domain.contains(p) {
            return Err(Error::OutsideDomain { index, x: p.x, y: p.y });
        }
        let (ux, uy) = domain.to_unit(p);
        let ix = ((ux * bx as f64) as usize).min(bx - 1);
        let iy = ((uy * by as f64) as usize).min(by - 1);
        counts[iy * bx + ix] += 1.0;
    }
    Ok(counts)
}

/// Sum of grid values weighted by the fraction of each cell inside `query`,
/// treating mass as uniform within a cell.
pub(crate) fn overlap_sum(grid: &[f64], bx: usize, by: usize, domain: &Rect, query: &Rect) -> f64 {
    let q = domain.rect_to_unit(query);
    let (x0, x1) = (q.min_x.max(0.0), q.max_x.min(1.0));
    let (y0, y1) = (q.min_y.max(0.0), q.max_y.min(1.0));
    if x1 <= x0 || y1 <= y0 {
        return 0.0;
    }
    let span = |lo: f64, hi: f64, b: usize| {
        let a = ((lo * b as f64).floor() as usize).min(b - 1);
        let e = ((hi * b as f64).ceil() as usize).clamp(a + 1, b);
        a..e
    };
    let overlap = |lo: f64, hi: f64, i: usize, b: usize| {
        let (c0, c1) = (i as f64 / b as f64, (i + 1) as f64 / b as f64);
        ((hi.min(c1) - lo.max(c0)) * b as f64).max(0.0)
    };
    let mut total = 0.0;
    for iy in span(y0, y1, by) {
        let fy = overlap(y0, y1, iy, by);
        for ix in span(x0, x1, bx) {
            let f = fy * overlap(x0, x1, ix, bx);
            if f > 0.0 {
                total += f * grid[iy * bx + ix];
            }
        }
    }
    total
}
