use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{grid_counts, overlap_sum};
use crate::error::{check_epsilon, Error, Result};
use crate::io::{self, Meta};
use crate::mechanism::Noise;
use crate::transform::{Point2D, Rect};

/// Equi-width `b x b` histogram with `Lap(2/epsilon)` on every count.
/// Replacing one record moves one unit between two bins, hence sensitivity 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyHistogram2D {
    pub kind: String,
    pub bins_per_axis: usize,
    #[serde(serialize_with = "io::ser_f64")]
    pub epsilon: f64,
    #[serde(serialize_with = "io::ser_rect", deserialize_with = "io::de_rect")]
    pub domain_rect: Rect,
    /// Number of records, treated as public.
    pub n: usize,
    pub noise: Noise,
    /// Row-major by y: `counts[iy * b + ix]`.
    #[serde(serialize_with = "io::ser_f64_seq")]
    pub counts: Vec<f64>,
    #[serde(default)]
    pub meta: Meta,
}

/// Bins per axis when a `grid`-unit side is cut into `unit`-wide bins.
pub fn bins_for_cell_width(grid: usize, unit: usize) -> usize {
    grid.div_ceil(unit)
}

pub fn equiwidth_publish<R: Rng + ?Sized>(
    points: &[Point2D],
    bins: usize,
    epsilon: f64,
    domain: &Rect,
    noise: Noise,
    rng: &mut R,
) -> Result<NoisyHistogram2D> {
    check_epsilon(epsilon)?;
    if bins == 0 {
        return Err(Error::InvalidParameter("bins per axis must be >= 1".into()));
    }
    domain.validate()?;
    let mut counts = grid_counts(points, bins, bins, domain)?;
    let scale = 2.0 / epsilon;
    for c in counts.iter_mut() {
        *c += noise.draw(scale, rng);
    }
    Ok(NoisyHistogram2D {
        kind: "equiwidth_histogram".into(),
        bins_per_axis: bins,
        epsilon,
        domain_rect: *domain,
        n: points.len(),
        noise,
        counts,
        meta: Meta::new(None),
    })
}

/// Fractional-overlap answer. Queries covering more than half the domain are
/// answered as `n` minus the complement, which uses the public size; the
/// whole domain therefore returns `n` exactly.
pub fn equiwidth_range_count(hist: &NoisyHistogram2D, query: &Rect) -> f64 {
    let b = hist.bins_per_axis;
    let dom = &hist.domain_rect;
    if query.width() <= 0.0 || query.height() <= 0.0 {
        return 0.0;
    }
    let direct = overlap_sum(&hist.counts, b, b, dom, query);
    if dom.intersection_area(query) * 2.0 <= dom.area() {
        return direct;
    }
    let total = overlap_sum(&hist.counts, b, b, dom, dom);
    hist.n as f64 - (total - direct)
}
