//! Isotonic regression and the consumer-side reconstruction of a release.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::mechanism::Release;
use crate::transform::{Point2D, PointSet2D};

/// A nondecreasing fit, constant over each pool.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneFit {
    pub values: Vec<f64>,
    pub pools: Vec<Range<usize>>,
}

/// Least-squares monotone fit by pool-adjacent-violators, `O(n)`.
pub fn isotonic_l2(a: &[f64]) -> MonotoneFit {
    isotonic_l2_weighted(a, None)
}

/// Weighted least-squares variant; weights must be positive.
pub fn isotonic_l2_weighted(a: &[f64], weights: Option<&[f64]>) -> MonotoneFit {
    // (weighted mean, total weight, start index)
    let mut stack: Vec<(f64, f64, usize)> = Vec::with_capacity(a.len());
    for (i, &y) in a.iter().enumerate() {
        let w = weights.map_or(1.0, |ws| ws[i]);
        let (mut mean, mut weight, mut start) = (y, w, i);
        while let Some(&(m, wt, s)) = stack.last() {
            if m < mean {
                break;
            }
            stack.pop();
            let total = weight + wt;
            mean = (m * wt + mean * weight) / total;
            weight = total;
            start = s;
        }
        stack.push((mean, weight, start));
    }
    expand(a.len(), stack.into_iter().map(|(m, _, s)| (m, s)))
}

fn expand(n: usize, pools: impl Iterator<Item = (f64, usize)>) -> MonotoneFit {
    let pools: Vec<(f64, usize)> = pools.collect();
    let mut values = Vec::with_capacity(n);
    let mut ranges = Vec::with_capacity(pools.len());
    for (j, &(v, start)) in pools.iter().enumerate() {
        let end = pools.get(j + 1).map_or(n, |p| p.1);
        values.extend(std::iter::repeat_n(v, end - start));
        ranges.push(start..end);
    }
    MonotoneFit { values, pools: ranges }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Multiset with `O(log n)` insertion and lower-median lookup.
#[derive(Debug, Default)]
struct MedianPool {
    // holds ceil(len / 2) smallest values; its max is the lower median
    low: BinaryHeap<Key>,
    high: BinaryHeap<Reverse<Key>>,
}

impl MedianPool {
    fn len(&self) -> usize {
        self.low.len() + self.high.len()
    }

    fn median(&self) -> f64 {
        self.low.peek().expect("pool is nonempty").0
    }

    fn push(&mut self, v: f64) {
        if self.low.peek().is_some_and(|m| v <= m.0) {
            self.low.push(Key(v));
        } else {
            self.high.push(Reverse(Key(v)));
        }
        while self.low.len() > self.high.len() + 1 {
            let x = self.low.pop().unwrap();
            self.high.push(Reverse(x));
        }
        while self.low.len() < self.high.len() {
            let Reverse(x) = self.high.pop().unwrap();
            self.low.push(x);
        }
    }

    fn absorb(mut self, mut other: MedianPool) -> MedianPool {
        if self.len() < other.len() {
            std::mem::swap(&mut self, &mut other);
        }
        for Key(v) in other.low.into_iter().chain(other.high.into_iter().map(|r| r.0)) {
            self.push(v);
        }
        self
    }
}

/// Least-absolute-deviation monotone fit. Pools take their lower median, which
/// also decides among the non-unique minimizers. Small-into-large pool merges
/// keep this at `O(n log^2 n)`.
pub fn isotonic_l1(a: &[f64]) -> Vec<f64> {
    let mut stack: Vec<(MedianPool, usize)> = Vec::with_capacity(a.len());
    for (i, &y) in a.iter().enumerate() {
        let mut pool = MedianPool::default();
        pool.push(y);
        let mut start = i;
        while let Some((top, _)) = stack.last() {
            if top.median() <= pool.median() {
                break;
            }
            let (top, s) = stack.pop().unwrap();
            pool = top.absorb(pool);
            start = s;
        }
        stack.push((pool, start));
    }
    expand(a.len(), stack.into_iter().map(|(p, s)| (p.median(), s))).values
}

/// Output of reconstructing a release: the fitted curve positions (sorted,
/// one per original record) and their points in the original domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub values1d: Vec<f64>,
    pub points2d: PointSet2D,
}

/// Least-squares monotone fit of the noisy group means, before clamping.
pub fn isotonic_group_fit(release: &Release) -> Result<MonotoneFit> {
    release.validate()?;
    let sizes = release.partition().sizes();
    let means: Vec<f64> = release
        .noisy_sums
        .iter()
        .zip(&sizes)
        .map(|(s, &c)| s / c as f64)
        .collect();
    Ok(isotonic_l2(&means))
}

/// Fitted group means, clamped to `[0, 1]`, one per group.
pub fn fit_group_means(release: &Release) -> Result<Vec<f64>> {
    Ok(isotonic_group_fit(release)?.values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
}

/// 1D reconstruction only: fitted group means repeated over their blocks.
pub fn reconstruct_values(release: &Release) -> Result<Vec<f64>> {
    let fit = fit_group_means(release)?;
    let partition = release.partition();
    let mut out = Vec::with_capacity(partition.len());
    for (v, block) in fit.iter().zip(partition.blocks()) {
        out.extend(std::iter::repeat_n(*v, block.len()));
    }
    Ok(out)
}

pub fn reconstruct(release: &Release) -> Result<Reconstruction> {
    let values1d = reconstruct_values(release)?;
    let points2d = values1d.iter().map(|&v| release.hilbert.value_to_domain(v)).collect();
    Ok(Reconstruction { values1d, points2d })
}

/// Parses and reconstructs a release document.
pub fn reconstruct_json(text: &str) -> Result<Reconstruction> {
    let release = Release::from_json(text).map_err(|e| match e {
        Error::Parse(_) => e,
        other => Error::Parse(other.to_string()),
    })?;
    reconstruct(&release)
}

/// Distinct reconstructed locations with their multiplicities, in curve order.
pub fn grouped_points(points: &[Point2D]) -> Vec<(Point2D, usize)> {
    let mut out: Vec<(Point2D, usize)> = Vec::new();
    for p in points {
        match out.last_mut() {
            Some((q, c)) if q == p => *c += 1,
            _ => out.push((*p, 1)),
        }
    }
    out
}
