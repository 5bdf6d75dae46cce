//! The publishing side: project, sort, group, perturb.
//!
//! Sorting a multiset of values from `[0, 1]` has L1 sensitivity 1 under the
//! replacement neighborhood, and so does summing the sorted values over any
//! partition of the indices. One draw of `Lap(1/epsilon)` per group sum is
//! therefore enough for `epsilon`-differential privacy, whatever the group size.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_epsilon, Error, Result};
use crate::error_model;
use crate::io::{self, Meta};
use crate::transform::{map_dataset, HilbertConfig, Point2D, Rect};

/// Nondecreasing values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SortedUnitSequence(Vec<f64>);

impl SortedUnitSequence {
    /// Wraps values that are already sorted; fails on unsorted or out-of-range input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_unit(&values)?;
        if let Some(i) = values.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter(format!(
                "sequence decreases at position {}",
                i + 1
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_unit(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(index) => Err(Error::OutsideUnitInterval { index, value: values[index] }),
        None => Ok(()),
    }
}

/// Sorts a multiset of unit-interval values.
pub fn sort_sequence(mut values: Vec<f64>) -> Result<SortedUnitSequence> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    check_unit(&values)?;
    values.sort_by(f64::total_cmp);
    Ok(SortedUnitSequence(values))
}

/// Consecutive index blocks covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    ends: Vec<usize>,
}

impl GroupPartition {
    /// Blocks of size `k`, with a shorter final block when `k` does not divide `n`.
    pub fn equal(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidGroupSize { k, n });
        }
        let m = n.div_ceil(k);
        let ends = (1..=m).map(|i| (i * k).min(n)).collect();
        Ok(Self { ends })
    }

    /// Arbitrary consecutive blocks with the given positive sizes.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidParameter("block sizes must be positive".into()));
        }
        let ends = sizes
            .iter()
            .scan(0, |acc, &s| {
                *acc += s;
                Some(*acc)
            })
            .collect();
        Ok(Self { ends })
    }

    pub fn len(&self) -> usize {
        *self.ends.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.ends.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.ends.len()
    }

    pub fn block(&self, i: usize) -> Range<usize> {
        let start = if i == 0 { 0 } else { self.ends[i - 1] };
        start..self.ends[i]
    }

    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.ends.len()).map(|i| self.block(i))
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks().map(|b| b.len()).collect()
    }
}

/// Block sums of `values` over `partition`.
pub fn partition_sums(values: &[f64], partition: &GroupPartition) -> Result<Vec<f64>> {
    if values.len() != partition.len() {
        return Err(Error::SizeMismatch { left: values.len(), right: partition.len() });
    }
    Ok(partition.blocks().map(|b| values[b].iter().sum()).collect())
}

pub fn group_sums(seq: &SortedUnitSequence, k: usize) -> Result<(Vec<f64>, GroupPartition)> {
    let partition = GroupPartition::equal(seq.len(), k)?;
    let sums = partition_sums(seq.values(), &partition)?;
    Ok((sums, partition))
}

/// Laplace draw by inverse CDF from `u` in `(-1/2, 1/2)`.
pub fn laplace_from_uniform(u: f64, scale: f64) -> f64 {
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// One draw from `Lap(scale)`: mean 0, `E|X| = scale`, standard deviation `sqrt(2) * scale`.
pub fn laplace_sample<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidScale(scale));
    }
    Ok(laplace_draw(scale, rng))
}

pub(crate) fn laplace_draw<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    loop {
        let u = rng.gen::<f64>() - 0.5;
        if u > -0.5 {
            return laplace_from_uniform(u, scale);
        }
    }
}

/// Whether mechanisms perturb their output. `Off` exists for tests and
/// calibration runs and gives no privacy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    #[default]
    On,
    Off,
}

impl Noise {
    pub(crate) fn draw<R: Rng + ?Sized>(self, scale: f64, rng: &mut R) -> f64 {
        match self {
            Noise::On => laplace_draw(scale, rng),
            Noise::Off => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupSize {
    Fixed(usize),
    /// Chosen from the bundled error table for the given `n` and `epsilon`.
    Auto,
}

impl GroupSize {
    pub fn resolve(self, n: usize, epsilon: f64) -> Result<usize> {
        match self {
            GroupSize::Fixed(k) if k == 0 || k > n => Err(Error::InvalidGroupSize { k, n }),
            GroupSize::Fixed(k) => Ok(k),
            GroupSize::Auto if n < 2 => Ok(1),
            GroupSize::Auto => Ok(error_model::choose_group_size(
                n,
                epsilon,
                error_model::default_table(),
            )),
        }
    }
}

impl std::str::FromStr for GroupSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(GroupSize::Auto);
        }
        match s.parse::<usize>() {
            Ok(k) if k > 0 => Ok(GroupSize::Fixed(k)),
            _ => Err(Error::InvalidParameter(format!("group size must be a positive integer or `auto`, got {s:?}"))),
        }
    }
}

/// The published artifact: noisy group sums plus everything a consumer
/// needs to reconstruct. Sums are unclamped and carry no ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReleaseDoc", into = "ReleaseDoc")]
pub struct Release {
    pub noisy_sums: Vec<f64>,
    pub group_size: usize,
    pub tail_size: usize,
    pub epsilon: f64,
    pub hilbert: HilbertConfig,
    pub noise: Noise,
    pub meta: Meta,
}

impl Release {
    pub fn n(&self) -> usize {
        (self.noisy_sums.len() - 1) * self.group_size + self.tail_size
    }

    pub fn partition(&self) -> GroupPartition {
        GroupPartition::equal(self.n(), self.group_size)
            .expect("validated release has a consistent partition")
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.noisy_sums.is_empty() {
            return Err(Error::Parse("release has no sums".into()));
        }
        if self.group_size == 0 || self.tail_size == 0 || self.tail_size > self.group_size {
            return Err(Error::Parse(format!(
                "inconsistent group_size {} / tail_size {}",
                self.group_size, self.tail_size
            )));
        }
        if let Some(v) = self.noisy_sums.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("non-finite sum {v}")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        io::to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        io::from_json(text)
    }
}

#[derive(Serialize, Deserialize)]
struct ReleaseDoc {
    kind: String,
    #[serde(serialize_with = "io::ser_f64")]
    epsilon: f64,
    group_size: usize,
    tail_size: usize,
    n: usize,
    hilbert_order: u32,
    #[serde(serialize_with = "io::ser_rect", deserialize_with = "io::de_rect")]
    domain_rect: Rect,
    noise: Noise,
    #[serde(serialize_with = "io::ser_f64_seq")]
    noisy_sums: Vec<f64>,
    #[serde(default)]
    meta: Meta,
}

const RELEASE_KIND: &str = "release";

impl From<Release> for ReleaseDoc {
    fn from(r: Release) -> Self {
        ReleaseDoc {
            kind: RELEASE_KIND.into(),
            epsilon: r.epsilon,
            group_size: r.group_size,
            tail_size: r.tail_size,
            n: r.n(),
            hilbert_order: r.hilbert.order(),
            domain_rect: r.hilbert.domain(),
            noise: r.noise,
            noisy_sums: r.noisy_sums,
            meta: r.meta,
        }
    }
}

impl TryFrom<ReleaseDoc> for Release {
    type Error = Error;

    fn try_from(d: ReleaseDoc) -> Result<Self> {
        if d.kind != RELEASE_KIND {
            return Err(Error::Parse(format!("expected kind `release`, got {:?}", d.kind)));
        }
        let r = Release {
            noisy_sums: d.noisy_sums,
            group_size: d.group_size,
            tail_size: d.tail_size,
            epsilon: d.epsilon,
            hilbert: HilbertConfig::new(d.hilbert_order, d.domain_rect)?,
            noise: d.noise,
            meta: d.meta,
        };
        r.validate()?;
        if r.n() != d.n {
            return Err(Error::Parse(format!("declared n = {} but sums imply {}", d.n, r.n())));
        }
        Ok(r)
    }
}

/// Publishes an already-projected sorted sequence.
pub fn publish_sorted<R: Rng + ?Sized>(
    seq: &SortedUnitSequence,
    epsilon: f64,
    group_size: GroupSize,
    hilbert: HilbertConfig,
    noise: Noise,
    rng: &mut R,
) -> Result<Release> {
    check_epsilon(epsilon)?;
    if seq.is_empty() {
        return Err(Error::Empty);
    }
    let k = group_size.resolve(seq.len(), epsilon)?;
    let (sums, partition) = group_sums(seq, k)?;
    let scale = 1.0 / epsilon;
    let noisy_sums = sums.into_iter().map(|s| s + noise.draw(scale, rng)).collect();
    let tail_size = partition.block(partition.num_blocks() - 1).len();
    Ok(Release {
        noisy_sums,
        group_size: k,
        tail_size,
        epsilon,
        hilbert,
        noise,
        meta: Meta::new(None),
    })
}

/// Maps points onto the curve, sorts, groups and perturbs the group sums.
pub fn publish<R: Rng + ?Sized>(
    points: &[Point2D],
    epsilon: f64,
    group_size: GroupSize,
    cfg: &HilbertConfig,
    noise: Noise,
    rng: &mut R,
) -> Result<Release> {
    check_epsilon(epsilon)?;
    if points.is_empty() {
        return Err(Error::Empty);
    }
    let seq = sort_sequence(map_dataset(points, cfg)?)?;
    publish_sorted(&seq, epsilon, group_size, *cfg, noise, rng)
}

/// Forces the sequence to length `target`: pad with leading zeros, or drop
/// the smallest elements.
pub fn pad_to_size(seq: &SortedUnitSequence, target: usize) -> SortedUnitSequence {
    let n = seq.len();
    let values = if target >= n {
        let mut v = vec![0.0; target - n];
        v.extend_from_slice(seq.values());
        v
    } else {
        seq.values()[n - target..].to_vec()
    };
    SortedUnitSequence(values)
}

pub const DEFAULT_SIZE_BUDGET_SHARE: f64 = 0.1;

/// Releases a noisy size with `share * epsilon_total`, pads the data to that
/// size, then publishes it with the remaining budget.
pub fn publish_with_private_size<R: Rng + ?Sized>(
    points: &[Point2D],
    epsilon_total: f64,
    share: f64,
    group_size: GroupSize,
    cfg: &HilbertConfig,
    noise: Noise,
    rng: &mut R,
) -> Result<(usize, Release)> {
    check_epsilon(epsilon_total)?;
    if !(share > 0.0 && share < 1.0) {
        return Err(Error::InvalidParameter(format!("budget share must lie in (0, 1), got {share}")));
    }
    if points.is_empty() {
        return Err(Error::Empty);
    }
    let (eps_size, eps_data) = split_budget(epsilon_total, share);
    let seq = sort_sequence(map_dataset(points, cfg)?)?;
    let n = seq.len() as f64;
    let noisy_n = (n + noise.draw(1.0 / eps_size, rng)).round().max(1.0) as usize;
    let padded = pad_to_size(&seq, noisy_n);
    let release = publish_sorted(&padded, eps_data, group_size, *cfg, noise, rng)?;
    Ok((noisy_n, release))
}

/// `(share * total, total - share * total)`; the parts add back to `total` exactly.
pub fn split_budget(total: f64, share: f64) -> (f64, f64) {
    let first = share * total;
    (first, total - first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq(v: &[f64]) -> SortedUnitSequence {
        SortedUnitSequence::new(v.to_vec()).unwrap()
    }

    fn l1(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    }

    #[test]
    fn sorting_examples() {
        assert_eq!(sort_sequence(vec![0.5]).unwrap().values(), &[0.5]);
        assert_eq!(sort_sequence(vec![0.9, 0.1, 0.5]).unwrap().values(), &[0.1, 0.5, 0.9]);
        assert!(matches!(sort_sequence(vec![]), Err(Error::Empty)));
        assert!(matches!(
            sort_sequence(vec![0.2, 1.5]),
            Err(Error::OutsideUnitInterval { index: 1, .. })
        ));
        assert!(SortedUnitSequence::new(vec![0.3, 0.2]).is_err());
    }

    #[test]
    fn neighbor_distance_telescopes() {
        let d1 = sort_sequence(vec![0.2, 0.4, 0.9]).unwrap();
        let d2 = sort_sequence(vec![0.2, 0.95, 0.9]).unwrap();
        let d = l1(d1.values(), d2.values());
        assert!((d - 0.55).abs() < 1e-12);
    }

    #[test]
    fn grouping_examples() {
        let (s, p) = group_sums(&seq(&[0.1, 0.2, 0.3, 0.4]), 2).unwrap();
        assert!((s[0] - 0.3).abs() < 1e-12 && (s[1] - 0.7).abs() < 1e-12);
        assert_eq!(p.sizes(), vec![2, 2]);

        let (s, p) = group_sums(&seq(&[0.1, 0.2, 0.3]), 2).unwrap();
        assert!((s[0] - 0.3).abs() < 1e-12 && (s[1] - 0.3).abs() < 1e-12);
        assert_eq!(p.sizes(), vec![2, 1]);

        let v = [0.05, 0.3, 0.3, 0.8];
        assert_eq!(group_sums(&seq(&v), 1).unwrap().0, v.to_vec());

        assert!(matches!(group_sums(&seq(&v), 5), Err(Error::InvalidGroupSize { k: 5, n: 4 })));
        assert!(group_sums(&seq(&v), 0).is_err());
    }

    #[test]
    fn laplace_median_is_zero() {
        assert_eq!(laplace_from_uniform(0.0, 3.0), 0.0);
        assert!(laplace_sample(0.0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(laplace_sample(f64::NAN, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn laplace_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let (mut sum, mut abs) = (0.0, 0.0);
        for _ in 0..n {
            let x = laplace_sample(1.0, &mut rng).unwrap();
            sum += x;
            abs += x.abs();
        }
        assert!((sum / n as f64).abs() < 0.005);
        let b = 2.5;
        let mut abs_b = 0.0;
        for _ in 0..n {
            abs_b += laplace_sample(b, &mut rng).unwrap().abs();
        }
        assert!(((abs / n as f64) - 1.0).abs() < 0.01);
        assert!(((abs_b / n as f64) - b).abs() < 0.01 * b);
    }

    #[test]
    fn zero_noise_publish_is_grouped_sort() {
        let cfg = HilbertConfig::unit(6).unwrap();
        let pts: Vec<Point2D> = (0..37)
            .map(|i| Point2D::new((i as f64 * 0.37) % 1.0, (i as f64 * 0.11) % 1.0))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = publish(&pts, 1.0, GroupSize::Fixed(5), &cfg, Noise::Off, &mut rng).unwrap();
        let expect = group_sums(&sort_sequence(map_dataset(&pts, &cfg).unwrap()).unwrap(), 5)
            .unwrap()
            .0;
        assert_eq!(r.noisy_sums, expect);
        assert_eq!((r.group_size, r.tail_size, r.n()), (5, 2, 37));
    }

    #[test]
    fn seeded_publish_is_deterministic() {
        let cfg = HilbertConfig::default();
        let pts: Vec<Point2D> = (0..100).map(|i| Point2D::new(i as f64 / 100.0, 0.3)).collect();
        let run = || {
            publish(&pts, 0.7, GroupSize::Fixed(3), &cfg, Noise::On, &mut ChaCha8Rng::seed_from_u64(99))
                .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.noisy_sums, b.noisy_sums);
        assert_ne!(a.noisy_sums, publish(&pts, 0.7, GroupSize::Fixed(3), &cfg, Noise::Off,
            &mut ChaCha8Rng::seed_from_u64(99)).unwrap().noisy_sums);
    }

    #[test]
    fn publish_rejects_bad_input() {
        let cfg = HilbertConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = [Point2D::new(0.5, 0.5)];
        assert!(matches!(
            publish(&pts, 0.0, GroupSize::Fixed(1), &cfg, Noise::On, &mut rng),
            Err(Error::InvalidEpsilon(_))
        ));
        assert!(publish(&pts, -1.0, GroupSize::Auto, &cfg, Noise::On, &mut rng).is_err());
        assert!(publish(&[], 1.0, GroupSize::Auto, &cfg, Noise::On, &mut rng).is_err());
        assert!(matches!(
            publish(&[Point2D::new(2.0, 0.0)], 1.0, GroupSize::Auto, &cfg, Noise::On, &mut rng),
            Err(Error::OutsideDomain { index: 0, .. })
        ));
    }

    #[test]
    fn padding_rule() {
        assert_eq!(pad_to_size(&seq(&[0.3, 0.7]), 4).values(), &[0.0, 0.0, 0.3, 0.7]);
        assert_eq!(pad_to_size(&seq(&[0.1, 0.3, 0.7]), 2).values(), &[0.3, 0.7]);
        let s = seq(&[0.1, 0.3, 0.7]);
        assert_eq!(pad_to_size(&s, 3), s);
    }

    #[test]
    fn private_size_zero_noise_matches_plain_publish() {
        let cfg = HilbertConfig::unit(8).unwrap();
        let pts: Vec<Point2D> = (0..50).map(|i| Point2D::new(0.02 * i as f64, 0.5)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, r) = publish_with_private_size(&pts, 2.0, 0.5, GroupSize::Fixed(4), &cfg, Noise::Off, &mut rng)
            .unwrap();
        assert_eq!(n, 50);
        let plain = publish(&pts, 1.0, GroupSize::Fixed(4), &cfg, Noise::Off, &mut rng).unwrap();
        assert_eq!(r, plain);
    }

    #[test]
    fn private_size_budget_and_determinism() {
        for (total, share) in [(1.0, 0.1), (0.3, 0.25), (7.0, 0.9)] {
            let (a, b) = split_budget(total, share);
            assert_eq!(a + b, total);
        }
        let cfg = HilbertConfig::default();
        let pts: Vec<Point2D> = (0..200).map(|i| Point2D::new(0.005 * i as f64, 0.25)).collect();
        let run = || {
            publish_with_private_size(&pts, 1.0, DEFAULT_SIZE_BUDGET_SHARE, GroupSize::Fixed(10), &cfg,
                Noise::On, &mut ChaCha8Rng::seed_from_u64(5)).unwrap()
        };
        let (n1, r1) = run();
        let (n2, r2) = run();
        assert_eq!(n1, n2);
        assert_eq!(r1, r2);
        assert_eq!(r1.n(), n1);
        assert!((r1.epsilon - 0.9).abs() < 1e-12);
        assert!(publish_with_private_size(&pts, 1.0, 1.0, GroupSize::Auto, &cfg, Noise::On,
            &mut ChaCha8Rng::seed_from_u64(5)).is_err());
    }

    #[test]
    fn release_json_round_trip() {
        let r = Release {
            noisy_sums: vec![0.1, -2.0 / 3.0, 5.25],
            group_size: 4,
            tail_size: 3,
            epsilon: 0.3,
            hilbert: HilbertConfig::new(9, Rect::new(-1.0, -2.0, 3.0, 4.0).unwrap()).unwrap(),
            noise: Noise::On,
            meta: Meta::new(Some(42)),
        };
        let text = r.to_json().unwrap();
        assert!(text.contains("\"n\": 11"));
        assert_eq!(Release::from_json(&text).unwrap(), r);
    }

    #[test]
    fn malformed_release_rejected() {
        let good = Release {
            noisy_sums: vec![1.0],
            group_size: 2,
            tail_size: 2,
            epsilon: 1.0,
            hilbert: HilbertConfig::default(),
            noise: Noise::On,
            meta: Meta::default(),
        }
        .to_json()
        .unwrap();
        assert!(Release::from_json(&good.replace("\"tail_size\": 2", "\"tail_size\": 3")).is_err());
        assert!(Release::from_json(&good.replace("\"n\": 2", "\"n\": 5")).is_err());
        assert!(Release::from_json("{}").is_err());
        assert!(Release::from_json("not json").is_err());
    }

    #[test]
    fn group_size_parsing() {
        assert_eq!("auto".parse::<GroupSize>().unwrap(), GroupSize::Auto);
        assert_eq!("17".parse::<GroupSize>().unwrap(), GroupSize::Fixed(17));
        assert!("0".parse::<GroupSize>().is_err());
        assert!("x".parse::<GroupSize>().is_err());
    }
}
