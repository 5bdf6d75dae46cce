//! Error model for choosing the group size.
//!
//! Grouping `k` sorted values trades two effects. Replacing each block by its
//! mean costs a generalization error of at most `k / (2n)` (on average about
//! `k / (4n)`), while dividing a noisy block sum by `k` behaves like running
//! the ungrouped mechanism on `n / k` points with `epsilon` multiplied by `k`.
//! The expected normalized error is approximated by
//!
//! ```text
//! Err(k, n, eps) ~= k / (4n) + Err1(n / k, k * eps)
//! ```
//!
//! where `Err1` is read from a Monte-Carlo table of the ungrouped error.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_epsilon, Error, Result};
use crate::io::{self, Meta};
use crate::mechanism::{laplace_draw, GroupPartition};
use crate::regression::isotonic_l2;
use crate::synth::{self, derive_seed, stream_rng};
use crate::transform::{map_dataset, HilbertConfig, Point2D, Rect};

/// Block means; the final block may be shorter.
pub fn downsample(seq: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidGroupSize { k, n: seq.len() });
    }
    if seq.is_empty() {
        return Err(Error::Empty);
    }
    Ok(seq.chunks(k).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect())
}

/// Repeats each value over its block, producing `n` values.
pub fn upsample(seq: &[f64], k: usize, n: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidGroupSize { k, n });
    }
    if seq.len() != n.div_ceil(k) {
        return Err(Error::SizeMismatch { left: seq.len(), right: n.div_ceil(k) });
    }
    Ok((0..n).map(|i| seq[i / k]).collect())
}

/// Normalized generalization error `||D - up(down(D))||_1 / n`.
pub fn gen_error(seq: &[f64], k: usize) -> Result<f64> {
    let up = upsample(&downsample(seq, k)?, k, seq.len())?;
    Ok(l1(seq, &up) / seq.len() as f64)
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Earth mover's distance between equal-size multisets on the line.
pub fn emd_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { left: a.len(), right: b.len() });
    }
    Ok(l1(&sorted(a), &sorted(b)))
}

/// EMD approximated through the Hilbert projection.
pub fn emd_sfc(p: &[Point2D], q: &[Point2D], cfg: &HilbertConfig) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::SizeMismatch { left: p.len(), right: q.len() });
    }
    emd_1d(&map_dataset(p, cfg)?, &map_dataset(q, cfg)?)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
}

impl Estimate {
    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate { mean, std_err: (var / n).sqrt(), trials: xs.len() }
    }
}

/// Runs `trials` independent trials in parallel; results are collected in
/// trial order before any reduction.
fn run_trials<T: Send>(trials: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..trials).into_par_iter().map(f).collect()
}

/// Noisy reconstruction of sorted `seq` through groups `partition`; returns
/// the fitted group means clamped to `[0, 1]`.
fn noisy_fit<R: rand::Rng + ?Sized>(
    seq: &[f64],
    partition: &GroupPartition,
    epsilon: f64,
    rng: &mut R,
) -> Vec<f64> {
    let scale = 1.0 / epsilon;
    let means: Vec<f64> = partition
        .blocks()
        .map(|b| {
            let len = b.len() as f64;
            (seq[b].iter().sum::<f64>() + laplace_draw(scale, rng)) / len
        })
        .collect();
    isotonic_l2(&means).values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

/// Expected normalized error of the ungrouped mechanism on sorted `seq`.
pub fn estimate_err1_seq(seq: &[f64], epsilon: f64, trials: usize, seed: u64) -> Result<Estimate> {
    check_epsilon(epsilon)?;
    if seq.is_empty() {
        return Err(Error::Empty);
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let partition = GroupPartition::equal(seq.len(), 1)?;
    let n = seq.len() as f64;
    let samples = run_trials(trials, |t| {
        let mut rng = stream_rng(seed, t as u64);
        l1(seq, &noisy_fit(seq, &partition, epsilon, &mut rng)) / n
    });
    Ok(Estimate::from_samples(&samples))
}

/// Source of the sorted datasets the error table is measured on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFamily {
    RepeatingSingleValue,
    EquallySpaced,
    /// Records drawn without replacement from a file: a `value` column of
    /// curve positions, or points (`x,y` / `lat,lon`) projected over their
    /// bounding box.
    FromFile(PathBuf),
}

impl DatasetFamily {
    pub fn name(&self) -> String {
        match self {
            DatasetFamily::RepeatingSingleValue => "repeating".into(),
            DatasetFamily::EquallySpaced => "equally_spaced".into(),
            DatasetFamily::FromFile(p) => format!("file:{}", p.display()),
        }
    }

    /// A sorted dataset of size `n`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        match self {
            DatasetFamily::RepeatingSingleValue => Ok(synth::repeating_single_value(n)),
            DatasetFamily::EquallySpaced => Ok(synth::equally_spaced(n)),
            DatasetFamily::FromFile(path) => {
                let pool = load_unit_values(path)?;
                if n > pool.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{} holds {} records, {n} requested",
                        path.display(),
                        pool.len()
                    )));
                }
                let mut rng = stream_rng(seed, 0);
                let mut picked: Vec<f64> =
                    rand::seq::index::sample(&mut rng, pool.len(), n).into_iter().map(|i| pool[i]).collect();
                picked.sort_by(f64::total_cmp);
                Ok(picked)
            }
        }
    }
}

impl std::str::FromStr for DatasetFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "repeating" | "repeating_single_value" => Ok(Self::RepeatingSingleValue),
            "equally_spaced" | "equally-spaced" => Ok(Self::EquallySpaced),
            _ => match s.strip_prefix("file:") {
                Some(p) => Ok(Self::FromFile(PathBuf::from(p))),
                None => Err(Error::InvalidParameter(format!(
                    "unknown family {s:?} (expected repeating, equally_spaced or file:<path>)"
                ))),
            },
        }
    }
}

/// Reads curve positions from a `value` CSV, or projects a point CSV over
/// its bounding box at the default order.
pub fn load_unit_values(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap_or("").trim().to_ascii_lowercase();
    if header == "value" {
        let values: Vec<f64> = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad value {l:?}"))))
            .collect::<Result<_>>()?;
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutsideUnitInterval { index, value });
        }
        return Ok(values);
    }
    let points = io::read_points(text.as_bytes())?;
    let cfg = HilbertConfig::new(crate::transform::DEFAULT_ORDER, bounding_rect(&points)?)?;
    map_dataset(&points, &cfg)
}

/// Smallest rectangle holding every point, widened to unit size along any
/// degenerate axis.
pub fn bounding_rect(points: &[Point2D]) -> Result<Rect> {
    if points.is_empty() {
        return Err(Error::Empty);
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::NonFinite(p.x, p.y));
        }
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    Rect::new(x0, y0, x1, y1)
}

/// `Err1` for a dataset family of size `n`.
pub fn estimate_err1(family: &DatasetFamily, n: usize, epsilon: f64, trials: usize, seed: u64) -> Result<f64> {
    let data = family.sample(n, derive_seed(seed, n as u64))?;
    Ok(estimate_err1_seq(&data, epsilon, trials, seed)?.mean)
}

/// Measured grouped error next to the two terms of its upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupedError {
    /// `E[EMD(D, reconstruction)] / n` at group size `k`.
    pub measured: Estimate,
    /// `E[sum_i |h_i| * |mean_i - fit_i|] / n`, the Laplace term of the bound.
    /// Equals `Err1` of the downsampled data at `k * epsilon` when `k | n`.
    pub laplace: Estimate,
    /// Normalized generalization error.
    pub gen: f64,
}

impl GroupedError {
    pub fn bound(&self) -> f64 {
        self.gen + self.laplace.mean
    }
}

/// Runs the grouped mechanism on sorted `seq` and measures both the actual
/// error and the bound terms on the same noise draws.
pub fn estimate_grouped_error(seq: &[f64], k: usize, epsilon: f64, trials: usize, seed: u64) -> Result<GroupedError> {
    check_epsilon(epsilon)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let partition = GroupPartition::equal(seq.len(), k)?;
    let means = downsample(seq, k)?;
    let n = seq.len() as f64;
    let pairs = run_trials(trials, |t| {
        let mut rng = stream_rng(seed, t as u64);
        let fit = noisy_fit(seq, &partition, epsilon, &mut rng);
        let mut measured = 0.0;
        let mut laplace = 0.0;
        for ((block, f), m) in partition.blocks().zip(&fit).zip(&means) {
            laplace += block.len() as f64 * (m - f).abs();
            measured += seq[block].iter().map(|x| (x - f).abs()).sum::<f64>();
        }
        (measured / n, laplace / n)
    });
    let (measured, laplace): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(GroupedError {
        measured: Estimate::from_samples(&measured),
        laplace: Estimate::from_samples(&laplace),
        gen: gen_error(seq, k)?,
    })
}

/// Monte-Carlo `Err1` over a grid of sizes (columns) and epsilons (rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableDoc", into = "TableDoc")]
pub struct ErrorTable {
    pub family: String,
    pub sizes: Vec<usize>,
    pub epsilons: Vec<f64>,
    /// `values[row][col]` is `Err1(sizes[col], epsilons[row])`.
    pub values: Vec<Vec<f64>>,
    pub trials: usize,
    pub seed: u64,
    pub meta: Meta,
}

#[derive(Serialize, Deserialize)]
struct TableDoc {
    kind: String,
    family: String,
    sizes: Vec<usize>,
    #[serde(serialize_with = "io::ser_f64_seq")]
    epsilons: Vec<f64>,
    #[serde(serialize_with = "io::ser_f64_grid")]
    values: Vec<Vec<f64>>,
    trials: usize,
    seed: u64,
    #[serde(default)]
    meta: Meta,
}

const TABLE_KIND: &str = "error_table";

impl From<ErrorTable> for TableDoc {
    fn from(t: ErrorTable) -> Self {
        TableDoc {
            kind: TABLE_KIND.into(),
            family: t.family,
            sizes: t.sizes,
            epsilons: t.epsilons,
            values: t.values,
            trials: t.trials,
            seed: t.seed,
            meta: t.meta,
        }
    }
}

impl TryFrom<TableDoc> for ErrorTable {
    type Error = Error;

    fn try_from(d: TableDoc) -> Result<Self> {
        if d.kind != TABLE_KIND {
            return Err(Error::Parse(format!("expected kind `error_table`, got {:?}", d.kind)));
        }
        let t = ErrorTable {
            family: d.family,
            sizes: d.sizes,
            epsilons: d.epsilons,
            values: d.values,
            trials: d.trials,
            seed: d.seed,
            meta: d.meta,
        };
        t.validate()?;
        Ok(t)
    }
}

/// A table read, flagged when the query fell outside the grid and was clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lookup {
    pub value: f64,
    pub extrapolated: bool,
}

impl ErrorTable {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Parse(format!("error table: {msg}")));
        if self.sizes.is_empty() || self.epsilons.is_empty() {
            return bad("empty grid");
        }
        if self.sizes[0] == 0 || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sizes must be positive and strictly increasing");
        }
        if self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0))
            || self.epsilons.windows(2).any(|w| w[0] >= w[1])
        {
            return bad("epsilons must be positive and strictly increasing");
        }
        if self.values.len() != self.epsilons.len()
            || self.values.iter().any(|r| r.len() != self.sizes.len())
        {
            return bad("value grid does not match the axes");
        }
        if self.values.iter().flatten().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("values must be finite and > 0");
        }
        Ok(())
    }

    /// `Err1(n, epsilon)`: log-log linear in `n`; an epsilon off the grid is
    /// served by the nearest row scaled by `row_eps / epsilon`.
    pub fn lookup(&self, n: f64, epsilon: f64) -> Lookup {
        let row = self
            .epsilons
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = (a.1.ln() - epsilon.ln()).abs();
                let db = (b.1.ln() - epsilon.ln()).abs();
                da.total_cmp(&db)
            })
            .map(|(i, _)| i)
            .expect("nonempty epsilon grid");
        let row_eps = self.epsilons[row];
        let scale = if row_eps == epsilon { 1.0 } else { row_eps / epsilon };
        let ys = &self.values[row];
        let xs = &self.sizes;
        let first = xs[0] as f64;
        let last = *xs.last().unwrap() as f64;
        let (value, extrapolated) = if n <= first {
            (ys[0], n < first)
        } else if n >= last {
            (*ys.last().unwrap(), n > last)
        } else {
            let j = xs.partition_point(|&s| (s as f64) <= n);
            if xs[j - 1] as f64 == n {
                return Lookup { value: ys[j - 1] * scale, extrapolated: false };
            }
            let (x0, x1) = ((xs[j - 1] as f64).ln(), (xs[j] as f64).ln());
            let (y0, y1) = (ys[j - 1].ln(), ys[j].ln());
            let t = (n.ln() - x0) / (x1 - x0);
            ((y0 + t * (y1 - y0)).exp(), false)
        };
        Lookup { value: value * scale, extrapolated }
    }

    pub fn to_json(&self) -> Result<String> {
        io::to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        io::from_json(text)
    }
}

pub fn build_error_table(
    family: &DatasetFamily,
    sizes: &[usize],
    epsilons: &[f64],
    trials: usize,
    seed: u64,
) -> Result<ErrorTable> {
    if sizes.is_empty() || epsilons.is_empty() {
        return Err(Error::InvalidParameter("table grids must be nonempty".into()));
    }
    let mut values = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut row = Vec::with_capacity(sizes.len());
        for &n in sizes {
            let cell_seed = derive_seed(derive_seed(seed, n as u64), eps.to_bits());
            row.push(estimate_err1(family, n, eps, trials, cell_seed)?);
        }
        values.push(row);
    }
    let table = ErrorTable {
        family: family.name(),
        sizes: sizes.to_vec(),
        epsilons: epsilons.to_vec(),
        values,
        trials,
        seed,
        meta: Meta::new(Some(seed)),
    };
    table.validate()?;
    Ok(table)
}

/// Size grid of the bundled table.
pub const DEFAULT_TABLE_SIZES: [usize; 30] = [
    1, 2, 3, 5, 8, 12, 20, 30, 50, 80, 120, 200, 300, 500, 800, 1_200, 2_000, 3_000, 5_000, 8_000,
    12_000, 20_000, 30_000, 50_000, 80_000, 120_000, 200_000, 300_000, 500_000, 1_000_000,
];
pub const DEFAULT_TABLE_EPSILONS: [f64; 1] = [1.0];
pub const DEFAULT_TABLE_TRIALS: usize = 500;
pub const DEFAULT_TABLE_SEED: u64 = 2013;

/// The bundled `Err1` table for the repeating single-value family, generated
/// with `geodp table build` at the defaults above.
pub fn default_table() -> &'static ErrorTable {
    static TABLE: OnceLock<ErrorTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        ErrorTable::from_json(include_str!("../data/err1_repeating.json"))
            .expect("bundled error table is valid")
    })
}

/// Predicted normalized error at group size `k`.
pub fn predict_err(n: usize, epsilon: f64, k: usize, table: &ErrorTable) -> Lookup {
    let gen = k as f64 / (4.0 * n as f64);
    let laplace = table.lookup(n as f64 / k as f64, k as f64 * epsilon);
    Lookup { value: gen + laplace.value, extrapolated: laplace.extrapolated }
}

/// Group size minimizing [`predict_err`]; ties go to the smaller `k`.
pub fn choose_group_size(n: usize, epsilon: f64, table: &ErrorTable) -> usize {
    if n < 2 {
        return 1;
    }
    let objective = |k: usize| predict_err(n, epsilon, k, table).value;
    let dense = n.min(100);
    let mut candidates: Vec<usize> = (1..=dense).collect();
    let upper = (n / 2).max(dense);
    if upper > dense {
        let steps = 200;
        let (lo, hi) = ((dense as f64).ln(), (upper as f64).ln());
        for i in 1..=steps {
            candidates.push((lo + (hi - lo) * i as f64 / steps as f64).exp().round() as usize);
        }
        candidates.sort_unstable();
        candidates.dedup();
    }
    let argmin = |ks: &mut dyn Iterator<Item = usize>| {
        let mut best = (usize::MAX, f64::INFINITY);
        for k in ks {
            let v = objective(k);
            if v < best.1 {
                best = (k, v);
            }
        }
        best.0
    };
    let coarse = argmin(&mut candidates.iter().copied());
    let pos = candidates.binary_search(&coarse).expect("coarse optimum is a candidate");
    let lo = candidates[pos.saturating_sub(1)];
    let hi = candidates[(pos + 1).min(candidates.len() - 1)];
    argmin(&mut (lo..=hi))
}
