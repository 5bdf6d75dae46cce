//! Experiment sweeps emitting `mechanism,parameter,error` rows.

use std::io::Write;

use geodp::baselines::{
    equiwidth_publish, equiwidth_range_count, smooth_sensitivity_median, wavelet::wavelet_range_count_with,
    wavelet_publish,
};
use geodp::error_model::{default_table, estimate_err1, estimate_grouped_error, DatasetFamily};
use geodp::estimators::median_from_release;
use geodp::io::fmt17;
use geodp::mechanism::sort_sequence;
use geodp::synth::{self, derive_seed, stream_rng};
use geodp::{choose_group_size, map_dataset, predict_err, GroupSize, HilbertConfig, Noise, Point2D, RangeCounter, Rect};
use rand::Rng;

use crate::commands::check_epsilon;
use crate::provenance::{self, write_csv};
use crate::{input_err, BenchArgs, CmdResult, Experiment, Failure};

type Row = (String, f64, f64);

pub fn run(a: &BenchArgs) -> CmdResult {
    check_epsilon(a.epsilon)?;
    if a.trials == 0 {
        return Err(input_err("--trials must be positive"));
    }
    let rows = match a.experiment {
        Experiment::ErrVsN => err_vs_n(a)?,
        Experiment::GroupSize => group_size(a)?,
        Experiment::Median => median(a)?,
        Experiment::Range => range(a)?,
    };
    let meta = provenance::meta("bench", Some(a.seed), a, &[])?;
    write_csv(&a.out, &meta, |buf| {
        writeln!(buf, "mechanism,parameter,error")?;
        for (m, p, e) in &rows {
            writeln!(buf, "{m},{},{}", fmt17(*p), fmt17(*e))?;
        }
        Ok(())
    })?;
    eprintln!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(())
}

fn err_vs_n(a: &BenchArgs) -> Result<Vec<Row>, Failure> {
    let mut rows = Vec::new();
    for name in &a.family {
        let family: DatasetFamily = name.parse()?;
        for &n in &a.sizes {
            if n == 0 {
                return Err(input_err("--sizes must be positive"));
            }
            let e = estimate_err1(&family, n, a.epsilon, a.trials, derive_seed(a.seed, n as u64))?;
            rows.push((family.name(), n as f64, e));
        }
    }
    Ok(rows)
}

fn clustered_sequence(a: &BenchArgs) -> Result<(Vec<Point2D>, Vec<f64>), Failure> {
    if a.n == 0 {
        return Err(input_err("-n must be positive"));
    }
    let points = synth::clustered_2d(a.n, &mut stream_rng(a.seed, u64::MAX));
    let cfg = HilbertConfig::new(a.order, Rect::unit())?;
    let seq = sort_sequence(map_dataset(&points, &cfg)?)?.into_inner();
    Ok((points, seq))
}

/// Measured error, its two-term bound and the table prediction against `k`
/// on clustered data.
fn group_size(a: &BenchArgs) -> Result<Vec<Row>, Failure> {
    let (_, seq) = clustered_sequence(a)?;
    let table = default_table();
    let mut rows = Vec::new();
    for &k in &a.ks {
        if k == 0 || k > a.n {
            return Err(input_err(format!("group size {k} outside 1..={}", a.n)));
        }
        let g = estimate_grouped_error(&seq, k, a.epsilon, a.trials, derive_seed(a.seed, k as u64))?;
        rows.push(("measured".into(), k as f64, g.measured.mean));
        rows.push(("bound".into(), k as f64, g.bound()));
        rows.push(("predicted".into(), k as f64, predict_err(a.n, a.epsilon, k, table).value));
    }
    eprintln!("auto group size for n={} epsilon={}: {}", a.n, a.epsilon, choose_group_size(a.n, a.epsilon, table));
    Ok(rows)
}

/// Mean absolute median error of the grouped release and of the
/// smooth-sensitivity mechanism on the 129-point constructed family.
fn median(a: &BenchArgs) -> Result<Vec<Row>, Failure> {
    let mut rows = Vec::new();
    let cfg = HilbertConfig::default();
    for (i, &ls) in a.ls.iter().enumerate() {
        if !(ls > 0.0 && ls < 1.0) {
            return Err(input_err(format!("local sensitivity {ls} outside (0, 1)")));
        }
        let (mut ours, mut smooth) = (0.0, 0.0);
        for t in 0..a.trials {
            let mut rng = stream_rng(derive_seed(a.seed, i as u64), t as u64);
            let values = synth::median_set(ls, &mut rng);
            let truth = values[geodp::baselines::smooth::median_index(values.len())];
            let seq = sort_sequence(values.clone())?;
            let release = geodp::publish_sorted(&seq, a.epsilon, GroupSize::Auto, cfg, Noise::On, &mut rng)?;
            ours += (median_from_release(&release)?.0 - truth).abs();
            let s = smooth_sensitivity_median(&values, a.epsilon, Noise::On, &mut rng)?;
            smooth += (s.noisy_median - truth).abs();
        }
        rows.push(("grouped".into(), ls, ours / a.trials as f64));
        rows.push(("smooth_sensitivity".into(), ls, smooth / a.trials as f64));
    }
    Ok(rows)
}

fn random_square<R: Rng + ?Sized>(w: f64, rng: &mut R) -> Rect {
    let x = rng.gen::<f64>() * (1.0 - w);
    let y = rng.gen::<f64>() * (1.0 - w);
    Rect { min_x: x, min_y: y, max_x: x + w, max_y: y + w }
}

fn exact_count(points: &[Point2D], q: &Rect) -> f64 {
    points.iter().filter(|p| p.x >= q.min_x && p.x < q.max_x && p.y >= q.min_y && p.y < q.max_y).count() as f64
}

/// Mean absolute range-count error per query side length, for the grouped
/// release (automatic `k`), a 41x41 equi-width histogram and a 9-level
/// wavelet histogram.
fn range(a: &BenchArgs) -> Result<Vec<Row>, Failure> {
    let (points, _) = clustered_sequence(a)?;
    let domain = Rect::unit();
    let cfg = HilbertConfig::new(a.order, domain)?;
    let mut qrng = stream_rng(a.seed, u64::MAX - 1);
    let mut batches = Vec::new();
    for &w in &a.widths {
        if !(w > 0.0 && w <= 1.0) {
            return Err(input_err(format!("query width {w} outside (0, 1]")));
        }
        let qs: Vec<Rect> = (0..a.queries).map(|_| random_square(w, &mut qrng)).collect();
        let exact: Vec<f64> = qs.iter().map(|q| exact_count(&points, q)).collect();
        batches.push((w, qs, exact));
    }
    let mut err = vec![[0.0f64; 3]; batches.len()];
    for t in 0..a.trials {
        let mut rng = stream_rng(a.seed, t as u64);
        let release = geodp::publish(&points, a.epsilon, GroupSize::Auto, &cfg, Noise::On, &mut rng)?;
        let counter = RangeCounter::from_release(&release)?;
        let hist = equiwidth_publish(&points, 41, a.epsilon, &domain, Noise::On, &mut rng)?;
        let wav = wavelet_publish(&points, 9, a.epsilon, &domain, Noise::On, &mut rng)?;
        let wav_hist = wav.histogram();
        for (b, (_, qs, exact)) in batches.iter().enumerate() {
            for (q, &x) in qs.iter().zip(exact) {
                err[b][0] += (counter.count(q) - x).abs();
                err[b][1] += (equiwidth_range_count(&hist, q) - x).abs();
                err[b][2] += (wavelet_range_count_with(&wav, &wav_hist, q) - x).abs();
            }
        }
    }
    let denom = (a.trials * a.queries.max(1)) as f64;
    let mut rows = Vec::new();
    for ((w, _, _), e) in batches.iter().zip(&err) {
        for (name, v) in ["grouped", "equiwidth", "wavelet"].iter().zip(e) {
            rows.push((name.to_string(), *w, v / denom));
        }
    }
    Ok(rows)
}
