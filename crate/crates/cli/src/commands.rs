use std::io::Write;
use std::path::Path;

use geodp::baselines::{
    equiwidth_publish, equiwidth_range_count, wavelet::wavelet_range_count_with, wavelet_publish, NoisyHistogram2D,
    NoisyWaveletTransform,
};
use geodp::error_model::{
    build_error_table, default_table, DatasetFamily, ErrorTable, DEFAULT_TABLE_EPSILONS, DEFAULT_TABLE_SIZES,
};
use geodp::estimators::{diffuse_for_viz, median_from_release};
use geodp::io::{self, fmt17};
use geodp::{synth, GroupSize, HilbertConfig, RangeCounter, Rect, Release};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::provenance::{self, write_csv};
use crate::{
    input_err, internal_err, CmdResult, Failure, Mechanism, PublishArgs, QueryArgs, ReconstructArgs, SynthArgs,
    SynthFamily, TableBuildArgs, TablePrintArgs,
};

pub(crate) fn check_epsilon(eps: f64) -> Result<(), Failure> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(input_err(format!("--epsilon must be finite and > 0, got {eps}")))
    }
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn write_value_column(buf: &mut Vec<u8>, values: &[f64]) -> Result<(), Failure> {
    writeln!(buf, "value")?;
    io::write_values(&mut *buf, values)?;
    Ok(())
}

pub fn synth(a: &SynthArgs) -> CmdResult {
    if a.n == 0 && a.family != SynthFamily::MedianSet {
        return Err(input_err("-n must be positive"));
    }
    let meta = provenance::meta("synth", Some(a.seed), a, &[])?;
    let mut rng = rng(a.seed);
    write_csv(&a.out, &meta, |buf| match a.family {
        SynthFamily::Repeating => write_value_column(buf, &synth::repeating_single_value(a.n)),
        SynthFamily::EquallySpaced => write_value_column(buf, &synth::equally_spaced(a.n)),
        SynthFamily::Uniform => write_value_column(buf, &synth::uniform_sorted(a.n, &mut rng)),
        SynthFamily::Exponential => write_value_column(buf, &synth::exponential_sorted(a.n, &mut rng)),
        SynthFamily::MedianSet => {
            if !(a.ls > 0.0 && a.ls < 1.0) {
                return Err(input_err(format!("--ls must lie in (0, 1), got {}", a.ls)));
            }
            write_value_column(buf, &synth::median_set(a.ls, &mut rng))
        }
        SynthFamily::Clustered => {
            io::write_points(&mut *buf, &synth::clustered_2d(a.n, &mut rng))?;
            Ok(())
        }
    })?;
    eprintln!("wrote {} ({:?}, seed {})", a.out.display(), a.family, a.seed);
    Ok(())
}

fn domain_of(domain: &Option<Vec<f64>>) -> Result<Rect, Failure> {
    match domain.as_deref() {
        None => Ok(Rect::unit()),
        Some([a, b, c, d]) => Ok(Rect::new(*a, *b, *c, *d)?),
        Some(other) => Err(input_err(format!("--domain needs four numbers, got {}", other.len()))),
    }
}

pub fn publish(a: &PublishArgs) -> CmdResult {
    check_epsilon(a.epsilon)?;
    let group_size: GroupSize = a.k.parse()?;
    let domain = domain_of(&a.domain)?;
    let points = io::read_points_file(&a.input)?;
    if points.is_empty() {
        return Err(input_err(format!("{} holds no points", a.input.display())));
    }
    let meta = provenance::meta("publish", Some(a.seed), a, &[&a.input])?;
    let mut rng = rng(a.seed);
    let noise = a.noise.into();
    let json = match a.mechanism {
        Mechanism::Grouped => {
            let cfg = HilbertConfig::new(a.order, domain)?;
            let mut release = geodp::publish(&points, a.epsilon, group_size, &cfg, noise, &mut rng)?;
            if release.n() != points.len() {
                return Err(internal_err(format!("release covers {} records, input has {}", release.n(), points.len())));
            }
            eprintln!(
                "n={} k={} epsilon={} groups={}",
                release.n(),
                release.group_size,
                release.epsilon,
                release.noisy_sums.len()
            );
            release.meta = meta;
            release.to_json()?
        }
        Mechanism::Equiwidth => {
            let mut h = equiwidth_publish(&points, a.bins, a.epsilon, &domain, noise, &mut rng)?;
            eprintln!("n={} bins_per_axis={} epsilon={}", h.n, h.bins_per_axis, h.epsilon);
            h.meta = meta;
            io::to_json(&h)?
        }
        Mechanism::Wavelet => {
            let mut w = wavelet_publish(&points, a.levels, a.epsilon, &domain, noise, &mut rng)?;
            eprintln!("n={} levels={} epsilon={}", w.n, w.levels, w.epsilon);
            w.meta = meta;
            io::to_json(&w)?
        }
    };
    std::fs::write(&a.out, json)?;
    Ok(())
}

fn read_release(path: &Path) -> Result<Release, Failure> {
    Ok(Release::from_json(&std::fs::read_to_string(path)?)?)
}

pub fn reconstruct(a: &ReconstructArgs) -> CmdResult {
    let release = read_release(&a.release)?;
    let rec = geodp::reconstruct(&release)?;
    if rec.points2d.len() != release.n() || rec.values1d.windows(2).any(|w| w[0] > w[1]) {
        return Err(internal_err("reconstruction is not a monotone sequence of n values"));
    }
    let meta = provenance::meta("reconstruct", Some(a.seed), a, &[&a.release])?;
    let points = if a.diffuse {
        diffuse_for_viz(&rec.points2d, &release.hilbert, &mut rng(a.seed))
    } else {
        rec.points2d
    };
    write_csv(&a.out, &meta, |buf| Ok(io::write_points(&mut *buf, &points)?))?;
    if let Some(path) = &a.values_out {
        write_csv(path, &meta, |buf| write_value_column(buf, &rec.values1d))?;
    }
    eprintln!("reconstructed {} points", points.len());
    Ok(())
}

enum Published {
    Grouped(Release),
    Histogram(NoisyHistogram2D),
    Wavelet(NoisyWaveletTransform),
}

fn read_published(path: &Path) -> Result<Published, Failure> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    match value.get("kind").and_then(|k| k.as_str()) {
        Some("release") => Ok(Published::Grouped(Release::from_json(&text)?)),
        Some("equiwidth_histogram") => Ok(Published::Histogram(io::from_json(&text)?)),
        Some("haar_wavelet") => Ok(Published::Wavelet(io::from_json(&text)?)),
        other => Err(input_err(format!("{}: unknown document kind {other:?}", path.display()))),
    }
}

pub fn query(a: &QueryArgs) -> CmdResult {
    let published = read_published(&a.release)?;
    let mut inputs: Vec<&Path> = vec![&a.release];
    if let Some(q) = &a.queries {
        inputs.push(q);
    }
    let seed = match &published {
        Published::Grouped(r) => r.meta.seed,
        Published::Histogram(h) => h.meta.seed,
        Published::Wavelet(w) => w.meta.seed,
    };
    let meta = provenance::meta("query", seed, a, &inputs)?;
    if a.median {
        let Published::Grouped(release) = &published else {
            return Err(input_err("--median needs a grouped release"));
        };
        let (v, p) = median_from_release(release)?;
        write_csv(&a.out, &meta, |buf| {
            writeln!(buf, "value,x,y")?;
            writeln!(buf, "{},{},{}", fmt17(v), fmt17(p.x), fmt17(p.y))?;
            Ok(())
        })?;
    } else {
        let path = a.queries.as_ref().expect("clap requires --queries without --median");
        let rects = io::read_rects(std::fs::File::open(path)?)?;
        let answers: Vec<f64> = match &published {
            Published::Grouped(release) => {
                let counter = RangeCounter::from_release(release)?;
                rects.iter().map(|q| counter.count(q)).collect()
            }
            Published::Histogram(h) => rects.iter().map(|q| equiwidth_range_count(h, q)).collect(),
            Published::Wavelet(w) => {
                let hist = w.histogram();
                rects.iter().map(|q| wavelet_range_count_with(w, &hist, q)).collect()
            }
        };
        write_csv(&a.out, &meta, |buf| {
            writeln!(buf, "min_x,min_y,max_x,max_y,count")?;
            for (r, c) in rects.iter().zip(&answers) {
                let [x0, y0, x1, y1] = r.as_array().map(fmt17);
                writeln!(buf, "{x0},{y0},{x1},{y1},{}", fmt17(*c))?;
            }
            Ok(())
        })?;
    }
    if let Some(path) = &a.density_out {
        let Published::Grouped(release) = &published else {
            return Err(input_err("--density-out needs a grouped release"));
        };
        let counter = RangeCounter::from_release(release)?;
        write_csv(path, &meta, |buf| Ok(counter.density().write_csv(&mut *buf)?))?;
    }
    Ok(())
}

pub fn table_build(a: &TableBuildArgs) -> CmdResult {
    let family: DatasetFamily = a.family.parse()?;
    let sizes = a.sizes.clone().unwrap_or_else(|| DEFAULT_TABLE_SIZES.to_vec());
    let epsilons = a.epsilons.clone().unwrap_or_else(|| DEFAULT_TABLE_EPSILONS.to_vec());
    for &e in &epsilons {
        check_epsilon(e)?;
    }
    if a.trials == 0 {
        return Err(input_err("--trials must be positive"));
    }
    let mut inputs: Vec<&Path> = Vec::new();
    if let DatasetFamily::FromFile(p) = &family {
        inputs.push(p);
    }
    let meta = provenance::meta("table build", Some(a.seed), a, &inputs)?;
    let mut table = build_error_table(&family, &sizes, &epsilons, a.trials, a.seed)?;
    table.meta = meta;
    std::fs::write(&a.out, table.to_json()?)?;
    eprintln!("wrote {}x{} table to {}", epsilons.len(), sizes.len(), a.out.display());
    Ok(())
}

pub fn table_print(a: &TablePrintArgs) -> CmdResult {
    let loaded;
    let table: &ErrorTable = match &a.table {
        Some(p) => {
            loaded = ErrorTable::from_json(&std::fs::read_to_string(p)?)?;
            &loaded
        }
        None => default_table(),
    };
    let mut buf = provenance::csv_preamble(&table.meta).into_bytes();
    writeln!(buf, "family,epsilon,n,err1")?;
    for (eps, row) in table.epsilons.iter().zip(&table.values) {
        for (n, v) in table.sizes.iter().zip(row) {
            writeln!(buf, "{},{},{n},{}", table.family, fmt17(*eps), fmt17(*v))?;
        }
    }
    match &a.out {
        Some(p) => std::fs::write(p, buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}
