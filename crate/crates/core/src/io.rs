//! Text documents: JSON-shaped artifacts and the CSV formats used by the CLI.
//!
//! Floating-point fields in JSON documents are written with 17 significant
//! digits so that every value parses back to the identical `f64`.

use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::transform::{Point2D, Rect};

fn raw17(v: f64) -> Box<RawValue> {
    // `{:e}` never yields NaN/inf for finite input, and its output is valid JSON.
    RawValue::from_string(format!("{v:.16e}")).expect("scientific notation is valid JSON")
}

pub(crate) fn ser_f64<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !v.is_finite() {
        return Err(serde::ser::Error::custom(format!("non-finite value {v}")));
    }
    raw17(*v).serialize(s)
}

pub(crate) fn ser_f64_seq<S: Serializer>(vs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(vs.len()))?;
    for v in vs {
        if !v.is_finite() {
            return Err(serde::ser::Error::custom(format!("non-finite value {v}")));
        }
        seq.serialize_element(&raw17(*v))?;
    }
    seq.end()
}

pub(crate) fn ser_f64_grid<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct Row<'a>(&'a [f64]);
    impl Serialize for Row<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            ser_f64_seq(self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for r in rows {
        seq.serialize_element(&Row(r))?;
    }
    seq.end()
}

pub(crate) fn ser_rect<S: Serializer>(r: &Rect, s: S) -> Result<S::Ok, S::Error> {
    ser_f64_seq(&r.as_array(), s)
}

pub(crate) fn de_rect<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Rect, D::Error> {
    let [a, b, c, e] = <[f64; 4] as serde::Deserialize>::deserialize(d)?;
    Rect::new(a, b, c, e).map_err(serde::de::Error::custom)
}

/// Provenance carried by every emitted document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Meta {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "crate_version")]
    pub version: String,
    #[serde(default)]
    pub config_hash: Option<String>,
}

fn crate_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

impl Meta {
    pub fn new(seed: Option<u64>) -> Self {
        Self { seed, version: crate_version(), config_hash: None }
    }
}

pub fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    std::fs::write(path, to_json(doc)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json(&std::fs::read_to_string(path)?)
}

/// Reads points from CSV with an `x,y` or `lat,lon` header. Lines starting
/// with `#` are skipped.
///
/// With `lat,lon`, longitude becomes `x` and latitude `y`.
pub fn read_points<R: Read>(reader: R) -> Result<Vec<Point2D>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let (xi, yi) = match (find("x"), find("y"), find("lat"), find("lon")) {
        (Some(x), Some(y), _, _) => (x, y),
        (_, _, Some(lat), Some(lon)) => (lon, lat),
        _ => {
            return Err(Error::Parse(format!(
                "expected an `x,y` or `lat,lon` header, found {headers:?}"
            )))
        }
    };
    let mut points = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            raw.parse::<f64>()
                .map_err(|_| Error::Parse(format!("row {}: cannot parse {raw:?}", row + 1)))
        };
        points.push(Point2D::new(field(xi)?, field(yi)?));
    }
    Ok(points)
}

pub fn read_points_file(path: &Path) -> Result<Vec<Point2D>> {
    read_points(std::fs::File::open(path)?)
}

pub fn write_points<W: Write>(writer: W, points: &[Point2D]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y"])?;
    for p in points {
        w.write_record([fmt17(p.x), fmt17(p.y)])?;
    }
    w.flush()?;
    Ok(())
}

/// One value per line.
pub fn write_values<W: Write>(mut writer: W, values: &[f64]) -> Result<()> {
    for v in values {
        writeln!(writer, "{}", fmt17(*v))?;
    }
    Ok(())
}

/// Reads rectangles from CSV with header `min_x,min_y,max_x,max_y`.
pub fn read_rects<R: Read>(reader: R) -> Result<Vec<Rect>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.deserialize::<(f64, f64, f64, f64)>() {
        let (a, b, c, d) = rec?;
        out.push(Rect::new(a, b, c, d)?);
    }
    Ok(out)
}

pub fn write_rects<W: Write>(writer: W, rects: &[Rect]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["min_x", "min_y", "max_x", "max_y"])?;
    for r in rects {
        w.write_record(r.as_array().map(fmt17))?;
    }
    w.flush()?;
    Ok(())
}

pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        #[derive(Serialize, serde::Deserialize)]
        struct Doc {
            #[serde(serialize_with = "ser_f64_seq")]
            v: Vec<f64>,
        }
        let v = vec![0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, f64::MIN_POSITIVE];
        let text = to_json(&Doc { v: v.clone() }).unwrap();
        assert!(text.contains("1.0000000000000001e-1"));
        let back: Doc = from_json(&text).unwrap();
        assert_eq!(back.v.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                   v.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn points_csv_headers() {
        let xy = "x,y\n0.1,0.2\n0.3,0.4\n";
        assert_eq!(read_points(xy.as_bytes()).unwrap()[1], Point2D::new(0.3, 0.4));
        let latlon = "id,lat,lon\n7,40.7,-74.0\n";
        assert_eq!(read_points(latlon.as_bytes()).unwrap()[0], Point2D::new(-74.0, 40.7));
        assert!(read_points("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_points("x,y\n1,oops\n".as_bytes()).is_err());
    }

    #[test]
    fn points_csv_round_trip() {
        let pts = vec![Point2D::new(0.1, 0.7), Point2D::new(1.0 / 3.0, 0.0)];
        let mut buf = Vec::new();
        write_points(&mut buf, &pts).unwrap();
        assert_eq!(read_points(buf.as_slice()).unwrap(), pts);
    }
}
