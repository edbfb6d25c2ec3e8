//! Deterministic report emission: JSON with every float printed to 17
//! significant digits, and comma-separated CSV tables with a header row
//! and LF line endings.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::multiplicity::SweepReport;
use crate::radial::RadialSample;
use crate::shooting::Sample;

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Pretty JSON layout with fixed-precision floats.
struct FixedFloat<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Writes `value` as pretty JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut w, FixedFloat(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(io::Error::other)?;
    w.write_all(b"\n")
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    write_json(&mut buf, value).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn write_rows<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(&row)?;
    }
    out.flush()
}

/// Columns `x, u, u_prime`.
pub fn write_trajectory_csv<W: Write>(w: W, samples: &[Sample]) -> io::Result<()> {
    write_rows(
        w,
        &["x", "u", "u_prime"],
        samples
            .iter()
            .map(|s| vec![fmt_f64(s.x), fmt_f64(s.u), fmt_f64(s.u_prime)]),
    )
}

/// Columns `r, v, v_prime`.
pub fn write_radial_csv<W: Write>(w: W, samples: &[RadialSample]) -> io::Result<()> {
    write_rows(
        w,
        &["r", "v", "v_prime"],
        samples
            .iter()
            .map(|s| vec![fmt_f64(s.r), fmt_f64(s.v), fmt_f64(s.v_prime)]),
    )
}

/// One row per eigenvalue: `lambda0` on `[0, L]`, then `lambda1_i` on
/// each hump. Columns `name, start, end, lambda`.
pub fn write_eigen_csv<W: Write>(w: W, length: f64, humps: &[(f64, f64)], lambda0: f64, lambda1: &[f64]) -> io::Result<()> {
    let mut rows = vec![vec!["lambda0".to_string(), fmt_f64(0.0), fmt_f64(length), fmt_f64(lambda0)]];
    for (i, (&(s, t), &l)) in humps.iter().zip(lambda1).enumerate() {
        rows.push(vec![format!("lambda1_{}", i + 1), fmt_f64(s), fmt_f64(t), fmt_f64(l)]);
    }
    write_rows(w, &["name", "start", "end", "lambda"], rows)
}

/// Columns `mu, count, signatures, slopes`; list cells are `;`-joined.
pub fn write_sweep_csv<W: Write>(w: W, sweep: &SweepReport) -> io::Result<()> {
    write_rows(
        w,
        &["mu", "count", "signatures", "slopes"],
        sweep.rows.iter().map(|row| {
            vec![
                fmt_f64(row.mu),
                row.count.to_string(),
                row.signatures.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"),
                row.slopes.iter().map(|&d| fmt_f64(d)).collect::<Vec<_>>().join(";"),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Demo {
        b: f64,
        a: Vec<f64>,
        n: usize,
        bad: f64,
    }

    #[test]
    fn floats_have_17_digits_and_keys_keep_order() {
        let s = to_json_string(&Demo {
            b: 0.1,
            a: vec![1.0, -2.5e-300],
            n: 3,
            bad: f64::NAN,
        });
        assert!(s.contains("\"b\": 1.0000000000000001e-1"));
        assert!(s.contains("1.0000000000000000e0"));
        assert!(s.contains("-2.5000000000000000e-300"));
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("\"bad\": null"));
        assert!(s.find("\"b\"").unwrap() < s.find("\"a\"").unwrap());
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }

    #[test]
    fn csv_uses_lf_and_header() {
        let mut buf = Vec::new();
        let samples = [Sample { x: 0.0, u: 0.0, u_prime: 1.5 }];
        write_trajectory_csv(&mut buf, &samples).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "x,u,u_prime\n0.0000000000000000e0,0.0000000000000000e0,1.5000000000000000e0\n"
        );
    }

    #[test]
    fn every_f64_round_trips() {
        for x in [std::f64::consts::PI, 1.0 / 3.0, 5e-324, f64::MAX, -0.1] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
