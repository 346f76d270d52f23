//! CSV and line-delimited JSON input and output.
//!
//! Input: comma-separated, UTF-8, LF or CRLF line endings, at most one
//! header line (recognized by a non-numeric first field). Output: LF line
//! endings and numbers written with 17 significant digits.

use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::BiasRow;
use crate::params::SimplexPoint;
use crate::samplers::BenchRecord;

/// Mixing weight of the uniform composition used by `--smooth`.
pub const SMOOTHING: f64 = 1e-3;

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros removed,
/// exponent notation outside `[1e-5, 1e17)`. Round-trips every finite
/// double.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp).max(0) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Parses one numeric field. Accepts fractions such as `1/3`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.trim().parse().ok()?;
        let b: f64 = b.trim().parse().ok()?;
        return Some(a / b);
    }
    s.parse().ok()
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .enumerate()
        .map(|(i, f)| {
            parse_number(f).ok_or_else(|| {
                Error::InvalidArgument(format!("entry {} (`{}`) is not a number", i + 1, f.trim()))
            })
        })
        .collect()
}

/// Non-blank input lines as `(line number, trimmed fields)`.
fn records<R: Read>(r: R) -> impl Iterator<Item = Result<(usize, Vec<String>)>> {
    BufReader::new(r)
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(e.into())),
            Ok(l) => {
                let l = l.strip_suffix('\r').unwrap_or(&l);
                (!l.trim().is_empty())
                    .then(|| Ok((i + 1, l.split(',').map(|f| f.trim().to_string()).collect())))
            }
        })
}

fn looks_like_header(fields: &[String]) -> bool {
    fields
        .first()
        .is_some_and(|f| !f.is_empty() && parse_number(f).is_none())
}

/// Compositions read from CSV. Rows that fail validation are kept out of
/// `rows` and listed in `rejected` with their line numbers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompositionTable {
    pub header: Option<Vec<String>>,
    pub rows: Vec<SimplexPoint>,
    /// Input line of each accepted row.
    pub lines: Vec<usize>,
    /// Index of each accepted row among all data rows (header excluded).
    pub row_index: Vec<usize>,
    pub rejected: Vec<(usize, String)>,
}

impl CompositionTable {
    pub fn k(&self) -> Option<usize> {
        self.rows.first().map(SimplexPoint::k)
    }
}

/// Reads compositions. With `smooth`, every accepted row is mixed with the
/// uniform composition (weight [`SMOOTHING`]), which pulls zeros off the
/// boundary; zeros are valid without it.
pub fn read_compositions<R: Read>(r: R, smooth: bool) -> Result<CompositionTable> {
    let mut table = CompositionTable::default();
    let mut width: Option<usize> = None;
    let mut data_row = 0;
    for (i, rec) in records(r).enumerate() {
        let (line, rec) = rec?;
        if i == 0 && looks_like_header(&rec) {
            table.header = Some(rec.clone());
            width = Some(rec.len());
            continue;
        }
        let index = data_row;
        data_row += 1;
        if let Some(w) = width {
            if rec.len() != w {
                table
                    .rejected
                    .push((line, format!("expected {w} fields, found {}", rec.len())));
                continue;
            }
        }
        let mut values = Vec::with_capacity(rec.len());
        let mut bad = None;
        for (j, f) in rec.iter().enumerate() {
            match parse_number(f) {
                Some(v) => values.push(v),
                None => {
                    bad = Some(format!("field {} (`{f}`) is not a number", j + 1));
                    break;
                }
            }
        }
        if let Some(reason) = bad {
            table.rejected.push((line, reason));
            continue;
        }
        if smooth && values.len() >= 2 {
            let k = values.len() as f64;
            let sum: f64 = values.iter().sum();
            for v in &mut values {
                *v = (1.0 - SMOOTHING) * *v + SMOOTHING * sum / k;
            }
        }
        match SimplexPoint::new(values) {
            Ok(p) => {
                width.get_or_insert(p.k());
                table.rows.push(p);
                table.lines.push(line);
                table.row_index.push(index);
            }
            Err(e) => table.rejected.push((line, e.to_string())),
        }
    }
    Ok(table)
}

/// A numeric matrix read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorTable {
    pub header: Option<Vec<String>>,
    pub values: DMatrix<f64>,
}

/// Reads predictors. Any malformed row is an error.
pub fn read_predictors<R: Read>(r: R) -> Result<PredictorTable> {
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in records(r).enumerate() {
        let (line, rec) = rec?;
        if i == 0 && looks_like_header(&rec) {
            header = Some(rec.clone());
            continue;
        }
        let mut row = Vec::with_capacity(rec.len());
        for (j, f) in rec.iter().enumerate() {
            let v = parse_number(f)
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("field {} (`{f}`) is not a finite number", j + 1),
                })?;
            row.push(v);
        }
        let expected = header
            .as_ref()
            .map(Vec::len)
            .or_else(|| rows.first().map(Vec::len));
        if let Some(w) = expected {
            if row.len() != w {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {w} fields, found {}", row.len()),
                });
            }
        }
        rows.push(row);
    }
    let d = header
        .as_ref()
        .map(Vec::len)
        .or_else(|| rows.first().map(Vec::len))
        .unwrap_or(0);
    let values = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    Ok(PredictorTable { header, values })
}

/// Writes rows of numbers as CSV with an optional header.
pub fn write_rows<W: Write>(w: W, header: Option<&[String]>, rows: &[Vec<f64>]) -> Result<()> {
    let mut wr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    if let Some(h) = header {
        wr.write_record(h)?;
    }
    for r in rows {
        wr.write_record(r.iter().map(|v| format_f64(*v)))?;
    }
    wr.flush()?;
    Ok(())
}

/// Default column names `x1..xK`.
pub fn component_header(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("x{i}")).collect()
}

/// Writes simplex points with an `x1..xK` header.
pub fn write_points<W: Write>(w: W, points: &[SimplexPoint]) -> Result<()> {
    let k = points.first().map_or(0, SimplexPoint::k);
    let rows: Vec<Vec<f64>> = points.iter().map(|p| p.as_slice().to_vec()).collect();
    write_rows(w, Some(&component_header(k)), &rows)
}

/// Benchmark records as `K,sampler,trial,log10_proposals,censored`.
pub fn write_bench_csv<W: Write>(w: W, records: &[BenchRecord]) -> Result<()> {
    let mut wr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wr.write_record(["K", "sampler", "trial", "log10_proposals", "censored"])?;
    for r in records {
        wr.write_record([
            r.k.to_string(),
            r.sampler.to_string(),
            r.trial.to_string(),
            format_f64(r.log10_proposals()),
            u8::from(r.censored).to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Bias table as `n,component,bias,se,trials_used,excluded`; components are
/// numbered from 1.
pub fn write_bias_csv<W: Write>(w: W, rows: &[BiasRow]) -> Result<()> {
    let mut wr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wr.write_record(["n", "component", "bias", "se", "trials_used", "excluded"])?;
    for r in rows {
        wr.write_record([
            r.n.to_string(),
            (r.component + 1).to_string(),
            format_f64(r.bias),
            format_f64(r.se),
            r.trials_used.to_string(),
            r.excluded.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// One JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_f64(0.5), "0.5");
        assert_eq!(format_f64(2.0), "2");
        assert_eq!(format_f64(-3.25), "-3.25");
        assert_eq!(format_f64(0.1), "0.10000000000000001");
        assert_eq!(format_f64(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(format_f64(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_f64(1.5e20), "1.5e+20");
        assert_eq!(format_f64(123456.0), "123456");
        assert_eq!(format_f64(0.0001), "0.0001");
        for &v in &[0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5e-9, 0.6773937746769] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn lists_and_fractions() {
        assert_eq!(
            parse_list("1/3, 0.5 ,2").unwrap(),
            vec![1.0 / 3.0, 0.5, 2.0]
        );
        assert!(parse_list("1,x").is_err());
    }

    #[test]
    fn compositions_with_header_and_crlf() {
        let input = "a,b,c\r\n0.2,0.3,0.5\r\n0.2,0.3\r\n0.1,oops,0.9\r\n0,0,1\r\n0.5,0.6,0.1\r\n";
        let t = read_compositions(input.as_bytes(), false).unwrap();
        assert_eq!(t.header.as_deref().unwrap(), &["a", "b", "c"]);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.lines, vec![2, 5]);
        assert_eq!(t.row_index, vec![0, 3]);
        assert_eq!(t.rejected.len(), 3);
        assert_eq!(t.rejected[0].0, 3);
        assert_eq!(t.rows[1].as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn headerless_width_from_first_row() {
        let t = read_compositions("0.5,0.5\n0.2,0.3,0.5\n".as_bytes(), false).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rejected.len(), 1);
    }

    #[test]
    fn smoothing_moves_zeros_inside() {
        let t = read_compositions("0,0,1\n".as_bytes(), true).unwrap();
        let x = t.rows[0].as_slice();
        assert!(x.iter().all(|v| *v > 0.0));
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn predictors_are_strict() {
        let p = read_predictors("z1,z2\n1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(p.values.shape(), (2, 2));
        assert_eq!(p.values[(1, 0)], 3.0);
        assert!(matches!(
            read_predictors("1,2\n3\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn points_round_trip() {
        let pts = vec![
            SimplexPoint::new(vec![0.1, 0.2, 0.7]).unwrap(),
            SimplexPoint::new(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap(),
        ];
        let mut buf = Vec::new();
        write_points(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,x3\n") && !text.contains('\r'));
        let t = read_compositions(buf.as_slice(), false).unwrap();
        assert!(t.rejected.is_empty());
        assert_eq!(t.rows, pts);
    }
}
