//! CSV emission and parsing for every output table.
//!
//! Floats are written with 6 significant digits in the style of C's `%g`;
//! records end in a bare LF.

use std::path::Path;

use crate::error::{PipelineError, Result};

/// `%.6g`: 6 significant digits, trailing zeros trimmed, exponent form
/// below `1e-4` or from `1e6`.
pub fn fmt_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Parse a float written by [`fmt_g6`].
pub fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// CSV writer with LF terminators.
pub fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(PipelineError::io(dir))?;
    }
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_io(path, e))
}

/// Write a header and string records.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_io(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(PipelineError::io(path))
}

/// Read a table, checking the header exactly. Rows must have the header's
/// width.
pub fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| PipelineError::input(path, e))?;
    let found = r.headers().map_err(|e| PipelineError::input(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(PipelineError::input(
            path,
            format!("unexpected header `{}`", found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    r.records()
        .map(|rec| rec.map_err(|e| PipelineError::input(path, e)))
        .collect()
}

/// Field `i` of `rec` as a float.
pub fn field_f64(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<f64> {
    rec.get(i)
        .and_then(parse_f64)
        .ok_or_else(|| PipelineError::input(path, format!("bad number in column {i}: {rec:?}")))
}

/// Field `i` of `rec` as an unsigned integer.
pub fn field_u64(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<u64> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| PipelineError::input(path, format!("bad integer in column {i}: {rec:?}")))
}

fn csv_io(path: &Path, e: csv::Error) -> PipelineError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => PipelineError::Io {
            path: path.into(),
            source,
        },
        other => PipelineError::Compute(anyhow::anyhow!("csv error on {}: {other:?}", path.display())),
    }
}
