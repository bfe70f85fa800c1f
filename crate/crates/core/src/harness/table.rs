use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::config::Method;
use super::run::ConvergenceRecord;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 10] = [
    "method",
    "assumed_order",
    "smoothness_s",
    "dim",
    "n",
    "replicate",
    "seed",
    "abs_error",
    "wce",
    "weight_sq_norm",
];

// 17 significant digits.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_table<W: Write>(records: &[ConvergenceRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.method.as_str().to_string(),
            r.assumed_order.to_string(),
            r.smoothness_s.to_string(),
            r.dim.to_string(),
            r.n.to_string(),
            r.replicate.to_string(),
            r.seed.to_string(),
            fmt_float(r.abs_error),
            fmt_float(r.wce),
            fmt_float(r.weight_sq_norm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_table(records: &[ConvergenceRecord], path: &Path) -> Result<()> {
    write_table(records, File::create(path)?)
}

/// Reads a table written by [`write_table`]. `origin` labels parse errors.
pub fn read_table<R: Read>(input: R, origin: &Path) -> Result<Vec<ConvergenceRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let bad = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut rows = rdr.records();
    match rows.next() {
        Some(Ok(h)) if h.iter().eq(CSV_HEADER.iter().copied()) => {}
        Some(Ok(h)) => {
            return Err(bad(
                1,
                format!("unexpected header {:?}", h.iter().collect::<Vec<_>>()),
            ))
        }
        Some(Err(e)) => return Err(e.into()),
        None => return Err(bad(1, "empty file, expected header".into())),
    }
    let mut out = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != CSV_HEADER.len() {
            return Err(bad(
                line,
                format!("expected {} fields, got {}", CSV_HEADER.len(), row.len()),
            ));
        }
        let field = |i: usize| &row[i];
        fn parse<T: std::str::FromStr>(v: &str, name: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("bad {name} {v:?}"))
        }
        let rec = (|| -> std::result::Result<ConvergenceRecord, String> {
            let rec = ConvergenceRecord {
                method: field(0).parse::<Method>().map_err(|e| e.to_string())?,
                assumed_order: parse(field(1), CSV_HEADER[1])?,
                smoothness_s: parse(field(2), CSV_HEADER[2])?,
                dim: parse(field(3), CSV_HEADER[3])?,
                n: parse(field(4), CSV_HEADER[4])?,
                replicate: parse(field(5), CSV_HEADER[5])?,
                seed: parse(field(6), CSV_HEADER[6])?,
                abs_error: parse(field(7), CSV_HEADER[7])?,
                wce: parse(field(8), CSV_HEADER[8])?,
                weight_sq_norm: parse(field(9), CSV_HEADER[9])?,
            };
            for (name, v) in [
                ("abs_error", rec.abs_error),
                ("wce", rec.wce),
                ("weight_sq_norm", rec.weight_sq_norm),
            ] {
                if v.is_nan() || v < 0.0 {
                    return Err(format!("{name} must be non-negative, got {v}"));
                }
            }
            if rec.n == 0 {
                return Err("n must be positive".into());
            }
            Ok(rec)
        })()
        .map_err(|m| bad(line, m))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn import_table(path: &Path) -> Result<Vec<ConvergenceRecord>> {
    read_table(File::open(path)?, path)
}
