//! Trace CSV emission and parsing.
//!
//! One file carries every algorithm of a comparison: comment lines prefixed
//! `#` echo the seed and config, then a fixed header, then one row per
//! iteration. Floats are printed with 17 significant digits so parsing the
//! file reproduces them bit-exactly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::RunRecord;

pub const CSV_HEADER: &str = "algorithm,k,D_k,psi_k,xi_k,residual_uy,residual_Tz,elapsed_s";

/// 17 significant digits; round-trips any finite f64 exactly.
pub fn format_float_17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write `records` as one CSV document. The config echo of the first record
/// is emitted as leading comments; failed runs contribute an error comment
/// and whatever rows they produced.
pub fn emit_csv<W: Write>(records: &[RunRecord], w: &mut W) -> io::Result<()> {
    if let Some(first) = records.first() {
        for (key, value) in &first.config_echo {
            writeln!(w, "# {key}={value}")?;
        }
    }
    for record in records {
        if let Some(err) = &record.error {
            writeln!(w, "# error:{}={}", record.algorithm.name(), err)?;
        }
    }
    writeln!(w, "{CSV_HEADER}")?;
    for record in records {
        for row in &record.rows {
            let d_k = row.d_k.map(format_float_17).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                record.algorithm.name(),
                row.k,
                d_k,
                format_float_17(row.psi_k),
                format_float_17(row.xi_k),
                format_float_17(row.residual_uy),
                format_float_17(row.residual_tz),
                format_float_17(row.elapsed_s),
            )?;
        }
    }
    Ok(())
}

pub fn emit_csv_to_string(records: &[RunRecord]) -> String {
    let mut buf = Vec::new();
    emit_csv(records, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("csv output is ascii")
}

pub fn write_csv_file(records: &[RunRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    emit_csv(records, &mut w).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One parsed data row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub algorithm: String,
    pub k: usize,
    pub d_k: Option<f64>,
    pub psi_k: f64,
    pub xi_k: f64,
    pub residual_uy: f64,
    pub residual_tz: f64,
    pub elapsed_s: f64,
}

/// A parsed trace document: leading comments verbatim, then rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvDocument {
    pub comments: Vec<String>,
    pub rows: Vec<CsvRow>,
}

/// Strict parser for the trace format produced by [`emit_csv`].
pub fn parse_csv_str(text: &str) -> Result<CsvDocument> {
    let mut doc = CsvDocument::default();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if saw_header {
                return Err(Error::CsvParse {
                    line: line_no,
                    reason: "comments must precede the header".into(),
                });
            }
            doc.comments.push(comment.trim().to_string());
            continue;
        }
        if !saw_header {
            if line != CSV_HEADER {
                return Err(Error::CsvParse {
                    line: line_no,
                    reason: format!("expected header `{CSV_HEADER}`"),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::CsvParse {
                line: line_no,
                reason: format!("expected 8 fields, got {}", fields.len()),
            });
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::CsvParse {
                line: line_no,
                reason: format!("bad {what}: `{s}`"),
            })
        };
        let d_k = if fields[2].is_empty() {
            None
        } else {
            Some(parse_f64(fields[2], "D_k")?)
        };
        doc.rows.push(CsvRow {
            algorithm: fields[0].to_string(),
            k: fields[1].parse().map_err(|_| Error::CsvParse {
                line: line_no,
                reason: format!("bad iteration index: `{}`", fields[1]),
            })?,
            d_k,
            psi_k: parse_f64(fields[3], "psi_k")?,
            xi_k: parse_f64(fields[4], "xi_k")?,
            residual_uy: parse_f64(fields[5], "residual_uy")?,
            residual_tz: parse_f64(fields[6], "residual_Tz")?,
            elapsed_s: parse_f64(fields[7], "elapsed_s")?,
        });
    }
    if !saw_header {
        return Err(Error::CsvParse {
            line: text.lines().count().max(1),
            reason: "missing header".into(),
        });
    }
    Ok(doc)
}
