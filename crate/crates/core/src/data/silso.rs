//! SILSO monthly mean total sunspot number files.
//!
//! One record per line: `year month decimal-year value std n-obs marker`,
//! separated by whitespace or `;`. A value of `-1` marks a missing month.

use super::{DataError, RawSeries};
use serde_json::json;
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct SilsoLoad {
    /// Monthly values indexed by decimal year.
    pub series: RawSeries,
    /// `(year, month)` of every kept record.
    pub dates: Vec<(i32, u32)>,
    /// Zero-based record indices dropped for carrying the missing sentinel.
    pub missing: Vec<usize>,
}

pub fn read_silso<R: BufRead>(input: R) -> Result<SilsoLoad, DataError> {
    let (mut t, mut v, mut dates, mut missing) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut record = 0;
    let mut last_t = f64::NEG_INFINITY;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = trimmed
            .split(|c: char| c == ';' || c.is_whitespace())
            .filter(|c| !c.is_empty())
            .collect();
        if cols.len() < 4 {
            return Err(DataError::Parse {
                line: lineno,
                msg: format!("expected at least 4 fields, found {}", cols.len()),
            });
        }
        let parse_err = |what: &str, e: &dyn std::fmt::Display| DataError::Parse {
            line: lineno,
            msg: format!("{what}: {e}"),
        };
        let year: i32 = cols[0].parse().map_err(|e| parse_err("year", &e))?;
        let month: u32 = cols[1].parse().map_err(|e| parse_err("month", &e))?;
        let dec: f64 = cols[2].parse().map_err(|e| parse_err("decimal year", &e))?;
        let value: f64 = cols[3].parse().map_err(|e| parse_err("value", &e))?;
        if !(1..=12).contains(&month) {
            return Err(parse_err("month", &month));
        }
        if !(dec > last_t) {
            return Err(DataError::NonMonotone { line: lineno });
        }
        last_t = dec;
        if value == -1.0 {
            missing.push(record);
        } else {
            t.push(dec);
            v.push(value);
            dates.push((year, month));
        }
        record += 1;
    }
    if !missing.is_empty() {
        log::warn!("dropped {} missing SILSO records: {:?}", missing.len(), missing);
    }
    let meta = json!({"source": "silso", "records": record, "missing": missing});
    Ok(SilsoLoad {
        series: RawSeries::new("sunspots", t, v, meta)?,
        dates,
        missing,
    })
}

pub fn load_silso(path: impl AsRef<Path>) -> Result<SilsoLoad, DataError> {
    let file = std::fs::File::open(path)?;
    read_silso(std::io::BufReader::new(file))
}

/// Writes kept records back in SILSO layout (std, n-obs and marker are
/// written as placeholders).
pub fn write_silso<W: Write>(data: &SilsoLoad, mut out: W) -> Result<(), DataError> {
    for ((year, month), (t, v)) in data
        .dates
        .iter()
        .zip(data.series.t().iter().zip(data.series.values()))
    {
        writeln!(out, "{year} {month:02} {t} {v} -1.0 -1 1")?;
    }
    Ok(())
}
