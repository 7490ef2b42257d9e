//! Rendering a stored [`RunResult`] as CSV, JSON or plot columns.

use std::str::FromStr;

use super::{RunResult, StatRecord};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 10] = [
    "name", "n", "p", "beta", "empirical", "stderr", "prediction", "bound", "tolerance", "pass",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Plotdata,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "plotdata" => Ok(Self::Plotdata),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_row(r: &StatRecord) -> [String; 10] {
    [
        r.name.clone(),
        r.n.to_string(),
        r.p.to_string(),
        r.beta.to_string(),
        r.empirical.to_string(),
        r.stderr.to_string(),
        opt(r.prediction),
        opt(r.bound),
        r.tolerance.clone(),
        r.pass.map(|b| b.to_string()).unwrap_or_default(),
    ]
}

pub fn to_csv(result: &RunResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in &result.records {
        w.write_record(csv_row(r)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Whitespace-separated `x y yerr` rows; series after the first are
/// preceded by a blank line and a `# name` comment.
pub fn to_plotdata(result: &RunResult) -> String {
    let mut out = String::new();
    for (k, s) in result.series.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        out.push_str(&format!("# {}\n", s.name));
        for ((x, y), e) in s.x.iter().zip(&s.y).zip(&s.yerr) {
            out.push_str(&format!("{x:e} {y:e} {e:e}\n"));
        }
    }
    out
}

pub fn render(result: &RunResult, format: Format) -> Result<String> {
    match format {
        Format::Csv => to_csv(result),
        Format::Json => result.to_json(),
        Format::Plotdata => Ok(to_plotdata(result)),
    }
}

/// Read a result file and render it; `format` is parsed here so an unknown
/// name is reported as [`Error::UnknownFormat`].
pub fn report(path: &std::path::Path, format: &str) -> Result<String> {
    let f: Format = format.parse()?;
    render(&RunResult::read(path)?, f)
}
