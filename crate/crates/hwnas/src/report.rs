//! Run-report artifacts: front CSV with a metadata header, the full report
//! as JSON, the evaluation log as JSON-lines, and the hypervolume trace.
//!
//! Front files are written by hand rather than through a CSV writer so the
//! metadata block (`# key = value` lines) and the shortest-round-trip float
//! formatting stay byte-stable; determinism of these files is a contract.

use crate::engine::{EvalEvent, FrontRow, RunReport};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;
use thiserror::Error;

pub const FRONT_HEADER: &str = "arch,niche,accuracy,latency,generation";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header {
        path: String,
        expected: String,
        found: String,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Front CSV: `# key = value` metadata lines, the fixed header, then one
/// row per front member.
pub fn write_front_csv(report: &RunReport, path: &Path) -> Result<(), ReportError> {
    write_front_rows(&report.meta, &report.front, path)
}

/// Same format from bare metadata and rows, for fronts that do not come
/// out of an engine run (for example a store's brute-force true front).
pub fn write_front_rows(
    meta: &BTreeMap<String, String>,
    rows: &[FrontRow],
    path: &Path,
) -> Result<(), ReportError> {
    let mut out = String::new();
    for (key, value) in meta {
        writeln!(out, "# {key} = {value}").expect("string write");
    }
    writeln!(out, "{FRONT_HEADER}").expect("string write");
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.arch, row.niche, row.accuracy, row.latency, row.generation
        )
        .expect("string write");
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// Read a front CSV back: metadata map plus rows. Unknown metadata keys are
/// preserved as-is; rows must match the fixed header.
pub fn load_front_csv(path: &Path) -> Result<(BTreeMap<String, String>, Vec<FrontRow>), ReportError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut meta = BTreeMap::new();
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((key, value)) = rest.split_once('=') {
                meta.insert(key.trim().to_string(), value.trim().to_string());
            }
            continue;
        }
        if !saw_header {
            if line.trim() != FRONT_HEADER {
                return Err(ReportError::Header {
                    path: path.display().to_string(),
                    expected: FRONT_HEADER.to_string(),
                    found: line.trim().to_string(),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(ReportError::Parse {
                path: path.display().to_string(),
                line: line_no,
                reason: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let parse_f64 = |s: &str, name: &str| {
            s.parse::<f64>().map_err(|_| ReportError::Parse {
                path: path.display().to_string(),
                line: line_no,
                reason: format!("bad {name} value `{s}`"),
            })
        };
        let parse_usize = |s: &str, name: &str| {
            s.parse::<usize>().map_err(|_| ReportError::Parse {
                path: path.display().to_string(),
                line: line_no,
                reason: format!("bad {name} value `{s}`"),
            })
        };
        rows.push(FrontRow {
            arch: fields[0].to_string(),
            niche: parse_usize(fields[1], "niche")?,
            accuracy: parse_f64(fields[2], "accuracy")?,
            latency: parse_f64(fields[3], "latency")?,
            generation: parse_usize(fields[4], "generation")?,
        });
    }
    if !saw_header {
        return Err(ReportError::Header {
            path: path.display().to_string(),
            expected: FRONT_HEADER.to_string(),
            found: String::new(),
        });
    }
    Ok((meta, rows))
}

/// Whole report as pretty JSON (includes wall time; not byte-stable across
/// runs, unlike the front CSV).
pub fn write_report_json(report: &RunReport, path: &Path) -> Result<(), ReportError> {
    let json = serde_json::to_string_pretty(report).map_err(|source| ReportError::Json {
        path: path.display().to_string(),
        source,
    })?;
    std::fs::write(path, json + "\n").map_err(io_err(path))
}

/// Evaluation log as JSON-lines, one event per line, in report order.
pub fn write_eval_log(report: &RunReport, path: &Path) -> Result<(), ReportError> {
    let mut out = String::new();
    for event in &report.events {
        let line = serde_json::to_string(event).map_err(|source| ReportError::Json {
            path: path.display().to_string(),
            source,
        })?;
        out.push_str(&line);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(io_err(path))
}

pub fn load_eval_log(path: &Path) -> Result<Vec<EvalEvent>, ReportError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut events = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| ReportError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        events.push(event);
    }
    Ok(events)
}

/// Hypervolume trace CSV: generation index (0 = after initialization)
/// against union-front hypervolume.
pub fn write_hv_trace(report: &RunReport, path: &Path) -> Result<(), ReportError> {
    let mut out = String::from("generation,hypervolume\n");
    for (g, hv) in report.hv_trace.iter().enumerate() {
        writeln!(out, "{g},{hv}").expect("string write");
    }
    std::fs::write(path, out).map_err(io_err(path))
}
