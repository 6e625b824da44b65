//! Benchmark lookup tables: per-architecture accuracy, per-device latency,
//! and optional zero-cost proxy feature vectors.
//!
//! A store is loaded from CSV or JSON-lines (one canonical schema, see
//! [`CSV_HEADER_BASE`]), adapted from foreign exports through a
//! [`ColumnMap`], or synthesized offline by a seeded [`SyntheticModel`].
//! After construction it is immutable; lookups are constant-time by
//! (dataset, architecture). Ground-truth Pareto fronts come from
//! [`BenchStore::true_front`], a brute-force scan over every record.

use crate::objectives::{non_dominated_indices, ObjectivePoint};
use crate::space::{enumerate_space, ArchCell, OpKind, EDGE_COUNT, OP_COUNT, SPACE_SIZE};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

/// Number of proxy feature columns; the vector is all-or-nothing per store.
pub const PROXY_COUNT: usize = 13;

/// The six hardware targets carried by the canonical schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Device {
    EdgeGpu,
    Raspi4,
    EdgeTpu,
    Pixel3,
    Eyeriss,
    Fpga,
}

impl Device {
    pub const ALL: [Device; 6] = [
        Device::EdgeGpu,
        Device::Raspi4,
        Device::EdgeTpu,
        Device::Pixel3,
        Device::Eyeriss,
        Device::Fpga,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Device::EdgeGpu => "edgegpu",
            Device::Raspi4 => "raspi4",
            Device::EdgeTpu => "edgetpu",
            Device::Pixel3 => "pixel3",
            Device::Eyeriss => "eyeriss",
            Device::Fpga => "fpga",
        }
    }

    /// Latency column name in the canonical schema.
    pub fn column(self) -> String {
        format!("lat_{}", self.name())
    }

    pub fn from_name(name: &str) -> Option<Device> {
        Device::ALL.iter().copied().find(|d| d.name() == name)
    }

    fn ordinal(self) -> usize {
        Device::ALL.iter().position(|d| *d == self).unwrap()
    }
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Canonical CSV column order before the optional proxy block.
pub const CSV_HEADER_BASE: [&str; 9] = [
    "arch",
    "dataset",
    "accuracy",
    "lat_edgegpu",
    "lat_raspi4",
    "lat_edgetpu",
    "lat_pixel3",
    "lat_eyeriss",
    "lat_fpga",
];

/// Proxy column names `zc_00` .. `zc_12`.
pub fn proxy_columns() -> Vec<String> {
    (0..PROXY_COUNT).map(|i| format!("zc_{i:02}")).collect()
}

/// One benchmark record: a cell's accuracy on a dataset, its latency on all
/// six devices, and optionally its 13 proxy feature scores.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub arch: String,
    pub dataset: String,
    pub accuracy: f64,
    pub latency_ms: [f64; 6],
    pub proxies: Option<[f64; PROXY_COUNT]>,
}

impl BenchRow {
    pub fn latency(&self, device: Device) -> f64 {
        self.latency_ms[device.ordinal()]
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: invalid json: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("column `{column}` not found in input header")]
    MissingColumn { column: String },
    #[error("line {line}, column `{column}`: cannot parse `{value}` as a number")]
    BadNumber {
        line: usize,
        column: String,
        value: String,
    },
    #[error("line {line}: duplicate record for dataset `{dataset}`, arch `{arch}`")]
    DuplicateKey {
        line: usize,
        dataset: String,
        arch: String,
    },
    #[error("line {line}: {reason}")]
    BadRow { line: usize, reason: String },
    #[error("line {line}: unexpected field `{field}` (proxy columns are zc_00..zc_12)")]
    UnknownField { line: usize, field: String },
    #[error("arch `{arch}` not found for dataset `{dataset}`")]
    NotFound { dataset: String, arch: String },
    #[error("store has no records for dataset `{0}`")]
    EmptyDataset(String),
    #[error(
        "dataset `{dataset}` covers {rows} of {expected} cells; pass allow_partial to accept a partial front"
    )]
    PartialStore {
        dataset: String,
        rows: usize,
        expected: usize,
    },
    #[error("store has no proxy feature columns")]
    NoProxies,
    #[error("column mapping invalid: {0}")]
    BadMapping(String),
    #[error("synthetic model invalid: {0}")]
    BadModel(String),
}

fn io_err(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Accepted on-disk encodings of the canonical schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreFormat {
    Csv,
    JsonLines,
}

/// Immutable, indexed benchmark table. Row order is preserved exactly as
/// loaded so that save → load → save is byte-identical.
#[derive(Debug, Clone)]
pub struct BenchStore {
    rows: Vec<BenchRow>,
    index: HashMap<(String, String), usize>,
    has_proxies: bool,
}

impl BenchStore {
    /// Validate and index a set of rows. `line` in errors is the 1-based row
    /// ordinal; file loaders remap it to physical lines.
    pub fn from_rows(rows: Vec<BenchRow>) -> Result<BenchStore, StoreError> {
        let mut index = HashMap::with_capacity(rows.len());
        let mut has_proxies = None;
        for (i, row) in rows.iter().enumerate() {
            let line = i + 1;
            ArchCell::decode(&row.arch).map_err(|e| StoreError::BadRow {
                line,
                reason: e.to_string(),
            })?;
            if row.dataset.is_empty() {
                return Err(StoreError::BadRow {
                    line,
                    reason: "empty dataset name".into(),
                });
            }
            if !row.accuracy.is_finite() || !(0.0..=100.0).contains(&row.accuracy) {
                return Err(StoreError::BadRow {
                    line,
                    reason: format!("accuracy {} outside [0, 100]", row.accuracy),
                });
            }
            for (d, lat) in Device::ALL.iter().zip(row.latency_ms) {
                if !lat.is_finite() || lat <= 0.0 {
                    return Err(StoreError::BadRow {
                        line,
                        reason: format!("latency {} for {} must be positive", lat, d),
                    });
                }
            }
            if let Some(p) = &row.proxies {
                if let Some(bad) = p.iter().find(|v| !v.is_finite()) {
                    return Err(StoreError::BadRow {
                        line,
                        reason: format!("non-finite proxy value {bad}"),
                    });
                }
            }
            match (has_proxies, row.proxies.is_some()) {
                (None, present) => has_proxies = Some(present),
                (Some(expected), present) if expected != present => {
                    return Err(StoreError::BadRow {
                        line,
                        reason: "proxy features must be present on all rows or none".into(),
                    });
                }
                _ => {}
            }
            if let Some(prev) = index.insert((row.dataset.clone(), row.arch.clone()), i) {
                let _ = prev;
                return Err(StoreError::DuplicateKey {
                    line,
                    dataset: row.dataset.clone(),
                    arch: row.arch.clone(),
                });
            }
        }
        Ok(BenchStore {
            rows,
            index,
            has_proxies: has_proxies.unwrap_or(false),
        })
    }

    pub fn rows(&self) -> &[BenchRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has_proxies(&self) -> bool {
        self.has_proxies
    }

    /// Dataset names in first-appearance order.
    pub fn datasets(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for row in &self.rows {
            if !seen.contains(&row.dataset.as_str()) {
                seen.push(row.dataset.as_str());
            }
        }
        seen
    }

    pub fn dataset_len(&self, dataset: &str) -> usize {
        self.rows.iter().filter(|r| r.dataset == dataset).count()
    }

    pub fn get(&self, dataset: &str, arch: &str) -> Option<&BenchRow> {
        self.index
            .get(&(dataset.to_string(), arch.to_string()))
            .map(|&i| &self.rows[i])
    }

    /// Keyed lookup. The arch string is canonicalized (parsed and re-encoded)
    /// first, so any string that decodes to a stored cell resolves.
    pub fn lookup(&self, dataset: &str, arch: &str) -> Result<&BenchRow, StoreError> {
        let canonical = match ArchCell::decode(arch) {
            Ok(cell) => cell.encode(),
            Err(_) => arch.to_string(),
        };
        self.get(dataset, &canonical)
            .ok_or_else(|| StoreError::NotFound {
                dataset: dataset.to_string(),
                arch: arch.to_string(),
            })
    }

    /// Min/max accuracy over one dataset; the default normalization bounds.
    pub fn accuracy_range(&self, dataset: &str) -> Result<(f64, f64), StoreError> {
        let mut range: Option<(f64, f64)> = None;
        for row in self.rows.iter().filter(|r| r.dataset == dataset) {
            let (lo, hi) = range.get_or_insert((row.accuracy, row.accuracy));
            *lo = lo.min(row.accuracy);
            *hi = hi.max(row.accuracy);
        }
        range.ok_or_else(|| StoreError::EmptyDataset(dataset.to_string()))
    }

    /// Min/max latency of one device over one dataset.
    pub fn latency_range(&self, dataset: &str, device: Device) -> Result<(f64, f64), StoreError> {
        let mut range: Option<(f64, f64)> = None;
        for row in self.rows.iter().filter(|r| r.dataset == dataset) {
            let lat = row.latency(device);
            let (lo, hi) = range.get_or_insert((lat, lat));
            *lo = lo.min(lat);
            *hi = hi.max(lat);
        }
        range.ok_or_else(|| StoreError::EmptyDataset(dataset.to_string()))
    }

    /// Brute-force true Pareto front of (accuracy maximized, latency
    /// minimized) over every record of `dataset`.
    ///
    /// Unless `allow_partial` is set, the dataset must cover the full
    /// enumerable space. Rows are ranked after sorting by arch string, so the
    /// result is independent of file order; among records with identical
    /// objectives the lexicographically smallest arch represents the point.
    pub fn true_front(
        &self,
        dataset: &str,
        device: Device,
        allow_partial: bool,
    ) -> Result<Vec<FrontEntry>, StoreError> {
        let mut rows: Vec<&BenchRow> = self.rows.iter().filter(|r| r.dataset == dataset).collect();
        if rows.is_empty() {
            return Err(StoreError::EmptyDataset(dataset.to_string()));
        }
        if rows.len() < SPACE_SIZE && !allow_partial {
            return Err(StoreError::PartialStore {
                dataset: dataset.to_string(),
                rows: rows.len(),
                expected: SPACE_SIZE,
            });
        }
        rows.sort_by(|a, b| a.arch.cmp(&b.arch));
        let points: Vec<ObjectivePoint> = rows
            .iter()
            .map(|r| ObjectivePoint {
                f1: -r.accuracy,
                f2: r.latency(device),
            })
            .collect();
        let mut front: Vec<FrontEntry> = Vec::new();
        let mut seen_points: Vec<(f64, f64)> = Vec::new();
        for idx in non_dominated_indices(&points) {
            let key = (rows[idx].accuracy, rows[idx].latency(device));
            if !seen_points.contains(&key) {
                seen_points.push(key);
                front.push(FrontEntry {
                    arch: rows[idx].arch.clone(),
                    accuracy: rows[idx].accuracy,
                    latency_ms: rows[idx].latency(device),
                });
            }
        }
        Ok(front)
    }

    pub fn load(path: &Path, format: StoreFormat) -> Result<BenchStore, StoreError> {
        match format {
            StoreFormat::Csv => Self::load_csv(path),
            StoreFormat::JsonLines => Self::load_jsonl(path),
        }
    }

    pub fn save(&self, path: &Path, format: StoreFormat) -> Result<(), StoreError> {
        match format {
            StoreFormat::Csv => self.save_csv(path),
            StoreFormat::JsonLines => self.save_jsonl(path),
        }
    }

    pub fn load_csv(path: &Path) -> Result<BenchStore, StoreError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)?;
        let header: Vec<String> = reader
            .headers()?
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut expected: Vec<String> = CSV_HEADER_BASE.iter().map(|s| s.to_string()).collect();
        let with_proxies = if header == expected {
            false
        } else {
            expected.extend(proxy_columns());
            if header == expected {
                true
            } else {
                return Err(StoreError::Header {
                    expected: expected.join(","),
                    found: header.join(","),
                });
            }
        };

        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(rows.len() + 2);
            let get = |i: usize| record.get(i).unwrap_or("");
            let num = |i: usize| -> Result<f64, StoreError> {
                get(i).parse::<f64>().map_err(|_| StoreError::BadNumber {
                    line,
                    column: expected[i].clone(),
                    value: get(i).to_string(),
                })
            };
            let mut latency_ms = [0.0; 6];
            for (k, slot) in latency_ms.iter_mut().enumerate() {
                *slot = num(3 + k)?;
            }
            let proxies = if with_proxies {
                let mut p = [0.0; PROXY_COUNT];
                for (k, slot) in p.iter_mut().enumerate() {
                    *slot = num(9 + k)?;
                }
                Some(p)
            } else {
                None
            };
            rows.push((
                line,
                BenchRow {
                    arch: get(0).to_string(),
                    dataset: get(1).to_string(),
                    accuracy: num(2)?,
                    latency_ms,
                    proxies,
                },
            ));
        }
        Self::from_lined_rows(rows)
    }

    /// from_rows, with row-ordinal errors remapped to physical line numbers.
    fn from_lined_rows(rows: Vec<(usize, BenchRow)>) -> Result<BenchStore, StoreError> {
        let lines: Vec<usize> = rows.iter().map(|(l, _)| *l).collect();
        let remap = |ordinal: usize| lines.get(ordinal - 1).copied().unwrap_or(ordinal);
        Self::from_rows(rows.into_iter().map(|(_, r)| r).collect()).map_err(|e| match e {
            StoreError::DuplicateKey { line, dataset, arch } => StoreError::DuplicateKey {
                line: remap(line),
                dataset,
                arch,
            },
            StoreError::BadRow { line, reason } => StoreError::BadRow {
                line: remap(line),
                reason,
            },
            other => other,
        })
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), StoreError> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = CSV_HEADER_BASE.iter().map(|s| s.to_string()).collect();
        if self.has_proxies {
            header.extend(proxy_columns());
        }
        writer.write_record(&header)?;
        for row in &self.rows {
            let mut fields: Vec<String> = vec![
                row.arch.clone(),
                row.dataset.clone(),
                row.accuracy.to_string(),
            ];
            fields.extend(row.latency_ms.iter().map(|v| v.to_string()));
            if let Some(p) = &row.proxies {
                fields.extend(p.iter().map(|v| v.to_string()));
            }
            writer.write_record(&fields)?;
        }
        writer.flush().map_err(|e| io_err(path, e))?;
        Ok(())
    }

    pub fn load_jsonl(path: &Path) -> Result<BenchStore, StoreError> {
        let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        let reader = BufReader::new(file);
        let mut rows = Vec::new();
        let proxy_names = proxy_columns();
        for (i, line_res) in reader.lines().enumerate() {
            let line_no = i + 1;
            let text = line_res.map_err(|e| io_err(path, e))?;
            if text.trim().is_empty() {
                continue;
            }
            let wire: RowWire = serde_json::from_str(&text)
                .map_err(|source| StoreError::Json { line: line_no, source })?;
            let proxies = if wire.extra.is_empty() {
                None
            } else {
                for key in wire.extra.keys() {
                    if !proxy_names.contains(key) {
                        return Err(StoreError::UnknownField {
                            line: line_no,
                            field: key.clone(),
                        });
                    }
                }
                let mut p = [0.0; PROXY_COUNT];
                for (k, name) in proxy_names.iter().enumerate() {
                    p[k] = *wire.extra.get(name).ok_or_else(|| StoreError::BadRow {
                        line: line_no,
                        reason: format!("missing proxy column `{name}`"),
                    })?;
                }
                Some(p)
            };
            rows.push((
                line_no,
                BenchRow {
                    arch: wire.arch,
                    dataset: wire.dataset,
                    accuracy: wire.accuracy,
                    latency_ms: [
                        wire.lat_edgegpu,
                        wire.lat_raspi4,
                        wire.lat_edgetpu,
                        wire.lat_pixel3,
                        wire.lat_eyeriss,
                        wire.lat_fpga,
                    ],
                    proxies,
                },
            ));
        }
        Self::from_lined_rows(rows)
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<(), StoreError> {
        let mut file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        let proxy_names = proxy_columns();
        for row in &self.rows {
            let mut extra = BTreeMap::new();
            if let Some(p) = &row.proxies {
                for (name, value) in proxy_names.iter().zip(p) {
                    extra.insert(name.clone(), *value);
                }
            }
            let wire = RowWire {
                arch: row.arch.clone(),
                dataset: row.dataset.clone(),
                accuracy: row.accuracy,
                lat_edgegpu: row.latency_ms[0],
                lat_raspi4: row.latency_ms[1],
                lat_edgetpu: row.latency_ms[2],
                lat_pixel3: row.latency_ms[3],
                lat_eyeriss: row.latency_ms[4],
                lat_fpga: row.latency_ms[5],
                extra,
            };
            let json = serde_json::to_string(&wire)
                .map_err(|source| StoreError::Json { line: 0, source })?;
            writeln!(file, "{json}").map_err(|e| io_err(path, e))?;
        }
        Ok(())
    }

    /// Adapt a foreign CSV export to the canonical schema via a column map.
    pub fn ingest_csv(path: &Path, map: &ColumnMap) -> Result<BenchStore, StoreError> {
        map.validate()?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)?;
        let header: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
        let col = |name: &str| -> Result<usize, StoreError> {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| StoreError::MissingColumn {
                    column: name.to_string(),
                })
        };

        let arch_idx = col(&map.arch)?;
        let acc_idx = col(&map.accuracy)?;
        let dataset_idx = match &map.dataset_column {
            Some(c) => Some(col(c)?),
            None => None,
        };
        let mut lat_idx = [0usize; 6];
        for (k, device) in Device::ALL.iter().enumerate() {
            lat_idx[k] = col(map.latency.get(device.name()).unwrap())?;
        }
        let proxy_idx: Option<Vec<usize>> = match &map.proxies {
            Some(cols) => Some(cols.iter().map(|c| col(c)).collect::<Result<_, _>>()?),
            None => None,
        };

        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(rows.len() + 2);
            let num = |i: usize| -> Result<f64, StoreError> {
                let raw = record.get(i).unwrap_or("");
                raw.parse::<f64>().map_err(|_| StoreError::BadNumber {
                    line,
                    column: header[i].clone(),
                    value: raw.to_string(),
                })
            };
            let dataset = match dataset_idx {
                Some(i) => record.get(i).unwrap_or("").to_string(),
                None => map.dataset_value.clone().unwrap(),
            };
            let mut latency_ms = [0.0; 6];
            for (k, idx) in lat_idx.iter().enumerate() {
                latency_ms[k] = num(*idx)?;
            }
            let proxies = match &proxy_idx {
                Some(cols) => {
                    let mut p = [0.0; PROXY_COUNT];
                    for (k, idx) in cols.iter().enumerate() {
                        p[k] = num(*idx)?;
                    }
                    Some(p)
                }
                None => None,
            };
            rows.push((
                line,
                BenchRow {
                    arch: record.get(arch_idx).unwrap_or("").to_string(),
                    dataset,
                    accuracy: num(acc_idx)?,
                    latency_ms,
                    proxies,
                },
            ));
        }
        Self::from_lined_rows(rows)
    }
}

/// One point of a ground-truth front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry {
    pub arch: String,
    pub accuracy: f64,
    pub latency_ms: f64,
}

/// Flat serialization mirror of [`BenchRow`]; proxy columns ride in `extra`.
#[derive(Serialize, Deserialize)]
struct RowWire {
    arch: String,
    dataset: String,
    accuracy: f64,
    lat_edgegpu: f64,
    lat_raspi4: f64,
    lat_edgetpu: f64,
    lat_pixel3: f64,
    lat_eyeriss: f64,
    lat_fpga: f64,
    #[serde(flatten)]
    extra: BTreeMap<String, f64>,
}

/// Declarative adapter from a foreign CSV export to the canonical schema.
///
/// `latency` maps every canonical device name to a source column; `dataset`
/// comes either from a source column or a fixed literal (exactly one of the
/// two). `proxies` lists exactly 13 source columns in feature order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMap {
    pub arch: String,
    pub accuracy: String,
    #[serde(default)]
    pub dataset_column: Option<String>,
    #[serde(default)]
    pub dataset_value: Option<String>,
    pub latency: BTreeMap<String, String>,
    #[serde(default)]
    pub proxies: Option<Vec<String>>,
}

impl ColumnMap {
    pub fn validate(&self) -> Result<(), StoreError> {
        match (&self.dataset_column, &self.dataset_value) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(StoreError::BadMapping(
                    "exactly one of dataset_column / dataset_value must be set".into(),
                ));
            }
            _ => {}
        }
        for device in Device::ALL {
            if !self.latency.contains_key(device.name()) {
                return Err(StoreError::BadMapping(format!(
                    "latency mapping missing canonical device `{}`",
                    device.name()
                )));
            }
        }
        for key in self.latency.keys() {
            if Device::from_name(key).is_none() {
                return Err(StoreError::BadMapping(format!(
                    "unknown device `{key}` in latency mapping"
                )));
            }
        }
        if let Some(p) = &self.proxies {
            if p.len() != PROXY_COUNT {
                return Err(StoreError::BadMapping(format!(
                    "proxies must list exactly {PROXY_COUNT} columns, found {}",
                    p.len()
                )));
            }
        }
        Ok(())
    }
}

// --- deterministic value derivation for the synthetic benchmark ---

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(h: u64, v: u64) -> u64 {
    splitmix64(h ^ v.wrapping_mul(0xA076_1D64_78BD_642F))
}

fn hash_str(h: u64, s: &str) -> u64 {
    s.bytes().fold(h, |acc, b| mix(acc, b as u64))
}

/// Uniform in [0, 1).
fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Standard normal via Box–Muller on two derived uniforms.
fn std_normal(h: u64) -> f64 {
    let u1 = ((splitmix64(h) >> 11) as f64 + 1.0) / ((1u64 << 53) as f64 + 1.0);
    let u2 = (splitmix64(h ^ 0x5851_F42D_4C95_7F2D) >> 11) as f64 / (1u64 << 53) as f64;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

const TAG_LATENCY: u64 = 1;
const TAG_ACC_NOISE: u64 = 2;
const TAG_DATASET_SHIFT: u64 = 3;
const TAG_PROXY_NOISE: u64 = 4;
const TAG_TARGET: u64 = 5;

/// Seed of the synthetic benchmark used when none is requested explicitly.
pub const DEFAULT_SYNTH_SEED: u64 = 42;

/// Seeded ground-truth generator standing in for a real benchmark dump.
///
/// Latency is additive: a per-device base cost plus one effective cost per
/// edge, where the effective cost of (device, edge, op) carries a small
/// deterministic jitter. `none` always costs zero, so replacing a `none`
/// edge can never reduce latency.
///
/// Accuracy is deliberately not additive. Each 3x3-convolution count has a
/// seeded preferred wiring sequence ([`SyntheticModel::target_wiring`]); a
/// cell's score is a small per-op term plus a bonus that grows with how many
/// of its non-convolution edges, read in edge order, agree with the sequence
/// for its own count. Because the sequences of neighbouring counts are
/// unrelated, adding or removing a convolution from a well-wired cell lands
/// it in a fitness valley: the best designs at each complexity level are
/// only reachable by refining within that level, which is what makes a
/// complexity-partitioned search strictly stronger than a pooled one on this
/// benchmark. Scores pass through a bounded sigmoid plus seeded noise,
/// clamped to [10, 95]. The 13 proxy features are noisy monotone transforms
/// of the noise-free accuracy on deliberately mismatched scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModel {
    pub seed: u64,
    /// Fixed per-device overhead in ms; keeps every latency strictly positive.
    pub device_base_ms: [f64; 6],
    /// Per-device multiplier on edge costs.
    pub device_scale: [f64; 6],
    /// Cost per op in ms before device scaling, indexed by op id. `none` is 0.
    pub op_cost_ms: [f64; OP_COUNT],
    /// Relative jitter applied to each (device, edge, op) effective cost.
    pub latency_jitter: f64,
    /// Accuracy contribution per op, indexed by op id.
    pub acc_op_weight: [f64; OP_COUNT],
    /// Agreement-bonus weight per 3x3-convolution count. Growing weights
    /// make higher complexity levels peak higher, so every level owns a
    /// slice of the front.
    pub coherence_bonus: [f64; EDGE_COUNT + 1],
    /// Concavity of the agreement payoff: the bonus fraction earned at
    /// agreement fraction `f` is `f^gamma`. Below 1 the first matching edges
    /// pay out fast; above 1 a half-refined cell still scores poorly.
    pub coherence_gamma: f64,
    /// Sigmoid steepness and midpoint mapping raw score to accuracy.
    pub acc_sigmoid_alpha: f64,
    pub acc_sigmoid_mid: f64,
    /// Global noise multiplier. Zero makes accuracy and proxies noiseless.
    pub noise_amplitude: f64,
    /// Accuracy noise standard deviation at amplitude 1, in percent points.
    pub acc_noise_std: f64,
    /// Per-feature affine placement and curvature of the proxy transforms.
    pub proxy_scale: [f64; PROXY_COUNT],
    pub proxy_offset: [f64; PROXY_COUNT],
    pub proxy_power: [f64; PROXY_COUNT],
    /// Per-feature noise level at amplitude 1, relative to the feature range.
    pub proxy_noise: [f64; PROXY_COUNT],
}

impl SyntheticModel {
    /// Default landscape for a seed. Magnitudes are chosen so the true front
    /// spans every complexity niche: each convolution count level peaks at
    /// its own preferred wiring, with higher counts peaking higher but
    /// costing more latency.
    pub fn new(seed: u64) -> SyntheticModel {
        SyntheticModel {
            seed,
            device_base_ms: [0.30, 2.10, 0.22, 0.75, 0.40, 0.27],
            device_scale: [1.0, 8.0, 0.80, 2.5, 1.2, 0.90],
            // op order: none, skip_connect, nor_conv_1x1, nor_conv_3x3, avg_pool_3x3
            op_cost_ms: [0.0, 0.02, 0.12, 1.0, 0.06],
            latency_jitter: 0.05,
            acc_op_weight: [0.0, 0.04, 0.10, 0.30, 0.02],
            coherence_bonus: [2.6, 3.4, 4.2, 5.2, 6.2, 7.0, 7.6],
            coherence_gamma: 0.40,
            acc_sigmoid_alpha: 0.70,
            acc_sigmoid_mid: 3.2,
            noise_amplitude: 1.0,
            acc_noise_std: 0.30,
            proxy_scale: [
                3.2e4, 1.8e-2, 7.4e2, 1.1, 5.6e3, 4.2e-3, 9.7e1, 1.25e1, 2.4e-3, 3.1e2, 6.6e1,
                1.9, 8.8e2,
            ],
            proxy_offset: [
                1.5e4, -0.5, 0.0, 3.0, -2.0e3, 1.0e-3, 1.0e1, -4.0, 1.0e-3, 2.5e1, -3.0e1, 0.2,
                1.0e2,
            ],
            proxy_power: [
                1.0, 0.5, 2.0, 1.0, 3.0, 0.5, 1.0, 2.0, 1.0, 0.5, 2.0, 1.0, 3.0,
            ],
            proxy_noise: [
                0.10, 0.18, 0.075, 0.27, 0.135, 0.36, 0.09, 0.21, 0.15, 0.045, 0.24, 0.30, 0.12,
            ],
        }
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        if self.noise_amplitude < 0.0 {
            return Err(StoreError::BadModel(format!(
                "noise_amplitude {} must be >= 0",
                self.noise_amplitude
            )));
        }
        if !(0.0..1.0).contains(&self.latency_jitter) {
            return Err(StoreError::BadModel(format!(
                "latency_jitter {} must lie in [0, 1)",
                self.latency_jitter
            )));
        }
        if self.op_cost_ms.iter().any(|c| *c < 0.0) {
            return Err(StoreError::BadModel("op costs must be >= 0".into()));
        }
        if self.device_base_ms.iter().any(|c| *c <= 0.0) {
            return Err(StoreError::BadModel("device base costs must be > 0".into()));
        }
        if !(self.coherence_gamma.is_finite() && self.coherence_gamma > 0.0) {
            return Err(StoreError::BadModel(format!(
                "coherence_gamma {} must be finite and > 0",
                self.coherence_gamma
            )));
        }
        if self.coherence_bonus.iter().any(|b| !(*b >= 0.0)) {
            return Err(StoreError::BadModel(
                "coherence_bonus entries must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Preferred arrangement of non-convolution ops for a cell with `conv3x3`
    /// 3x3 convolutions, read in edge order over the cell's non-convolution
    /// edges. Scoring against a sequence instead of fixed edge positions
    /// means every placement of the convolutions can reach full agreement,
    /// so refinement within a complexity level is a chain of single-edge
    /// improvements. Consecutive counts draw from complementary two-op
    /// palettes (even counts prefer sparse wiring, odd counts prefer
    /// projection and pooling), so a cell tuned to one level keeps almost
    /// no agreement after gaining or losing a convolution: the valley
    /// between levels is deep even though the slopes within a level are
    /// gentle. Keeping the even palette nearly free also keeps per-level
    /// ridge latency increasing in the convolution count.
    pub fn target_wiring(&self, conv3x3: usize) -> Vec<OpKind> {
        let k = conv3x3.min(EDGE_COUNT);
        let palette: [OpKind; 2] = if k % 2 == 0 {
            [OpKind::None, OpKind::SkipConnect]
        } else {
            [OpKind::NorConv1x1, OpKind::AvgPool3x3]
        };
        (0..EDGE_COUNT - k)
            .map(|slot| {
                let h = mix(mix(mix(self.seed, TAG_TARGET), k as u64), slot as u64);
                palette[(h % 2) as usize]
            })
            .collect()
    }

    /// Latency in ms of a cell on one device.
    pub fn latency(&self, cell: &ArchCell, device: Device) -> f64 {
        let d = device.ordinal();
        let mut total = self.device_base_ms[d];
        for (edge, op) in cell.edges().iter().enumerate() {
            let base = self.op_cost_ms[op.id() as usize];
            if base == 0.0 {
                continue;
            }
            let h = mix(
                mix(mix(mix(self.seed, TAG_LATENCY), d as u64), edge as u64),
                op.id() as u64,
            );
            let jitter = 1.0 + self.latency_jitter * (2.0 * unit(h) - 1.0);
            total += self.device_scale[d] * base * jitter;
        }
        total
    }

    fn raw_score(&self, cell: &ArchCell) -> f64 {
        let edges = cell.edges();
        let mut raw = 0.0;
        for op in edges {
            raw += self.acc_op_weight[op.id() as usize];
        }
        let n3 = edges.iter().filter(|op| **op == OpKind::NorConv3x3).count();
        let wiring = self.target_wiring(n3);
        let agree = edges
            .iter()
            .filter(|op| **op != OpKind::NorConv3x3)
            .zip(&wiring)
            .filter(|(a, b)| *a == *b)
            .count();
        let frac = if wiring.is_empty() {
            1.0
        } else {
            agree as f64 / wiring.len() as f64
        };
        raw += self.coherence_bonus[n3] * frac.powf(self.coherence_gamma);
        // snap to a 2^-20 grid: cells whose scores agree mathematically but
        // were summed in different edge orders collapse to bit-equal values,
        // so every downstream transform ties or orders them consistently
        (raw * 1_048_576.0).round() / 1_048_576.0
    }

    /// Noise-free quality signal in (0, 1); the quantity proxies track.
    fn signal01(&self, cell: &ArchCell, dataset: &str) -> f64 {
        let shift_h = hash_str(mix(self.seed, TAG_DATASET_SHIFT), dataset);
        let shift = 0.2 * (unit(shift_h) - 0.5);
        let raw = self.raw_score(cell) + shift;
        1.0 / (1.0 + (-self.acc_sigmoid_alpha * (raw - self.acc_sigmoid_mid)).exp())
    }

    /// Accuracy before noise.
    pub fn clean_accuracy(&self, cell: &ArchCell, dataset: &str) -> f64 {
        10.0 + 85.0 * self.signal01(cell, dataset)
    }

    /// Benchmark accuracy: clean value plus seeded noise, clamped to [10, 95].
    pub fn accuracy(&self, cell: &ArchCell, dataset: &str) -> f64 {
        let h = hash_str(
            mix(mix(self.seed, TAG_ACC_NOISE), cell.index() as u64),
            dataset,
        );
        let noise = self.noise_amplitude * self.acc_noise_std * std_normal(h);
        (self.clean_accuracy(cell, dataset) + noise).clamp(10.0, 95.0)
    }

    /// The 13 proxy feature scores of a cell.
    pub fn proxies(&self, cell: &ArchCell, dataset: &str) -> [f64; PROXY_COUNT] {
        let t = self.signal01(cell, dataset);
        let mut out = [0.0; PROXY_COUNT];
        for (j, slot) in out.iter_mut().enumerate() {
            let h = hash_str(
                mix(
                    mix(mix(self.seed, TAG_PROXY_NOISE), j as u64),
                    cell.index() as u64,
                ),
                dataset,
            );
            let signal = t.powf(self.proxy_power[j]);
            let noise = self.noise_amplitude * self.proxy_noise[j] * std_normal(h);
            *slot = self.proxy_offset[j] + self.proxy_scale[j] * (signal + noise);
        }
        out
    }

    pub fn row(&self, cell: &ArchCell, dataset: &str) -> BenchRow {
        let mut latency_ms = [0.0; 6];
        for (k, device) in Device::ALL.iter().enumerate() {
            latency_ms[k] = self.latency(cell, *device);
        }
        BenchRow {
            arch: cell.encode(),
            dataset: dataset.to_string(),
            accuracy: self.accuracy(cell, dataset),
            latency_ms,
            proxies: Some(self.proxies(cell, dataset)),
        }
    }

    /// One record per cell, in enumeration order.
    pub fn synthesize(&self, dataset: &str) -> Result<BenchStore, StoreError> {
        self.validate()?;
        let rows: Vec<BenchRow> = enumerate_space().map(|c| self.row(&c, dataset)).collect();
        BenchStore::from_rows(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::spearman;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn sample_rows() -> Vec<BenchRow> {
        let archs = [
            "|none~0|+|none~0|none~1|+|none~0|none~1|none~2|",
            "|nor_conv_3x3~0|+|none~0|skip_connect~1|+|none~0|none~1|avg_pool_3x3~2|",
            "|nor_conv_1x1~0|+|nor_conv_3x3~0|none~1|+|skip_connect~0|none~1|none~2|",
        ];
        archs
            .iter()
            .enumerate()
            .map(|(i, arch)| BenchRow {
                arch: arch.to_string(),
                dataset: "cifar10".into(),
                accuracy: 60.0 + i as f64 * 7.5,
                latency_ms: [
                    1.0 + i as f64,
                    8.0 + i as f64,
                    0.5 + i as f64,
                    2.0 + i as f64,
                    1.5 + i as f64,
                    0.9 + i as f64,
                ],
                proxies: None,
            })
            .collect()
    }

    #[test]
    fn store_indexes_and_looks_up() {
        let store = BenchStore::from_rows(sample_rows()).unwrap();
        assert_eq!(store.len(), 3);
        assert!(!store.has_proxies());
        let row = store
            .lookup("cifar10", "|nor_conv_1x1~0|+|nor_conv_3x3~0|none~1|+|skip_connect~0|none~1|none~2|")
            .unwrap();
        assert_eq!(row.accuracy, 75.0);
        assert_eq!(row.latency(Device::Raspi4), 10.0);
        assert!(matches!(
            store.lookup("cifar10", "|none~0|+|none~0|skip_connect~1|+|none~0|none~1|none~2|"),
            Err(StoreError::NotFound { .. })
        ));
        assert!(matches!(
            store.lookup("cifar100", sample_rows()[0].arch.as_str()),
            Err(StoreError::NotFound { .. })
        ));
    }

    #[test]
    fn duplicate_key_is_rejected_with_row() {
        let mut rows = sample_rows();
        rows.push(rows[1].clone());
        match BenchStore::from_rows(rows) {
            Err(StoreError::DuplicateKey { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn row_validation_catches_bad_values() {
        let mut rows = sample_rows();
        rows[1].latency_ms[2] = 0.0;
        assert!(matches!(
            BenchStore::from_rows(rows),
            Err(StoreError::BadRow { line: 2, .. })
        ));

        let mut rows = sample_rows();
        rows[0].accuracy = 104.0;
        assert!(BenchStore::from_rows(rows).is_err());

        let mut rows = sample_rows();
        rows[2].arch = "garbage".into();
        assert!(BenchStore::from_rows(rows).is_err());

        let mut rows = sample_rows();
        rows[0].proxies = Some([1.0; PROXY_COUNT]);
        assert!(matches!(
            BenchStore::from_rows(rows),
            Err(StoreError::BadRow { line: 2, .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        for with_proxies in [false, true] {
            let mut rows = sample_rows();
            if with_proxies {
                for (i, row) in rows.iter_mut().enumerate() {
                    let mut p = [0.0; PROXY_COUNT];
                    for (j, v) in p.iter_mut().enumerate() {
                        *v = (i * 13 + j) as f64 * 0.371 - 2.0;
                    }
                    row.proxies = Some(p);
                }
            }
            let store = BenchStore::from_rows(rows).unwrap();
            let p1 = dir.path().join(format!("a_{with_proxies}.csv"));
            let p2 = dir.path().join(format!("b_{with_proxies}.csv"));
            store.save_csv(&p1).unwrap();
            let reloaded = BenchStore::load_csv(&p1).unwrap();
            assert_eq!(reloaded.rows(), store.rows());
            reloaded.save_csv(&p2).unwrap();
            assert_eq!(
                std::fs::read(&p1).unwrap(),
                std::fs::read(&p2).unwrap(),
                "proxies={with_proxies}"
            );
        }
    }

    #[test]
    fn csv_header_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let store = BenchStore::from_rows(sample_rows()).unwrap();
        let path = dir.path().join("s.csv");
        store.save_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "arch,dataset,accuracy,lat_edgegpu,lat_raspi4,lat_edgetpu,lat_pixel3,lat_eyeriss,lat_fpga\n"
        ));

        // header with a column renamed is rejected
        let bad = text.replacen("lat_fpga", "lat_fpgaX", 1);
        let bad_path = dir.path().join("bad.csv");
        std::fs::write(&bad_path, bad).unwrap();
        assert!(matches!(
            BenchStore::load_csv(&bad_path),
            Err(StoreError::Header { .. })
        ));
    }

    #[test]
    fn csv_errors_name_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let store = BenchStore::from_rows(sample_rows()).unwrap();
        let path = dir.path().join("s.csv");
        store.save_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();

        let corrupted = text.replacen(",60,", ",6x0,", 1);
        assert_ne!(corrupted, text);
        let bad_path = dir.path().join("badnum.csv");
        std::fs::write(&bad_path, corrupted).unwrap();
        match BenchStore::load_csv(&bad_path) {
            Err(StoreError::BadNumber { line, column, value }) => {
                assert_eq!(line, 2);
                assert_eq!(column, "accuracy");
                assert_eq!(value, "6x0");
            }
            other => panic!("expected BadNumber, got {other:?}"),
        }

        let mut lines: Vec<&str> = text.lines().collect();
        let dup = lines[1];
        lines.push(dup);
        let dup_path = dir.path().join("dup.csv");
        std::fs::write(&dup_path, lines.join("\n") + "\n").unwrap();
        match BenchStore::load_csv(&dup_path) {
            Err(StoreError::DuplicateKey { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected DuplicateKey, got {other:?}"),
        }
    }

    #[test]
    fn jsonl_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut rows = sample_rows();
        for (i, row) in rows.iter_mut().enumerate() {
            let mut p = [0.0; PROXY_COUNT];
            for (j, v) in p.iter_mut().enumerate() {
                *v = ((i + 1) * (j + 3)) as f64 / 7.0;
            }
            row.proxies = Some(p);
        }
        let store = BenchStore::from_rows(rows).unwrap();
        let p1 = dir.path().join("a.jsonl");
        let p2 = dir.path().join("b.jsonl");
        store.save_jsonl(&p1).unwrap();
        let reloaded = BenchStore::load_jsonl(&p1).unwrap();
        assert_eq!(reloaded.rows(), store.rows());
        reloaded.save_jsonl(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn jsonl_rejects_unknown_fields_and_bad_json() {
        let dir = tempfile::tempdir().unwrap();
        let store = BenchStore::from_rows(sample_rows()).unwrap();
        let path = dir.path().join("s.jsonl");
        store.save_jsonl(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();

        let with_unknown = text.replacen("\"accuracy\"", "\"accuracy_x\":1.0,\"accuracy\"", 1);
        let p = dir.path().join("unknown.jsonl");
        std::fs::write(&p, with_unknown).unwrap();
        match BenchStore::load_jsonl(&p) {
            Err(StoreError::UnknownField { line, field }) => {
                assert_eq!(line, 1);
                assert_eq!(field, "accuracy_x");
            }
            other => panic!("expected UnknownField, got {other:?}"),
        }

        let p = dir.path().join("broken.jsonl");
        std::fs::write(&p, "{not json\n").unwrap();
        assert!(matches!(
            BenchStore::load_jsonl(&p),
            Err(StoreError::Json { line: 1, .. })
        ));
    }

    #[test]
    fn column_map_ingests_foreign_export() {
        let dir = tempfile::tempdir().unwrap();
        let foreign = dir.path().join("foreign.csv");
        std::fs::write(
            &foreign,
            "arch_str,val_acc,gpu_ms,pi_ms,tpu_ms,phone_ms,asic_ms,fpga_ms\n\
             |none~0|+|none~0|none~1|+|none~0|none~1|none~2|,55.5,1.5,9.0,0.8,3.0,1.1,0.7\n\
             |skip_connect~0|+|none~0|none~1|+|none~0|none~1|none~2|,58.25,1.6,9.4,0.9,3.2,1.2,0.8\n",
        )
        .unwrap();
        let map = ColumnMap {
            arch: "arch_str".into(),
            accuracy: "val_acc".into(),
            dataset_column: None,
            dataset_value: Some("cifar10".into()),
            latency: [
                ("edgegpu", "gpu_ms"),
                ("raspi4", "pi_ms"),
                ("edgetpu", "tpu_ms"),
                ("pixel3", "phone_ms"),
                ("eyeriss", "asic_ms"),
                ("fpga", "fpga_ms"),
            ]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
            proxies: None,
        };
        let store = BenchStore::ingest_csv(&foreign, &map).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.rows()[0].accuracy, 55.5);
        assert_eq!(store.rows()[1].latency(Device::Fpga), 0.8);
        assert_eq!(store.rows()[0].dataset, "cifar10");

        let mut missing = map.clone();
        missing.latency.remove("fpga");
        assert!(matches!(
            BenchStore::ingest_csv(&foreign, &missing),
            Err(StoreError::BadMapping(_))
        ));

        let mut wrong_col = map.clone();
        wrong_col.accuracy = "test_acc".into();
        assert!(matches!(
            BenchStore::ingest_csv(&foreign, &wrong_col),
            Err(StoreError::MissingColumn { column }) if column == "test_acc"
        ));
    }

    #[test]
    fn true_front_on_small_fixture() {
        let mut rows = sample_rows();
        // make rows mutually non-dominated on edgegpu: acc 60/67.5/75, lat 1/2/3
        let store = BenchStore::from_rows(rows.clone()).unwrap();
        let front = store.true_front("cifar10", Device::EdgeGpu, true).unwrap();
        assert_eq!(front.len(), 3);

        // a dominated record changes nothing
        rows.push(BenchRow {
            arch: "|avg_pool_3x3~0|+|none~0|none~1|+|none~0|none~1|none~2|".into(),
            dataset: "cifar10".into(),
            accuracy: 50.0,
            latency_ms: [5.0; 6],
            proxies: None,
        });
        let bigger = BenchStore::from_rows(rows).unwrap();
        let front2 = bigger.true_front("cifar10", Device::EdgeGpu, true).unwrap();
        assert_eq!(front, front2);

        assert!(matches!(
            bigger.true_front("cifar10", Device::EdgeGpu, false),
            Err(StoreError::PartialStore { rows: 4, .. })
        ));
        assert!(matches!(
            bigger.true_front("imagenet", Device::EdgeGpu, true),
            Err(StoreError::EmptyDataset(_))
        ));
    }

    #[test]
    fn true_front_matches_pairwise_scan() {
        let model = SyntheticModel::new(99);
        let cells: Vec<ArchCell> = (0..400)
            .map(|i| ArchCell::from_index(i * 37 % SPACE_SIZE).unwrap())
            .collect();
        let rows: Vec<BenchRow> = cells.iter().map(|c| model.row(c, "cifar10")).collect();
        let store = BenchStore::from_rows(rows.clone()).unwrap();
        let front = store.true_front("cifar10", Device::Pixel3, true).unwrap();

        // independent scan: keep rows no other row beats on both axes
        let mut expected: Vec<&BenchRow> = rows
            .iter()
            .filter(|r| {
                !rows.iter().any(|q| {
                    q.accuracy >= r.accuracy
                        && q.latency(Device::Pixel3) <= r.latency(Device::Pixel3)
                        && (q.accuracy > r.accuracy
                            || q.latency(Device::Pixel3) < r.latency(Device::Pixel3))
                })
            })
            .collect();
        expected.sort_by(|a, b| a.arch.cmp(&b.arch));
        let mut got: Vec<(&str, f64, f64)> = front
            .iter()
            .map(|e| (e.arch.as_str(), e.accuracy, e.latency_ms))
            .collect();
        got.sort_by(|a, b| a.0.cmp(b.0));
        let want: Vec<(&str, f64, f64)> = expected
            .iter()
            .map(|r| (r.arch.as_str(), r.accuracy, r.latency(Device::Pixel3)))
            .collect();
        assert_eq!(got, want);

        for a in &front {
            for b in &front {
                let dominates = a.accuracy >= b.accuracy
                    && a.latency_ms <= b.latency_ms
                    && (a.accuracy > b.accuracy || a.latency_ms < b.latency_ms);
                assert!(!dominates, "front not mutually non-dominated");
            }
        }
    }

    #[test]
    fn synthetic_store_is_deterministic_and_full() {
        let a = SyntheticModel::new(7).synthesize("cifar10").unwrap();
        let b = SyntheticModel::new(7).synthesize("cifar10").unwrap();
        assert_eq!(a.len(), SPACE_SIZE);
        assert_eq!(a.rows(), b.rows());
        assert!(a.has_proxies());

        let c = SyntheticModel::new(8).synthesize("cifar10").unwrap();
        assert_ne!(a.rows(), c.rows());
    }

    #[test]
    fn synthetic_latency_is_additive_and_positive() {
        let model = SyntheticModel::new(5);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..300 {
            let idx = rng.random_range(0..SPACE_SIZE);
            let cell = ArchCell::from_index(idx).unwrap();
            for device in Device::ALL {
                let base = model.latency(&cell, device);
                assert!(base > 0.0);
                for (e, op) in cell.edges().iter().enumerate() {
                    if *op == OpKind::None {
                        for replacement in OpKind::ALL {
                            let changed = cell.with_edge(e, replacement);
                            assert!(
                                model.latency(&changed, device) >= base,
                                "replacing none at edge {e} with {replacement} lowered latency"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn synthetic_accuracy_is_bounded() {
        let model = SyntheticModel::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..2000 {
            let cell = ArchCell::from_index(rng.random_range(0..SPACE_SIZE)).unwrap();
            let acc = model.accuracy(&cell, "cifar10");
            assert!((10.0..=95.0).contains(&acc), "accuracy {acc}");
        }
    }

    #[test]
    fn proxy_feature_zero_is_informative_but_imperfect() {
        let model = SyntheticModel::new(11);
        let mut accs = Vec::new();
        let mut p0 = Vec::new();
        for i in (0..SPACE_SIZE).step_by(7) {
            let cell = ArchCell::from_index(i).unwrap();
            accs.push(model.accuracy(&cell, "cifar10"));
            p0.push(model.proxies(&cell, "cifar10")[0]);
        }
        let rho = spearman(&p0, &accs).unwrap();
        assert!(rho > 0.5 && rho < 1.0, "spearman {rho}");
    }

    #[test]
    fn zero_noise_makes_proxies_exact_rank_copies() {
        let mut model = SyntheticModel::new(11);
        model.noise_amplitude = 0.0;
        let mut accs = Vec::new();
        let mut p4 = Vec::new();
        for i in (0..SPACE_SIZE).step_by(53) {
            let cell = ArchCell::from_index(i).unwrap();
            accs.push(model.accuracy(&cell, "cifar10"));
            p4.push(model.proxies(&cell, "cifar10")[4]);
        }
        let rho = spearman(&p4, &accs).unwrap();
        assert!((rho - 1.0).abs() < 1e-12, "spearman {rho}");
    }

    #[test]
    fn model_validation_rejects_bad_fields() {
        let mut m = SyntheticModel::new(1);
        m.noise_amplitude = -0.1;
        assert!(m.validate().is_err());
        let mut m = SyntheticModel::new(1);
        m.latency_jitter = 1.0;
        assert!(m.validate().is_err());
        let mut m = SyntheticModel::new(1);
        m.op_cost_ms[2] = -0.5;
        assert!(m.validate().is_err());
        assert!(SyntheticModel::new(1).validate().is_ok());
    }
}
