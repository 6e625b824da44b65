//! One function per subcommand. Each returns `CliError` variants that map
//! onto the documented exit codes; printing and process exit stay in main.

use crate::config::{
    load_config, parse_device, resolve_search, BoundsSection, ConfigFile, EngineFlags,
    ServiceFlags,
};
use crate::error::CliError;
use crate::plot::{self, Series};
use hwnas::coevolve::{
    HttpTextService, RecordingService, ReplayService, ServiceMode, TextService,
};
use hwnas::engine::{run_search, FrontRow, OperatorKind};
use hwnas::objectives::{hypervolume_2d, igd, ObjectiveBounds, ObjectivePoint};
use hwnas::predictor::{fit, Predictor};
use hwnas::report::{load_front_csv, write_eval_log, write_front_csv, write_front_rows, write_hv_trace, write_report_json};
use hwnas::space::{assign_niche, enumerate_space, ArchCell, NicheSet, SPACE_SIZE};
use hwnas::store::{BenchStore, ColumnMap, Device, FrontEntry, StoreFormat, SyntheticModel};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn store_format(path: &Path, flag: Option<&str>) -> Result<StoreFormat, CliError> {
    match flag {
        Some("csv") => Ok(StoreFormat::Csv),
        Some("jsonl") => Ok(StoreFormat::JsonLines),
        Some(other) => Err(CliError::Config(format!(
            "unknown store format `{other}` (expected csv or jsonl)"
        ))),
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => Ok(StoreFormat::JsonLines),
            _ => Ok(StoreFormat::Csv),
        },
    }
}

fn load_store(path: &Path, format: Option<&str>) -> Result<BenchStore, CliError> {
    let format = store_format(path, format)?;
    BenchStore::load(path, format)
        .map_err(|e| CliError::Data(format!("store {}: {e}", path.display())))
}

fn read_config(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    match path {
        Some(p) => load_config(p),
        None => Ok(ConfigFile::default()),
    }
}

pub fn cmd_synth(
    seed: u64,
    dataset: &str,
    out: &Path,
    format: Option<&str>,
    from_model: Option<&Path>,
) -> Result<(), CliError> {
    let model = match from_model {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let model: SyntheticModel = serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            model.validate().map_err(CliError::from)?;
            model
        }
        None => SyntheticModel::new(seed),
    };
    let store = model.synthesize(dataset)?;
    let format = store_format(out, format)?;
    store
        .save(out, format)
        .map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;

    let sidecar = sidecar_path(out);
    let json = serde_json::to_string_pretty(&model)
        .expect("synthetic model serializes") + "\n";
    std::fs::write(&sidecar, json)
        .map_err(|e| CliError::Data(format!("{}: {e}", sidecar.display())))?;
    println!(
        "wrote {} rows to {} (model sidecar {})",
        store.len(),
        out.display(),
        sidecar.display()
    );
    Ok(())
}

/// `store.csv` gets `store.csv.model.json` so the pairing survives renames.
fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".model.json");
    PathBuf::from(name)
}

pub fn cmd_ingest(
    csv: &Path,
    map_path: &Path,
    out: &Path,
    format: Option<&str>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(map_path)
        .map_err(|e| CliError::Config(format!("{}: {e}", map_path.display())))?;
    let map: ColumnMap = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", map_path.display())))?;
    map.validate()
        .map_err(|e| CliError::Config(format!("{}: {e}", map_path.display())))?;
    let store = BenchStore::ingest_csv(csv, &map)
        .map_err(|e| CliError::Data(format!("{}: {e}", csv.display())))?;
    let format = store_format(out, format)?;
    store
        .save(out, format)
        .map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    println!("ingested {} rows into {}", store.len(), out.display());
    Ok(())
}

pub fn cmd_fit(
    config: Option<&Path>,
    store_flag: Option<PathBuf>,
    dataset_flag: Option<String>,
    sample_size: usize,
    seed: u64,
    out: &Path,
    report_path: Option<&Path>,
) -> Result<(), CliError> {
    let file = read_config(config)?;
    let store_path = store_flag
        .or(file.store.clone())
        .ok_or_else(|| CliError::Config("no store path given (flag --store or file key `store`)".to_string()))?;
    let dataset = dataset_flag
        .or(file.engine.dataset.clone())
        .unwrap_or_else(|| "cifar10".to_string());
    let store = load_store(&store_path, None)?;
    let (predictor, report) = fit(&store, &dataset, sample_size, seed)?;
    predictor.save(out)?;
    let json = serde_json::to_string_pretty(&report).expect("fit report serializes");
    println!("{json}");
    if let Some(path) = report_path {
        std::fs::write(path, json + "\n")
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    println!("saved predictor to {}", out.display());
    Ok(())
}

/// Default sample size when a predictor is fitted implicitly by `search`.
const AUTO_FIT_SAMPLE: usize = 1000;

fn build_predictor(
    spec: &str,
    store: &BenchStore,
    dataset: &str,
    seed: u64,
) -> Result<Predictor, CliError> {
    match spec {
        // Surrogate when the store supports one, exact lookup otherwise.
        "auto" => {
            if store.has_proxies() {
                let sample = AUTO_FIT_SAMPLE.min(store.dataset_len(dataset) / 2);
                let (predictor, report) = fit(store, dataset, sample, seed)?;
                eprintln!(
                    "fitted predictor on {} rows, holdout Spearman {:.4}",
                    report.train_size, report.spearman_holdout
                );
                Ok(predictor)
            } else {
                eprintln!(
                    "warning: store has no proxy features; falling back to oracle accuracy lookup"
                );
                Ok(Predictor::oracle())
            }
        }
        "oracle" => Ok(Predictor::oracle()),
        "rank" => Ok(Predictor::rank_ensemble(store, dataset)?),
        path => Predictor::load(Path::new(path))
            .map_err(|e| CliError::Data(format!("predictor {path}: {e}"))),
    }
}

pub fn cmd_search(
    config: Option<&Path>,
    store_flag: Option<PathBuf>,
    predictor_flag: Option<String>,
    out_dir_flag: Option<PathBuf>,
    engine_flags: &EngineFlags,
    service_flags: &ServiceFlags,
) -> Result<(), CliError> {
    let file = read_config(config)?;
    let resolved = resolve_search(
        &file,
        store_flag,
        predictor_flag,
        out_dir_flag,
        engine_flags,
        service_flags,
    )?;
    let store = load_store(&resolved.store, None)?;
    let predictor = build_predictor(
        &resolved.predictor,
        &store,
        &resolved.engine.dataset,
        resolved.engine.seed,
    )?;

    // The service is built only when the operator needs one; baseline runs
    // never touch the network or the transcript.
    let service: Option<Box<dyn TextService>> = if resolved.engine.operator == OperatorKind::Llm {
        Some(build_service(&resolved.service)?)
    } else {
        None
    };

    let report = run_search(&resolved.engine, &store, &predictor, service.as_deref())?;

    let out_dir = &resolved.out_dir;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", out_dir.display())))?;
    write_front_csv(&report, &out_dir.join("front.csv"))?;
    write_report_json(&report, &out_dir.join("report.json"))?;
    write_eval_log(&report, &out_dir.join("events.jsonl"))?;
    write_hv_trace(&report, &out_dir.join("hv_trace.csv"))?;

    println!(
        "front {} points, hypervolume {}, {} evaluations, stage1 {}, stage2 {}, operator failures {}, {} ms",
        report.front.len(),
        report.meta.get("hv_final").map(String::as_str).unwrap_or("?"),
        report.meta.get("evaluations").map(String::as_str).unwrap_or("?"),
        report.stage1_calls,
        report.stage2_calls,
        report.operator_failures,
        report.wall_ms
    );
    println!("artifacts in {}", out_dir.display());
    Ok(())
}

fn build_service(
    config: &hwnas::coevolve::TextServiceConfig,
) -> Result<Box<dyn TextService>, CliError> {
    match config.mode {
        ServiceMode::Replay => {
            let path = config.transcript.as_ref().ok_or_else(|| {
                CliError::Config("replay mode requires a transcript path".to_string())
            })?;
            Ok(Box::new(ReplayService::from_path(path)?))
        }
        ServiceMode::Live | ServiceMode::Record => {
            if let Some(var) = &config.auth_env {
                // Fail before the run starts, not on the first request.
                if std::env::var(var).is_err() {
                    return Err(CliError::Config(format!(
                        "auth environment variable `{var}` is not set"
                    )));
                }
            }
            let http = HttpTextService::new(config.clone())?;
            http.preflight()?;
            if config.mode == ServiceMode::Record {
                let path = config.transcript.as_ref().ok_or_else(|| {
                    CliError::Config("record mode requires a transcript path".to_string())
                })?;
                Ok(Box::new(RecordingService::create(http, path)?))
            } else {
                Ok(Box::new(http))
            }
        }
    }
}

struct ResolvedBounds {
    bounds: ObjectiveBounds,
    source: &'static str,
    values: (f64, f64, f64, f64),
}

fn bounds_from_values(
    acc_min: f64,
    acc_max: f64,
    lat_min: f64,
    lat_max: f64,
    source: &'static str,
) -> Result<ResolvedBounds, CliError> {
    let bounds = ObjectiveBounds::new(acc_min, acc_max, lat_min, lat_max)
        .map_err(|e| CliError::Config(format!("normalization bounds: {e}")))?;
    Ok(ResolvedBounds {
        bounds,
        source,
        values: (acc_min, acc_max, lat_min, lat_max),
    })
}

fn meta_bounds(meta: &BTreeMap<String, String>) -> Option<(f64, f64, f64, f64)> {
    let get = |key: &str| meta.get(key)?.parse::<f64>().ok();
    Some((
        get("bounds_acc_min")?,
        get("bounds_acc_max")?,
        get("bounds_lat_min")?,
        get("bounds_lat_max")?,
    ))
}

fn extent(entries: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    let mut acc = (f64::INFINITY, f64::NEG_INFINITY);
    let mut lat = (f64::INFINITY, f64::NEG_INFINITY);
    for (a, l) in entries {
        acc = (acc.0.min(*a), acc.1.max(*a));
        lat = (lat.0.min(*l), lat.1.max(*l));
    }
    (acc.0, acc.1, lat.0, lat.1)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_metrics(
    config: Option<&Path>,
    front_path: &Path,
    truth_store: Option<PathBuf>,
    truth_front: Option<PathBuf>,
    dataset_flag: Option<String>,
    device_flag: Option<String>,
    allow_partial: bool,
    bounds_flag: Option<String>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let file = read_config(config)?;
    let (front_meta, front_rows) = load_front_csv(front_path)?;
    if front_rows.is_empty() {
        return Err(CliError::Data(format!(
            "front {} has no points; IGD is undefined on an empty front",
            front_path.display()
        )));
    }

    let dataset = dataset_flag
        .or(file.engine.dataset.clone())
        .unwrap_or_else(|| "cifar10".to_string());
    let device = match device_flag.as_deref().or(file.engine.device.as_deref()) {
        Some(name) => parse_device(name)?,
        None => Device::EdgeGpu,
    };

    let truth_store = truth_store.or_else(|| {
        if truth_front.is_none() {
            file.store.clone()
        } else {
            None
        }
    });
    let (truth_label, truth_entries, store): (String, Vec<FrontEntry>, Option<BenchStore>) =
        match (&truth_store, &truth_front) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give exactly one of --truth-store and --truth-front".to_string(),
                ))
            }
            (Some(path), None) => {
                let store = load_store(path, None)?;
                let entries = store.true_front(&dataset, device, allow_partial)?;
                (path.display().to_string(), entries, Some(store))
            }
            (None, Some(path)) => {
                let (_, rows) = load_front_csv(path)?;
                let entries = rows
                    .into_iter()
                    .map(|r| FrontEntry {
                        arch: r.arch,
                        accuracy: r.accuracy,
                        latency_ms: r.latency,
                    })
                    .collect();
                (path.display().to_string(), entries, None)
            }
            (None, None) => {
                return Err(CliError::Config(
                    "no truth source (flag --truth-store or --truth-front, or file key `store`)"
                        .to_string(),
                ))
            }
        };
    if truth_entries.is_empty() {
        return Err(CliError::Data(format!(
            "truth front {truth_label} has no points"
        )));
    }

    // Bounds precedence: explicit flag, then the file's [bounds] table, then
    // the truth store's ranges, then front metadata, then the data extent.
    let resolved_bounds = if let Some(spec) = bounds_flag {
        let parts: Vec<f64> = spec
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| {
                CliError::Config(format!(
                    "--bounds expects acc_min,acc_max,lat_min,lat_max, got `{spec}`"
                ))
            })?;
        if parts.len() != 4 {
            return Err(CliError::Config(format!(
                "--bounds expects 4 comma-separated values, got {}",
                parts.len()
            )));
        }
        bounds_from_values(parts[0], parts[1], parts[2], parts[3], "flag")?
    } else if let Some(BoundsSection {
        acc_min: Some(a0),
        acc_max: Some(a1),
        lat_min: Some(l0),
        lat_max: Some(l1),
    }) = file.bounds
    {
        bounds_from_values(a0, a1, l0, l1, "config")?
    } else if let Some(store) = &store {
        let (acc_min, acc_max) = store.accuracy_range(&dataset)?;
        let (lat_min, lat_max) = store.latency_range(&dataset, device)?;
        bounds_from_values(acc_min, acc_max, lat_min, lat_max, "store")?
    } else if let Some((a0, a1, l0, l1)) = meta_bounds(&front_meta) {
        bounds_from_values(a0, a1, l0, l1, "front metadata")?
    } else {
        let mut all: Vec<(f64, f64)> = front_rows
            .iter()
            .map(|r| (r.accuracy, r.latency))
            .collect();
        all.extend(truth_entries.iter().map(|e| (e.accuracy, e.latency_ms)));
        let (a0, a1, l0, l1) = extent(&all);
        bounds_from_values(a0, a1, l0, l1, "data extent")?
    };
    let bounds = resolved_bounds.bounds;

    let reference = ObjectivePoint::new(1.0, 1.0).expect("finite");
    let front_points: Vec<ObjectivePoint> = front_rows
        .iter()
        .map(|r| bounds.normalize(r.accuracy, r.latency))
        .collect();
    let truth_points: Vec<ObjectivePoint> = truth_entries
        .iter()
        .map(|e| bounds.normalize(e.accuracy, e.latency_ms))
        .collect();

    let hv = hypervolume_2d(&front_points, reference)?;
    let truth_hv = hypervolume_2d(&truth_points, reference)?;
    let igd_value = igd(&truth_points, &front_points)?;

    let (acc_min, acc_max, lat_min, lat_max) = resolved_bounds.values;
    let result = serde_json::json!({
        "front": front_path.display().to_string(),
        "front_points": front_rows.len(),
        "truth": truth_label,
        "truth_points": truth_entries.len(),
        "dataset": dataset,
        "device": device.name(),
        "bounds": {
            "acc_min": acc_min,
            "acc_max": acc_max,
            "lat_min": lat_min,
            "lat_max": lat_max,
            "source": resolved_bounds.source,
        },
        "reference": { "f1": reference.f1, "f2": reference.f2 },
        "hypervolume": hv.value,
        "points_outside_reference": hv.excluded,
        "truth_hypervolume": truth_hv.value,
        "igd": igd_value,
    });
    let json = serde_json::to_string_pretty(&result).expect("metrics report serializes");
    println!("{json}");
    if let Some(path) = out {
        std::fs::write(path, json + "\n")
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn cmd_front(
    config: Option<&Path>,
    store_flag: Option<PathBuf>,
    dataset_flag: Option<String>,
    device_flag: Option<String>,
    allow_partial: bool,
    out: &Path,
) -> Result<(), CliError> {
    let file = read_config(config)?;
    let store_path = store_flag
        .or(file.store.clone())
        .ok_or_else(|| CliError::Config("no store path given (flag --store or file key `store`)".to_string()))?;
    let dataset = dataset_flag
        .or(file.engine.dataset.clone())
        .unwrap_or_else(|| "cifar10".to_string());
    let device = match device_flag.as_deref().or(file.engine.device.as_deref()) {
        Some(name) => parse_device(name)?,
        None => Device::EdgeGpu,
    };

    let store = load_store(&store_path, None)?;
    let entries = store.true_front(&dataset, device, allow_partial)?;
    let rows: Vec<FrontRow> = entries
        .iter()
        .map(|e| {
            let niche = ArchCell::decode(&e.arch)
                .map(|cell| assign_niche(&cell).0)
                .unwrap_or(0);
            FrontRow {
                arch: e.arch.clone(),
                niche,
                accuracy: e.accuracy,
                latency: e.latency_ms,
                generation: 0,
            }
        })
        .collect();

    let mut meta = BTreeMap::new();
    meta.insert("source".to_string(), "true_front".to_string());
    meta.insert("dataset".to_string(), dataset.clone());
    meta.insert("device".to_string(), device.name().to_string());
    if let (Ok((acc_min, acc_max)), Ok((lat_min, lat_max))) = (
        store.accuracy_range(&dataset),
        store.latency_range(&dataset, device),
    ) {
        meta.insert("bounds_acc_min".to_string(), acc_min.to_string());
        meta.insert("bounds_acc_max".to_string(), acc_max.to_string());
        meta.insert("bounds_lat_min".to_string(), lat_min.to_string());
        meta.insert("bounds_lat_max".to_string(), lat_max.to_string());
    }
    write_front_rows(&meta, &rows, out)?;
    println!("{} true-front points written to {}", rows.len(), out.display());
    Ok(())
}

pub fn cmd_plot_data(
    fronts: &[PathBuf],
    labels: &[String],
    out: &Path,
    svg: Option<&Path>,
) -> Result<(), CliError> {
    if !labels.is_empty() && labels.len() != fronts.len() {
        return Err(CliError::Config(format!(
            "{} labels for {} front files",
            labels.len(),
            fronts.len()
        )));
    }
    let mut series = Vec::new();
    for (i, path) in fronts.iter().enumerate() {
        let (meta, rows) = load_front_csv(path)?;
        let label = labels.get(i).cloned().unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("series{i}"))
        });
        series.push(Series { label, meta, rows });
    }
    let merged = plot::merged_csv(&series);
    std::fs::write(out, &merged)
        .map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    let total: usize = series.iter().map(|s| s.rows.len()).sum();
    println!(
        "merged {} points from {} fronts into {}",
        total,
        series.len(),
        out.display()
    );
    if let Some(svg_path) = svg {
        let drawing = plot::svg_scatter(&series);
        std::fs::write(svg_path, drawing)
            .map_err(|e| CliError::Data(format!("{}: {e}", svg_path.display())))?;
        println!("scatter written to {}", svg_path.display());
    }
    Ok(())
}

pub fn cmd_enumerate(out: Option<&Path>) -> Result<(), CliError> {
    let niches = NicheSet::complexity_default();
    let mut counts = vec![0usize; niches.len()];
    let mut listing = out.map(|_| String::from("arch,niche,n_conv3x3,n_conv1x1\n"));
    let mut total = 0usize;
    for cell in enumerate_space() {
        total += 1;
        let id = niches.assign(&cell).expect("default niches partition the space");
        counts[id.0] += 1;
        if let Some(text) = listing.as_mut() {
            let profile = cell.complexity();
            text.push_str(&format!(
                "{},{},{},{}\n",
                cell.encode(),
                id.0,
                profile.n_conv3x3,
                profile.n_conv1x1
            ));
        }
    }
    assert_eq!(total, SPACE_SIZE);
    println!("space: {total} cells across {} niches", niches.len());
    for (i, count) in counts.iter().enumerate() {
        let p = niches.predicate(hwnas::space::NicheId(i));
        println!(
            "niche {i} ({} conv3x3, {} conv1x1): {count}",
            p.conv3x3, p.conv1x1
        );
    }
    if let (Some(path), Some(text)) = (out, listing) {
        std::fs::write(path, text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        println!("listing written to {}", path.display());
    }
    Ok(())
}
