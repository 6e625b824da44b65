//! The search configuration file and its merge with command-line flags.
//!
//! The TOML document mirrors the engine configuration and adds the store
//! location, the predictor choice, the text-service connection, and
//! explicit normalization bounds. Unknown keys are rejected. Every value
//! can also be supplied as a flag; a flag beats the file and the file
//! beats the built-in default.
//!
//! The service auth token itself never appears here. The file may name an
//! environment variable (`auth_env`) and the token is read from the
//! process environment at connection time.

use crate::error::CliError;
use clap::Args;
use hwnas::coevolve::{ServiceMode, TextServiceConfig};
use hwnas::engine::{EngineConfig, OperatorKind};
use hwnas::space::{NichePredicate, NicheSet};
use hwnas::store::Device;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    /// Benchmark store path (canonical CSV or JSON-lines schema).
    pub store: Option<PathBuf>,
    /// `auto`, `oracle`, `rank`, or a path to a saved predictor file.
    pub predictor: Option<String>,
    /// Directory the run artifacts are written into.
    pub out_dir: Option<PathBuf>,
    pub engine: EngineSection,
    pub service: Option<TextServiceConfig>,
    pub bounds: Option<BoundsSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub device: Option<String>,
    pub dataset: Option<String>,
    pub generations: Option<usize>,
    pub crossover_prob: Option<f64>,
    pub init_per_niche: Option<usize>,
    pub n_children: Option<usize>,
    pub operator: Option<String>,
    pub seed: Option<u64>,
    pub niches: Option<NichesSpec>,
    pub partitioning: Option<bool>,
    pub max_retries: Option<u32>,
    pub archive_literal: Option<bool>,
    pub shared_knowledge: Option<bool>,
    pub latency_limit_ms: Option<f64>,
    pub workers: Option<usize>,
}

/// Niche selection: a preset name or an explicit predicate list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NichesSpec {
    Preset(String),
    Custom(Vec<NichePredicate>),
}

/// Explicit normalization bounds for metric evaluation. When absent the
/// bounds come from the truth store, or failing that from front metadata.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSection {
    pub acc_min: Option<f64>,
    pub acc_max: Option<f64>,
    pub lat_min: Option<f64>,
    pub lat_max: Option<f64>,
}

pub fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Engine fields as flags, all optional so the file value survives when a
/// flag is not given. Booleans take an explicit value (`--partitioning
/// false`) so a flag can override the file in either direction; giving the
/// flag bare means `true`.
#[derive(Debug, Clone, Default, Args)]
pub struct EngineFlags {
    /// Target device for the latency objective (edgegpu, raspi4, edgetpu,
    /// pixel3, eyeriss, fpga)
    #[arg(long)]
    pub device: Option<String>,
    /// Dataset column of the store to search on
    #[arg(long)]
    pub dataset: Option<String>,
    /// Number of generations after initialization
    #[arg(long)]
    pub generations: Option<usize>,
    /// Probability of crossover over mutation for baseline children
    #[arg(long)]
    pub crossover_prob: Option<f64>,
    /// Architectures sampled into each niche at initialization
    #[arg(long)]
    pub init_per_niche: Option<usize>,
    /// Children generated per niche per generation
    #[arg(long)]
    pub n_children: Option<usize>,
    /// Candidate generator: baseline or llm
    #[arg(long)]
    pub operator: Option<String>,
    /// Seed for every stochastic choice in the run
    #[arg(long)]
    pub seed: Option<u64>,
    /// Niche preset: default (six complexity niches) or whole (single niche
    /// over the full space)
    #[arg(long)]
    pub niches: Option<String>,
    /// Partition the search across niches; false runs one pooled population
    /// at the same total budget
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub partitioning: Option<bool>,
    /// Repair retries before a candidate is dropped
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Keep every accepted architecture in the archive instead of only the
    /// non-dominated set
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub archive_literal: Option<bool>,
    /// Share one knowledge base across niches instead of one per niche
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub shared_knowledge: Option<bool>,
    /// Latency ceiling rendered into prompts, in milliseconds
    #[arg(long)]
    pub latency_limit_ms: Option<f64>,
    /// Evaluation worker threads; 0 means one per niche
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Text-service fields as flags, mirroring the `[service]` table.
#[derive(Debug, Clone, Default, Args)]
pub struct ServiceFlags {
    /// Chat-completion endpoint URL
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model name sent with each request
    #[arg(long)]
    pub model: Option<String>,
    /// Name of the environment variable holding the bearer token; the token
    /// itself is never written to any file
    #[arg(long)]
    pub auth_env: Option<String>,
    /// Per-request timeout in seconds
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    /// HTTP retry budget per request
    #[arg(long)]
    pub service_retries: Option<u32>,
    /// Sampling temperature sent with each request
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Dot-separated path of the reply text inside the response JSON
    #[arg(long)]
    pub response_path: Option<String>,
    /// Service mode: live, record, or replay
    #[arg(long)]
    pub mode: Option<String>,
    /// Transcript file: read in replay mode, written in record mode
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

pub fn parse_device(name: &str) -> Result<Device, CliError> {
    Device::from_name(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown device `{name}` (expected one of edgegpu, raspi4, edgetpu, pixel3, eyeriss, fpga)"
        ))
    })
}

fn parse_operator(name: &str) -> Result<OperatorKind, CliError> {
    match name {
        "baseline" => Ok(OperatorKind::Baseline),
        "llm" => Ok(OperatorKind::Llm),
        other => Err(CliError::Config(format!(
            "unknown operator `{other}` (expected baseline or llm)"
        ))),
    }
}

fn parse_mode(name: &str) -> Result<ServiceMode, CliError> {
    match name {
        "live" => Ok(ServiceMode::Live),
        "record" => Ok(ServiceMode::Record),
        "replay" => Ok(ServiceMode::Replay),
        other => Err(CliError::Config(format!(
            "unknown service mode `{other}` (expected live, record, or replay)"
        ))),
    }
}

fn parse_niches(spec: &NichesSpec) -> Result<NicheSet, CliError> {
    match spec {
        NichesSpec::Preset(name) => match name.as_str() {
            "default" => Ok(NicheSet::complexity_default()),
            "whole" => Ok(NicheSet::whole_space()),
            other => Err(CliError::Config(format!(
                "unknown niche preset `{other}` (expected default or whole, or an explicit predicate list)"
            ))),
        },
        NichesSpec::Custom(predicates) => NicheSet::new(predicates.clone())
            .map_err(|e| CliError::Config(e.to_string())),
    }
}

/// Everything the search command needs after merging flags over the file
/// over the defaults.
#[derive(Debug)]
pub struct ResolvedSearch {
    pub store: PathBuf,
    pub predictor: String,
    pub out_dir: PathBuf,
    pub engine: EngineConfig,
    pub service: TextServiceConfig,
}

pub fn resolve_search(
    file: &ConfigFile,
    store_flag: Option<PathBuf>,
    predictor_flag: Option<String>,
    out_dir_flag: Option<PathBuf>,
    engine_flags: &EngineFlags,
    service_flags: &ServiceFlags,
) -> Result<ResolvedSearch, CliError> {
    let store = store_flag
        .or_else(|| file.store.clone())
        .ok_or_else(|| CliError::Config("no store path given (flag --store or file key `store`)".to_string()))?;
    let predictor = predictor_flag
        .or_else(|| file.predictor.clone())
        .unwrap_or_else(|| "auto".to_string());
    let out_dir = out_dir_flag
        .or_else(|| file.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));

    let mut engine = EngineConfig::default();
    let section = &file.engine;
    if let Some(name) = engine_flags.device.as_deref().or(section.device.as_deref()) {
        engine.device = parse_device(name)?;
    }
    if let Some(dataset) = engine_flags.dataset.as_ref().or(section.dataset.as_ref()) {
        engine.dataset = dataset.clone();
    }
    if let Some(v) = engine_flags.generations.or(section.generations) {
        engine.generations = v;
    }
    if let Some(v) = engine_flags.crossover_prob.or(section.crossover_prob) {
        engine.crossover_prob = v;
    }
    if let Some(v) = engine_flags.init_per_niche.or(section.init_per_niche) {
        engine.init_per_niche = v;
    }
    if let Some(v) = engine_flags.n_children.or(section.n_children) {
        engine.n_children = v;
    }
    if let Some(name) = engine_flags.operator.as_deref().or(section.operator.as_deref()) {
        engine.operator = parse_operator(name)?;
    }
    if let Some(v) = engine_flags.seed.or(section.seed) {
        engine.seed = v;
    }
    let niches_flag = engine_flags.niches.clone().map(NichesSpec::Preset);
    if let Some(spec) = niches_flag.as_ref().or(section.niches.as_ref()) {
        engine.niches = parse_niches(spec)?;
    }
    if let Some(v) = engine_flags.partitioning.or(section.partitioning) {
        engine.partitioning = v;
    }
    if let Some(v) = engine_flags.max_retries.or(section.max_retries) {
        engine.max_retries = v;
    }
    if let Some(v) = engine_flags.archive_literal.or(section.archive_literal) {
        engine.archive_literal = v;
    }
    if let Some(v) = engine_flags.shared_knowledge.or(section.shared_knowledge) {
        engine.shared_knowledge = v;
    }
    if let Some(v) = engine_flags.latency_limit_ms.or(section.latency_limit_ms) {
        engine.latency_limit_ms = Some(v);
    }
    if let Some(v) = engine_flags.workers.or(section.workers) {
        engine.workers = v;
    }

    let mut service = file.service.clone().unwrap_or_default();
    if let Some(v) = service_flags.endpoint.as_ref() {
        service.endpoint = v.clone();
    }
    if let Some(v) = service_flags.model.as_ref() {
        service.model = v.clone();
    }
    if let Some(v) = service_flags.auth_env.as_ref() {
        service.auth_env = Some(v.clone());
    }
    if let Some(v) = service_flags.timeout_secs {
        service.timeout_secs = v;
    }
    if let Some(v) = service_flags.service_retries {
        service.max_retries = v;
    }
    if let Some(v) = service_flags.temperature {
        service.temperature = v;
    }
    if let Some(v) = service_flags.response_path.as_ref() {
        service.response_path = v.clone();
    }
    if let Some(name) = service_flags.mode.as_deref() {
        service.mode = parse_mode(name)?;
    }
    if let Some(v) = service_flags.transcript.as_ref() {
        service.transcript = Some(v.clone());
    }

    Ok(ResolvedSearch {
        store,
        predictor,
        out_dir,
        engine,
        service,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beats_default() {
        let file: ConfigFile = toml::from_str(
            r#"
            store = "s.csv"
            [engine]
            generations = 4
            seed = 11
            device = "fpga"
            "#,
        )
        .unwrap();
        let flags = EngineFlags {
            seed: Some(99),
            ..EngineFlags::default()
        };
        let resolved = resolve_search(&file, None, None, None, &flags, &ServiceFlags::default())
            .unwrap();
        assert_eq!(resolved.engine.seed, 99); // flag
        assert_eq!(resolved.engine.generations, 4); // file
        assert_eq!(resolved.engine.n_children, 2); // default
        assert_eq!(resolved.engine.device, Device::Fpga); // file
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<ConfigFile>("stor = \"x\"").unwrap_err();
        assert!(err.to_string().contains("stor"));
        let err = toml::from_str::<ConfigFile>("[engine]\nseedd = 3").unwrap_err();
        assert!(err.to_string().contains("seedd"));
    }

    #[test]
    fn custom_niche_list_parses_and_validates() {
        let file: ConfigFile = toml::from_str(
            r#"
            [engine]
            niches = [
                { conv3x3 = { exact = 0 }, conv1x1 = "any" },
                { conv3x3 = { at_least = 1 }, conv1x1 = "any" },
            ]
            "#,
        )
        .unwrap();
        let flags = EngineFlags::default();
        let resolved = resolve_search(
            &file,
            Some(PathBuf::from("s.csv")),
            None,
            None,
            &flags,
            &ServiceFlags::default(),
        )
        .unwrap();
        assert_eq!(resolved.engine.niches.len(), 2);

        // Overlapping predicates must be rejected at resolve time.
        let overlapping: ConfigFile = toml::from_str(
            r#"
            [engine]
            niches = [
                { conv3x3 = "any", conv1x1 = "any" },
                { conv3x3 = { exact = 0 }, conv1x1 = "any" },
            ]
            "#,
        )
        .unwrap();
        let err = resolve_search(
            &overlapping,
            Some(PathBuf::from("s.csv")),
            None,
            None,
            &flags,
            &ServiceFlags::default(),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
