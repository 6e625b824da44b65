//! Search orchestration: seeded initialization per niche, generations of
//! gated candidate production, per-niche Pareto archives, and aggregation
//! of all archives into one front with a full run report.
//!
//! Determinism is the load-bearing property here. Each niche owns an RNG
//! stream derived from (seed, niche id), niches never share mutable state
//! within a generation, and all cross-niche merges (novelty set, hypervolume
//! trace, final front, event log) happen at generation barriers in niche-id
//! order. Worker count therefore changes scheduling only, never output.

use crate::coevolve::{
    baseline_crossover, baseline_mutate, llm_generate, llm_update_knowledge, GenerationContext,
    KnowledgeBase, ParentRecord, TextService,
};
use crate::objectives::{
    hypervolume_2d, non_dominated_indices, InsertOutcome, MetricError, ObjectiveBounds,
    ObjectivePoint, ParetoArchive,
};
use crate::predictor::{Predictor, PredictorError};
use crate::space::{ArchCell, NicheId, NichePredicate, NicheSet, SPACE_SIZE};
use crate::store::{splitmix64, BenchStore, Device, StoreError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("operator kind `llm` requires a text service")]
    MissingService,
}

/// Which candidate generator drives the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Baseline,
    Llm,
}

impl OperatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OperatorKind::Baseline => "baseline",
            OperatorKind::Llm => "llm",
        }
    }
}

/// Full search configuration. The predictor and text service are passed to
/// [`run_search`] as live objects; everything else lives here.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub device: Device,
    pub dataset: String,
    pub generations: usize,
    pub crossover_prob: f64,
    pub init_per_niche: usize,
    pub n_children: usize,
    pub operator: OperatorKind,
    pub seed: u64,
    pub niches: NicheSet,
    pub partitioning: bool,
    pub max_retries: u32,
    pub archive_literal: bool,
    pub shared_knowledge: bool,
    /// Rendered into prompts as the latency ceiling; defaults to the
    /// device's worst latency in the store, so nothing is ruled out.
    pub latency_limit_ms: Option<f64>,
    /// 0 means one worker per niche.
    pub workers: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            device: Device::EdgeGpu,
            dataset: "cifar10".to_string(),
            generations: 10,
            crossover_prob: 0.5,
            init_per_niche: 5,
            n_children: 2,
            operator: OperatorKind::Baseline,
            seed: 0,
            niches: NicheSet::complexity_default(),
            partitioning: true,
            max_retries: 2,
            archive_literal: false,
            shared_knowledge: false,
            latency_limit_ms: None,
            workers: 0,
        }
    }
}

/// An architecture that passed all gates and was scored.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedArch {
    pub cell: ArchCell,
    pub arch: String,
    pub niche: NicheId,
    pub z_pred: f64,
    pub latency_ms: f64,
    pub true_accuracy: Option<f64>,
    pub rationale: String,
    pub generation: usize,
}

/// Why a candidate never reached evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateReason {
    NonNovel,
    Constraint,
}

/// One line of the evaluation log. The log is complete enough to replay
/// every archive decision offline: accepted flags plus objective values
/// reconstruct each archive at every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EvalEvent {
    Evaluated {
        generation: usize,
        niche: usize,
        arch: String,
        operation: String,
        z_pred: f64,
        latency_ms: f64,
        accepted: bool,
    },
    Gated {
        generation: usize,
        niche: usize,
        arch: String,
        reason: GateReason,
    },
    OperatorIssue {
        generation: usize,
        niche: usize,
        detail: String,
    },
    Knowledge {
        generation: usize,
        niche: usize,
        rules: usize,
    },
}

impl EvalEvent {
    fn generation(&self) -> usize {
        match self {
            EvalEvent::Evaluated { generation, .. }
            | EvalEvent::Gated { generation, .. }
            | EvalEvent::OperatorIssue { generation, .. }
            | EvalEvent::Knowledge { generation, .. } => *generation,
        }
    }

    fn niche(&self) -> usize {
        match self {
            EvalEvent::Evaluated { niche, .. }
            | EvalEvent::Gated { niche, .. }
            | EvalEvent::OperatorIssue { niche, .. }
            | EvalEvent::Knowledge { niche, .. } => *niche,
        }
    }
}

/// Per-niche archive. The default enforces the dominance guard (rejecting
/// dominated newcomers); the literal variant follows the plain set-builder
/// update, which admits a dominated newcomer while still evicting anything
/// the newcomer dominates.
#[derive(Debug)]
enum NicheArchive {
    Pareto(ParetoArchive<EvaluatedArch>),
    Literal(Vec<(EvaluatedArch, ObjectivePoint)>),
}

impl NicheArchive {
    fn new(literal: bool) -> Self {
        if literal {
            NicheArchive::Literal(Vec::new())
        } else {
            NicheArchive::Pareto(ParetoArchive::new())
        }
    }

    fn insert(&mut self, item: EvaluatedArch, point: ObjectivePoint) -> bool {
        match self {
            NicheArchive::Pareto(archive) => {
                matches!(archive.try_insert(item, point), InsertOutcome::Added { .. })
            }
            NicheArchive::Literal(entries) => {
                entries.retain(|(_, p)| !point.dominates(p));
                entries.push((item, point));
                true
            }
        }
    }

    fn members(&self) -> Vec<(&EvaluatedArch, &ObjectivePoint)> {
        match self {
            NicheArchive::Pareto(archive) => archive.iter().collect(),
            NicheArchive::Literal(entries) => entries.iter().map(|(i, p)| (i, p)).collect(),
        }
    }

    #[cfg(test)]
    fn len(&self) -> usize {
        self.members().len()
    }
}

/// All mutable state one niche carries through a run. Single-writer: only
/// the worker evolving this niche touches it.
pub struct NicheState {
    id: NicheId,
    archive: NicheArchive,
    kb: KnowledgeBase,
    rng: ChaCha8Rng,
    log: Vec<EvalEvent>,
    evaluated_here: HashSet<String>,
    fresh: Vec<String>,
    evaluations: usize,
    stage1_calls: u32,
    stage2_calls: u32,
    failures: u32,
}

/// RNG stream seed for a niche: one splitmix step over (seed, id) gives
/// uncorrelated streams even for adjacent seeds and ids.
pub fn stream_seed(seed: u64, niche: usize) -> u64 {
    splitmix64(seed ^ splitmix64(niche as u64))
}

/// Archive member snapshot for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchivePoint {
    pub arch: String,
    pub z_pred: f64,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NicheSummary {
    pub id: usize,
    pub members: Vec<ArchivePoint>,
    pub evaluations: usize,
    pub stage1_calls: u32,
    pub stage2_calls: u32,
    pub failures: u32,
}

/// One final-front row; `accuracy` is true accuracy when the store covers
/// the whole space, predicted score otherwise (see `objective_source` in
/// the report metadata).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    pub arch: String,
    pub niche: usize,
    pub accuracy: f64,
    pub latency: f64,
    pub generation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Key/value echo of everything that determines the output. Excludes
    /// volatile facts (wall time, worker count) so identical searches
    /// produce identical files.
    pub meta: BTreeMap<String, String>,
    pub front: Vec<FrontRow>,
    /// Union-front hypervolume after initialization and after each
    /// generation; non-decreasing because archives only improve.
    pub hv_trace: Vec<f64>,
    pub niches: Vec<NicheSummary>,
    pub events: Vec<EvalEvent>,
    pub stage1_calls: u32,
    pub stage2_calls: u32,
    pub operator_failures: u32,
    pub wall_ms: u128,
}

/// Shared read-only context for one generation.
struct GenEnv<'a> {
    config: &'a EngineConfig,
    niches: &'a NicheSet,
    n_children: usize,
    store: &'a BenchStore,
    predictor: &'a Predictor,
    service: Option<&'a dyn TextService>,
    seen: &'a HashSet<String>,
    latency_limit: f64,
}

fn validate(config: &EngineConfig) -> Result<(), EngineError> {
    if config.generations < 1 {
        return Err(EngineError::Config("generations must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&config.crossover_prob) {
        return Err(EngineError::Config(format!(
            "crossover probability {} outside [0, 1]",
            config.crossover_prob
        )));
    }
    if config.init_per_niche < 1 {
        return Err(EngineError::Config("init population must be at least 1".into()));
    }
    if config.n_children < 1 {
        return Err(EngineError::Config("children per call must be at least 1".into()));
    }
    Ok(())
}

fn evaluate(
    cell: ArchCell,
    niche: NicheId,
    generation: usize,
    rationale: String,
    env: &GenEnv,
) -> Result<EvaluatedArch, String> {
    let arch = cell.encode();
    let row = env
        .store
        .get(&env.config.dataset, &arch)
        .ok_or_else(|| format!("no benchmark row for {arch}"))?;
    let z_pred = env
        .predictor
        .predict(env.store, &env.config.dataset, &arch)
        .map_err(|e| e.to_string())?;
    if !z_pred.is_finite() {
        return Err(format!("non-finite prediction for {arch}"));
    }
    Ok(EvaluatedArch {
        cell,
        arch,
        niche,
        z_pred,
        latency_ms: row.latency(env.config.device),
        true_accuracy: Some(row.accuracy),
        rationale,
        generation,
    })
}

/// Gate a candidate (novelty, then constraint), evaluate survivors, and
/// apply the archive update. Every path leaves a log line.
fn admit(
    state: &mut NicheState,
    pred: &NichePredicate,
    cell: ArchCell,
    operation: &str,
    rationale: String,
    generation: usize,
    env: &GenEnv,
) {
    let arch = cell.encode();
    let niche = state.id.0;
    if env.seen.contains(&arch) || state.evaluated_here.contains(&arch) {
        state.log.push(EvalEvent::Gated {
            generation,
            niche,
            arch,
            reason: GateReason::NonNovel,
        });
        return;
    }
    if !pred.matches_cell(&cell) {
        state.log.push(EvalEvent::Gated {
            generation,
            niche,
            arch,
            reason: GateReason::Constraint,
        });
        return;
    }
    match evaluate(cell, state.id, generation, rationale, env) {
        Ok(eval) => {
            let point = match ObjectivePoint::new(-eval.z_pred, eval.latency_ms) {
                Ok(p) => p,
                Err(e) => {
                    state.log.push(EvalEvent::OperatorIssue {
                        generation,
                        niche,
                        detail: format!("evaluation failed: {e}"),
                    });
                    return;
                }
            };
            state.evaluated_here.insert(eval.arch.clone());
            state.fresh.push(eval.arch.clone());
            state.evaluations += 1;
            let line = EvalEvent::Evaluated {
                generation,
                niche,
                arch: eval.arch.clone(),
                operation: operation.to_string(),
                z_pred: eval.z_pred,
                latency_ms: eval.latency_ms,
                accepted: false,
            };
            let accepted = state.archive.insert(eval, point);
            state.log.push(match line {
                EvalEvent::Evaluated {
                    generation,
                    niche,
                    arch,
                    operation,
                    z_pred,
                    latency_ms,
                    ..
                } => EvalEvent::Evaluated {
                    generation,
                    niche,
                    arch,
                    operation,
                    z_pred,
                    latency_ms,
                    accepted,
                },
                _ => unreachable!(),
            });
        }
        Err(detail) => {
            state.log.push(EvalEvent::OperatorIssue {
                generation,
                niche,
                detail: format!("evaluation failed: {detail}"),
            });
        }
    }
}

/// Parents for prompts and baseline selection: the live archive, ordered
/// best-predicted first for display.
fn parent_records(state: &NicheState) -> Vec<ParentRecord> {
    let mut parents: Vec<ParentRecord> = state
        .archive
        .members()
        .iter()
        .map(|(e, _)| ParentRecord {
            arch: e.arch.clone(),
            accuracy: e.z_pred,
            latency_ms: e.latency_ms,
            rationale: e.rationale.clone(),
        })
        .collect();
    parents.sort_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then(a.latency_ms.total_cmp(&b.latency_ms))
            .then(a.arch.cmp(&b.arch))
    });
    parents
}

fn make_ctx(
    state: &NicheState,
    pred: &NichePredicate,
    env: &GenEnv,
    generation: usize,
    knowledge: KnowledgeBase,
) -> GenerationContext {
    GenerationContext {
        device: env.config.device,
        dataset: env.config.dataset.clone(),
        niche: pred.clone(),
        generation,
        parents: parent_records(state),
        knowledge,
        n_children: 1,
        latency_limit_ms: env.latency_limit,
        crossover_prob: env.config.crossover_prob,
    }
}

fn pick_parent_cell(state: &mut NicheState) -> ArchCell {
    let members = state.archive.members();
    let idx = if members.len() == 1 {
        0
    } else {
        state.rng.random_range(0..members.len())
    };
    members[idx].0.cell
}

/// Uniform pair of distinct archive members; both slots fall back to the
/// sole member when the archive is a singleton.
fn pick_parent_pair(state: &mut NicheState) -> (ArchCell, ArchCell) {
    let members = state.archive.members();
    if members.len() == 1 {
        let only = members[0].0.cell;
        return (only, only);
    }
    let i = state.rng.random_range(0..members.len());
    let mut j = state.rng.random_range(0..members.len() - 1);
    if j >= i {
        j += 1;
    }
    (members[i].0.cell, members[j].0.cell)
}

/// Stage 1 for one niche against its own knowledge base.
fn stage1_niche(state: &mut NicheState, env: &GenEnv, generation: usize) {
    let service = env.service.expect("validated");
    let pred = env.niches.predicate(state.id).clone();
    let ctx = make_ctx(state, &pred, env, generation, state.kb.clone());
    let mut kb = state.kb.clone();
    let (calls, warnings) = llm_update_knowledge(&mut kb, &ctx, service, env.config.max_retries);
    state.kb = kb;
    state.stage1_calls += calls;
    for warning in warnings {
        state.log.push(EvalEvent::OperatorIssue {
            generation,
            niche: state.id.0,
            detail: warning,
        });
    }
    state.log.push(EvalEvent::Knowledge {
        generation,
        niche: state.id.0,
        rules: state.kb.len(),
    });
}

/// Produce, gate, and archive this generation's children for one niche.
fn evolve_children(state: &mut NicheState, env: &GenEnv, generation: usize) {
    let pred = env.niches.predicate(state.id).clone();
    for _ in 0..env.n_children {
        match env.config.operator {
            OperatorKind::Llm => {
                let service = env.service.expect("validated");
                let ctx = make_ctx(state, &pred, env, generation, state.kb.clone());
                let outcome = llm_generate(&ctx, service, env.config.max_retries);
                state.stage2_calls += outcome.calls;
                for detail in outcome.errors {
                    state.log.push(EvalEvent::OperatorIssue {
                        generation,
                        niche: state.id.0,
                        detail,
                    });
                }
                if outcome.proposals.len() > 1 {
                    state.log.push(EvalEvent::OperatorIssue {
                        generation,
                        niche: state.id.0,
                        detail: format!(
                            "ignored {} extra proposals beyond the requested child",
                            outcome.proposals.len() - 1
                        ),
                    });
                }
                let (cell, operation, rationale) = match outcome.proposals.into_iter().next() {
                    Some(p) => (p.cell, p.operation.as_str().to_string(), p.rationale),
                    None => {
                        state.failures += 1;
                        state.log.push(EvalEvent::OperatorIssue {
                            generation,
                            niche: state.id.0,
                            detail: "operator produced no valid child; substituting a mutation"
                                .to_string(),
                        });
                        let parent = pick_parent_cell(state);
                        let child = baseline_mutate(&parent, &pred, &mut state.rng);
                        (
                            child,
                            "mutation".to_string(),
                            "fallback mutation after operator failure".to_string(),
                        )
                    }
                };
                admit(state, &pred, cell, &operation, rationale, generation, env);
            }
            OperatorKind::Baseline => {
                let crossover = state.rng.random::<f64>() < env.config.crossover_prob;
                let (cell, operation) = if crossover {
                    let (a, b) = pick_parent_pair(state);
                    (
                        baseline_crossover(&a, &b, &pred, &mut state.rng),
                        "crossover",
                    )
                } else {
                    let parent = pick_parent_cell(state);
                    (baseline_mutate(&parent, &pred, &mut state.rng), "mutation")
                };
                admit(state, &pred, cell, operation, String::new(), generation, env);
            }
        }
    }
}

/// Run `f` over every niche, one worker per chunk. Worker count only
/// affects scheduling: each niche is self-contained for the duration.
fn for_each_niche<F>(states: &mut [NicheState], workers: usize, f: F)
where
    F: Fn(&mut NicheState) + Sync,
{
    let workers = workers.clamp(1, states.len().max(1));
    if workers <= 1 {
        for state in states.iter_mut() {
            f(state);
        }
        return;
    }
    let chunk = states.len().div_ceil(workers);
    std::thread::scope(|scope| {
        for chunk_states in states.chunks_mut(chunk) {
            scope.spawn(|| {
                for state in chunk_states {
                    f(state);
                }
            });
        }
    });
}

fn union_hv(
    states: &[NicheState],
    bounds: &ObjectiveBounds,
    reference: ObjectivePoint,
) -> Result<f64, MetricError> {
    let mut points = Vec::new();
    for state in states {
        for (member, _) in state.archive.members() {
            points.push(bounds.normalize(member.z_pred, member.latency_ms));
        }
    }
    Ok(hypervolume_2d(&points, reference)?.value)
}

fn initialize(
    config: &EngineConfig,
    niches: &NicheSet,
    per_niche: usize,
    env: &GenEnv,
) -> Result<Vec<NicheState>, EngineError> {
    let mut states = Vec::new();
    for id in niches.ids() {
        let pred = niches.predicate(id).clone();
        let mut state = NicheState {
            id,
            archive: NicheArchive::new(config.archive_literal),
            kb: KnowledgeBase::default_capacity(),
            rng: ChaCha8Rng::seed_from_u64(stream_seed(config.seed, id.0)),
            log: Vec::new(),
            evaluated_here: HashSet::new(),
            fresh: Vec::new(),
            evaluations: 0,
            stage1_calls: 0,
            stage2_calls: 0,
            failures: 0,
        };
        let mut chosen: Vec<ArchCell> = Vec::new();
        let mut taken: HashSet<usize> = HashSet::new();
        let mut attempts = 0usize;
        while chosen.len() < per_niche {
            attempts += 1;
            if attempts > 400_000 {
                return Err(EngineError::Config(format!(
                    "could not sample {per_niche} distinct scored members of niche {id}; \
                     the niche or the store is too small"
                )));
            }
            let index = state.rng.random_range(0..SPACE_SIZE);
            let cell = ArchCell::from_index(index).expect("index in range");
            if !pred.matches_cell(&cell) || !taken.insert(index) {
                continue;
            }
            if env.store.get(&config.dataset, &cell.encode()).is_none() {
                continue;
            }
            chosen.push(cell);
        }
        for cell in chosen {
            admit(
                &mut state,
                &pred,
                cell,
                "init",
                "initial random sample".to_string(),
                0,
                env,
            );
        }
        states.push(state);
    }
    Ok(states)
}

/// Execute the full search. Baseline runs need no service; the llm operator
/// requires one (live, recording, replay, or scripted).
pub fn run_search(
    config: &EngineConfig,
    store: &BenchStore,
    predictor: &Predictor,
    service: Option<&dyn TextService>,
) -> Result<RunReport, EngineError> {
    let start = Instant::now();
    validate(config)?;
    if config.operator == OperatorKind::Llm && service.is_none() {
        return Err(EngineError::MissingService);
    }

    // Partitioning off collapses to a single whole-space niche at the same
    // total budget: the per-niche allocations are multiplied by the niche
    // count they replace.
    let base_niches = config.niches.len();
    let (niches, init_per_niche, n_children, mode) = if config.partitioning {
        (
            config.niches.clone(),
            config.init_per_niche,
            config.n_children,
            "partitioned",
        )
    } else {
        (
            NicheSet::whole_space(),
            config.init_per_niche * base_niches,
            config.n_children * base_niches,
            "unpartitioned",
        )
    };

    let (acc_min, acc_max) = match predictor {
        Predictor::RankEnsemble { .. } => (0.0, 1.0),
        _ => store.accuracy_range(&config.dataset)?,
    };
    let (lat_min, lat_max) = store.latency_range(&config.dataset, config.device)?;
    let bounds = ObjectiveBounds::new(acc_min, acc_max, lat_min, lat_max)?;
    let reference = ObjectivePoint::new(1.0, 1.0).expect("finite");
    let latency_limit = config.latency_limit_ms.unwrap_or(lat_max);

    let mut seen: HashSet<String> = HashSet::new();
    let env = GenEnv {
        config,
        niches: &niches,
        n_children,
        store,
        predictor,
        service,
        seen: &seen,
        latency_limit,
    };
    let mut states = initialize(config, &niches, init_per_niche, &env)?;
    for state in &mut states {
        seen.extend(state.fresh.drain(..));
    }

    let mut hv_trace = vec![union_hv(&states, &bounds, reference)?];
    let workers = if config.workers == 0 {
        niches.len()
    } else {
        config.workers
    };
    let mut shared_kb = KnowledgeBase::default_capacity();

    for g in 1..=config.generations {
        let env = GenEnv {
            config,
            niches: &niches,
            n_children,
            store,
            predictor,
            service,
            seen: &seen,
            latency_limit,
        };
        if config.operator == OperatorKind::Llm && g >= 2 {
            if config.shared_knowledge {
                // Sequential in niche order: each stage-1 round revises the
                // one shared base, and every niche then prompts with the
                // final revision.
                let service = service.expect("validated");
                for state in states.iter_mut() {
                    let pred = niches.predicate(state.id).clone();
                    let ctx = make_ctx(state, &pred, &env, g, shared_kb.clone());
                    let (calls, warnings) =
                        llm_update_knowledge(&mut shared_kb, &ctx, service, config.max_retries);
                    state.stage1_calls += calls;
                    for warning in warnings {
                        state.log.push(EvalEvent::OperatorIssue {
                            generation: g,
                            niche: state.id.0,
                            detail: warning,
                        });
                    }
                    state.log.push(EvalEvent::Knowledge {
                        generation: g,
                        niche: state.id.0,
                        rules: shared_kb.len(),
                    });
                }
                for state in states.iter_mut() {
                    state.kb = shared_kb.clone();
                }
            } else {
                for_each_niche(&mut states, workers, |state| stage1_niche(state, &env, g));
            }
        }
        for_each_niche(&mut states, workers, |state| {
            evolve_children(state, &env, g)
        });
        for state in &mut states {
            seen.extend(state.fresh.drain(..));
        }
        hv_trace.push(union_hv(&states, &bounds, reference)?);
    }

    // Aggregate. True accuracy scores the front only when the store covers
    // the entire space for this dataset; otherwise the predictor's view is
    // all there is.
    let oracle_complete = store.dataset_len(&config.dataset) == SPACE_SIZE;
    let objective_source = if oracle_complete {
        "true_accuracy"
    } else {
        "predicted"
    };
    let mut candidates: Vec<FrontRow> = Vec::new();
    for state in &states {
        for (member, _) in state.archive.members() {
            let accuracy = if oracle_complete {
                member.true_accuracy.expect("complete store rows carry accuracy")
            } else {
                member.z_pred
            };
            candidates.push(FrontRow {
                arch: member.arch.clone(),
                niche: state.id.0,
                accuracy,
                latency: member.latency_ms,
                generation: member.generation,
            });
        }
    }
    let points: Vec<ObjectivePoint> = candidates
        .iter()
        .map(|row| ObjectivePoint::new(-row.accuracy, row.latency).expect("finite objectives"))
        .collect();
    let mut front: Vec<FrontRow> = non_dominated_indices(&points)
        .into_iter()
        .map(|i| candidates[i].clone())
        .collect();
    // Collapse duplicate objective points to the lexicographically smallest
    // architecture, then order the front best-accuracy first.
    front.sort_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then(a.latency.total_cmp(&b.latency))
            .then(a.arch.cmp(&b.arch))
    });
    front.dedup_by(|next, kept| next.accuracy == kept.accuracy && next.latency == kept.latency);

    let mut events: Vec<EvalEvent> = Vec::new();
    for state in &states {
        events.extend(state.log.iter().cloned());
    }
    events.sort_by_key(|e| (e.generation(), e.niche()));

    let summaries: Vec<NicheSummary> = states
        .iter()
        .map(|state| NicheSummary {
            id: state.id.0,
            members: state
                .archive
                .members()
                .iter()
                .map(|(m, _)| ArchivePoint {
                    arch: m.arch.clone(),
                    z_pred: m.z_pred,
                    latency_ms: m.latency_ms,
                })
                .collect(),
            evaluations: state.evaluations,
            stage1_calls: state.stage1_calls,
            stage2_calls: state.stage2_calls,
            failures: state.failures,
        })
        .collect();
    let stage1_calls: u32 = summaries.iter().map(|s| s.stage1_calls).sum();
    let stage2_calls: u32 = summaries.iter().map(|s| s.stage2_calls).sum();
    let operator_failures: u32 = summaries.iter().map(|s| s.failures).sum();

    let mut meta = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        meta.insert(k.to_string(), v);
    };
    put("archive", if config.archive_literal { "literal" } else { "pareto" }.to_string());
    put("bounds_acc_max", bounds.acc_max.to_string());
    put("bounds_acc_min", bounds.acc_min.to_string());
    put("bounds_lat_max", bounds.lat_max.to_string());
    put("bounds_lat_min", bounds.lat_min.to_string());
    put("dataset", config.dataset.clone());
    put("device", config.device.name().to_string());
    put("evaluations", seen.len().to_string());
    put("generations", config.generations.to_string());
    put("hv_final", hv_trace.last().expect("trace non-empty").to_string());
    put("init_per_niche", init_per_niche.to_string());
    put("latency_limit_ms", latency_limit.to_string());
    put("mode", mode.to_string());
    put("n_children", n_children.to_string());
    put("niche_count", niches.len().to_string());
    put("objective_source", objective_source.to_string());
    put("operator", config.operator.as_str().to_string());
    put("operator_failures", operator_failures.to_string());
    put("p_c", config.crossover_prob.to_string());
    put("predictor", predictor.kind_name().to_string());
    put("reference_f1", reference.f1.to_string());
    put("reference_f2", reference.f2.to_string());
    put("seed", config.seed.to_string());
    put("stage1_calls", stage1_calls.to_string());
    put("stage2_calls", stage2_calls.to_string());

    Ok(RunReport {
        meta,
        front,
        hv_trace,
        niches: summaries,
        events,
        stage1_calls,
        stage2_calls,
        operator_failures,
        wall_ms: start.elapsed().as_millis(),
    })
}
