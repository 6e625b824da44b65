//! Candidate generation: baseline evolutionary operators and the two-stage
//! text-service protocol (knowledge summarization, then guided generation).
//!
//! Both operator families share the same contract: given parents that
//! satisfy a niche predicate, produce children that satisfy it too. The
//! baseline operators guarantee this via [`repair`]; text-service proposals
//! are validated downstream by the engine and gated out when they stray.

pub mod parse;
pub mod prompt;
pub mod service;

pub use parse::{extract_first_json_array, parse_proposals, parse_rule_list, ParseError, ParsedProposals};
pub use prompt::{build_stage1_prompt, build_stage2_prompt, render_niche_constraints};
pub use service::{
    request_hash, HttpTextService, RecordingService, ReplayService, ScriptedTextService,
    ServiceError, ServiceMode, TextService, TextServiceConfig, TranscriptEntry,
};

use crate::space::{ArchCell, CountRule, NichePredicate, OpKind, EDGE_COUNT, OP_COUNT};
use crate::store::Device;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rules kept per knowledge base; oldest are evicted beyond this.
pub const DEFAULT_KB_CAPACITY: usize = 20;

#[derive(Debug, Error)]
pub enum CoevolveError {
    #[error("parent {index} ({arch}) does not satisfy the niche predicate")]
    ParentOutsideNiche { index: usize, arch: String },
    #[error("parent {index}: {source}")]
    BadParentArch {
        index: usize,
        #[source]
        source: crate::space::ParseArchError,
    },
}

/// How a child was derived from its parents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Crossover,
    Mutation,
}

impl Operation {
    pub fn as_str(self) -> &'static str {
        match self {
            Operation::Crossover => "crossover",
            Operation::Mutation => "mutation",
        }
    }
}

/// One heuristic plus the generation whose evidence produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbRule {
    pub text: String,
    pub generation_added: usize,
}

/// Ordered rule list with bounded capacity. Stage-1 responses replace the
/// whole list (the prompt asks for revision, not append), so a response
/// that omits a rule deletes it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    rules: Vec<KbRule>,
    capacity: usize,
}

impl KnowledgeBase {
    pub fn new(capacity: usize) -> Self {
        KnowledgeBase {
            rules: Vec::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn default_capacity() -> Self {
        Self::new(DEFAULT_KB_CAPACITY)
    }

    pub fn rules(&self) -> &[KbRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Replace all rules, stamping them with `generation`. When the list
    /// exceeds capacity the front (oldest-listed) entries are evicted.
    pub fn replace(&mut self, texts: Vec<String>, generation: usize) {
        let mut rules: Vec<KbRule> = texts
            .into_iter()
            .map(|text| KbRule {
                text,
                generation_added: generation,
            })
            .collect();
        if rules.len() > self.capacity {
            rules.drain(..rules.len() - self.capacity);
        }
        self.rules = rules;
    }

    /// Apply a stage-1 response. On parse failure the base is left exactly
    /// as it was and the error is returned for the caller to log.
    pub fn update_from_response(
        &mut self,
        response: &str,
        generation: usize,
    ) -> Result<Vec<String>, ParseError> {
        let (texts, diagnostics) = parse_rule_list(response)?;
        self.replace(texts, generation);
        Ok(diagnostics)
    }
}

/// Parent summary rendered into prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentRecord {
    pub arch: String,
    pub accuracy: f64,
    pub latency_ms: f64,
    pub rationale: String,
}

/// Everything a generation step needs to know, for either operator family.
#[derive(Debug, Clone)]
pub struct GenerationContext {
    pub device: Device,
    pub dataset: String,
    pub niche: NichePredicate,
    pub generation: usize,
    pub parents: Vec<ParentRecord>,
    pub knowledge: KnowledgeBase,
    pub n_children: usize,
    pub latency_limit_ms: f64,
    pub crossover_prob: f64,
}

impl GenerationContext {
    /// Every parent must decode and satisfy the niche predicate; the engine
    /// only ever selects parents from the niche archive, so a violation here
    /// is a bug upstream.
    pub fn validate(&self) -> Result<(), CoevolveError> {
        for (index, p) in self.parents.iter().enumerate() {
            let cell = ArchCell::decode(&p.arch)
                .map_err(|source| CoevolveError::BadParentArch { index, source })?;
            if !self.niche.matches_cell(&cell) {
                return Err(CoevolveError::ParentOutsideNiche {
                    index,
                    arch: p.arch.clone(),
                });
            }
        }
        Ok(())
    }
}

/// A validated child returned by the text service.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateProposal {
    pub child_id: String,
    pub operation: Operation,
    pub cell: ArchCell,
    pub rationale: String,
}

/// One edge rewrite applied during repair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RepairEdit {
    pub edge: usize,
    pub from: OpKind,
    pub to: OpKind,
}

const FILLER_OPS: [OpKind; 3] = [OpKind::None, OpKind::SkipConnect, OpKind::AvgPool3x3];

fn count_op(edges: &[OpKind; EDGE_COUNT], op: OpKind) -> u8 {
    edges.iter().filter(|o| **o == op).count() as u8
}

fn positions(edges: &[OpKind; EDGE_COUNT], keep: impl Fn(OpKind) -> bool) -> Vec<usize> {
    (0..EDGE_COUNT).filter(|&e| keep(edges[e])).collect()
}

fn set_edge(
    edges: &mut [OpKind; EDGE_COUNT],
    edits: &mut Vec<RepairEdit>,
    edge: usize,
    to: OpKind,
) {
    edits.push(RepairEdit {
        edge,
        from: edges[edge],
        to,
    });
    edges[edge] = to;
}

/// Rewrite the fewest edges needed to pull `cell` into the niche. The 3x3
/// budget is settled first (it dominates both objectives), then the 1x1
/// budget using `none` edges before other fillers. Requires a satisfiable
/// predicate; under one, at most one rewrite per edge is ever needed.
pub fn repair(
    cell: &ArchCell,
    niche: &NichePredicate,
    rng: &mut impl Rng,
) -> (ArchCell, Vec<RepairEdit>) {
    debug_assert!(niche.is_satisfiable());
    let mut edges = *cell.edges();
    let mut edits = Vec::new();

    let target3 = match niche.conv3x3 {
        CountRule::Exact(k) => k,
        CountRule::AtLeast(k) => count_op(&edges, OpKind::NorConv3x3).max(k),
        CountRule::Any => count_op(&edges, OpKind::NorConv3x3),
    };
    while count_op(&edges, OpKind::NorConv3x3) > target3 {
        let conv = positions(&edges, |op| op == OpKind::NorConv3x3);
        let edge = conv[rng.random_range(0..conv.len())];
        let to = FILLER_OPS[rng.random_range(0..FILLER_OPS.len())];
        set_edge(&mut edges, &mut edits, edge, to);
    }
    while count_op(&edges, OpKind::NorConv3x3) < target3 {
        let other = positions(&edges, |op| op != OpKind::NorConv3x3);
        let edge = other[rng.random_range(0..other.len())];
        set_edge(&mut edges, &mut edits, edge, OpKind::NorConv3x3);
    }

    let target1 = match niche.conv1x1 {
        CountRule::Exact(k) => k,
        CountRule::AtLeast(k) => count_op(&edges, OpKind::NorConv1x1).max(k),
        CountRule::Any => count_op(&edges, OpKind::NorConv1x1),
    };
    while count_op(&edges, OpKind::NorConv1x1) > target1 {
        let conv = positions(&edges, |op| op == OpKind::NorConv1x1);
        let edge = conv[rng.random_range(0..conv.len())];
        let to = FILLER_OPS[rng.random_range(0..FILLER_OPS.len())];
        set_edge(&mut edges, &mut edits, edge, to);
    }
    while count_op(&edges, OpKind::NorConv1x1) < target1 {
        let nones = positions(&edges, |op| op == OpKind::None);
        let edge = if !nones.is_empty() {
            nones[rng.random_range(0..nones.len())]
        } else {
            let fillers = positions(&edges, |op| FILLER_OPS.contains(&op));
            if !fillers.is_empty() {
                fillers[rng.random_range(0..fillers.len())]
            } else {
                // Only conv edges remain; spare a 3x3 above its floor. A
                // satisfiable predicate guarantees the floor leaves room.
                debug_assert!(
                    count_op(&edges, OpKind::NorConv3x3) > niche.conv3x3.min_required()
                );
                let conv = positions(&edges, |op| op == OpKind::NorConv3x3);
                conv[rng.random_range(0..conv.len())]
            }
        };
        set_edge(&mut edges, &mut edits, edge, OpKind::NorConv1x1);
    }

    let repaired = ArchCell::new(edges);
    debug_assert!(niche.matches_cell(&repaired));
    (repaired, edits)
}

/// Change one random edge to a different random op, then repair. Retries
/// until the repaired child differs from the parent, falling back to a
/// systematic scan; only a single-member niche could make that scan fail,
/// and the default partitions never do.
pub fn baseline_mutate(parent: &ArchCell, niche: &NichePredicate, rng: &mut impl Rng) -> ArchCell {
    for _ in 0..64 {
        let edge = rng.random_range(0..EDGE_COUNT);
        let op = loop {
            let op = OpKind::ALL[rng.random_range(0..OP_COUNT)];
            if op != parent.edge(edge) {
                break op;
            }
        };
        let (child, _) = repair(&parent.with_edge(edge, op), niche, rng);
        if child != *parent {
            return child;
        }
    }
    for edge in 0..EDGE_COUNT {
        for op in OpKind::ALL {
            if op == parent.edge(edge) {
                continue;
            }
            let (child, _) = repair(&parent.with_edge(edge, op), niche, rng);
            if child != *parent {
                return child;
            }
        }
    }
    *parent
}

/// Uniform per-edge crossover followed by repair. Identical parents yield
/// that same architecture: both parents satisfy the niche, so each edge
/// choice is a no-op and repair has nothing to do.
pub fn baseline_crossover(
    a: &ArchCell,
    b: &ArchCell,
    niche: &NichePredicate,
    rng: &mut impl Rng,
) -> ArchCell {
    let mut edges = [OpKind::None; EDGE_COUNT];
    for (e, slot) in edges.iter_mut().enumerate() {
        *slot = if rng.random_range(0..2u8) == 0 {
            a.edge(e)
        } else {
            b.edge(e)
        };
    }
    let (child, _) = repair(&ArchCell::new(edges), niche, rng);
    child
}

/// Result of one stage-2 exchange: surviving proposals, how many service
/// calls were spent, and anything worth logging.
#[derive(Debug, Clone)]
pub struct LlmOutcome {
    pub proposals: Vec<CandidateProposal>,
    pub calls: u32,
    pub errors: Vec<String>,
}

/// Run one stage-2 exchange: build the prompt, call the service, parse.
/// Each retry reissues the identical prompt and is counted as a call.
/// Exhausted retries yield an empty proposal list, never a panic; the
/// engine substitutes a baseline child so the budget is still spent.
pub fn llm_generate(
    ctx: &GenerationContext,
    service: &dyn TextService,
    max_retries: u32,
) -> LlmOutcome {
    let prompt = build_stage2_prompt(ctx);
    let mut calls = 0;
    let mut errors = Vec::new();
    for _ in 0..=max_retries {
        calls += 1;
        match service.complete(&prompt) {
            Ok(response) => match parse_proposals(&response) {
                Ok(parsed) => {
                    errors.extend(parsed.diagnostics);
                    if parsed.proposals.is_empty() {
                        errors.push("response held no valid proposal".to_string());
                        continue;
                    }
                    return LlmOutcome {
                        proposals: parsed.proposals,
                        calls,
                        errors,
                    };
                }
                Err(e) => errors.push(format!("parse failure: {e}")),
            },
            Err(e) => errors.push(format!("service failure: {e}")),
        }
    }
    LlmOutcome {
        proposals: Vec::new(),
        calls,
        errors,
    }
}

/// Run one stage-1 exchange and fold the response into `kb`. On total
/// failure the base is untouched and the warnings say why.
pub fn llm_update_knowledge(
    kb: &mut KnowledgeBase,
    ctx: &GenerationContext,
    service: &dyn TextService,
    max_retries: u32,
) -> (u32, Vec<String>) {
    let prompt = build_stage1_prompt(ctx);
    let mut calls = 0;
    let mut warnings = Vec::new();
    for _ in 0..=max_retries {
        calls += 1;
        match service.complete(&prompt) {
            Ok(response) => match kb.update_from_response(&response, ctx.generation) {
                Ok(diags) => {
                    warnings.extend(diags);
                    return (calls, warnings);
                }
                Err(e) => warnings.push(format!("knowledge update skipped: {e}")),
            },
            Err(e) => warnings.push(format!("service failure: {e}")),
        }
    }
    (calls, warnings)
}
