//! Cell-based search space: operator kinds, the canonical string encoding,
//! exhaustive enumeration, complexity counting, niche predicates, and a
//! transformer FLOPs estimator for complexity-driven partitioning of
//! attention-based spaces.
//!
//! A cell is a 4-node DAG with one operator on each of its 6 edges, ordered
//! edge(1←0), edge(2←0), edge(2←1), edge(3←0), edge(3←1), edge(3←2). With 5
//! operator kinds this gives 5^6 = 15,625 distinct cells.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Number of edges in the cell DAG.
pub const EDGE_COUNT: usize = 6;
/// Number of operator kinds.
pub const OP_COUNT: usize = 5;
/// Total number of cells in the space (5^6).
pub const SPACE_SIZE: usize = 15_625;

/// The five edge operators, with stable integer ids 0..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    None,
    SkipConnect,
    NorConv1x1,
    NorConv3x3,
    AvgPool3x3,
}

impl OpKind {
    /// All operators in id order.
    pub const ALL: [OpKind; OP_COUNT] = [
        OpKind::None,
        OpKind::SkipConnect,
        OpKind::NorConv1x1,
        OpKind::NorConv3x3,
        OpKind::AvgPool3x3,
    ];

    pub fn id(self) -> u8 {
        match self {
            OpKind::None => 0,
            OpKind::SkipConnect => 1,
            OpKind::NorConv1x1 => 2,
            OpKind::NorConv3x3 => 3,
            OpKind::AvgPool3x3 => 4,
        }
    }

    pub fn from_id(id: u8) -> Option<OpKind> {
        OpKind::ALL.get(id as usize).copied()
    }

    /// Canonical operator name as it appears in architecture strings.
    pub fn name(self) -> &'static str {
        match self {
            OpKind::None => "none",
            OpKind::SkipConnect => "skip_connect",
            OpKind::NorConv1x1 => "nor_conv_1x1",
            OpKind::NorConv3x3 => "nor_conv_3x3",
            OpKind::AvgPool3x3 => "avg_pool_3x3",
        }
    }

    pub fn from_name(name: &str) -> Option<OpKind> {
        OpKind::ALL.iter().copied().find(|op| op.name() == name)
    }

    pub fn is_conv(self) -> bool {
        matches!(self, OpKind::NorConv1x1 | OpKind::NorConv3x3)
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Error produced when an architecture string does not parse.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid architecture string `{input}`: {reason}")]
pub struct ParseArchError {
    pub input: String,
    pub reason: String,
}

impl ParseArchError {
    fn new(input: &str, reason: impl Into<String>) -> Self {
        ParseArchError {
            input: input.to_string(),
            reason: reason.into(),
        }
    }
}

/// A cell architecture: one operator per DAG edge.
///
/// Edge order is fixed as edge(1←0), edge(2←0), edge(2←1), edge(3←0),
/// edge(3←1), edge(3←2); the canonical string groups edges by target node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArchCell {
    edges: [OpKind; EDGE_COUNT],
}

/// Edges grouped by target node: node 1 gets 1 input, node 2 gets 2, node 3 gets 3.
const NODE_GROUPS: [std::ops::Range<usize>; 3] = [0..1, 1..3, 3..6];

impl ArchCell {
    pub fn new(edges: [OpKind; EDGE_COUNT]) -> Self {
        ArchCell { edges }
    }

    pub fn edges(&self) -> &[OpKind; EDGE_COUNT] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> OpKind {
        self.edges[idx]
    }

    pub fn with_edge(mut self, idx: usize, op: OpKind) -> Self {
        self.edges[idx] = op;
        self
    }

    /// Position of this cell in lexicographic edge-id order (edge 0 most significant).
    pub fn index(&self) -> usize {
        self.edges
            .iter()
            .fold(0usize, |acc, op| acc * OP_COUNT + op.id() as usize)
    }

    pub fn from_index(mut index: usize) -> Option<ArchCell> {
        if index >= SPACE_SIZE {
            return None;
        }
        let mut edges = [OpKind::None; EDGE_COUNT];
        for slot in (0..EDGE_COUNT).rev() {
            edges[slot] = OpKind::from_id((index % OP_COUNT) as u8).unwrap();
            index /= OP_COUNT;
        }
        Some(ArchCell { edges })
    }

    /// Canonical string form, e.g. `|none~0|+|none~0|none~1|+|none~0|none~1|none~2|`.
    pub fn encode(&self) -> String {
        let mut out = String::with_capacity(80);
        for (group_idx, range) in NODE_GROUPS.iter().enumerate() {
            if group_idx > 0 {
                out.push('+');
            }
            out.push('|');
            for (input_idx, edge_idx) in range.clone().enumerate() {
                out.push_str(self.edges[edge_idx].name());
                out.push('~');
                out.push_str(&input_idx.to_string());
                out.push('|');
            }
        }
        out
    }

    /// Parse a canonical string back into a cell. Inverse of [`ArchCell::encode`].
    pub fn decode(s: &str) -> Result<ArchCell, ParseArchError> {
        let groups: Vec<&str> = s.split('+').collect();
        if groups.len() != 3 {
            return Err(ParseArchError::new(
                s,
                format!("expected 3 node groups separated by `+`, found {}", groups.len()),
            ));
        }
        let mut edges = [OpKind::None; EDGE_COUNT];
        let mut edge_idx = 0;
        for (group_idx, group) in groups.iter().enumerate() {
            let inner = group
                .strip_prefix('|')
                .and_then(|g| g.strip_suffix('|'))
                .ok_or_else(|| {
                    ParseArchError::new(s, format!("node group {} must be `|`-delimited", group_idx + 1))
                })?;
            let tokens: Vec<&str> = inner.split('|').collect();
            if tokens.len() != group_idx + 1 {
                return Err(ParseArchError::new(
                    s,
                    format!(
                        "node group {} must have {} edges, found {}",
                        group_idx + 1,
                        group_idx + 1,
                        tokens.len()
                    ),
                ));
            }
            for (input_idx, token) in tokens.iter().enumerate() {
                let (name, tag) = token.split_once('~').ok_or_else(|| {
                    ParseArchError::new(s, format!("edge token `{token}` missing `~` separator"))
                })?;
                if tag != input_idx.to_string() {
                    return Err(ParseArchError::new(
                        s,
                        format!("edge token `{token}` has input tag `{tag}`, expected `{input_idx}`"),
                    ));
                }
                let op = OpKind::from_name(name).ok_or_else(|| {
                    ParseArchError::new(s, format!("unknown operator `{name}`"))
                })?;
                edges[edge_idx] = op;
                edge_idx += 1;
            }
        }
        Ok(ArchCell { edges })
    }

    pub fn complexity(&self) -> ComplexityProfile {
        complexity(self)
    }
}

impl fmt::Display for ArchCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

/// Yields every cell exactly once, in lexicographic edge-id order.
pub fn enumerate_space() -> impl Iterator<Item = ArchCell> {
    (0..SPACE_SIZE).map(|i| ArchCell::from_index(i).unwrap())
}

/// Convolution counts of a cell — the quantity the niche partition is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComplexityProfile {
    pub n_conv3x3: u8,
    pub n_conv1x1: u8,
}

pub fn complexity(cell: &ArchCell) -> ComplexityProfile {
    let mut n3 = 0;
    let mut n1 = 0;
    for op in cell.edges() {
        match op {
            OpKind::NorConv3x3 => n3 += 1,
            OpKind::NorConv1x1 => n1 += 1,
            _ => {}
        }
    }
    ComplexityProfile {
        n_conv3x3: n3,
        n_conv1x1: n1,
    }
}

/// Identifier of a niche within a [`NicheSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NicheId(pub usize);

impl fmt::Display for NicheId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Constraint on a single operator count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountRule {
    Exact(u8),
    AtLeast(u8),
    Any,
}

impl CountRule {
    pub fn matches(&self, count: u8) -> bool {
        match *self {
            CountRule::Exact(n) => count == n,
            CountRule::AtLeast(n) => count >= n,
            CountRule::Any => true,
        }
    }

    /// Smallest count that can satisfy the rule.
    pub fn min_required(&self) -> u8 {
        match *self {
            CountRule::Exact(n) | CountRule::AtLeast(n) => n,
            CountRule::Any => 0,
        }
    }
}

impl fmt::Display for CountRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CountRule::Exact(n) => write!(f, "exactly {n}"),
            CountRule::AtLeast(n) => write!(f, "at least {n}"),
            CountRule::Any => write!(f, "any number of"),
        }
    }
}

/// Membership predicate of one niche, over the convolution counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NichePredicate {
    pub conv3x3: CountRule,
    pub conv1x1: CountRule,
}

impl NichePredicate {
    pub fn matches(&self, profile: &ComplexityProfile) -> bool {
        self.conv3x3.matches(profile.n_conv3x3) && self.conv1x1.matches(profile.n_conv1x1)
    }

    pub fn matches_cell(&self, cell: &ArchCell) -> bool {
        self.matches(&complexity(cell))
    }

    /// A predicate is satisfiable iff some feasible (n3, n1) pair matches it.
    pub fn is_satisfiable(&self) -> bool {
        feasible_profiles().any(|p| self.matches(&p))
    }
}

/// All 28 feasible (n_conv3x3, n_conv1x1) pairs with n3 + n1 <= 6.
fn feasible_profiles() -> impl Iterator<Item = ComplexityProfile> {
    (0..=EDGE_COUNT as u8).flat_map(|n3| {
        (0..=(EDGE_COUNT as u8 - n3)).map(move |n1| ComplexityProfile {
            n_conv3x3: n3,
            n_conv1x1: n1,
        })
    })
}

/// Errors from niche configuration or the FLOPs estimator.
#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("niche set is empty")]
    EmptyNicheSet,
    #[error("niche {0} is unsatisfiable: no cell has the required operator counts")]
    UnsatisfiableNiche(usize),
    #[error("niches {0} and {1} overlap on profile (n_conv3x3={2}, n_conv1x1={3})")]
    OverlappingNiches(usize, usize, u8, u8),
    #[error("transformer config is invalid: {0}")]
    InvalidVitConfig(String),
    #[error("FLOPs computation overflowed: {0}")]
    FlopsOverflow(String),
}

/// An ordered, validated collection of disjoint niche predicates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NicheSet {
    predicates: Vec<NichePredicate>,
}

impl NicheSet {
    /// Build a niche set, rejecting empty, unsatisfiable, or overlapping predicates.
    ///
    /// Disjointness is required: the engine relies on each cell belonging to at
    /// most one niche. The set need not be exhaustive; cells outside every
    /// niche are simply never sampled.
    pub fn new(predicates: Vec<NichePredicate>) -> Result<NicheSet, SpaceError> {
        if predicates.is_empty() {
            return Err(SpaceError::EmptyNicheSet);
        }
        for (idx, pred) in predicates.iter().enumerate() {
            if !pred.is_satisfiable() {
                return Err(SpaceError::UnsatisfiableNiche(idx));
            }
        }
        for i in 0..predicates.len() {
            for j in (i + 1)..predicates.len() {
                if let Some(p) = feasible_profiles()
                    .find(|p| predicates[i].matches(p) && predicates[j].matches(p))
                {
                    return Err(SpaceError::OverlappingNiches(i, j, p.n_conv3x3, p.n_conv1x1));
                }
            }
        }
        Ok(NicheSet { predicates })
    }

    /// The default six-niche partition over the 3x3-convolution count:
    /// (0 conv3x3, 0 conv1x1), (0, >=1), (1, any), (2, any), (3, any), (>=4, any).
    pub fn complexity_default() -> NicheSet {
        NicheSet {
            predicates: vec![
                NichePredicate {
                    conv3x3: CountRule::Exact(0),
                    conv1x1: CountRule::Exact(0),
                },
                NichePredicate {
                    conv3x3: CountRule::Exact(0),
                    conv1x1: CountRule::AtLeast(1),
                },
                NichePredicate {
                    conv3x3: CountRule::Exact(1),
                    conv1x1: CountRule::Any,
                },
                NichePredicate {
                    conv3x3: CountRule::Exact(2),
                    conv1x1: CountRule::Any,
                },
                NichePredicate {
                    conv3x3: CountRule::Exact(3),
                    conv1x1: CountRule::Any,
                },
                NichePredicate {
                    conv3x3: CountRule::AtLeast(4),
                    conv1x1: CountRule::Any,
                },
            ],
        }
    }

    /// A single niche covering the whole space (partitioning disabled).
    pub fn whole_space() -> NicheSet {
        NicheSet {
            predicates: vec![NichePredicate {
                conv3x3: CountRule::Any,
                conv1x1: CountRule::Any,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn predicate(&self, id: NicheId) -> &NichePredicate {
        &self.predicates[id.0]
    }

    pub fn predicates(&self) -> &[NichePredicate] {
        &self.predicates
    }

    pub fn ids(&self) -> impl Iterator<Item = NicheId> {
        (0..self.predicates.len()).map(NicheId)
    }

    /// Niche of a cell, or `None` if the set does not cover it.
    pub fn assign(&self, cell: &ArchCell) -> Option<NicheId> {
        let profile = complexity(cell);
        self.predicates
            .iter()
            .position(|p| p.matches(&profile))
            .map(NicheId)
    }

    /// True when every feasible profile belongs to some niche.
    pub fn is_exhaustive(&self) -> bool {
        feasible_profiles().all(|p| self.predicates.iter().any(|pred| pred.matches(&p)))
    }
}

/// Niche of a cell under the default partition. Total: the default set is
/// exhaustive, so every cell maps to exactly one id.
pub fn assign_niche(cell: &ArchCell) -> NicheId {
    NicheSet::complexity_default()
        .assign(cell)
        .expect("default niche set partitions the space")
}

/// Shape parameters of a vision-transformer candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViTConfig {
    /// Embedding dimension D.
    pub embed_dim: u64,
    /// Number of transformer blocks L.
    pub depth: u64,
    /// MLP expansion ratio.
    pub mlp_ratio: u64,
    /// Total query/key/value dimension D_h (decoupled from D).
    pub qkv_dim: u64,
    /// Attention head count h; must divide qkv_dim.
    pub num_heads: u64,
    /// Token count N.
    pub num_patches: u64,
}

impl ViTConfig {
    pub fn new(
        embed_dim: u64,
        depth: u64,
        mlp_ratio: u64,
        qkv_dim: u64,
        num_heads: u64,
        num_patches: u64,
    ) -> Result<ViTConfig, SpaceError> {
        let cfg = ViTConfig {
            embed_dim,
            depth,
            mlp_ratio,
            qkv_dim,
            num_heads,
            num_patches,
        };
        let fields = [
            ("embed_dim", embed_dim),
            ("depth", depth),
            ("mlp_ratio", mlp_ratio),
            ("qkv_dim", qkv_dim),
            ("num_heads", num_heads),
            ("num_patches", num_patches),
        ];
        for (name, value) in fields {
            if value == 0 {
                return Err(SpaceError::InvalidVitConfig(format!(
                    "{name} must be strictly positive"
                )));
            }
        }
        if qkv_dim % num_heads != 0 {
            return Err(SpaceError::InvalidVitConfig(format!(
                "qkv_dim {qkv_dim} must be divisible by num_heads {num_heads}"
            )));
        }
        Ok(cfg)
    }
}

fn checked_mul(a: u128, b: u128, what: &str) -> Result<u128, SpaceError> {
    a.checked_mul(b)
        .ok_or_else(|| SpaceError::FlopsOverflow(what.to_string()))
}

fn checked_add(a: u128, b: u128, what: &str) -> Result<u128, SpaceError> {
    a.checked_add(b)
        .ok_or_else(|| SpaceError::FlopsOverflow(what.to_string()))
}

/// FLOPs of the MLP blocks of one layer: 2·N·D·(D·ratio).
pub fn vit_mlp_flops(cfg: &ViTConfig) -> Result<u128, SpaceError> {
    let n = cfg.num_patches as u128;
    let d = cfg.embed_dim as u128;
    let hidden = checked_mul(d, cfg.mlp_ratio as u128, "mlp hidden dim")?;
    let t = checked_mul(2, checked_mul(n, checked_mul(d, hidden, "mlp")?, "mlp")?, "mlp")?;
    Ok(t)
}

/// FLOPs of the attention module of one layer:
/// 3·N·D·D_h (Q/K/V projections) + 2·N²·D_h (scores + value mix) + N·D_h·D (output).
pub fn vit_mhsa_flops(cfg: &ViTConfig) -> Result<u128, SpaceError> {
    let n = cfg.num_patches as u128;
    let d = cfg.embed_dim as u128;
    let dh = cfg.qkv_dim as u128;
    let proj = checked_mul(3, checked_mul(n, checked_mul(d, dh, "qkv")?, "qkv")?, "qkv")?;
    let attn = checked_mul(
        2,
        checked_mul(checked_mul(n, n, "attn")?, dh, "attn")?,
        "attn",
    )?;
    let out = checked_mul(n, checked_mul(dh, d, "attn out")?, "attn out")?;
    checked_add(checked_add(proj, attn, "mhsa")?, out, "mhsa")
}

/// Total FLOPs estimate: L · (mhsa + mlp). The Q/K/V factor 3 and the
/// score+value factor 2 are the conventional constants; swap them by editing
/// [`vit_mhsa_flops`] if a different accounting is wanted.
pub fn vit_flops_estimate(cfg: &ViTConfig) -> Result<u128, SpaceError> {
    let per_layer = checked_add(vit_mhsa_flops(cfg)?, vit_mlp_flops(cfg)?, "layer")?;
    checked_mul(cfg.depth as u128, per_layer, "total")
}
