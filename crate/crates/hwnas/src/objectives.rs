//! Bi-objective quality measures for search fronts.
//!
//! Everything here treats a solution as a point (f1, f2) where BOTH
//! coordinates are minimized (f1 = normalized error, f2 = normalized
//! latency). Provided:
//!
//! | function | purpose |
//! |---|---|
//! | [`ObjectivePoint::dominates`] | strict Pareto dominance |
//! | [`non_dominated_indices`] | indices of the non-dominated subset, O(n log n) |
//! | [`hypervolume_2d`] | area dominated by a front up to a reference point |
//! | [`igd`] | inverted generational distance to a reference front |
//! | [`spearman`] | rank correlation with average ranks on ties |
//! | [`ParetoArchive`] | incremental archive equal to the non-dominated set of everything accepted |

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("objective value must be finite, got {0}")]
    NonFinite(f64),
    #[error("degenerate bounds: {0}")]
    DegenerateBounds(String),
    #[error("reference front is empty")]
    EmptyReferenceFront,
    #[error("solution set is empty")]
    EmptySolutionSet,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("rank correlation is undefined for a constant vector")]
    ConstantVector,
}

/// A point in bi-objective space. Both coordinates are minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint {
    pub f1: f64,
    pub f2: f64,
}

impl ObjectivePoint {
    pub fn new(f1: f64, f2: f64) -> Result<ObjectivePoint, MetricError> {
        for v in [f1, f2] {
            if !v.is_finite() {
                return Err(MetricError::NonFinite(v));
            }
        }
        Ok(ObjectivePoint { f1, f2 })
    }

    /// Strict Pareto dominance: no worse in both coordinates, strictly better
    /// in at least one. Irreflexive; equal points do not dominate each other.
    pub fn dominates(&self, other: &ObjectivePoint) -> bool {
        self.f1 <= other.f1
            && self.f2 <= other.f2
            && (self.f1 < other.f1 || self.f2 < other.f2)
    }
}

/// Linear rescaling of raw (accuracy, latency) pairs into minimized,
/// clamped-to-[0,1] objective coordinates. Accuracy is maximized, so it maps
/// to error = (max − acc) / (max − min); latency maps directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBounds {
    pub acc_min: f64,
    pub acc_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
}

impl ObjectiveBounds {
    pub fn new(
        acc_min: f64,
        acc_max: f64,
        lat_min: f64,
        lat_max: f64,
    ) -> Result<ObjectiveBounds, MetricError> {
        for v in [acc_min, acc_max, lat_min, lat_max] {
            if !v.is_finite() {
                return Err(MetricError::NonFinite(v));
            }
        }
        if acc_max <= acc_min {
            return Err(MetricError::DegenerateBounds(format!(
                "accuracy range [{acc_min}, {acc_max}]"
            )));
        }
        if lat_max <= lat_min {
            return Err(MetricError::DegenerateBounds(format!(
                "latency range [{lat_min}, {lat_max}]"
            )));
        }
        Ok(ObjectiveBounds {
            acc_min,
            acc_max,
            lat_min,
            lat_max,
        })
    }

    pub fn normalize(&self, accuracy: f64, latency: f64) -> ObjectivePoint {
        let f1 = (self.acc_max - accuracy) / (self.acc_max - self.acc_min);
        let f2 = (latency - self.lat_min) / (self.lat_max - self.lat_min);
        ObjectivePoint {
            f1: f1.clamp(0.0, 1.0),
            f2: f2.clamp(0.0, 1.0),
        }
    }
}

fn check_finite(points: &[ObjectivePoint]) -> Result<(), MetricError> {
    for p in points {
        for v in [p.f1, p.f2] {
            if !v.is_finite() {
                return Err(MetricError::NonFinite(v));
            }
        }
    }
    Ok(())
}

/// Indices (in input order) of points not dominated by any other point.
///
/// Sort-and-sweep over f1 groups; exact duplicates are all retained, since
/// dominance is strict.
pub fn non_dominated_indices(points: &[ObjectivePoint]) -> Vec<usize> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .f1
            .partial_cmp(&points[b].f1)
            .unwrap()
            .then(points[a].f2.partial_cmp(&points[b].f2).unwrap())
    });

    let mut keep = vec![false; n];
    let mut best_prev_f2 = f64::INFINITY; // min f2 among strictly smaller f1
    let mut i = 0;
    while i < order.len() {
        let f1 = points[order[i]].f1;
        let mut j = i;
        while j < order.len() && points[order[j]].f1 == f1 {
            j += 1;
        }
        // group minimum sits first because ties were broken by f2
        let group_min_f2 = points[order[i]].f2;
        for &idx in &order[i..j] {
            let p = points[idx];
            keep[idx] = p.f2 == group_min_f2 && p.f2 < best_prev_f2;
        }
        best_prev_f2 = best_prev_f2.min(group_min_f2);
        i = j;
    }
    (0..n).filter(|&i| keep[i]).collect()
}

/// Rank-0 front of a point multiset: dominated points removed, exact
/// duplicates collapsed to their first occurrence. Input order is preserved,
/// so callers wanting a canonical result sort their inputs first.
pub fn non_dominated_sort(points: &[ObjectivePoint]) -> Vec<ObjectivePoint> {
    let mut front = Vec::new();
    for idx in non_dominated_indices(points) {
        if !front.contains(&points[idx]) {
            front.push(points[idx]);
        }
    }
    front
}

/// Result of a hypervolume computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypervolume {
    /// Area jointly dominated by the front, bounded by the reference point.
    pub value: f64,
    /// Points that contributed nothing because they do not strictly
    /// improve on the reference point in both coordinates.
    pub excluded: usize,
}

/// 2-D hypervolume (minimization) with respect to `reference`: the area of
/// the union of boxes [p.f1, r1] x [p.f2, r2].
///
/// Points that do not dominate the reference are excluded and counted; an
/// empty (or fully excluded) front has hypervolume 0. The sweep sorts the
/// non-dominated subset by f1 and accumulates one rectangle per point:
/// sum_i (f1_{i+1} − f1_i) · (r2 − f2_i), closing the last strip at r1.
pub fn hypervolume_2d(
    points: &[ObjectivePoint],
    reference: ObjectivePoint,
) -> Result<Hypervolume, MetricError> {
    check_finite(points)?;
    check_finite(std::slice::from_ref(&reference))?;

    let kept: Vec<ObjectivePoint> = points
        .iter()
        .copied()
        .filter(|p| p.dominates(&reference))
        .collect();
    let excluded = points.len() - kept.len();
    if kept.is_empty() {
        return Ok(Hypervolume { value: 0.0, excluded });
    }

    let mut front: Vec<ObjectivePoint> = non_dominated_indices(&kept)
        .into_iter()
        .map(|i| kept[i])
        .collect();
    front.sort_by(|a, b| {
        a.f1.partial_cmp(&b.f1)
            .unwrap()
            .then(a.f2.partial_cmp(&b.f2).unwrap())
    });
    front.dedup();

    let mut area = 0.0;
    for (i, p) in front.iter().enumerate() {
        let next_f1 = if i + 1 < front.len() {
            front[i + 1].f1
        } else {
            reference.f1
        };
        area += (next_f1 - p.f1) * (reference.f2 - p.f2);
    }
    Ok(Hypervolume { value: area, excluded })
}

/// Inverted generational distance: mean Euclidean distance from each point
/// of the reference front to its nearest found solution. Zero iff every
/// reference point is matched exactly; lower is better.
pub fn igd(
    reference_front: &[ObjectivePoint],
    found: &[ObjectivePoint],
) -> Result<f64, MetricError> {
    check_finite(reference_front)?;
    check_finite(found)?;
    if reference_front.is_empty() {
        return Err(MetricError::EmptyReferenceFront);
    }
    if found.is_empty() {
        return Err(MetricError::EmptySolutionSet);
    }
    let total: f64 = reference_front
        .iter()
        .map(|p| {
            found
                .iter()
                .map(|s| ((p.f1 - s.f1).powi(2) + (p.f2 - s.f2).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / reference_front.len() as f64)
}

/// 1-based ranks with ties assigned the average of the positions they span.
pub fn average_tie_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share the average 1-based rank
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average-tie ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(MetricError::TooFewSamples(a.len()));
    }
    for v in a.iter().chain(b.iter()) {
        if !v.is_finite() {
            return Err(MetricError::NonFinite(*v));
        }
    }
    let ra = average_tie_ranks(a);
    let rb = average_tie_ranks(b);
    // Identical non-constant rankings correlate perfectly; return the exact
    // value rather than let sqrt rounding in pearson() shave an ulp off it.
    if ra == rb && ra.iter().any(|&r| r != ra[0]) {
        return Ok(1.0);
    }
    pearson(&ra, &rb)
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(MetricError::ConstantVector);
    }
    Ok(cov / (var_a.sqrt() * var_b.sqrt()))
}

/// What happened when an item was offered to a [`ParetoArchive`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum InsertOutcome {
    /// Item entered the archive, evicting the listed number of newly
    /// dominated incumbents.
    Added { evicted: usize },
    /// Item was dominated by an incumbent and discarded.
    Rejected,
}

/// An incremental non-dominated archive.
///
/// Invariant: after any sequence of [`ParetoArchive::try_insert`] calls the
/// archive content equals the non-dominated subset of every point accepted
/// so far. Entries keep their insertion (birth) order, which downstream
/// reporting relies on for deterministic output.
#[derive(Debug, Clone)]
pub struct ParetoArchive<T> {
    entries: Vec<(T, ObjectivePoint)>,
}

impl<T> Default for ParetoArchive<T> {
    fn default() -> Self {
        ParetoArchive { entries: Vec::new() }
    }
}

impl<T> ParetoArchive<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &ObjectivePoint)> {
        self.entries.iter().map(|(t, p)| (t, p))
    }

    pub fn points(&self) -> Vec<ObjectivePoint> {
        self.entries.iter().map(|(_, p)| *p).collect()
    }

    /// Offer an item. Rejected iff some incumbent dominates it; otherwise it
    /// is appended and every incumbent it dominates is evicted.
    pub fn try_insert(&mut self, item: T, point: ObjectivePoint) -> InsertOutcome {
        if self.entries.iter().any(|(_, q)| q.dominates(&point)) {
            return InsertOutcome::Rejected;
        }
        let before = self.entries.len();
        self.entries.retain(|(_, q)| !point.dominates(q));
        let evicted = before - self.entries.len();
        self.entries.push((item, point));
        InsertOutcome::Added { evicted }
    }
}
