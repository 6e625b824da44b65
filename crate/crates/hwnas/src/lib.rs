//! Hardware-aware neural architecture search over a cell space partitioned
//! into complexity niches.
//!
//! The library is organized around a small pipeline:
//!
//! - [`space`]: the 15,625-cell search space, canonical encoding, and niche
//!   predicates over convolution counts.
//! - [`objectives`]: bi-objective (error, latency) points, Pareto dominance,
//!   non-dominated sorting, hypervolume, IGD, and rank correlation.
//! - [`store`]: the benchmark table mapping (architecture, dataset) to
//!   accuracy, per-device latencies, and optional zero-cost proxy features,
//!   plus a deterministic synthetic generator for offline runs.
//! - [`predictor`]: accuracy surrogates fitted on proxy features.
//! - [`coevolve`]: candidate generation (prompt construction, text-service
//!   backends with record/replay, response parsing, repair, and baseline
//!   random-search operators).
//! - [`engine`]: the niche-parallel search loop with Pareto archives.
//! - [`report`]: run artifacts (front CSV, metrics, evaluation log).

pub mod coevolve;
pub mod engine;
pub mod objectives;
pub mod predictor;
pub mod report;
pub mod space;
pub mod store;

pub use space::{ArchCell, NicheId, NicheSet, OpKind};
