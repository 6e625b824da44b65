//! Shared constructions for integration tests: the frozen-fixture
//! directory, the canonical prompt context behind the golden files, and the
//! exact engine configuration the replay transcript was recorded under.
// Each integration-test binary compiles this module separately and uses a
// subset of it, so per-binary dead-code analysis is not meaningful here.
#![allow(dead_code)]

use hwnas::coevolve::{GenerationContext, KnowledgeBase, ParentRecord};
use hwnas::engine::{EngineConfig, OperatorKind};
use hwnas::space::{NicheId, NicheSet};
use hwnas::store::{BenchStore, Device, SyntheticModel};
use std::path::{Path, PathBuf};

pub const REPLAY_STORE_SEED: u64 = 7777;
pub const REPLAY_ENGINE_SEED: u64 = 90210;
pub const SCRIPTED_SEED: u64 = 4242;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn replay_store() -> BenchStore {
    SyntheticModel::new(REPLAY_STORE_SEED)
        .synthesize("cifar10")
        .unwrap()
}

/// Configuration of the recorded run: 6 niches, 10 generations, 2 children
/// per niche per generation, one stage-2 call per child.
pub fn replay_config() -> EngineConfig {
    EngineConfig {
        device: Device::EdgeGpu,
        dataset: "cifar10".to_string(),
        generations: 10,
        crossover_prob: 0.5,
        init_per_niche: 5,
        n_children: 2,
        operator: OperatorKind::Llm,
        seed: REPLAY_ENGINE_SEED,
        niches: NicheSet::complexity_default(),
        partitioning: true,
        max_retries: 2,
        archive_literal: false,
        shared_knowledge: false,
        latency_limit_ms: None,
        workers: 1,
    }
}

/// Fixed context the golden prompt files were rendered from. Everything is
/// hand-pinned so the files change only when the builders do.
pub fn golden_ctx() -> GenerationContext {
    let niches = NicheSet::complexity_default();
    let mut kb = KnowledgeBase::default_capacity();
    kb.replace(
        vec![
            "Prefer skip_connect after heavy conv layers to cut latency".to_string(),
            "Avoid multiple avg_pool_3x3 because they add latency with minimal accuracy gain"
                .to_string(),
        ],
        2,
    );
    GenerationContext {
        device: Device::EdgeGpu,
        dataset: "cifar10".to_string(),
        niche: niches.predicate(NicheId(3)).clone(),
        generation: 3,
        parents: vec![
            ParentRecord {
                arch: "|nor_conv_3x3~0|+|skip_connect~0|nor_conv_3x3~1|+|none~0|none~1|skip_connect~2|"
                    .to_string(),
                accuracy: 84.231,
                latency_ms: 3.5104,
                rationale: "strong conv backbone with cheap wiring".to_string(),
            },
            ParentRecord {
                arch: "|nor_conv_3x3~0|+|none~0|nor_conv_3x3~1|+|avg_pool_3x3~0|none~1|none~2|"
                    .to_string(),
                accuracy: 82.97,
                latency_ms: 2.88,
                rationale: "latency-lean variant".to_string(),
            },
        ],
        knowledge: kb,
        n_children: 1,
        latency_limit_ms: 5.0,
        crossover_prob: 0.5,
    }
}
