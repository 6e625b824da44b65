//! Prompt construction for the two-stage generation protocol.
//!
//! Both builders render fixed block skeletons; only the bracketed context
//! (device, dataset, niche constraints, parents, knowledge base, budgets)
//! varies. Rendering is deterministic: fixed decimal widths for metrics and
//! stable ordering everywhere, so prompts can be hashed for transcript
//! replay and compared against golden files.

use super::GenerationContext;
use crate::space::{CountRule, NichePredicate, EDGE_COUNT};
use std::fmt::Write as _;

/// Constraint block shared by both stages, one `- ` line per constraint.
///
/// The third line lists the operators that are always available as filler
/// regardless of convolution counts; the convolution budgets themselves are
/// carried by the MUST/CAN lines above it.
pub fn render_niche_constraints(niche: &NichePredicate, latency_limit_ms: f64) -> Vec<String> {
    let conv3 = match niche.conv3x3 {
        CountRule::Exact(k) => format!("- MUST use exactly {k} \u{d7} nor_conv_3x3"),
        CountRule::AtLeast(k) => format!("- MUST use at least {k} \u{d7} nor_conv_3x3"),
        CountRule::Any => "- CAN use any number of nor_conv_3x3".to_string(),
    };
    let cap = EDGE_COUNT as u8 - niche.conv3x3.min_required();
    let conv1 = match niche.conv1x1 {
        CountRule::Exact(k) => format!("- MUST use exactly {k} \u{d7} nor_conv_1x1"),
        CountRule::AtLeast(k) => format!("- MUST use at least {k} \u{d7} nor_conv_1x1"),
        CountRule::Any => format!("- CAN use 0\u{2013}{cap} \u{d7} nor_conv_1x1"),
    };
    vec![
        conv3,
        conv1,
        "- ALLOWED operators: none, skip_connect, avg_pool_3x3".to_string(),
        format!("- Hardware latency must remain below {latency_limit_ms} ms"),
    ]
}

fn push_constraints(out: &mut String, ctx: &GenerationContext) {
    for line in render_niche_constraints(&ctx.niche, ctx.latency_limit_ms) {
        writeln!(out, "  {line}").unwrap();
    }
}

fn push_parents(out: &mut String, ctx: &GenerationContext) {
    if ctx.parents.is_empty() {
        out.push_str("  (none)\n");
        return;
    }
    for (i, p) in ctx.parents.iter().enumerate() {
        writeln!(
            out,
            "  {}. arch: {}, accuracy: {:.2}%, latency: {:.3} ms",
            i + 1,
            p.arch,
            p.accuracy,
            p.latency_ms
        )
        .unwrap();
        let rationale = if p.rationale.is_empty() {
            "(none given)"
        } else {
            &p.rationale
        };
        writeln!(out, "     rationale: {}", rationale.replace('\n', " ")).unwrap();
    }
}

/// Knowledge-summarization prompt (stage 1). Issued from generation 2 on;
/// the first generation has no evidence to summarize.
pub fn build_stage1_prompt(ctx: &GenerationContext) -> String {
    let mut out = String::new();
    out.push_str("[System role]\n");
    out.push_str("You are a NAS analyst. Summarize design heuristics\n");
    out.push_str("for the given hardware-aware search space.\n\n");

    out.push_str("[Context]\n");
    writeln!(
        out,
        "- Target device and dataset: {}, {}",
        ctx.device.name(),
        ctx.dataset
    )
    .unwrap();
    out.push_str("- Niche definition:\n");
    push_constraints(&mut out, ctx);
    writeln!(out, "- Top Pareto parents from generation {}:", ctx.generation).unwrap();
    push_parents(&mut out, ctx);
    out.push('\n');

    out.push_str("[Instruction]\n");
    out.push_str("1. Identify operator or connection patterns that\n");
    out.push_str("   consistently improve accuracy at acceptable latency.\n");
    out.push_str("2. Identify patterns that consistently hurt either metric.\n");
    out.push_str("3. Write explicit, concise rules of the form\n");
    out.push_str("   \"Use/avoid ... because ...\".\n");
    out.push_str("4. Remove or revise outdated rules that conflict with new evidence.\n\n");

    out.push_str("[Output format]\n");
    out.push_str("Return a JSON-like list called Updated_Knowledge_Base:\n");
    out.push_str("[\n  {rule_1},\n  {rule_2},\n  ...\n]\n");
    out
}

/// Candidate-generation prompt (stage 2).
pub fn build_stage2_prompt(ctx: &GenerationContext) -> String {
    let mut out = String::new();
    out.push_str("[System role]\n");
    out.push_str("You are an expert NAS designer that performs evolutionary\n");
    out.push_str("search inside a given niche under hardware constraints.\n\n");

    out.push_str("[Context]\n");
    writeln!(
        out,
        "- Target device and dataset: {}, {}",
        ctx.device.name(),
        ctx.dataset
    )
    .unwrap();
    out.push_str("- Niche constraints:\n");
    push_constraints(&mut out, ctx);
    writeln!(out, "- Crossover probability guidance: {}", ctx.crossover_prob).unwrap();
    out.push_str("- Current Pareto parents with metrics:\n");
    push_parents(&mut out, ctx);
    out.push('\n');

    out.push_str("[Knowledge Base]\n");
    let rules: Vec<&str> = ctx.knowledge.rules().iter().map(|r| r.text.as_str()).collect();
    let rendered = if rules.is_empty() {
        "[]".to_string()
    } else {
        serde_json::to_string_pretty(&rules).expect("strings always serialize")
    };
    out.push_str(&rendered);
    out.push_str("\n\n");

    out.push_str("[Evolution Operation]\n");
    writeln!(out, "Perform {} new candidate generations.", ctx.n_children).unwrap();
    out.push_str("For each child:\n");
    out.push_str("  * Decide Crossover or Mutation.\n");
    out.push_str("  * Describe exactly which blocks/edges you combine or modify.\n");
    out.push_str("  * Justify each change with expected effect on\n");
    writeln!(out, "    accuracy and latency (<= {} ms).", ctx.latency_limit_ms).unwrap();
    out.push_str("  * Ensure all constraints are satisfied.\n\n");

    out.push_str("[Output format]\n");
    out.push_str("Return a list of JSON objects:\n");
    out.push_str("[\n");
    out.push_str("  {\n");
    out.push_str("    \"child_id\": \"...\",\n");
    out.push_str("    \"operation\": \"crossover/mutation\",\n");
    out.push_str("    \"architecture_code\": \"...\",\n");
    out.push_str("    \"rationale\": \"...\"\n");
    out.push_str("  },\n");
    out.push_str("  ...\n");
    out.push_str("]\n");
    out
}
