//! Tolerant extraction of structured content from text-service responses.
//!
//! Assistants rarely return bare JSON: arrays arrive wrapped in code fences,
//! preceded by commentary, or followed by sign-off prose. The parsers here
//! scan for the first well-formed JSON array anywhere in the response and
//! then validate elements one by one, dropping bad ones with a diagnostic
//! instead of failing the whole call.

use super::{CandidateProposal, Operation};
use crate::space::ArchCell;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("no JSON array found in response")]
    NoArray,
}

/// First well-formed JSON array in `text`, with its byte offset. Content
/// before and after the array (prose, code fences) is ignored; a `[` that
/// does not open a complete array is skipped.
pub fn extract_first_json_array(text: &str) -> Option<(Vec<Value>, usize)> {
    for (i, b) in text.bytes().enumerate() {
        if b != b'[' {
            continue;
        }
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Array(items))) = stream.next() {
            return Some((items, i));
        }
    }
    None
}

/// Outcome of proposal parsing: surviving proposals plus one diagnostic per
/// dropped element.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedProposals {
    pub proposals: Vec<CandidateProposal>,
    pub diagnostics: Vec<String>,
}

/// Parse generation-stage responses. Errors only when no array exists at
/// all; elements failing validation are dropped individually.
pub fn parse_proposals(text: &str) -> Result<ParsedProposals, ParseError> {
    let (items, _) = extract_first_json_array(text).ok_or(ParseError::NoArray)?;
    let mut proposals = Vec::new();
    let mut diagnostics = Vec::new();
    for (i, item) in items.iter().enumerate() {
        match validate_proposal(item, i) {
            Ok(p) => proposals.push(p),
            Err(reason) => diagnostics.push(format!("element {i}: {reason}")),
        }
    }
    Ok(ParsedProposals {
        proposals,
        diagnostics,
    })
}

fn validate_proposal(item: &Value, index: usize) -> Result<CandidateProposal, String> {
    let obj = item.as_object().ok_or("not a JSON object")?;
    let op_raw = obj
        .get("operation")
        .and_then(Value::as_str)
        .ok_or("missing string field `operation`")?;
    let operation = match op_raw.trim().to_lowercase().as_str() {
        "crossover" => Operation::Crossover,
        "mutation" => Operation::Mutation,
        other => return Err(format!("operation `{other}` is neither crossover nor mutation")),
    };
    let code = obj
        .get("architecture_code")
        .and_then(Value::as_str)
        .ok_or("missing string field `architecture_code`")?;
    let cell = ArchCell::decode(code.trim()).map_err(|e| e.to_string())?;
    let child_id = match obj.get("child_id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => format!("child_{index}"),
    };
    let rationale = obj
        .get("rationale")
        .and_then(Value::as_str)
        .unwrap_or("")
        .to_string();
    Ok(CandidateProposal {
        child_id,
        operation,
        cell,
        rationale,
    })
}

/// Parse knowledge-base responses: the first array's string elements, in
/// order. Non-string elements are dropped with a diagnostic.
pub fn parse_rule_list(text: &str) -> Result<(Vec<String>, Vec<String>), ParseError> {
    let (items, _) = extract_first_json_array(text).ok_or(ParseError::NoArray)?;
    let mut rules = Vec::new();
    let mut diagnostics = Vec::new();
    for (i, item) in items.iter().enumerate() {
        match item {
            Value::String(s) if !s.trim().is_empty() => rules.push(s.trim().to_string()),
            Value::String(_) => diagnostics.push(format!("element {i}: empty rule text")),
            other => diagnostics.push(format!("element {i}: expected a string, got {other}")),
        }
    }
    Ok((rules, diagnostics))
}
