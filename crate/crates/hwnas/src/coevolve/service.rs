//! Text-service transports.
//!
//! The engine only ever talks to `dyn TextService`. Four implementations
//! cover the lifecycle: [`HttpTextService`] for live calls,
//! [`RecordingService`] to wrap any transport and persist a transcript,
//! [`ReplayService`] to serve a transcript back without any network, and
//! [`ScriptedTextService`] as a deterministic offline generator used to
//! produce transcripts and fixtures in the first place.
//!
//! Replay matches requests by prompt hash, with one FIFO queue per hash:
//! repeated identical prompts receive the recorded responses in recorded
//! order, while unrelated prompts can interleave freely. That keeps replay
//! byte-stable under any worker scheduling.

use crate::space::{ArchCell, CountRule, NichePredicate, SPACE_SIZE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("auth environment variable `{0}` is not set")]
    MissingAuth(String),
    #[error("http request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("service returned status {status}: {snippet}")]
    Status { status: u16, snippet: String },
    #[error("response field path `{0}` not found in service reply")]
    BadResponsePath(String),
    #[error("transcript {0} does not exist")]
    TranscriptMissing(String),
    #[error("transcript {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("transcript {path} line {line}: {reason}")]
    BadTranscript {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("no recorded response left for request hash {0}")]
    ReplayMiss(String),
}

/// How the engine reaches the text service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServiceMode {
    Live,
    Record,
    Replay,
}

/// Connection settings. The auth token itself is never stored anywhere;
/// only the name of the environment variable holding it is.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TextServiceConfig {
    pub endpoint: String,
    pub model: String,
    pub auth_env: Option<String>,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub temperature: f64,
    pub response_path: String,
    pub mode: ServiceMode,
    pub transcript: Option<PathBuf>,
}

impl Default for TextServiceConfig {
    fn default() -> Self {
        TextServiceConfig {
            endpoint: "http://localhost:8000/v1/chat/completions".to_string(),
            model: "default".to_string(),
            auth_env: None,
            timeout_secs: 30,
            max_retries: 2,
            temperature: 0.7,
            response_path: "choices.0.message.content".to_string(),
            mode: ServiceMode::Replay,
            transcript: None,
        }
    }
}

/// Hex SHA-256 of the prompt; the transcript key.
pub fn request_hash(prompt: &str) -> String {
    let digest = Sha256::digest(prompt.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// One line of a transcript file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request_hash: String,
    pub prompt: String,
    pub response: String,
    pub timestamp: u64,
}

/// Anything that can answer a prompt with text.
pub trait TextService: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ServiceError>;
}

/// Blocking HTTP client speaking the common chat-completion shape:
/// `POST {model, messages, temperature}`, reply text located by
/// `response_path` (dot-separated keys, numeric segments index arrays).
pub struct HttpTextService {
    config: TextServiceConfig,
    client: reqwest::blocking::Client,
}

impl HttpTextService {
    pub fn new(config: TextServiceConfig) -> Result<Self, ServiceError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(config.timeout_secs))
            .build()?;
        Ok(HttpTextService { config, client })
    }

    /// Probe the endpoint without spending a completion. Any HTTP answer,
    /// even an error status, proves the service is reachable; only a
    /// transport failure is reported.
    pub fn preflight(&self) -> Result<(), ServiceError> {
        self.client.get(&self.config.endpoint).send()?;
        Ok(())
    }
}

fn extract_path(value: &serde_json::Value, path: &str) -> Option<String> {
    let mut cursor = value;
    for segment in path.split('.') {
        cursor = match segment.parse::<usize>() {
            Ok(index) => cursor.get(index)?,
            Err(_) => cursor.get(segment)?,
        };
    }
    cursor.as_str().map(str::to_string)
}

impl TextService for HttpTextService {
    fn complete(&self, prompt: &str) -> Result<String, ServiceError> {
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        });
        let mut request = self.client.post(&self.config.endpoint).json(&body);
        if let Some(var) = &self.config.auth_env {
            let token =
                std::env::var(var).map_err(|_| ServiceError::MissingAuth(var.clone()))?;
            request = request.bearer_auth(token);
        }
        let response = request.send()?;
        let status = response.status();
        let text = response.text()?;
        if !status.is_success() {
            let snippet: String = text.chars().take(200).collect();
            return Err(ServiceError::Status {
                status: status.as_u16(),
                snippet,
            });
        }
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|_| {
            ServiceError::BadResponsePath(self.config.response_path.clone())
        })?;
        extract_path(&value, &self.config.response_path)
            .ok_or_else(|| ServiceError::BadResponsePath(self.config.response_path.clone()))
    }
}

/// Wraps another service and appends one transcript line per successful
/// call. The file is truncated at construction: a recording owns its
/// transcript for the whole run.
pub struct RecordingService<S: TextService> {
    inner: S,
    path: PathBuf,
    file: Mutex<std::fs::File>,
}

impl<S: TextService> RecordingService<S> {
    pub fn create(inner: S, path: &Path) -> Result<Self, ServiceError> {
        let file = std::fs::File::create(path).map_err(|source| ServiceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(RecordingService {
            inner,
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }
}

impl<S: TextService> TextService for RecordingService<S> {
    fn complete(&self, prompt: &str) -> Result<String, ServiceError> {
        let response = self.inner.complete(prompt)?;
        let entry = TranscriptEntry {
            request_hash: request_hash(prompt),
            prompt: prompt.to_string(),
            response: response.clone(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .unwrap_or_default()
                .as_secs(),
        };
        let line = serde_json::to_string(&entry).expect("transcript entries serialize");
        let mut file = self.file.lock().expect("transcript lock");
        writeln!(file, "{line}").map_err(|source| ServiceError::Io {
            path: self.path.display().to_string(),
            source,
        })?;
        Ok(response)
    }
}

/// Serves a recorded transcript with no network at all. Responses for the
/// same prompt hash come back in recorded order.
#[derive(Debug)]
pub struct ReplayService {
    queues: Mutex<HashMap<String, VecDeque<String>>>,
}

impl ReplayService {
    pub fn from_path(path: &Path) -> Result<Self, ServiceError> {
        if !path.exists() {
            return Err(ServiceError::TranscriptMissing(path.display().to_string()));
        }
        let file = std::fs::File::open(path).map_err(|source| ServiceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut queues: HashMap<String, VecDeque<String>> = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| ServiceError::Io {
                path: path.display().to_string(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry =
                serde_json::from_str(&line).map_err(|e| ServiceError::BadTranscript {
                    path: path.display().to_string(),
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            if entry.request_hash != request_hash(&entry.prompt) {
                return Err(ServiceError::BadTranscript {
                    path: path.display().to_string(),
                    line: i + 1,
                    reason: "request_hash does not match prompt".to_string(),
                });
            }
            queues
                .entry(entry.request_hash)
                .or_default()
                .push_back(entry.response);
        }
        Ok(ReplayService {
            queues: Mutex::new(queues),
        })
    }
}

impl TextService for ReplayService {
    fn complete(&self, prompt: &str) -> Result<String, ServiceError> {
        let hash = request_hash(prompt);
        let mut queues = self.queues.lock().expect("replay lock");
        match queues.get_mut(&hash).and_then(VecDeque::pop_front) {
            Some(response) => Ok(response),
            None => Err(ServiceError::ReplayMiss(hash[..12].to_string())),
        }
    }
}

const SCRIPTED_RULES: [&str; 8] = [
    "Use skip_connect next to heavy conv edges because it keeps latency flat while preserving accuracy",
    "Avoid stacking avg_pool_3x3 on consecutive edges because accuracy drops with no latency win",
    "Use nor_conv_3x3 on the earliest edges because it lifts accuracy most per millisecond",
    "Avoid none on every input of the output node because the cell starves",
    "Use nor_conv_1x1 to densify cheap cells because it adds accuracy at low cost",
    "Avoid chains of redundant skip_connect because they waste edges",
    "Use pooling at most once per cell because repeats hurt both metrics",
    "Avoid rewiring every edge at once because small mutations keep gains attributable",
];

const SCRIPTED_RATIONALES: [&str; 6] = [
    "swap a pooling edge for convolution to raise accuracy",
    "reuse the stronger parent backbone and trim one redundant edge",
    "drop an isolated skip to none to shave latency",
    "shift the conv budget toward earlier edges for better signal flow",
    "combine the low-latency wiring of both parents",
    "densify the output node with a cheap convolution",
];

/// Deterministic offline responder. Each prompt is answered from an RNG
/// seeded by `(seed, prompt)`, so identical prompts get identical replies
/// and a recorded transcript is reproducible. Stage-2 replies honour the
/// constraint lines found in the prompt; reply formatting rotates through
/// bare, fenced, and prose-wrapped JSON to keep downstream parsers honest.
pub struct ScriptedTextService {
    pub seed: u64,
}

impl ScriptedTextService {
    pub fn new(seed: u64) -> Self {
        ScriptedTextService { seed }
    }

    fn rng_for(&self, prompt: &str) -> ChaCha8Rng {
        let digest = Sha256::digest(prompt.as_bytes());
        let mut folded = [0u8; 8];
        folded.copy_from_slice(&digest[..8]);
        ChaCha8Rng::seed_from_u64(self.seed ^ u64::from_le_bytes(folded))
    }

    fn stage1_response(&self, rng: &mut ChaCha8Rng) -> String {
        let n = rng.random_range(2..=4usize);
        let mut picks = Vec::new();
        while picks.len() < n {
            let rule = SCRIPTED_RULES[rng.random_range(0..SCRIPTED_RULES.len())];
            if !picks.contains(&rule) {
                picks.push(rule);
            }
        }
        let body = serde_json::to_string_pretty(&picks).expect("rules serialize");
        match rng.random_range(0..3u8) {
            0 => body,
            1 => format!("Updated_Knowledge_Base = {body}"),
            _ => format!("Here is the revised knowledge base.\n```json\n{body}\n```\n"),
        }
    }

    fn stage2_response(&self, prompt: &str, rng: &mut ChaCha8Rng) -> String {
        let niche = constraints_from_prompt(prompt);
        let n_children = prompt
            .lines()
            .find_map(|l| {
                l.strip_prefix("Perform ")?
                    .strip_suffix(" new candidate generations.")?
                    .parse::<usize>()
                    .ok()
            })
            .unwrap_or(1);
        let mut items = Vec::new();
        for _ in 0..n_children {
            let cell = loop {
                let cell = ArchCell::from_index(rng.random_range(0..SPACE_SIZE)).unwrap();
                if niche.matches_cell(&cell) {
                    break cell;
                }
            };
            let operation = if rng.random_range(0..2u8) == 0 {
                "crossover"
            } else {
                "mutation"
            };
            items.push(serde_json::json!({
                "child_id": format!("cand-{:04x}", rng.random_range(0..0x1_0000u32)),
                "operation": operation,
                "architecture_code": cell.encode(),
                "rationale": SCRIPTED_RATIONALES[rng.random_range(0..SCRIPTED_RATIONALES.len())],
            }));
        }
        let body = serde_json::to_string_pretty(&items).expect("proposals serialize");
        match rng.random_range(0..3u8) {
            0 => body,
            1 => format!("```json\n{body}\n```"),
            _ => format!(
                "Based on the parents and the knowledge base, I propose:\n{body}\nAll constraints hold."
            ),
        }
    }
}

/// Recover the niche predicate from the constraint lines of a rendered
/// prompt. Unrecognized forms fall back to unconstrained.
fn constraints_from_prompt(prompt: &str) -> NichePredicate {
    let rule_for = |op_name: &str| {
        for line in prompt.lines() {
            let t = line.trim();
            if !t.ends_with(op_name) {
                continue;
            }
            if let Some(rest) = t.strip_prefix("- MUST use exactly ") {
                if let Some(k) = leading_number(rest) {
                    return CountRule::Exact(k);
                }
            } else if let Some(rest) = t.strip_prefix("- MUST use at least ") {
                if let Some(k) = leading_number(rest) {
                    return CountRule::AtLeast(k);
                }
            } else if t.starts_with("- CAN use ") {
                return CountRule::Any;
            }
        }
        CountRule::Any
    };
    NichePredicate {
        conv3x3: rule_for("nor_conv_3x3"),
        conv1x1: rule_for("nor_conv_1x1"),
    }
}

fn leading_number(text: &str) -> Option<u8> {
    let digits: String = text.chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

impl TextService for ScriptedTextService {
    fn complete(&self, prompt: &str) -> Result<String, ServiceError> {
        let mut rng = self.rng_for(prompt);
        if prompt.contains("[Evolution Operation]") {
            Ok(self.stage2_response(prompt, &mut rng))
        } else {
            Ok(self.stage1_response(&mut rng))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coevolve::{
        llm_generate, llm_update_knowledge, prompt::build_stage1_prompt,
        prompt::build_stage2_prompt, GenerationContext, KnowledgeBase, ParentRecord,
    };
    use crate::space::{enumerate_space, NicheId, NicheSet};
    use crate::store::Device;
    use std::io::Read;
    use std::net::TcpListener;

    fn sample_ctx(niche: usize) -> GenerationContext {
        let niches = NicheSet::complexity_default();
        let pred = niches.predicate(NicheId(niche)).clone();
        let parent_cell = enumerate_space().find(|c| pred.matches_cell(c)).unwrap();
        GenerationContext {
            device: Device::EdgeGpu,
            dataset: "cifar10".to_string(),
            niche: pred,
            generation: 2,
            parents: vec![ParentRecord {
                arch: parent_cell.encode(),
                accuracy: 80.0,
                latency_ms: 3.0,
                rationale: "seed".to_string(),
            }],
            knowledge: KnowledgeBase::default_capacity(),
            n_children: 1,
            latency_limit_ms: 6.0,
            crossover_prob: 0.5,
        }
    }

    struct SeqService {
        responses: Mutex<VecDeque<Result<String, ServiceError>>>,
    }

    impl SeqService {
        fn new(responses: Vec<Result<String, ServiceError>>) -> Self {
            SeqService {
                responses: Mutex::new(responses.into()),
            }
        }
    }

    impl TextService for SeqService {
        fn complete(&self, _prompt: &str) -> Result<String, ServiceError> {
            self.responses
                .lock()
                .unwrap()
                .pop_front()
                .unwrap_or(Err(ServiceError::ReplayMiss("exhausted".to_string())))
        }
    }

    #[test]
    fn request_hash_is_stable_sha256() {
        assert_eq!(
            request_hash("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_ne!(request_hash("a"), request_hash("b"));
    }

    #[test]
    fn extract_path_walks_keys_and_indices() {
        let value = serde_json::json!({
            "choices": [{"message": {"content": "hello"}}],
            "plain": "text"
        });
        assert_eq!(
            extract_path(&value, "choices.0.message.content").as_deref(),
            Some("hello")
        );
        assert_eq!(extract_path(&value, "plain").as_deref(), Some("text"));
        assert!(extract_path(&value, "choices.1.message.content").is_none());
        assert!(extract_path(&value, "choices.0.message.missing").is_none());
    }

    #[test]
    fn scripted_service_is_deterministic_and_stage_aware() {
        let service = ScriptedTextService::new(9);
        let ctx = sample_ctx(3);
        let s1 = build_stage1_prompt(&ctx);
        let s2 = build_stage2_prompt(&ctx);
        assert_eq!(service.complete(&s1).unwrap(), service.complete(&s1).unwrap());
        assert_eq!(service.complete(&s2).unwrap(), service.complete(&s2).unwrap());
        assert_ne!(service.complete(&s1).unwrap(), service.complete(&s2).unwrap());

        let rules = crate::coevolve::parse_rule_list(&service.complete(&s1).unwrap()).unwrap();
        assert!(rules.0.len() >= 2);
    }

    #[test]
    fn scripted_proposals_respect_prompt_constraints() {
        let service = ScriptedTextService::new(40);
        for niche in 0..6 {
            let mut ctx = sample_ctx(niche);
            for generation in 2..8 {
                ctx.generation = generation;
                let response = service.complete(&build_stage2_prompt(&ctx)).unwrap();
                let parsed = crate::coevolve::parse_proposals(&response).unwrap();
                assert_eq!(parsed.proposals.len(), 1, "niche {niche} gen {generation}");
                assert!(parsed.diagnostics.is_empty());
                for p in &parsed.proposals {
                    assert!(
                        ctx.niche.matches_cell(&p.cell),
                        "niche {niche}: {}",
                        p.cell.encode()
                    );
                }
            }
        }
    }

    #[test]
    fn record_then_replay_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("transcript.jsonl");
        let ctx = sample_ctx(2);
        let prompt = build_stage2_prompt(&ctx);

        let recorder =
            RecordingService::create(ScriptedTextService::new(5), &path).unwrap();
        let first = recorder.complete(&prompt).unwrap();
        let second = recorder.complete(&prompt).unwrap();
        drop(recorder);

        let replay = ReplayService::from_path(&path).unwrap();
        // Same hash, FIFO order preserved.
        assert_eq!(replay.complete(&prompt).unwrap(), first);
        assert_eq!(replay.complete(&prompt).unwrap(), second);
        let miss = replay.complete(&prompt).unwrap_err();
        assert!(matches!(miss, ServiceError::ReplayMiss(_)));

        let other_prompt = build_stage2_prompt(&sample_ctx(4));
        assert!(matches!(
            replay.complete(&other_prompt).unwrap_err(),
            ServiceError::ReplayMiss(_)
        ));
    }

    #[test]
    fn replay_requires_existing_intact_transcript() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("absent.jsonl");
        assert!(matches!(
            ReplayService::from_path(&missing).unwrap_err(),
            ServiceError::TranscriptMissing(_)
        ));

        let corrupt = dir.path().join("corrupt.jsonl");
        std::fs::write(&corrupt, "{\"not\": \"an entry\"}\n").unwrap();
        assert!(matches!(
            ReplayService::from_path(&corrupt).unwrap_err(),
            ServiceError::BadTranscript { line: 1, .. }
        ));

        let tampered = dir.path().join("tampered.jsonl");
        let entry = TranscriptEntry {
            request_hash: "0".repeat(64),
            prompt: "p".to_string(),
            response: "r".to_string(),
            timestamp: 0,
        };
        std::fs::write(&tampered, format!("{}\n", serde_json::to_string(&entry).unwrap()))
            .unwrap();
        let err = ReplayService::from_path(&tampered).unwrap_err();
        assert!(matches!(err, ServiceError::BadTranscript { line: 1, .. }));
        assert!(err.to_string().contains("request_hash"));
    }

    #[test]
    fn llm_generate_retries_then_succeeds_and_counts_calls() {
        let ctx = sample_ctx(3);
        let scripted = ScriptedTextService::new(2);
        let good = scripted.complete(&build_stage2_prompt(&ctx)).unwrap();

        let service = SeqService::new(vec![
            Ok("no json array here".to_string()),
            Err(ServiceError::ReplayMiss("x".to_string())),
            Ok(good),
        ]);
        let outcome = llm_generate(&ctx, &service, 3);
        assert_eq!(outcome.calls, 3);
        assert_eq!(outcome.proposals.len(), 1);
        assert_eq!(outcome.errors.len(), 2);
    }

    #[test]
    fn llm_generate_exhaustion_returns_empty_not_panic() {
        let ctx = sample_ctx(1);
        let service = SeqService::new(vec![
            Ok("still nothing".to_string()),
            Ok("[]".to_string()),
            Ok("[42]".to_string()),
        ]);
        let outcome = llm_generate(&ctx, &service, 2);
        assert_eq!(outcome.calls, 3);
        assert!(outcome.proposals.is_empty());
        assert!(!outcome.errors.is_empty());
    }

    #[test]
    fn llm_update_knowledge_applies_or_preserves() {
        let mut ctx = sample_ctx(2);
        ctx.generation = 4;
        let mut kb = KnowledgeBase::default_capacity();
        kb.replace(vec!["old rule".to_string()], 2);

        let service = SeqService::new(vec![Ok(r#"["fresh rule"]"#.to_string())]);
        let (calls, warnings) = llm_update_knowledge(&mut kb, &ctx, &service, 0);
        assert_eq!(calls, 1);
        assert!(warnings.is_empty());
        assert_eq!(kb.rules()[0].text, "fresh rule");
        assert_eq!(kb.rules()[0].generation_added, 4);

        let garbage = SeqService::new(vec![
            Ok("word salad".to_string()),
            Ok("word salad".to_string()),
        ]);
        let before = kb.clone();
        let (calls, warnings) = llm_update_knowledge(&mut kb, &ctx, &garbage, 1);
        assert_eq!(calls, 2);
        assert_eq!(warnings.len(), 2);
        assert_eq!(kb, before);
    }

    /// Minimal one-shot HTTP responder: accepts a single connection, reads
    /// the request, and returns `status` with `body`.
    fn one_shot_http(status: u16, body: String) -> (String, std::thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            let request = loop {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                let text = String::from_utf8_lossy(&buf).to_string();
                if let Some(header_end) = text.find("\r\n\r\n") {
                    let content_length = text
                        .lines()
                        .find_map(|l| l.to_lowercase().strip_prefix("content-length:").map(str::trim).map(String::from))
                        .and_then(|v| v.parse::<usize>().ok())
                        .unwrap_or(0);
                    if buf.len() >= header_end + 4 + content_length {
                        break text;
                    }
                }
            };
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
            request
        });
        (format!("http://{addr}/v1/chat/completions"), handle)
    }

    #[test]
    fn http_service_posts_chat_body_and_reads_response_path() {
        let reply = serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": "[\"rule\"]"}}]
        });
        let (endpoint, handle) = one_shot_http(200, reply.to_string());
        std::env::set_var("HWNAS_TEST_TOKEN_A", "sekret");
        let service = HttpTextService::new(TextServiceConfig {
            endpoint,
            model: "tiny".to_string(),
            auth_env: Some("HWNAS_TEST_TOKEN_A".to_string()),
            ..TextServiceConfig::default()
        })
        .unwrap();
        let out = service.complete("hello there").unwrap();
        assert_eq!(out, "[\"rule\"]");

        let request = handle.join().unwrap();
        assert!(request.starts_with("POST /v1/chat/completions"));
        assert!(request.contains("authorization: Bearer sekret") || request.contains("Authorization: Bearer sekret"));
        let body_start = request.find("\r\n\r\n").unwrap() + 4;
        let body: serde_json::Value = serde_json::from_str(&request[body_start..]).unwrap();
        assert_eq!(body["model"], "tiny");
        assert_eq!(body["temperature"], 0.7);
        assert_eq!(body["messages"][0]["role"], "user");
        assert_eq!(body["messages"][0]["content"], "hello there");
    }

    #[test]
    fn http_service_surfaces_status_and_missing_auth() {
        let (endpoint, handle) = one_shot_http(503, "overloaded".to_string());
        let service = HttpTextService::new(TextServiceConfig {
            endpoint: endpoint.clone(),
            ..TextServiceConfig::default()
        })
        .unwrap();
        let err = service.complete("x").unwrap_err();
        assert!(matches!(err, ServiceError::Status { status: 503, .. }));
        handle.join().unwrap();

        let service = HttpTextService::new(TextServiceConfig {
            endpoint,
            auth_env: Some("HWNAS_TEST_TOKEN_UNSET".to_string()),
            ..TextServiceConfig::default()
        })
        .unwrap();
        let err = service.complete("x").unwrap_err();
        assert!(matches!(err, ServiceError::MissingAuth(v) if v == "HWNAS_TEST_TOKEN_UNSET"));
    }

    #[test]
    fn config_defaults_match_contract() {
        let config = TextServiceConfig::default();
        assert_eq!(config.temperature, 0.7);
        assert_eq!(config.response_path, "choices.0.message.content");
        assert_eq!(config.mode, ServiceMode::Replay);
        assert!(config.auth_env.is_none());
    }
}
