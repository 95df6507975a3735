//! Resolver backed by an OpenAI-compatible chat-completions endpoint.
//!
//! A [`PromptClient`] owns the transport, the in-flight limit and the request
//! log and is shared by all sessions of a run. Each planning session gets its
//! own [`PromptResolver`] from [`PromptClient::resolver`].

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::reply::{parse_model_reply, ModelDecision, ReplyScenario};
use super::templates;
use super::{ArgOutcome, CompletionRequest, Resolver, ResolverError, SelectionRequest};

pub const API_KEY_ENV: &str = "REVERSE_CHAIN_API_KEY";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        ChatMessage {
            role: role.to_string(),
            content: content.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

/// Sends one chat request and returns the assistant's reply text.
pub trait Transport: Send + Sync {
    fn send(&self, instance: &str, request: &ChatRequest) -> Result<String, ResolverError>;
}

pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTransport {
            agent,
            url: url.into(),
            api_key,
        }
    }
}

impl Transport for HttpTransport {
    fn send(&self, _instance: &str, request: &ChatRequest) -> Result<String, ResolverError> {
        let mut call = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call
            .send_json(request)
            .map_err(|e| ResolverError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ResolverError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(ResolverError::Http { status, body });
        }
        let json: Value = serde_json::from_str(&body)
            .map_err(|e| ResolverError::Transport(format!("response is not JSON: {e}")))?;
        json.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ResolverError::Transport("response has no choices[0].message.content".into()))
    }
}

#[derive(Clone)]
pub struct PromptResolverConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    /// Re-asks after a malformed reply or a transport error.
    pub max_retries: u32,
    pub timeout: Duration,
    pub request_log_path: Option<PathBuf>,
    pub api_key: Option<String>,
    pub max_in_flight: usize,
    /// Longest candidate list shown in one prompt.
    pub candidate_cap: usize,
}

impl Default for PromptResolverConfig {
    fn default() -> Self {
        PromptResolverConfig {
            endpoint_url: "http://localhost:8000/v1/chat/completions".into(),
            model_name: "gpt-3.5-turbo".into(),
            temperature: 0.1,
            max_retries: 1,
            timeout: Duration::from_secs(60),
            request_log_path: None,
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            max_in_flight: 4,
            candidate_cap: 32,
        }
    }
}

impl fmt::Debug for PromptResolverConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PromptResolverConfig")
            .field("endpoint_url", &self.endpoint_url)
            .field("model_name", &self.model_name)
            .field("temperature", &self.temperature)
            .field("max_retries", &self.max_retries)
            .field("timeout", &self.timeout)
            .field("request_log_path", &self.request_log_path)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("max_in_flight", &self.max_in_flight)
            .field("candidate_cap", &self.candidate_cap)
            .finish()
    }
}

impl PromptResolverConfig {
    pub fn validate(&self) -> Result<(), ResolverError> {
        let bad = |m: &str| Err(ResolverError::Config(m.to_string()));
        if self.endpoint_url.trim().is_empty() {
            return bad("endpoint_url is empty");
        }
        if self.model_name.trim().is_empty() {
            return bad("model_name is empty");
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad("temperature must lie in [0, 2]");
        }
        if self.timeout.is_zero() {
            return bad("timeout must be positive");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1");
        }
        if self.candidate_cap == 0 {
            return bad("candidate_cap must be at least 1");
        }
        Ok(())
    }
}

/// One line of the request log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequestLogEntry {
    pub seq: u64,
    pub instance: String,
    pub request: ChatRequest,
    pub reply: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub latency_ms: u64,
    pub max_retries: u32,
    pub candidate_cap: usize,
}

pub struct PromptClient {
    config: PromptResolverConfig,
    transport: Box<dyn Transport>,
    in_flight: Mutex<usize>,
    slot_freed: Condvar,
    seq: AtomicU64,
    log: Option<Mutex<BufWriter<File>>>,
}

impl PromptClient {
    pub fn new(config: PromptResolverConfig) -> Result<Self, ResolverError> {
        let transport = HttpTransport::new(
            config.endpoint_url.clone(),
            config.api_key.clone(),
            config.timeout,
        );
        Self::with_transport(config, Box::new(transport))
    }

    pub fn with_transport(
        config: PromptResolverConfig,
        transport: Box<dyn Transport>,
    ) -> Result<Self, ResolverError> {
        config.validate()?;
        let log = match &config.request_log_path {
            Some(path) => {
                let file = File::create(path).map_err(|e| {
                    ResolverError::Config(format!("cannot create request log {}: {e}", path.display()))
                })?;
                Some(Mutex::new(BufWriter::new(file)))
            }
            None => None,
        };
        Ok(PromptClient {
            config,
            transport,
            in_flight: Mutex::new(0),
            slot_freed: Condvar::new(),
            seq: AtomicU64::new(0),
            log,
        })
    }

    pub fn config(&self) -> &PromptResolverConfig {
        &self.config
    }

    pub fn resolver(self: &Arc<Self>, instance: impl Into<String>) -> PromptResolver {
        PromptResolver {
            client: Arc::clone(self),
            instance: instance.into(),
            anomalies: Vec::new(),
        }
    }

    /// Sends one request, waiting for a free slot if `max_in_flight`
    /// requests are already outstanding.
    pub fn chat(&self, instance: &str, request: &ChatRequest) -> Result<String, ResolverError> {
        {
            let mut busy = self.in_flight.lock().expect("in-flight lock");
            while *busy >= self.config.max_in_flight {
                busy = self.slot_freed.wait(busy).expect("in-flight lock");
            }
            *busy += 1;
        }
        let started = Instant::now();
        let result = self.transport.send(instance, request);
        let latency_ms = started.elapsed().as_millis() as u64;
        {
            *self.in_flight.lock().expect("in-flight lock") -= 1;
            self.slot_freed.notify_one();
        }
        let seq = self.seq.fetch_add(1, Ordering::SeqCst);
        tracing::debug!(seq, instance, latency_ms, ok = result.is_ok(), "chat request");
        if let Some(log) = &self.log {
            let entry = RequestLogEntry {
                seq,
                instance: instance.to_string(),
                request: request.clone(),
                reply: result.as_ref().ok().cloned(),
                error: result.as_ref().err().map(|e| e.to_string()),
                latency_ms,
                max_retries: self.config.max_retries,
                candidate_cap: self.config.candidate_cap,
            };
            let mut w = log.lock().expect("request log lock");
            let line = serde_json::to_string(&entry).expect("log entries serialize");
            writeln!(w, "{line}")
                .and_then(|_| w.flush())
                .map_err(|e| ResolverError::Transport(format!("request log write failed: {e}")))?;
        }
        result
    }
}

/// Per-session view of a [`PromptClient`].
pub struct PromptResolver {
    client: Arc<PromptClient>,
    instance: String,
    anomalies: Vec<String>,
}

impl PromptResolver {
    /// Asks once, re-asking after malformed replies or transport errors up
    /// to `max_retries` times. `Ok(None)` means every reply was malformed.
    fn ask(
        &mut self,
        prompt: String,
        scenario: ReplyScenario,
        argument: Option<&str>,
    ) -> Result<Option<ModelDecision>, ResolverError> {
        let config = self.client.config();
        let mut request = ChatRequest {
            model: config.model_name.clone(),
            messages: vec![
                ChatMessage::new("system", templates::SYSTEM.trim()),
                ChatMessage::new("user", prompt),
            ],
            temperature: config.temperature,
        };
        let attempts = config.max_retries + 1;
        for attempt in 1..=attempts {
            let reply = match self.client.chat(&self.instance, &request) {
                Ok(reply) => reply,
                Err(e) if attempt < attempts => {
                    tracing::warn!(instance = %self.instance, error = %e, "retrying after transport error");
                    continue;
                }
                Err(e) => return Err(e),
            };
            match parse_model_reply(&reply, scenario, argument) {
                Ok(parsed) => return Ok(Some(parsed.decision)),
                Err(e) if attempt < attempts => {
                    request.messages.push(ChatMessage::new("assistant", reply));
                    request
                        .messages
                        .push(ChatMessage::new("user", templates::retry_prompt(&e.to_string())));
                }
                Err(e) => {
                    self.anomalies
                        .push(format!("unusable model reply after {attempts} attempt(s): {e}"));
                }
            }
        }
        Ok(None)
    }

    fn cap<'a, T>(&mut self, items: &'a [T], what: &str) -> &'a [T] {
        let cap = self.client.config().candidate_cap;
        if items.len() > cap {
            self.anomalies
                .push(format!("{what}: showed {cap} of {} candidates", items.len()));
            &items[..cap]
        } else {
            items
        }
    }
}

impl Resolver for PromptResolver {
    fn select_api(&mut self, request: &SelectionRequest<'_>) -> Result<Option<String>, ResolverError> {
        let shown = self.cap(&request.candidates, "selection").to_vec();
        let capped = SelectionRequest {
            candidates: shown,
            ..request.clone()
        };
        match self.ask(
            templates::selection_prompt(&capped),
            ReplyScenario::Selection,
            None,
        )? {
            Some(ModelDecision::Selection(choice)) => Ok(choice),
            _ => Ok(None),
        }
    }

    fn complete_arguments(
        &mut self,
        request: &CompletionRequest<'_>,
    ) -> Result<IndexMap<String, ArgOutcome>, ResolverError> {
        let mut capped = request.clone();
        for (arg, list) in capped.candidates_per_arg.iter_mut() {
            let shown = self.cap(list, &format!("argument `{arg}`")).to_vec();
            *list = shown;
        }
        match self.ask(
            templates::completion_prompt(&capped),
            ReplyScenario::Completion,
            None,
        )? {
            Some(ModelDecision::Completion(map)) => Ok(map),
            _ => Ok(request
                .unfilled
                .iter()
                .map(|a| (a.name.clone(), ArgOutcome::NoneKnown))
                .collect()),
        }
    }

    fn extract_value(&mut self, request: &CompletionRequest<'_>) -> Result<ArgOutcome, ResolverError> {
        let argument = request.unfilled.first().map(|a| a.name.clone());
        match self.ask(
            templates::extraction_prompt(request),
            ReplyScenario::Extraction,
            argument.as_deref(),
        )? {
            Some(ModelDecision::Extraction(outcome)) => Ok(outcome),
            _ => Ok(ArgOutcome::NoneKnown),
        }
    }

    fn take_anomalies(&mut self) -> Vec<String> {
        std::mem::take(&mut self.anomalies)
    }

    fn kind(&self) -> &'static str {
        "prompt"
    }
}

#[cfg(test)]
mod tests {
    use std::collections::VecDeque;

    use super::*;
    use crate::engine::{plan_query, PlanStatus, StrategyConfig};
    use crate::fixtures;
    use crate::resolvers::Scenario;

    /// Replies from a fixed queue and records every request.
    #[derive(Default)]
    struct Canned {
        replies: Mutex<VecDeque<Result<String, ResolverError>>>,
        seen: Mutex<Vec<ChatRequest>>,
    }

    impl Canned {
        fn new(replies: &[&str]) -> Arc<Self> {
            Arc::new(Canned {
                replies: Mutex::new(replies.iter().map(|r| Ok(r.to_string())).collect()),
                seen: Mutex::default(),
            })
        }
    }

    impl Transport for Arc<Canned> {
        fn send(&self, _: &str, request: &ChatRequest) -> Result<String, ResolverError> {
            self.seen.lock().unwrap().push(request.clone());
            self.replies
                .lock()
                .unwrap()
                .pop_front()
                .unwrap_or_else(|| Err(ResolverError::Transport("no more replies".into())))
        }
    }

    fn client(canned: &Arc<Canned>, max_retries: u32) -> Arc<PromptClient> {
        let config = PromptResolverConfig {
            max_retries,
            api_key: None,
            ..Default::default()
        };
        Arc::new(PromptClient::with_transport(config, Box::new(Arc::clone(canned))).unwrap())
    }

    fn selection(pool: &crate::registry::ApiPool) -> SelectionRequest<'_> {
        SelectionRequest {
            scenario: Scenario::ArgumentFill,
            task_description: "ID of the meeting room to book".into(),
            candidates: pool.iter().collect(),
            path: vec!["room_ID".into()],
        }
    }

    #[test]
    fn plain_and_wrapped_selection_replies() {
        let pool = fixtures::meeting_room_pool();
        let canned = Canned::new(&[
            r#"{"api": "RecommendRoom"}"#,
            "Sure! ```{\"api\": \"Name2ID\"}```",
        ]);
        let mut r = client(&canned, 1).resolver("t");
        assert_eq!(
            r.select_api(&selection(&pool)).unwrap().as_deref(),
            Some("RecommendRoom")
        );
        assert_eq!(
            r.select_api(&selection(&pool)).unwrap().as_deref(),
            Some("Name2ID")
        );
        assert!(r.take_anomalies().is_empty());
        let seen = canned.seen.lock().unwrap();
        assert_eq!(seen[0].messages.len(), 2);
        assert_eq!(seen[0].temperature, 0.1);
    }

    #[test]
    fn malformed_reply_is_retried_then_given_up() {
        let pool = fixtures::meeting_room_pool();
        let canned = Canned::new(&["I think RecommendRoom", r#"{"api": "RecommendRoom"}"#]);
        let mut r = client(&canned, 1).resolver("t");
        assert_eq!(
            r.select_api(&selection(&pool)).unwrap().as_deref(),
            Some("RecommendRoom")
        );
        let retry = &canned.seen.lock().unwrap()[1];
        assert_eq!(retry.messages.len(), 4);
        assert_eq!(retry.messages[2].role, "assistant");

        let canned = Canned::new(&["nope", "still nope"]);
        let mut r = client(&canned, 1).resolver("t");
        assert_eq!(r.select_api(&selection(&pool)).unwrap(), None);
        assert_eq!(r.take_anomalies().len(), 1);
    }

    #[test]
    fn empty_completion_object_falls_back_to_ask_user() {
        let pool = fixtures::meeting_room_pool();
        let canned = Canned::new(&[r#"{"api": "BookRoom"}"#, "{}"]);
        let c = client(&canned, 0);
        let mut r = c.resolver("t");
        let out = plan_query(
            fixtures::MEETING_ROOM_QUERY,
            &[],
            &pool,
            &mut r,
            &StrategyConfig::default(),
        )
        .unwrap();
        assert_eq!(out.status, PlanStatus::NeedsUserInput);
        assert_eq!(out.pending_questions().len(), 4);
        assert_eq!(out.trace.anomalies().len(), 4);
    }

    #[test]
    fn out_of_candidate_selection_is_downgraded() {
        let pool = fixtures::meeting_room_pool();
        let canned = Canned::new(&[r#"{"api": "CallTaxi"}"#]);
        let mut r = client(&canned, 0).resolver("t");
        let out = plan_query("q", &[], &pool, &mut r, &StrategyConfig::default()).unwrap();
        assert!(out.plan.is_none());
        assert!(matches!(out.status, PlanStatus::Failed(_)));
        assert_eq!(out.trace.anomalies().len(), 1);
    }

    #[test]
    fn transport_errors_propagate_after_retries() {
        let pool = fixtures::meeting_room_pool();
        let canned = Canned::new(&[]);
        let mut r = client(&canned, 2).resolver("t");
        let err = r.select_api(&selection(&pool)).unwrap_err();
        assert!(matches!(err, ResolverError::Transport(_)));
        assert_eq!(canned.seen.lock().unwrap().len(), 3);
    }

    #[test]
    fn candidate_cap_truncates_and_reports() {
        let pool = fixtures::meeting_room_pool();
        let canned = Canned::new(&[r#"{"api": "BookRoom"}"#]);
        let config = PromptResolverConfig {
            candidate_cap: 2,
            api_key: None,
            ..Default::default()
        };
        let c = Arc::new(PromptClient::with_transport(config, Box::new(Arc::clone(&canned))).unwrap());
        let mut r = c.resolver("t");
        r.select_api(&selection(&pool)).unwrap();
        let prompt = &canned.seen.lock().unwrap()[0].messages[1].content;
        assert_eq!(prompt.lines().filter(|l| l.starts_with("- ")).count(), 2);
        assert_eq!(r.take_anomalies().len(), 1);
    }

    #[test]
    fn config_validation() {
        let bad = PromptResolverConfig {
            temperature: 2.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(!format!(
            "{:?}",
            PromptResolverConfig {
                api_key: Some("sk-secret".into()),
                ..Default::default()
            }
        )
        .contains("sk-secret"));
    }

    #[test]
    fn request_log_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("requests.jsonl");
        let canned = Canned::new(&[r#"{"api": "BookRoom"}"#]);
        let config = PromptResolverConfig {
            request_log_path: Some(path.clone()),
            api_key: None,
            ..Default::default()
        };
        let c = Arc::new(PromptClient::with_transport(config, Box::new(Arc::clone(&canned))).unwrap());
        let pool = fixtures::meeting_room_pool();
        c.resolver("inst-1").select_api(&selection(&pool)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let entry: RequestLogEntry = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(entry.instance, "inst-1");
        assert_eq!(entry.reply.as_deref(), Some(r#"{"api": "BookRoom"}"#));
        assert_eq!(entry.max_retries, 1);
    }
}
