//! Re-running recorded sessions without the original decision-maker.
//!
//! Two recordings are accepted: a planning trace (JSON lines with a `kind`
//! field), replayed by [`ScriptedResolver`], and a request log written by
//! [`PromptClient`] (lines with a `request` field), replayed by feeding the
//! logged replies back through the prompt resolver so that parsing, retries
//! and validation happen exactly as they did originally.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use serde_json::Value;

use super::prompt::{ChatRequest, PromptClient, PromptResolverConfig, RequestLogEntry, Transport};
use super::{Resolver, ResolverError, ScriptedResolver};
use crate::engine::{TraceEvent, TraceLine};

/// Serves logged replies per instance, checking each request against the log.
pub struct ReplayTransport {
    queues: Mutex<HashMap<String, VecDeque<RequestLogEntry>>>,
}

impl ReplayTransport {
    pub fn new(entries: impl IntoIterator<Item = RequestLogEntry>) -> Self {
        let mut queues: HashMap<String, VecDeque<RequestLogEntry>> = HashMap::new();
        let mut sorted: Vec<_> = entries.into_iter().collect();
        sorted.sort_by_key(|e| e.seq);
        for entry in sorted {
            queues.entry(entry.instance.clone()).or_default().push_back(entry);
        }
        ReplayTransport {
            queues: Mutex::new(queues),
        }
    }
}

impl Transport for ReplayTransport {
    fn send(&self, instance: &str, request: &ChatRequest) -> Result<String, ResolverError> {
        let entry = self
            .queues
            .lock()
            .expect("replay queue lock")
            .get_mut(instance)
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| {
                ResolverError::Replay(format!("no logged request left for instance `{instance}`"))
            })?;
        if entry.request != *request {
            return Err(ResolverError::Replay(format!(
                "request {} of instance `{instance}` differs from the log",
                entry.seq
            )));
        }
        match (entry.reply, entry.error) {
            (Some(reply), _) => Ok(reply),
            (None, Some(error)) => Err(ResolverError::Transport(error)),
            (None, None) => Err(ResolverError::Replay(format!(
                "logged request {} has neither reply nor error",
                entry.seq
            ))),
        }
    }
}

pub enum ReplaySource {
    /// Events keyed by instance id; untagged lines use the empty id.
    Trace(BTreeMap<String, Vec<TraceEvent>>),
    Requests {
        entries: Vec<RequestLogEntry>,
        client: OnceLock<Arc<PromptClient>>,
    },
}

impl ReplaySource {
    pub fn load(path: &Path) -> Result<Self, ResolverError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ResolverError::Replay(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ResolverError> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .collect();
        let bad = |n: usize, e: serde_json::Error| ResolverError::Replay(format!("line {}: {e}", n + 1));
        let Some((first_no, first)) = lines.first() else {
            return Ok(ReplaySource::Trace(BTreeMap::new()));
        };
        let probe: Value = serde_json::from_str(first).map_err(|e| bad(*first_no, e))?;
        if probe.get("request").is_some() {
            let entries = lines
                .iter()
                .map(|(n, l)| serde_json::from_str(l).map_err(|e| bad(*n, e)))
                .collect::<Result<Vec<RequestLogEntry>, _>>()?;
            return Ok(ReplaySource::Requests {
                entries,
                client: OnceLock::new(),
            });
        }
        let mut by_instance: BTreeMap<String, Vec<TraceEvent>> = BTreeMap::new();
        for (n, l) in lines {
            let line: TraceLine = serde_json::from_str(l).map_err(|e| bad(n, e))?;
            let event = line.event().map_err(|e| bad(n, e))?;
            by_instance
                .entry(line.instance.unwrap_or_default())
                .or_default()
                .push(event);
        }
        Ok(ReplaySource::Trace(by_instance))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ReplaySource::Trace(_) => "trace",
            ReplaySource::Requests { .. } => "request-log",
        }
    }

    /// Instance ids present in the recording.
    pub fn instances(&self) -> Vec<String> {
        match self {
            ReplaySource::Trace(map) => map.keys().cloned().collect(),
            ReplaySource::Requests { entries, .. } => {
                let mut ids: Vec<String> = entries.iter().map(|e| e.instance.clone()).collect();
                ids.sort();
                ids.dedup();
                ids
            }
        }
    }

    /// A client that answers from the request log, for callers that talk
    /// to the model directly rather than through a resolver.
    pub fn prompt_client(&self) -> Result<&Arc<PromptClient>, ResolverError> {
        let ReplaySource::Requests { entries, client } = self else {
            return Err(ResolverError::Replay(
                "a trace file records decisions, not model replies".into(),
            ));
        };
        if let Some(c) = client.get() {
            return Ok(c);
        }
        let first = entries
            .first()
            .ok_or_else(|| ResolverError::Replay("request log is empty".into()))?;
        let config = PromptResolverConfig {
            model_name: first.request.model.clone(),
            temperature: first.request.temperature,
            max_retries: first.max_retries,
            candidate_cap: first.candidate_cap,
            request_log_path: None,
            api_key: None,
            ..Default::default()
        };
        let built =
            PromptClient::with_transport(config, Box::new(ReplayTransport::new(entries.iter().cloned())))?;
        Ok(client.get_or_init(|| Arc::new(built)))
    }

    /// Resolver replaying the decisions recorded for `instance`. A trace
    /// holding a single untagged session serves any instance id.
    pub fn resolver(&self, instance: &str) -> Result<Box<dyn Resolver + Send>, ResolverError> {
        match self {
            ReplaySource::Trace(map) => {
                let events = match map.get(instance) {
                    Some(events) => events,
                    None if map.len() == 1 && map.contains_key("") => &map[""],
                    None => {
                        return Err(ResolverError::Replay(format!(
                            "trace has no events for instance `{instance}`"
                        )))
                    }
                };
                Ok(Box::new(ScriptedResolver::new(events.iter().cloned())))
            }
            ReplaySource::Requests { .. } => Ok(Box::new(self.prompt_client()?.resolver(instance))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{plan_query, StrategyConfig, StrategyMode};
    use crate::fixtures;
    use crate::resolvers::OracleResolver;

    #[test]
    fn trace_files_replay_per_instance() {
        let pool = fixtures::meeting_room_pool();
        let cfg = StrategyConfig::with_mode(StrategyMode::OneByOne);
        let mut oracle = OracleResolver::new(fixtures::meeting_room_gold());
        let out = plan_query(fixtures::MEETING_ROOM_QUERY, &[], &pool, &mut oracle, &cfg).unwrap();
        let text = out.trace.to_jsonl(Some("meeting-room"));
        let source = ReplaySource::parse(&text).unwrap();
        assert_eq!(source.kind(), "trace");
        assert_eq!(source.instances(), ["meeting-room"]);
        let mut r = source.resolver("meeting-room").unwrap();
        let again = plan_query(fixtures::MEETING_ROOM_QUERY, &[], &pool, &mut r, &cfg).unwrap();
        assert_eq!(again, out);
        assert!(source.resolver("other").is_err());

        let untagged = ReplaySource::parse(&out.trace.to_jsonl(None)).unwrap();
        assert!(untagged.resolver("anything").is_ok());
    }

    #[test]
    fn request_log_detects_divergence() {
        let entry = RequestLogEntry {
            seq: 0,
            instance: "a".into(),
            request: ChatRequest {
                model: "m".into(),
                messages: vec![],
                temperature: 0.1,
            },
            reply: Some("{}".into()),
            error: None,
            latency_ms: 3,
            max_retries: 1,
            candidate_cap: 32,
        };
        let transport = ReplayTransport::new([entry.clone()]);
        let other = ChatRequest {
            model: "n".into(),
            ..entry.request.clone()
        };
        assert!(matches!(
            transport.send("a", &other),
            Err(ResolverError::Replay(_))
        ));
        assert!(matches!(
            transport.send("a", &entry.request),
            Err(ResolverError::Replay(_))
        ));

        let transport = ReplayTransport::new([entry.clone()]);
        assert_eq!(transport.send("a", &entry.request).unwrap(), "{}");

        let line = serde_json::to_string(&entry).unwrap();
        let source = ReplaySource::parse(&line).unwrap();
        assert_eq!(source.kind(), "request-log");
        assert_eq!(source.resolver("a").unwrap().kind(), "prompt");
    }
}
