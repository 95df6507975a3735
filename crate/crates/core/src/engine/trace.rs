//! Audit log of a planning session, serialized as JSON lines.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::resolvers::{ArgOutcome, Scenario};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionEvent {
    pub scenario: Scenario,
    pub path: Vec<String>,
    pub task: String,
    pub candidates: Vec<String>,
    pub chosen: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anomalies: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionEvent {
    pub path: Vec<String>,
    pub api: String,
    pub outcomes: IndexMap<String, ArgOutcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anomalies: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionEvent {
    pub path: Vec<String>,
    pub api: String,
    pub argument: String,
    pub outcome: ArgOutcome,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anomalies: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardKind {
    Depth,
    Cycle,
    Budget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuardEvent {
    pub kind: GuardKind,
    pub location: Vec<String>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum TraceEvent {
    Selection(SelectionEvent),
    Completion(CompletionEvent),
    Extraction(ExtractionEvent),
    Guard(GuardEvent),
}

impl TraceEvent {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TraceEvent::Selection(_) => "selection",
            TraceEvent::Completion(_) => "completion",
            TraceEvent::Extraction(_) => "extraction",
            TraceEvent::Guard(_) => "guard",
        }
    }

    pub fn anomalies(&self) -> &[String] {
        match self {
            TraceEvent::Selection(e) => &e.anomalies,
            TraceEvent::Completion(e) => &e.anomalies,
            TraceEvent::Extraction(e) => &e.anomalies,
            TraceEvent::Guard(_) => &[],
        }
    }

    /// Whether the event records a resolver invocation.
    pub fn is_resolver_call(&self) -> bool {
        !matches!(self, TraceEvent::Guard(_))
    }
}

/// One serialized trace line: `{seq, [instance], kind, payload}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceLine {
    pub seq: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    pub kind: String,
    pub payload: Value,
}

impl TraceLine {
    pub fn event(&self) -> Result<TraceEvent, serde_json::Error> {
        serde_json::from_value(serde_json::json!({
            "kind": self.kind,
            "payload": self.payload,
        }))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlanningTrace {
    pub events: Vec<TraceEvent>,
}

impl PlanningTrace {
    pub fn push(&mut self, event: TraceEvent) {
        self.events.push(event);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn selections(&self) -> impl Iterator<Item = &SelectionEvent> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Selection(s) => Some(s),
            _ => None,
        })
    }

    pub fn completions(&self) -> impl Iterator<Item = &CompletionEvent> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Completion(c) => Some(c),
            _ => None,
        })
    }

    pub fn guards(&self) -> impl Iterator<Item = &GuardEvent> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Guard(g) => Some(g),
            _ => None,
        })
    }

    pub fn resolver_calls(&self) -> usize {
        self.events.iter().filter(|e| e.is_resolver_call()).count()
    }

    pub fn anomalies(&self) -> Vec<&str> {
        self.events
            .iter()
            .flat_map(|e| e.anomalies().iter().map(String::as_str))
            .collect()
    }

    pub fn lines(&self, instance: Option<&str>) -> Vec<TraceLine> {
        self.events
            .iter()
            .enumerate()
            .map(|(seq, event)| {
                let mut value = serde_json::to_value(event).expect("trace events serialize");
                let payload = value.get_mut("payload").map(Value::take).unwrap_or(Value::Null);
                TraceLine {
                    seq,
                    instance: instance.map(str::to_string),
                    kind: event.kind_name().to_string(),
                    payload,
                }
            })
            .collect()
    }

    /// JSON lines, one event per line, newline-terminated.
    pub fn to_jsonl(&self, instance: Option<&str>) -> String {
        let mut out = String::new();
        for line in self.lines(instance) {
            out.push_str(&serde_json::to_string(&line).expect("trace lines serialize"));
            out.push('\n');
        }
        out
    }

    /// Parses JSON lines, ignoring blank lines and the `instance` tag.
    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let mut events = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let parsed: TraceLine = serde_json::from_str(line)?;
            events.push(parsed.event()?);
        }
        Ok(PlanningTrace { events })
    }
}
