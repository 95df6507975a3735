//! The decision interface the planner calls, and its implementations.
//!
//! A [`Resolver`] answers three kinds of question: which API fits a task
//! ([`Resolver::select_api`]), how each unfilled argument of a call should be
//! bound ([`Resolver::complete_arguments`]), and, for the three-step strategy,
//! whether a single argument's value can be read off the query alone
//! ([`Resolver::extract_value`]).

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::registry::{ApiSpec, ArgSpec, Fact};

mod oracle;
mod prompt;
mod replay;
mod reply;
mod scripted;
pub mod templates;

pub use oracle::OracleResolver;
pub use prompt::{
    ChatMessage, ChatRequest, HttpTransport, PromptClient, PromptResolver, PromptResolverConfig,
    RequestLogEntry, Transport, API_KEY_ENV,
};
pub use replay::{ReplaySource, ReplayTransport};
pub use reply::{
    extract_json_object, parse_completion_reply, parse_extraction_reply, parse_model_reply,
    parse_selection_reply, ModelDecision, ParsedReply, ReplyError, ReplyScenario,
};
pub use scripted::ScriptedResolver;

/// Which of the two selection situations a request comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Choosing the API that achieves the user's goal; candidates are the whole pool.
    FinalApi,
    /// Choosing an API whose output fills an unfilled argument.
    ArgumentFill,
}

#[derive(Clone, Debug)]
pub struct SelectionRequest<'a> {
    pub scenario: Scenario,
    pub task_description: String,
    pub candidates: Vec<&'a ApiSpec>,
    /// Argument names from the plan root to the slot being filled; empty for
    /// the final API.
    pub path: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct CompletionRequest<'a> {
    pub query: &'a str,
    pub context: &'a [Fact],
    pub api: &'a ApiSpec,
    pub unfilled: Vec<&'a ArgSpec>,
    pub candidates_per_arg: IndexMap<String, Vec<&'a ApiSpec>>,
    /// Argument names from the plan root to the call being completed.
    pub path: Vec<String>,
}

/// How a resolver proposes to bind one argument.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArgOutcome {
    /// Value read from the query or context.
    Value(String),
    /// Value to be produced by the named API.
    UseApi(String),
    /// Neither; the user has to be asked.
    NoneKnown,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum OutcomeRepr {
    Value { value: String },
    Api { api: String },
    None,
}

impl Serialize for ArgOutcome {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ArgOutcome::Value(v) => OutcomeRepr::Value { value: v.clone() },
            ArgOutcome::UseApi(a) => OutcomeRepr::Api { api: a.clone() },
            ArgOutcome::NoneKnown => OutcomeRepr::None,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ArgOutcome {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(match OutcomeRepr::deserialize(deserializer)? {
            OutcomeRepr::Value { value } => ArgOutcome::Value(value),
            OutcomeRepr::Api { api } => ArgOutcome::UseApi(api),
            OutcomeRepr::None => ArgOutcome::NoneKnown,
        })
    }
}

impl fmt::Display for ArgOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgOutcome::Value(v) => write!(f, "value {v:?}"),
            ArgOutcome::UseApi(a) => write!(f, "api {a}"),
            ArgOutcome::NoneKnown => f.write_str("none"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ResolverError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("script exhausted: no recorded decision for a {0} request")]
    ScriptExhausted(&'static str),
    #[error("script diverged: expected a {expected} decision, recorded {found}")]
    ScriptDiverged { expected: &'static str, found: String },
    #[error("request for position {0:?} lies outside the gold plan")]
    OutsideGold(Vec<String>),
    #[error("invalid resolver configuration: {0}")]
    Config(String),
    #[error("replay error: {0}")]
    Replay(String),
}

/// The decision-maker behind API selection and argument completion.
///
/// Implementations may return names outside the candidate list or omit
/// arguments; the engine validates every answer and records violations as
/// trace anomalies.
pub trait Resolver {
    fn select_api(&mut self, request: &SelectionRequest<'_>) -> Result<Option<String>, ResolverError>;

    fn complete_arguments(
        &mut self,
        request: &CompletionRequest<'_>,
    ) -> Result<IndexMap<String, ArgOutcome>, ResolverError>;

    /// Value extraction with no API candidates visible. `request.unfilled`
    /// holds exactly one argument.
    fn extract_value(&mut self, request: &CompletionRequest<'_>) -> Result<ArgOutcome, ResolverError>;

    /// Problems noticed while serving the last request (e.g. a malformed
    /// model reply). Drained by the engine after every call.
    fn take_anomalies(&mut self) -> Vec<String> {
        Vec::new()
    }

    fn kind(&self) -> &'static str {
        "custom"
    }
}

impl<R: Resolver + ?Sized> Resolver for Box<R> {
    fn select_api(&mut self, request: &SelectionRequest<'_>) -> Result<Option<String>, ResolverError> {
        (**self).select_api(request)
    }

    fn complete_arguments(
        &mut self,
        request: &CompletionRequest<'_>,
    ) -> Result<IndexMap<String, ArgOutcome>, ResolverError> {
        (**self).complete_arguments(request)
    }

    fn extract_value(&mut self, request: &CompletionRequest<'_>) -> Result<ArgOutcome, ResolverError> {
        (**self).extract_value(request)
    }

    fn take_anomalies(&mut self) -> Vec<String> {
        (**self).take_anomalies()
    }

    fn kind(&self) -> &'static str {
        (**self).kind()
    }
}
