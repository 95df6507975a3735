//! Backward-chaining planning loop.
//!
//! Planning starts by selecting the API that achieves the user's goal. Its
//! required arguments come from the API spec; each is bound to a value from
//! the query, to a new call whose output supplies it, or to a question for
//! the user. Every new call is completed the same way, depth-first and in
//! argument declaration order, until nothing is left unfilled.
//!
//! Termination is guaranteed by three guards: an API already on the current
//! root-to-leaf path may not be chosen again, nesting may not exceed
//! `max_depth`, and the session may not invoke the resolver more than
//! `max_resolver_calls` times.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::plan::{Binding, PlanNode};
use crate::registry::{validate_pool, ApiPool, ApiSpec, ArgSpec, Fact, Violation};
use crate::resolvers::{ArgOutcome, CompletionRequest, Resolver, ResolverError, Scenario, SelectionRequest};

mod trace;

pub use trace::{
    CompletionEvent, ExtractionEvent, GuardEvent, GuardKind, PlanningTrace, SelectionEvent, TraceEvent,
    TraceLine,
};

/// How argument completion is split into resolver calls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyMode {
    /// One call covering every unfilled argument of a node.
    #[default]
    AllAtOnce,
    /// One call per argument, in declaration order.
    OneByOne,
    /// Per argument: value extraction without candidates, then API selection
    /// over type-matched candidates only if extraction found nothing.
    ThreeStep,
}

impl StrategyMode {
    pub const ALL: [StrategyMode; 3] = [
        StrategyMode::AllAtOnce,
        StrategyMode::OneByOne,
        StrategyMode::ThreeStep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyMode::AllAtOnce => "all-at-once",
            StrategyMode::OneByOne => "one-by-one",
            StrategyMode::ThreeStep => "three-step",
        }
    }
}

impl fmt::Display for StrategyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "all-at-once" => Ok(StrategyMode::AllAtOnce),
            "one-by-one" => Ok(StrategyMode::OneByOne),
            "three-step" => Ok(StrategyMode::ThreeStep),
            other => Err(format!(
                "unknown strategy `{other}` (expected all-at-once, one-by-one or three-step)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub mode: StrategyMode,
    pub max_depth: usize,
    pub max_resolver_calls: usize,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            mode: StrategyMode::AllAtOnce,
            max_depth: 8,
            max_resolver_calls: 64,
        }
    }
}

impl StrategyConfig {
    pub fn with_mode(mode: StrategyMode) -> Self {
        StrategyConfig {
            mode,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.max_depth == 0 {
            return Err(EngineError::InvalidConfig("max_depth must be at least 1".into()));
        }
        if self.max_resolver_calls == 0 {
            return Err(EngineError::InvalidConfig(
                "max_resolver_calls must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanStatus {
    Complete,
    NeedsUserInput,
    Failed(String),
}

impl PlanStatus {
    pub fn label(&self) -> &'static str {
        match self {
            PlanStatus::Complete => "complete",
            PlanStatus::NeedsUserInput => "needs-user-input",
            PlanStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanningOutcome {
    /// `None` only when no final API could be selected.
    pub plan: Option<PlanNode>,
    pub trace: PlanningTrace,
    pub status: PlanStatus,
}

impl PlanningOutcome {
    /// Questions still awaiting an answer, in plan order, deduplicated.
    pub fn pending_questions(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        if let Some(plan) = &self.plan {
            for (_, _, binding) in plan.bindings_with_paths() {
                if let Binding::AskUser { question } = binding {
                    if seen.insert(question.clone()) {
                        out.push(question.clone());
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("invalid strategy configuration: {0}")]
    InvalidConfig(String),
    #[error("API pool failed validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidPool(Vec<Violation>),
    #[error("resolver failed after {} trace events: {source}", trace.len())]
    Resolver {
        #[source]
        source: ResolverError,
        trace: PlanningTrace,
    },
    #[error("outcome is not waiting for user input")]
    NotAwaitingInput,
    #[error("answers supplied for unknown questions: {0:?}")]
    UnknownQuestions(Vec<String>),
}

enum Halt {
    Guard(String),
    Resolver(ResolverError),
}

impl From<ResolverError> for Halt {
    fn from(e: ResolverError) -> Self {
        Halt::Resolver(e)
    }
}

/// Plans `query` against `pool`, delegating selection and completion
/// decisions to `resolver`.
///
/// Guard violations end the session with [`PlanStatus::Failed`] and a guard
/// event in the trace; resolver errors are returned together with the trace
/// recorded so far.
pub fn plan_query<R: Resolver + ?Sized>(
    query: &str,
    context: &[Fact],
    pool: &ApiPool,
    resolver: &mut R,
    config: &StrategyConfig,
) -> Result<PlanningOutcome, EngineError> {
    config.validate()?;
    let violations = validate_pool(pool);
    if !violations.is_empty() {
        return Err(EngineError::InvalidPool(violations));
    }
    let mut session = Session {
        query,
        context,
        pool,
        resolver,
        config,
        trace: PlanningTrace::default(),
        calls: 0,
    };
    if pool.is_empty() {
        return Ok(PlanningOutcome {
            plan: None,
            trace: session.trace,
            status: PlanStatus::Failed("empty API pool".into()),
        });
    }

    let chosen = match session.select(
        Scenario::FinalApi,
        query.to_string(),
        pool.iter().collect(),
        Vec::new(),
    ) {
        Ok(c) => c,
        Err(halt) => return session.finish(None, halt),
    };
    let Some(root_name) = chosen else {
        return Ok(PlanningOutcome {
            plan: None,
            trace: session.trace,
            status: PlanStatus::Failed("no final API selected".into()),
        });
    };

    let mut root = PlanNode::new(root_name.clone());
    let mut path = Vec::new();
    let mut api_path = vec![root_name];
    match session.complete_node(&mut root, &mut path, &mut api_path, 1) {
        Ok(()) => {
            let status = if root.has_unfilled() {
                PlanStatus::Failed("plan left unfilled arguments".into())
            } else if root.has_ask_user() {
                PlanStatus::NeedsUserInput
            } else {
                PlanStatus::Complete
            };
            Ok(PlanningOutcome {
                plan: Some(root),
                trace: session.trace,
                status,
            })
        }
        Err(halt) => session.finish(Some(root), halt),
    }
}

struct Session<'a, R: ?Sized> {
    query: &'a str,
    context: &'a [Fact],
    pool: &'a ApiPool,
    resolver: &'a mut R,
    config: &'a StrategyConfig,
    trace: PlanningTrace,
    calls: usize,
}

impl<'a, R: Resolver + ?Sized> Session<'a, R> {
    fn finish(self, plan: Option<PlanNode>, halt: Halt) -> Result<PlanningOutcome, EngineError> {
        match halt {
            Halt::Guard(reason) => Ok(PlanningOutcome {
                plan,
                trace: self.trace,
                status: PlanStatus::Failed(reason),
            }),
            Halt::Resolver(source) => Err(EngineError::Resolver {
                source,
                trace: self.trace,
            }),
        }
    }

    fn guard(&mut self, kind: GuardKind, location: &[String], detail: String) -> Halt {
        self.trace.push(TraceEvent::Guard(GuardEvent {
            kind,
            location: location.to_vec(),
            detail: detail.clone(),
        }));
        Halt::Guard(detail)
    }

    fn charge(&mut self, location: &[String]) -> Result<(), Halt> {
        if self.calls >= self.config.max_resolver_calls {
            let detail = format!(
                "resolver budget of {} calls exhausted",
                self.config.max_resolver_calls
            );
            return Err(self.guard(GuardKind::Budget, location, detail));
        }
        self.calls += 1;
        Ok(())
    }

    fn select(
        &mut self,
        scenario: Scenario,
        task: String,
        candidates: Vec<&'a ApiSpec>,
        path: Vec<String>,
    ) -> Result<Option<String>, Halt> {
        self.charge(&path)?;
        let request = SelectionRequest {
            scenario,
            task_description: task,
            candidates,
            path,
        };
        let raw = self.resolver.select_api(&request)?;
        let mut anomalies = self.resolver.take_anomalies();
        let chosen = match raw {
            Some(name) if request.candidates.iter().any(|c| c.name == name) => Some(name),
            Some(name) => {
                anomalies.push(format!("selected `{name}` which is not a candidate"));
                None
            }
            None => None,
        };
        self.trace.push(TraceEvent::Selection(SelectionEvent {
            scenario,
            path: request.path,
            task: request.task_description,
            candidates: request.candidates.iter().map(|c| c.name.clone()).collect(),
            chosen: chosen.clone(),
            anomalies,
        }));
        Ok(chosen)
    }

    fn complete(
        &mut self,
        api: &'a ApiSpec,
        path: &[String],
        unfilled: Vec<&'a ArgSpec>,
        candidates: &IndexMap<String, Vec<&'a ApiSpec>>,
    ) -> Result<Vec<(String, ArgOutcome)>, Halt> {
        self.charge(path)?;
        let request = CompletionRequest {
            query: self.query,
            context: self.context,
            api,
            candidates_per_arg: unfilled
                .iter()
                .map(|a| (a.name.clone(), candidates[&a.name].clone()))
                .collect(),
            unfilled,
            path: path.to_vec(),
        };
        let mut raw = self.resolver.complete_arguments(&request)?;
        let mut anomalies = self.resolver.take_anomalies();
        let mut outcomes = IndexMap::new();
        for arg in &request.unfilled {
            let outcome = match raw.shift_remove(&arg.name) {
                None => {
                    anomalies.push(format!("no outcome for argument `{}`", arg.name));
                    ArgOutcome::NoneKnown
                }
                Some(ArgOutcome::UseApi(name))
                    if !request.candidates_per_arg[&arg.name]
                        .iter()
                        .any(|c| c.name == name) =>
                {
                    anomalies.push(format!(
                        "argument `{}` names `{name}` which is not a candidate",
                        arg.name
                    ));
                    ArgOutcome::NoneKnown
                }
                Some(o) => o,
            };
            outcomes.insert(arg.name.clone(), outcome);
        }
        for extra in raw.keys() {
            anomalies.push(format!("ignored outcome for unknown argument `{extra}`"));
        }
        self.trace.push(TraceEvent::Completion(CompletionEvent {
            path: request.path,
            api: api.name.clone(),
            outcomes: outcomes.clone(),
            anomalies,
        }));
        Ok(outcomes.into_iter().collect())
    }

    fn extract(&mut self, api: &'a ApiSpec, path: &[String], arg: &'a ArgSpec) -> Result<ArgOutcome, Halt> {
        self.charge(path)?;
        let request = CompletionRequest {
            query: self.query,
            context: self.context,
            api,
            unfilled: vec![arg],
            candidates_per_arg: IndexMap::new(),
            path: path.to_vec(),
        };
        let raw = self.resolver.extract_value(&request)?;
        let mut anomalies = self.resolver.take_anomalies();
        let outcome = match raw {
            ArgOutcome::UseApi(name) => {
                anomalies.push(format!("value extraction returned API `{name}`"));
                ArgOutcome::NoneKnown
            }
            other => other,
        };
        self.trace.push(TraceEvent::Extraction(ExtractionEvent {
            path: request.path,
            api: api.name.clone(),
            argument: arg.name.clone(),
            outcome: outcome.clone(),
            anomalies,
        }));
        Ok(outcome)
    }

    fn decide(
        &mut self,
        api: &'a ApiSpec,
        path: &[String],
        unfilled: Vec<&'a ArgSpec>,
    ) -> Result<Vec<(String, ArgOutcome)>, Halt> {
        let pool = self.pool;
        let candidates: IndexMap<String, Vec<&'a ApiSpec>> = unfilled
            .iter()
            .map(|a| (a.name.clone(), pool.filter_by_type(a.value_type)))
            .collect();
        match self.config.mode {
            StrategyMode::AllAtOnce => {
                if unfilled.is_empty() {
                    return Ok(Vec::new());
                }
                self.complete(api, path, unfilled, &candidates)
            }
            StrategyMode::OneByOne => {
                let mut out = Vec::with_capacity(unfilled.len());
                for arg in unfilled {
                    out.extend(self.complete(api, path, vec![arg], &candidates)?);
                }
                Ok(out)
            }
            StrategyMode::ThreeStep => {
                let mut out = Vec::with_capacity(unfilled.len());
                for arg in unfilled {
                    let outcome = match self.extract(api, path, arg)? {
                        ArgOutcome::NoneKnown => {
                            let options = candidates[&arg.name].clone();
                            if options.is_empty() {
                                ArgOutcome::NoneKnown
                            } else {
                                let mut slot = path.to_vec();
                                slot.push(arg.name.clone());
                                let task = if arg.description.trim().is_empty() {
                                    arg.name.clone()
                                } else {
                                    arg.description.clone()
                                };
                                match self.select(Scenario::ArgumentFill, task, options, slot)? {
                                    Some(name) => ArgOutcome::UseApi(name),
                                    None => ArgOutcome::NoneKnown,
                                }
                            }
                        }
                        other => other,
                    };
                    out.push((arg.name.clone(), outcome));
                }
                Ok(out)
            }
        }
    }

    fn complete_node(
        &mut self,
        node: &mut PlanNode,
        path: &mut Vec<String>,
        api_path: &mut Vec<String>,
        depth: usize,
    ) -> Result<(), Halt> {
        let pool = self.pool;
        let spec = pool
            .lookup(&node.api_name)
            .expect("selected APIs are validated against the pool");
        for arg in &spec.arguments {
            node.bindings.entry(arg.name.clone()).or_insert(Binding::Unfilled);
        }
        let unfilled: Vec<&ArgSpec> = spec
            .arguments
            .iter()
            .filter(|a| matches!(node.bindings[&a.name], Binding::Unfilled))
            .collect();

        for (arg_name, outcome) in self.decide(spec, path, unfilled)? {
            let arg = spec
                .argument(&arg_name)
                .expect("outcomes only name declared arguments");
            let binding = match outcome {
                ArgOutcome::Value(text) => Binding::Literal {
                    text,
                    value_type: arg.value_type,
                },
                ArgOutcome::NoneKnown => Binding::AskUser {
                    question: question_for(spec, arg),
                },
                ArgOutcome::UseApi(name) => {
                    let mut slot = path.clone();
                    slot.push(arg_name.clone());
                    if api_path.contains(&name) {
                        let detail = format!(
                            "cycle: `{name}` is already on the path {} (depth {})",
                            api_path.join(" -> "),
                            depth + 1
                        );
                        return Err(self.guard(GuardKind::Cycle, &slot, detail));
                    }
                    if depth + 1 > self.config.max_depth {
                        let detail =
                            format!("depth {} exceeds max_depth {}", depth + 1, self.config.max_depth);
                        return Err(self.guard(GuardKind::Depth, &slot, detail));
                    }
                    Binding::SubCall(Box::new(PlanNode::new(name)))
                }
            };
            node.bindings.insert(arg_name, binding);
        }

        for arg in &spec.arguments {
            if let Some(Binding::SubCall(child)) = node.bindings.get_mut(&arg.name) {
                path.push(arg.name.clone());
                api_path.push(child.api_name.clone());
                let result = self.complete_node(child, path, api_path, depth + 1);
                path.pop();
                api_path.pop();
                result?;
            }
        }
        Ok(())
    }
}

fn question_for(api: &ApiSpec, arg: &ArgSpec) -> String {
    if arg.description.trim().is_empty() {
        format!("What is the {} for {}?", arg.name, api.name)
    } else {
        format!(
            "What is the {} for {}? ({})",
            arg.name,
            api.name,
            arg.description.trim()
        )
    }
}

/// Substitutes user answers for pending questions.
///
/// Returns the updated outcome and the answered questions that matched
/// nothing. With `strict`, unmatched answers are an error instead.
pub fn fill_ask_user(
    outcome: &PlanningOutcome,
    answers: &BTreeMap<String, String>,
    strict: bool,
) -> Result<(PlanningOutcome, Vec<String>), EngineError> {
    if outcome.status != PlanStatus::NeedsUserInput {
        return Err(EngineError::NotAwaitingInput);
    }
    let pending: HashSet<String> = outcome.pending_questions().into_iter().collect();
    let unknown: Vec<String> = answers
        .keys()
        .filter(|q| !pending.contains(*q))
        .cloned()
        .collect();
    if strict && !unknown.is_empty() {
        return Err(EngineError::UnknownQuestions(unknown));
    }
    let mut plan = outcome.plan.clone().expect("NeedsUserInput carries a plan");
    substitute(&mut plan, answers);
    let status = if plan.has_ask_user() {
        PlanStatus::NeedsUserInput
    } else {
        PlanStatus::Complete
    };
    Ok((
        PlanningOutcome {
            plan: Some(plan),
            trace: outcome.trace.clone(),
            status,
        },
        unknown,
    ))
}

fn substitute(node: &mut PlanNode, answers: &BTreeMap<String, String>) {
    for binding in node.bindings.values_mut() {
        match binding {
            Binding::AskUser { question } => {
                if let Some(answer) = answers.get(question.as_str()) {
                    *binding = Binding::literal(answer.clone());
                }
            }
            Binding::SubCall(child) => substitute(child, answers),
            _ => {}
        }
    }
}
