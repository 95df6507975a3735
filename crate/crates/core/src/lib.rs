//! Backward-chaining planner for compositional multi-API tasks.
//!
//! The planner starts from the API that satisfies the user's goal and
//! recursively completes its required arguments: each argument is either
//! extracted from the query, produced by another API (whose own arguments are
//! then completed), or requested from the user. The LLM-facing decisions are
//! delegated to a [`resolvers::Resolver`], so the same engine runs against a
//! live chat-completion endpoint, a gold-plan oracle or a scripted replay.
//!
//! Module map:
//!
//! - [`registry`]: API specifications, pools, dataset loading and type filtering.
//! - [`plan`]: the nested call-plan algebra (parser, printer, equivalence, schedule).
//! - [`engine`]: the backward-chaining planning loop and its trace.
//! - [`resolvers`]: the decision interface plus oracle, scripted and prompt-backed implementations.
//! - [`executor`]: forward execution of completed plans against a mock environment.
//! - [`evalgen`]: judging, report aggregation, task generation and baseline prompts.

pub mod engine;
pub mod evalgen;
pub mod executor;
pub mod fixtures;
pub mod plan;
pub mod registry;
pub mod resolvers;

pub use engine::{
    fill_ask_user, plan_query, EngineError, PlanStatus, PlanningOutcome, PlanningTrace, StrategyConfig,
    StrategyMode, TraceEvent,
};
pub use evalgen::{EvalReport, GenConfig, Verdict};
pub use executor::{execute, Behavior, ExecResult, MockEnv};
pub use plan::{
    canonicalize, equivalent, execution_order, nesting_depth, parse_call_expr, render_call_expr, Binding,
    ExecutionStep, PlanNode,
};
pub use registry::{ApiPool, ApiSpec, ArgSpec, Fact, Level, OutputSpec, TaskInstance, ValueType};
pub use resolvers::{ArgOutcome, OracleResolver, Resolver, ScriptedResolver};
