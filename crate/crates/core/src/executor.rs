//! Forward execution of a bound plan against mock API behaviours.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::plan::{execution_order, normalize_literal, PlanNode, ScheduleError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub args: BTreeMap<String, String>,
    pub output: String,
}

/// How a mock API turns arguments into an output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Behavior {
    /// Output of the first row whose arguments match exactly.
    Table { rows: Vec<TableRow> },
    /// `<output>:<8 hex digits>`, a hash of the API name and its normalized
    /// arguments. `output` defaults to the API name.
    Digest {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        output: Option<String>,
    },
}

impl Behavior {
    pub fn digest(output: impl Into<String>) -> Self {
        Behavior::Digest {
            output: Some(output.into()),
        }
    }

    fn apply(&self, api: &str, args: &BTreeMap<String, String>) -> Option<String> {
        match self {
            Behavior::Table { rows } => rows.iter().find(|r| r.args == *args).map(|r| r.output.clone()),
            Behavior::Digest { output } => {
                let mut hasher = Sha256::new();
                hasher.update(api.as_bytes());
                for (k, v) in args {
                    hasher.update([0u8]);
                    hasher.update(k.as_bytes());
                    hasher.update(b"=");
                    hasher.update(normalize_literal(v).as_bytes());
                }
                let hash = hasher.finalize();
                let hex: String = hash[..4].iter().map(|b| format!("{b:02x}")).collect();
                Some(format!("{}:{hex}", output.as_deref().unwrap_or(api)))
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockEnv {
    pub behaviors: BTreeMap<String, Behavior>,
}

impl MockEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a behaviour, returning the previous one.
    pub fn register_behavior(&mut self, api: impl Into<String>, behavior: Behavior) -> Option<Behavior> {
        self.behaviors.insert(api.into(), behavior)
    }

    pub fn merge(&mut self, other: MockEnv) {
        self.behaviors.extend(other.behaviors);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("mock env serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub order_index: usize,
    pub api_name: String,
    pub args: BTreeMap<String, String>,
    pub output: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecResult {
    pub output: String,
    pub calls: Vec<CallRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExecErrorKind {
    Unbound(ScheduleError),
    NoBehavior {
        api: String,
    },
    NoMatchingRow {
        api: String,
        args: BTreeMap<String, String>,
    },
}

/// Execution failure with the calls that succeeded before it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecError {
    pub kind: ExecErrorKind,
    pub calls: Vec<CallRecord>,
}

impl fmt::Display for ExecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExecErrorKind::Unbound(e) => write!(f, "plan cannot run: {e}"),
            ExecErrorKind::NoBehavior { api } => write!(f, "no behaviour registered for `{api}`"),
            ExecErrorKind::NoMatchingRow { api, args } => {
                write!(f, "no table row of `{api}` matches {args:?}")
            }
        }?;
        write!(f, " (after {} successful calls)", self.calls.len())
    }
}

impl std::error::Error for ExecError {}

/// Runs `plan` bottom-up, feeding each call's output into its parent.
pub fn execute(plan: &PlanNode, env: &MockEnv) -> Result<ExecResult, ExecError> {
    let steps = execution_order(plan).map_err(|e| ExecError {
        kind: ExecErrorKind::Unbound(e),
        calls: Vec::new(),
    })?;
    let mut calls: Vec<CallRecord> = Vec::with_capacity(steps.len());
    for step in steps {
        let mut args = step.literal_args.clone();
        for (arg, idx) in &step.dependency_args {
            args.insert(arg.clone(), calls[*idx].output.clone());
        }
        let Some(behavior) = env.behaviors.get(&step.api_name) else {
            return Err(ExecError {
                kind: ExecErrorKind::NoBehavior { api: step.api_name },
                calls,
            });
        };
        let Some(output) = behavior.apply(&step.api_name, &args) else {
            return Err(ExecError {
                kind: ExecErrorKind::NoMatchingRow {
                    api: step.api_name,
                    args,
                },
                calls,
            });
        };
        calls.push(CallRecord {
            order_index: step.order_index,
            api_name: step.api_name,
            args,
            output,
        });
    }
    let output = calls.last().map(|c| c.output.clone()).unwrap_or_default();
    Ok(ExecResult { output, calls })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::plan::parse_call_expr;

    fn row(args: &[(&str, &str)], output: &str) -> TableRow {
        TableRow {
            args: args.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            output: output.into(),
        }
    }

    fn meeting_env() -> MockEnv {
        let mut env = MockEnv::new();
        env.register_behavior(
            "Name2ID",
            Behavior::Table {
                rows: vec![row(&[("person_name", "Jack")], "P-17")],
            },
        );
        env.register_behavior(
            "RecommendRoom",
            Behavior::Table {
                rows: vec![row(&[("start_time", "9:00 am"), ("end_time", "10:00 am")], "R-3")],
            },
        );
        env.register_behavior(
            "BookRoom",
            Behavior::Table {
                rows: vec![row(
                    &[
                        ("person_ID", "P-17"),
                        ("room_ID", "R-3"),
                        ("start_time", "9:00 am"),
                        ("end_time", "10:00 am"),
                    ],
                    "booked",
                )],
            },
        );
        env
    }

    #[test]
    fn meeting_room_runs_end_to_end() {
        let result = execute(&fixtures::meeting_room_gold(), &meeting_env()).unwrap();
        assert_eq!(result.output, "booked");
        let names: Vec<_> = result.calls.iter().map(|c| c.api_name.as_str()).collect();
        assert_eq!(names, ["Name2ID", "RecommendRoom", "BookRoom"]);
    }

    #[test]
    fn missing_row_keeps_partial_log() {
        let plan = parse_call_expr(
            "BookRoom(person_ID=Name2ID(person_name='Jill'), room_ID='R-3', start_time='9:00 am', end_time='10:00 am')",
        )
        .unwrap()
        .remove(0);
        let err = execute(&plan, &meeting_env()).unwrap_err();
        assert!(matches!(err.kind, ExecErrorKind::NoMatchingRow { ref api, .. } if api == "Name2ID"));
        assert!(err.calls.is_empty());

        let mut env = meeting_env();
        env.behaviors.remove("BookRoom");
        let err = execute(&fixtures::meeting_room_gold(), &env).unwrap_err();
        assert!(matches!(err.kind, ExecErrorKind::NoBehavior { .. }));
        assert_eq!(err.calls.len(), 2);
    }

    #[test]
    fn ask_user_blocks_execution() {
        let plan = parse_call_expr("Name2ID(person_name=ASK_USER)")
            .unwrap()
            .remove(0);
        let err = execute(&plan, &meeting_env()).unwrap_err();
        assert!(matches!(err.kind, ExecErrorKind::Unbound(_)));
    }

    #[test]
    fn digest_is_stable_and_order_free() {
        let mut env = MockEnv::new();
        env.register_behavior("F", Behavior::digest("out"));
        let a = execute(&parse_call_expr("F(x='1', y='2.50')").unwrap()[0], &env).unwrap();
        let b = execute(&parse_call_expr("F(y=2.5, x=1)").unwrap()[0], &env).unwrap();
        let c = execute(&parse_call_expr("F(x='1', y='3')").unwrap()[0], &env).unwrap();
        assert_eq!(a.output, b.output);
        assert_ne!(a.output, c.output);
        assert!(a.output.starts_with("out:"));
        assert_eq!(a.output.len(), "out:".len() + 8);
    }

    #[test]
    fn env_json_round_trip() {
        let mut env = meeting_env();
        env.register_behavior("GetWeather", Behavior::Digest { output: None });
        let text = env.to_json();
        assert!(text.contains(r#""kind": "table""#));
        assert_eq!(MockEnv::from_json(&text).unwrap(), env);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("env.json");
        env.save(&path).unwrap();
        assert_eq!(MockEnv::load(&path).unwrap(), env);
        let old = env.register_behavior("GetWeather", Behavior::digest("weather"));
        assert_eq!(old, Some(Behavior::Digest { output: None }));
    }
}
