//! API specifications and the pools they live in.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::plan::{nesting_depth, PlanNode};

mod dataset;

pub use dataset::{
    load_dataset, load_pool, parse_dataset, parse_pool, serialize_dataset, DatasetError, LoadedDataset,
    SampleError, SkippedSample,
};

/// Coarse value types used to narrow API candidates for an argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueType {
    String,
    Integer,
    Float,
    Boolean,
    Date,
    Time,
    DateTime,
    Identifier,
    Unknown,
}

impl ValueType {
    pub const ALL: [ValueType; 9] = [
        ValueType::String,
        ValueType::Integer,
        ValueType::Float,
        ValueType::Boolean,
        ValueType::Date,
        ValueType::Time,
        ValueType::DateTime,
        ValueType::Identifier,
        ValueType::Unknown,
    ];

    /// Case-insensitive parse. Unrecognized strings map to `Unknown`.
    pub fn parse(s: &str) -> ValueType {
        match s.trim().to_ascii_lowercase().as_str() {
            "string" | "str" | "text" => ValueType::String,
            "integer" | "int" | "long" => ValueType::Integer,
            "float" | "double" | "number" | "decimal" => ValueType::Float,
            "boolean" | "bool" => ValueType::Boolean,
            "date" => ValueType::Date,
            "time" => ValueType::Time,
            "datetime" | "date_time" | "date-time" | "timestamp" => ValueType::DateTime,
            "identifier" | "id" => ValueType::Identifier,
            _ => ValueType::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ValueType::String => "string",
            ValueType::Integer => "integer",
            ValueType::Float => "float",
            ValueType::Boolean => "boolean",
            ValueType::Date => "date",
            ValueType::Time => "time",
            ValueType::DateTime => "datetime",
            ValueType::Identifier => "identifier",
            ValueType::Unknown => "unknown",
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ValueType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ValueType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(ValueType::parse(&s))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(rename = "type", default = "unknown_type")]
    pub value_type: ValueType,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(rename = "type", default = "unknown_type")]
    pub value_type: ValueType,
}

fn unknown_type() -> ValueType {
    ValueType::Unknown
}

/// One API in a pool: ordered required arguments and a single typed output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub arguments: Vec<ArgSpec>,
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

impl ApiSpec {
    /// Starts a spec with no arguments and an untyped output named `output`.
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        ApiSpec {
            name: name.into(),
            description: description.into(),
            arguments: Vec::new(),
            output: OutputSpec {
                name: "output".to_string(),
                description: String::new(),
                value_type: ValueType::Unknown,
            },
            format: None,
        }
    }

    pub fn arg(
        mut self,
        name: impl Into<String>,
        description: impl Into<String>,
        value_type: ValueType,
    ) -> Self {
        self.arguments.push(ArgSpec {
            name: name.into(),
            description: description.into(),
            value_type,
        });
        self
    }

    pub fn output(
        mut self,
        name: impl Into<String>,
        description: impl Into<String>,
        value_type: ValueType,
    ) -> Self {
        self.output = OutputSpec {
            name: name.into(),
            description: description.into(),
            value_type,
        };
        self
    }

    pub fn argument(&self, name: &str) -> Option<&ArgSpec> {
        self.arguments.iter().find(|a| a.name == name)
    }

    /// `Name(arg1, arg2)` style signature, used when `format` is absent.
    pub fn signature(&self) -> String {
        match &self.format {
            Some(f) if !f.trim().is_empty() => f.clone(),
            _ => {
                let args: Vec<&str> = self.arguments.iter().map(|a| a.name.as_str()).collect();
                format!("{}({})", self.name, args.join(", "))
            }
        }
    }
}

/// A named user-supplied fact available to argument completion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub key: String,
    pub value: String,
}

impl Fact {
    pub fn new(key: impl Into<String>, value: impl Into<String>) -> Self {
        Fact {
            key: key.into(),
            value: value.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ApiPool {
    pub apis: Vec<ApiSpec>,
}

impl ApiPool {
    pub fn new(apis: Vec<ApiSpec>) -> Self {
        ApiPool { apis }
    }

    pub fn len(&self) -> usize {
        self.apis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.apis.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ApiSpec> {
        self.apis.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.apis.iter().map(|a| a.name.as_str())
    }

    /// Exact, case-sensitive lookup by name.
    pub fn lookup(&self, name: &str) -> Option<&ApiSpec> {
        self.apis.iter().find(|a| a.name == name)
    }

    /// APIs whose output type is `wanted`, in pool order. `Unknown` cannot
    /// narrow anything and returns the whole pool.
    pub fn filter_by_type(&self, wanted: ValueType) -> Vec<&ApiSpec> {
        if wanted == ValueType::Unknown {
            return self.apis.iter().collect();
        }
        self.apis
            .iter()
            .filter(|a| a.output.value_type == wanted)
            .collect()
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_pool(self)
    }
}

impl<'a> IntoIterator for &'a ApiPool {
    type Item = &'a ApiSpec;
    type IntoIter = std::slice::Iter<'a, ApiSpec>;

    fn into_iter(self) -> Self::IntoIter {
        self.apis.iter()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    DuplicateApiName,
    InvalidApiName,
    EmptyArgumentName,
    DuplicateArgumentName,
}

/// A single invariant breach found by [`validate_pool`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub api: String,
    pub field: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::DuplicateApiName => "duplicate API name",
            ViolationKind::InvalidApiName => "API name is not an identifier",
            ViolationKind::EmptyArgumentName => "empty argument name",
            ViolationKind::DuplicateArgumentName => "duplicate argument name",
        };
        write!(f, "{}: {} ({})", self.api, what, self.field)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Checks every pool invariant. Violations are returned as data; an empty
/// list means the pool is well formed.
pub fn validate_pool(pool: &ApiPool) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for api in &pool.apis {
        if !is_identifier(&api.name) {
            out.push(Violation {
                api: api.name.clone(),
                field: "name".into(),
                kind: ViolationKind::InvalidApiName,
            });
        }
        if !seen.insert(api.name.as_str()) {
            out.push(Violation {
                api: api.name.clone(),
                field: "name".into(),
                kind: ViolationKind::DuplicateApiName,
            });
        }
        let mut args = HashSet::new();
        for (i, arg) in api.arguments.iter().enumerate() {
            if arg.name.is_empty() {
                out.push(Violation {
                    api: api.name.clone(),
                    field: format!("arguments[{i}].name"),
                    kind: ViolationKind::EmptyArgumentName,
                });
            } else if !args.insert(arg.name.as_str()) {
                out.push(Violation {
                    api: api.name.clone(),
                    field: format!("arguments[{i}].name={}", arg.name),
                    kind: ViolationKind::DuplicateArgumentName,
                });
            }
        }
    }
    out
}

/// Difficulty tier derived from gold-plan nesting depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    L1,
    L2,
    L3,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::L1, Level::L2, Level::L3];

    /// Depth 1 and 2 map to L1, depth 3 to L2, anything deeper to L3.
    pub fn from_depth(depth: usize) -> Level {
        match depth {
            0..=2 => Level::L1,
            3 => Level::L2,
            _ => Level::L3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::L1 => "L1",
            Level::L2 => "L2",
            Level::L3 => "L3",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One dataset sample.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskInstance {
    pub id: String,
    pub pool: ApiPool,
    pub query: String,
    pub context: Vec<Fact>,
    pub gold_plans: Vec<PlanNode>,
    pub level: Level,
}

impl TaskInstance {
    /// Builds an instance, deriving the level from the deepest gold plan.
    pub fn new(
        id: impl Into<String>,
        pool: ApiPool,
        query: impl Into<String>,
        context: Vec<Fact>,
        gold_plans: Vec<PlanNode>,
    ) -> Self {
        let level = Level::from_depth(max_depth(&gold_plans));
        TaskInstance {
            id: id.into(),
            pool,
            query: query.into(),
            context,
            gold_plans,
            level,
        }
    }

    pub fn depth(&self) -> usize {
        max_depth(&self.gold_plans)
    }

    /// Names referenced by the gold plans that are missing from the pool.
    pub fn dangling_references(&self) -> Vec<String> {
        let mut missing = Vec::new();
        for plan in &self.gold_plans {
            plan.visit(&mut |node| {
                if self.pool.lookup(&node.api_name).is_none() && !missing.contains(&node.api_name) {
                    missing.push(node.api_name.clone());
                }
            });
        }
        missing
    }
}

fn max_depth(plans: &[PlanNode]) -> usize {
    plans.iter().map(nesting_depth).max().unwrap_or(0)
}
