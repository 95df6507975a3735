//! Loader and writer for the `{APIs, Query, Label}` dataset format.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use super::{ApiPool, ApiSpec, ArgSpec, Fact, Level, OutputSpec, TaskInstance, ValueType};
use crate::plan::{parse_call_expr, render_call_expr, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed dataset JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("dataset root must be a JSON array")]
    NotAnArray,
    #[error("sample {id}: {source}")]
    Sample {
        id: String,
        #[source]
        source: SampleError,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum SampleError {
    #[error("unparseable label: {0}")]
    Label(#[from] ParseError),
    #[error("label references API `{0}` which is not in the pool")]
    DanglingApi(String),
    #[error("API `{0}` declares more than one output")]
    MultiOutput(String),
    #[error("bad sample shape: {0}")]
    Shape(String),
}

/// A sample dropped in lenient mode.
#[derive(Debug)]
pub struct SkippedSample {
    pub id: String,
    pub error: SampleError,
}

#[derive(Debug, Default)]
pub struct LoadedDataset {
    pub instances: Vec<TaskInstance>,
    pub skipped: Vec<SkippedSample>,
}

pub fn load_dataset(path: &Path, strict: bool) -> Result<LoadedDataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, strict)
}

/// Parses dataset text. In strict mode the first bad sample aborts the load;
/// otherwise bad samples are collected in [`LoadedDataset::skipped`].
pub fn parse_dataset(text: &str, strict: bool) -> Result<LoadedDataset, DatasetError> {
    let root: Value = serde_json::from_str(text)?;
    let Value::Array(samples) = root else {
        return Err(DatasetError::NotAnArray);
    };
    let mut out = LoadedDataset::default();
    for (index, sample) in samples.iter().enumerate() {
        let id = sample_id(sample, index);
        match normalize_sample(&id, sample) {
            Ok(instance) => out.instances.push(instance),
            Err(error) if strict => return Err(DatasetError::Sample { id, source: error }),
            Err(error) => {
                tracing::warn!(sample = %id, %error, "skipping sample");
                out.skipped.push(SkippedSample { id, error });
            }
        }
    }
    Ok(out)
}

fn sample_id(sample: &Value, index: usize) -> String {
    match sample.get("id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => format!("sample-{index}"),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, names: &[&str]) -> Option<&'a Value> {
    names.iter().find_map(|n| obj.get(*n))
}

fn text_of(v: Option<&Value>) -> String {
    match v {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) | None => String::new(),
        Some(other) => other.to_string(),
    }
}

fn normalize_sample(id: &str, sample: &Value) -> Result<TaskInstance, SampleError> {
    let obj = sample
        .as_object()
        .ok_or_else(|| SampleError::Shape("sample is not an object".into()))?;
    let apis = match field(obj, &["APIs", "apis", "Apis"]) {
        Some(Value::Array(a)) => a,
        Some(_) => return Err(SampleError::Shape("`APIs` must be an array".into())),
        None => return Err(SampleError::Shape("missing `APIs`".into())),
    };
    let pool = ApiPool::new(apis.iter().map(normalize_api).collect::<Result<Vec<_>, _>>()?);
    let query = match field(obj, &["Query", "query"]) {
        Some(Value::String(s)) => s.clone(),
        _ => return Err(SampleError::Shape("missing `Query`".into())),
    };
    let label = match field(obj, &["Label", "label"]) {
        Some(Value::String(s)) => s.clone(),
        _ => return Err(SampleError::Shape("missing `Label`".into())),
    };
    let context = normalize_context(field(obj, &["Context", "context"]))?;
    let gold = parse_call_expr(&label)?;
    let instance = TaskInstance::new(id, pool, query, context, gold);
    if let Some(name) = instance.dangling_references().into_iter().next() {
        return Err(SampleError::DanglingApi(name));
    }
    Ok(instance)
}

fn normalize_api(v: &Value) -> Result<ApiSpec, SampleError> {
    let obj = v
        .as_object()
        .ok_or_else(|| SampleError::Shape("API entry is not an object".into()))?;
    let name = match obj.get("name") {
        Some(Value::String(s)) => s.trim().to_string(),
        _ => return Err(SampleError::Shape("API entry without `name`".into())),
    };
    let arguments = normalize_arguments(obj.get("arguments"))?;
    let output = normalize_output(&name, obj.get("output"))?;
    let format = match obj.get("format") {
        Some(Value::String(s)) if !s.is_empty() => Some(s.clone()),
        _ => None,
    };
    Ok(ApiSpec {
        name,
        description: text_of(obj.get("description")),
        arguments,
        output,
        format,
    })
}

fn type_field(obj: &Map<String, Value>) -> ValueType {
    match field(obj, &["type", "value_type"]) {
        Some(Value::String(s)) => ValueType::parse(s),
        _ => ValueType::Unknown,
    }
}

// Accepts a list of `{name, description, type}` objects (or bare names), or a
// mapping from name to a description string or `{description, type}` object.
fn normalize_arguments(v: Option<&Value>) -> Result<Vec<ArgSpec>, SampleError> {
    match v {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|item| match item {
                Value::String(name) => Ok(ArgSpec {
                    name: name.clone(),
                    description: String::new(),
                    value_type: ValueType::Unknown,
                }),
                Value::Object(o) => Ok(ArgSpec {
                    name: text_of(o.get("name")),
                    description: text_of(o.get("description")),
                    value_type: type_field(o),
                }),
                _ => Err(SampleError::Shape("argument entry must be an object".into())),
            })
            .collect(),
        Some(Value::Object(map)) => Ok(map
            .iter()
            .map(|(name, desc)| match desc {
                Value::Object(o) => ArgSpec {
                    name: name.clone(),
                    description: text_of(o.get("description")),
                    value_type: type_field(o),
                },
                other => ArgSpec {
                    name: name.clone(),
                    description: text_of(Some(other)),
                    value_type: ValueType::Unknown,
                },
            })
            .collect()),
        Some(_) => Err(SampleError::Shape("`arguments` must be a list or mapping".into())),
    }
}

fn normalize_output(api: &str, v: Option<&Value>) -> Result<OutputSpec, SampleError> {
    let default = || OutputSpec {
        name: "output".into(),
        description: String::new(),
        value_type: ValueType::Unknown,
    };
    match v {
        None | Some(Value::Null) => Ok(default()),
        Some(Value::String(s)) => Ok(OutputSpec {
            description: s.clone(),
            ..default()
        }),
        Some(Value::Object(o)) => {
            // a mapping of several named outputs is a multi-output API
            if !o.contains_key("name") && !o.contains_key("description") && !o.contains_key("type") {
                return match o.len() {
                    0 => Ok(default()),
                    1 => {
                        let (name, desc) = o.iter().next().expect("len 1");
                        Ok(OutputSpec {
                            name: name.clone(),
                            description: text_of(Some(desc)),
                            value_type: desc.as_object().map(type_field).unwrap_or(ValueType::Unknown),
                        })
                    }
                    _ => Err(SampleError::MultiOutput(api.to_string())),
                };
            }
            let name = text_of(o.get("name"));
            Ok(OutputSpec {
                name: if name.is_empty() { "output".into() } else { name },
                description: text_of(o.get("description")),
                value_type: type_field(o),
            })
        }
        Some(Value::Array(items)) => match items.as_slice() {
            [] => Ok(default()),
            [single] => normalize_output(api, Some(single)),
            _ => Err(SampleError::MultiOutput(api.to_string())),
        },
        Some(other) => Ok(OutputSpec {
            description: other.to_string(),
            ..default()
        }),
    }
}

fn normalize_context(v: Option<&Value>) -> Result<Vec<Fact>, SampleError> {
    match v {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Object(map)) => Ok(map
            .iter()
            .map(|(k, v)| Fact::new(k.clone(), text_of(Some(v))))
            .collect()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|item| {
                let o = item
                    .as_object()
                    .ok_or_else(|| SampleError::Shape("context entry must be an object".into()))?;
                Ok(Fact::new(text_of(o.get("key")), text_of(o.get("value"))))
            })
            .collect(),
        Some(Value::String(s)) if s.is_empty() => Ok(Vec::new()),
        Some(_) => Err(SampleError::Shape("`Context` must be a list or mapping".into())),
    }
}

#[derive(Serialize)]
struct SampleOut<'a> {
    id: &'a str,
    #[serde(rename = "APIs")]
    apis: &'a [ApiSpec],
    #[serde(rename = "Query")]
    query: &'a str,
    #[serde(rename = "Context", skip_serializing_if = "<[Fact]>::is_empty")]
    context: &'a [Fact],
    #[serde(rename = "Label")]
    label: String,
    level: Level,
}

/// Reads an API pool: either a bare array of API entries or an object with
/// an `APIs` array, entries in the dataset schema.
pub fn parse_pool(text: &str) -> Result<ApiPool, DatasetError> {
    let root: Value = serde_json::from_str(text)?;
    let apis = match &root {
        Value::Array(a) => a,
        Value::Object(obj) => match field(obj, &["APIs", "apis", "Apis"]) {
            Some(Value::Array(a)) => a,
            _ => return Err(DatasetError::NotAnArray),
        },
        _ => return Err(DatasetError::NotAnArray),
    };
    let specs = apis
        .iter()
        .enumerate()
        .map(|(i, v)| {
            normalize_api(v).map_err(|source| DatasetError::Sample {
                id: format!("API {i}"),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ApiPool::new(specs))
}

pub fn load_pool(path: &Path) -> Result<ApiPool, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_pool(&text)
}

/// Pretty-printed dataset JSON in the same schema [`parse_dataset`] reads.
///
/// Gold plans must be fully bound; instances carrying `Unfilled` bindings in
/// their labels cannot be written.
pub fn serialize_dataset(instances: &[TaskInstance]) -> Result<String, crate::plan::RenderError> {
    let rows = instances
        .iter()
        .map(|inst| {
            Ok(SampleOut {
                id: &inst.id,
                apis: &inst.pool.apis,
                query: &inst.query,
                context: &inst.context,
                label: render_call_expr(&inst.gold_plans)?,
                level: inst.level,
            })
        })
        .collect::<Result<Vec<_>, crate::plan::RenderError>>()?;
    let mut text = serde_json::to_string_pretty(&rows).expect("dataset rows serialize");
    text.push('\n');
    Ok(text)
}
