//! Parsing of free-text model replies into resolver decisions.
//!
//! Models are asked for a single JSON object but often wrap it in prose or a
//! code fence. The first JSON object in the reply is used; anything around it
//! is ignored.

use indexmap::IndexMap;
use serde_json::{Map, Value};

use super::ArgOutcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplyScenario {
    Selection,
    Completion,
    Extraction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelDecision {
    Selection(Option<String>),
    Completion(IndexMap<String, ArgOutcome>),
    Extraction(ArgOutcome),
}

/// A decision plus the reply text it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedReply {
    pub decision: ModelDecision,
    pub raw: String,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReplyError {
    #[error("reply contains no JSON object")]
    NoJson,
    #[error("reply JSON has the wrong shape: {0}")]
    Shape(String),
}

/// Returns the first substring of `text` that is a complete JSON object.
pub fn extract_json_object(text: &str) -> Option<&str> {
    let bytes = text.as_bytes();
    let mut start = 0;
    while let Some(offset) = text[start..].find('{') {
        let open = start + offset;
        if let Some(close) = balanced_end(bytes, open) {
            let candidate = &text[open..=close];
            if serde_json::from_str::<Map<String, Value>>(candidate).is_ok() {
                return Some(candidate);
            }
        }
        start = open + 1;
    }
    None
}

fn balanced_end(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn first_object(text: &str) -> Result<Map<String, Value>, ReplyError> {
    let json = extract_json_object(text).ok_or(ReplyError::NoJson)?;
    Ok(serde_json::from_str(json).expect("extract_json_object only returns objects"))
}

fn scalar_text(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn outcome_from(value: &Value) -> Result<ArgOutcome, ReplyError> {
    let outcome = match value {
        Value::Null => ArgOutcome::NoneKnown,
        Value::Object(obj) => {
            let kind = obj
                .get("kind")
                .and_then(Value::as_str)
                .map(str::to_ascii_lowercase);
            let field = |k: &str| obj.get(k).and_then(scalar_text);
            match kind.as_deref() {
                Some("value") => ArgOutcome::Value(
                    field("value")
                        .ok_or_else(|| ReplyError::Shape("value outcome without `value`".into()))?,
                ),
                Some("api") => ArgOutcome::UseApi(
                    field("api").ok_or_else(|| ReplyError::Shape("api outcome without `api`".into()))?,
                ),
                Some("none") => ArgOutcome::NoneKnown,
                Some(other) => return Err(ReplyError::Shape(format!("unknown outcome kind `{other}`"))),
                None => match (field("value"), field("api")) {
                    (Some(v), None) => ArgOutcome::Value(v),
                    (None, Some(a)) => ArgOutcome::UseApi(a),
                    _ => return Err(ReplyError::Shape("outcome object without `kind`".into())),
                },
            }
        }
        Value::Array(_) => return Err(ReplyError::Shape("outcome is an array".into())),
        scalar => ArgOutcome::Value(scalar_text(scalar).expect("scalars have text")),
    };
    Ok(match outcome {
        ArgOutcome::Value(v) if v.trim().is_empty() => ArgOutcome::NoneKnown,
        ArgOutcome::UseApi(a) if a.trim().is_empty() => ArgOutcome::NoneKnown,
        other => other,
    })
}

/// `{"api": "Name"}`; `null`, `""` or `"none"` mean no fitting API.
pub fn parse_selection_reply(text: &str) -> Result<Option<String>, ReplyError> {
    let obj = first_object(text)?;
    match obj.get("api") {
        Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => {
            let s = s.trim();
            if s.is_empty() || s.eq_ignore_ascii_case("none") {
                Ok(None)
            } else {
                Ok(Some(s.to_string()))
            }
        }
        Some(_) => Err(ReplyError::Shape("`api` is not a string".into())),
        None => Err(ReplyError::Shape("missing `api` key".into())),
    }
}

/// `{"<arg>": <outcome>, ...}`. Every key is returned; checking the keys
/// against the requested arguments is left to the caller.
pub fn parse_completion_reply(text: &str) -> Result<IndexMap<String, ArgOutcome>, ReplyError> {
    let mut obj = first_object(text)?;
    if obj.len() == 1 {
        if let Some(Value::Object(inner)) = obj.get("arguments") {
            obj = inner.clone();
        }
    }
    obj.iter()
        .map(|(k, v)| Ok((k.clone(), outcome_from(v)?)))
        .collect()
}

/// Either `{"<arg>": <outcome>}` or a bare outcome object.
pub fn parse_extraction_reply(text: &str, argument: &str) -> Result<ArgOutcome, ReplyError> {
    let obj = first_object(text)?;
    if let Some(v) = obj.get(argument) {
        return outcome_from(v);
    }
    if obj.contains_key("kind") || obj.contains_key("value") {
        return outcome_from(&Value::Object(obj));
    }
    Err(ReplyError::Shape(format!("missing `{argument}` key")))
}

pub fn parse_model_reply(
    text: &str,
    scenario: ReplyScenario,
    argument: Option<&str>,
) -> Result<ParsedReply, ReplyError> {
    let decision = match scenario {
        ReplyScenario::Selection => ModelDecision::Selection(parse_selection_reply(text)?),
        ReplyScenario::Completion => ModelDecision::Completion(parse_completion_reply(text)?),
        ReplyScenario::Extraction => {
            ModelDecision::Extraction(parse_extraction_reply(text, argument.unwrap_or(""))?)
        }
    };
    Ok(ParsedReply {
        decision,
        raw: text.to_string(),
    })
}
