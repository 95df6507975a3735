use std::fmt::Write as _;

use super::{Binding, PlanNode};
use crate::registry::ValueType;

/// Rendered in place of an argument that awaits a user answer.
pub const ASK_USER_TOKEN: &str = "ASK_USER";

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("argument `{argument}` of `{api}` is unfilled")]
pub struct RenderError {
    pub api: String,
    pub argument: String,
}

/// Canonical text for a list of top-level calls, one per line.
///
/// Literals are single-quoted except numeric literals typed as integer or
/// float, which print bare so that they parse back to the same type.
pub fn render_call_expr(nodes: &[PlanNode]) -> Result<String, RenderError> {
    let mut out = String::new();
    for (i, node) in nodes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        write_node(node, &mut out, false)?;
    }
    Ok(out)
}

pub fn render_node(node: &PlanNode) -> Result<String, RenderError> {
    let mut out = String::new();
    write_node(node, &mut out, false)?;
    Ok(out)
}

pub(super) fn write_node(node: &PlanNode, out: &mut String, lossy: bool) -> Result<(), RenderError> {
    out.push_str(&node.api_name);
    out.push('(');
    for (i, (arg, binding)) in node.bindings.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(arg);
        out.push('=');
        match binding {
            Binding::Literal { text, value_type } => write_literal(text, *value_type, out),
            Binding::SubCall(child) => write_node(child, out, lossy)?,
            Binding::AskUser { .. } => out.push_str(ASK_USER_TOKEN),
            Binding::Unfilled if lossy => out.push('?'),
            Binding::Unfilled => {
                return Err(RenderError {
                    api: node.api_name.clone(),
                    argument: arg.clone(),
                })
            }
        }
    }
    out.push(')');
    Ok(())
}

fn is_bare_number(text: &str) -> bool {
    let digits = text.strip_prefix('-').unwrap_or(text);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
}

fn write_literal(text: &str, value_type: ValueType, out: &mut String) {
    let numeric_type = match value_type {
        ValueType::Integer => !text.contains('.'),
        ValueType::Float => text.contains('.'),
        _ => false,
    };
    if numeric_type && is_bare_number(text) {
        out.push_str(text);
        return;
    }
    out.push('\'');
    for c in text.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => {
                let _ = write!(out, "{c}");
            }
        }
    }
    out.push('\'');
}
