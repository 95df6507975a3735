//! Nested call plans and the text grammar they travel in.
//!
//! A plan is a tree of API calls: every argument of a call is bound to a
//! literal, to the output of a child call, to a pending user question, or is
//! still unfilled. The text form is the familiar nested-call syntax
//! `BookFlight(flight_ID=FindFlight(destination='Paris'))`.

use std::fmt;

use indexmap::IndexMap;

use crate::registry::ValueType;

mod canonical;
mod parser;
mod render;
mod schedule;

pub use canonical::{canonicalize, equivalent, normalize_literal, normalize_number};
pub use parser::{parse_call_expr, parse_single_call, ParseError, ParseErrorKind};
pub use render::{render_call_expr, render_node, RenderError, ASK_USER_TOKEN};
pub use schedule::{execution_order, ExecutionStep, ScheduleError};

/// How one argument of a call is bound.
#[derive(Clone, Debug, PartialEq)]
pub enum Binding {
    /// Value taken directly from the query or context.
    Literal {
        text: String,
        value_type: ValueType,
    },
    /// Value produced by another API call.
    SubCall(Box<PlanNode>),
    /// Value must be requested from the user.
    AskUser {
        question: String,
    },
    Unfilled,
}

impl Binding {
    pub fn literal(text: impl Into<String>) -> Self {
        Binding::Literal {
            text: text.into(),
            value_type: ValueType::String,
        }
    }

    pub fn typed_literal(text: impl Into<String>, value_type: ValueType) -> Self {
        Binding::Literal {
            text: text.into(),
            value_type,
        }
    }

    pub fn call(node: PlanNode) -> Self {
        Binding::SubCall(Box::new(node))
    }

    pub fn is_resolved(&self) -> bool {
        matches!(self, Binding::Literal { .. } | Binding::SubCall(_))
    }
}

/// A single API call with its argument bindings in declaration order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PlanNode {
    pub api_name: String,
    pub bindings: IndexMap<String, Binding>,
}

impl PlanNode {
    pub fn new(api_name: impl Into<String>) -> Self {
        PlanNode {
            api_name: api_name.into(),
            bindings: IndexMap::new(),
        }
    }

    /// Builder-style binding insert; a repeated name replaces the earlier value.
    pub fn with(mut self, arg: impl Into<String>, binding: Binding) -> Self {
        self.bindings.insert(arg.into(), binding);
        self
    }

    pub fn with_literal(self, arg: impl Into<String>, text: impl Into<String>) -> Self {
        self.with(arg, Binding::literal(text))
    }

    pub fn with_call(self, arg: impl Into<String>, child: PlanNode) -> Self {
        self.with(arg, Binding::call(child))
    }

    /// Pre-order visit of every call in the tree.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a PlanNode)) {
        f(self);
        for binding in self.bindings.values() {
            if let Binding::SubCall(child) = binding {
                child.visit(f);
            }
        }
    }

    pub fn call_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Node reached by following argument names from this node.
    pub fn at_path(&self, path: &[String]) -> Option<&PlanNode> {
        let mut node = self;
        for arg in path {
            match node.bindings.get(arg) {
                Some(Binding::SubCall(child)) => node = child,
                _ => return None,
            }
        }
        Some(node)
    }

    pub fn at_path_mut(&mut self, path: &[String]) -> Option<&mut PlanNode> {
        let mut node = self;
        for arg in path {
            match node.bindings.get_mut(arg) {
                Some(Binding::SubCall(child)) => node = child,
                _ => return None,
            }
        }
        Some(node)
    }

    /// Every binding in the tree with the path of the call that owns it.
    pub fn bindings_with_paths(&self) -> Vec<(Vec<String>, &str, &Binding)> {
        let mut out = Vec::new();
        collect_bindings(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn count_where(&self, pred: impl Fn(&Binding) -> bool + Copy) -> usize {
        let mut n = 0;
        self.visit(&mut |node| n += node.bindings.values().filter(|b| pred(b)).count());
        n
    }

    pub fn has_unfilled(&self) -> bool {
        self.count_where(|b| matches!(b, Binding::Unfilled)) > 0
    }

    pub fn has_ask_user(&self) -> bool {
        self.count_where(|b| matches!(b, Binding::AskUser { .. })) > 0
    }
}

fn collect_bindings<'a>(
    node: &'a PlanNode,
    path: &mut Vec<String>,
    out: &mut Vec<(Vec<String>, &'a str, &'a Binding)>,
) {
    for (arg, binding) in &node.bindings {
        out.push((path.clone(), arg.as_str(), binding));
        if let Binding::SubCall(child) = binding {
            path.push(arg.clone());
            collect_bindings(child, path, out);
            path.pop();
        }
    }
}

/// 1 for a call with no sub-calls, otherwise 1 + the deepest child.
pub fn nesting_depth(node: &PlanNode) -> usize {
    1 + node
        .bindings
        .values()
        .filter_map(|b| match b {
            Binding::SubCall(child) => Some(nesting_depth(child)),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

impl fmt::Display for PlanNode {
    /// Canonical text, with unfilled slots shown as `?`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        render::write_node(self, &mut out, true).map_err(|_| fmt::Error)?;
        f.write_str(&out)
    }
}
