use std::fmt;

use serde::{Deserialize, Serialize};

use crate::plan::{canonicalize, equivalent, normalize_literal, Binding, PlanNode};

/// A system's answer for one instance.
#[derive(Clone, Debug, PartialEq)]
pub enum Prediction {
    Plans(Vec<PlanNode>),
    /// Output that could not be read as plans, with the reason.
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    Incorrect,
    Malformed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    None,
    WrongFinalTool,
    WrongArgumentApi,
    WrongArgumentValue,
    OtherStructural,
}

impl ErrorClass {
    pub const ERRORS: [ErrorClass; 4] = [
        ErrorClass::WrongFinalTool,
        ErrorClass::WrongArgumentApi,
        ErrorClass::WrongArgumentValue,
        ErrorClass::OtherStructural,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::None => "none",
            ErrorClass::WrongFinalTool => "wrong_final_tool",
            ErrorClass::WrongArgumentApi => "wrong_argument_api",
            ErrorClass::WrongArgumentValue => "wrong_argument_value",
            ErrorClass::OtherStructural => "other_structural",
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: String,
    pub outcome: Outcome,
    pub error_class: ErrorClass,
    pub detail: String,
}

impl Verdict {
    pub fn is_correct(&self) -> bool {
        self.outcome == Outcome::Correct
    }
}

/// Grades `predicted` against `gold`.
///
/// Correct when the two plan lists can be paired one-to-one under
/// [`equivalent`]. Otherwise the first applicable class wins, in order:
/// wrong or missing top-level API, a gold sub-call replaced by a literal or
/// a question, a differing literal in an otherwise identical structure, and
/// everything else. Malformed predictions are classed as structural errors.
pub fn judge(id: &str, predicted: &Prediction, gold: &[PlanNode]) -> Verdict {
    let verdict = |outcome, error_class, detail: String| Verdict {
        id: id.to_string(),
        outcome,
        error_class,
        detail,
    };
    let plans = match predicted {
        Prediction::Malformed(reason) => {
            return verdict(
                Outcome::Malformed,
                ErrorClass::OtherStructural,
                format!("malformed prediction: {reason}"),
            )
        }
        Prediction::Plans(plans) => plans,
    };

    let matching = max_matching(gold, plans, equivalent);
    if gold.len() == plans.len() && matching.iter().all(Option::is_some) {
        return verdict(Outcome::Correct, ErrorClass::None, String::new());
    }

    let mut gold_roots: Vec<&str> = gold.iter().map(|g| g.api_name.as_str()).collect();
    let mut pred_roots: Vec<&str> = plans.iter().map(|p| p.api_name.as_str()).collect();
    gold_roots.sort_unstable();
    pred_roots.sort_unstable();
    if gold_roots != pred_roots {
        let detail = if pred_roots.is_empty() {
            format!("expected final API {}, got no plan", gold_roots.join(", "))
        } else {
            format!(
                "expected final API {}, got {}",
                gold_roots.join(", "),
                pred_roots.join(", ")
            )
        };
        return verdict(Outcome::Incorrect, ErrorClass::WrongFinalTool, detail);
    }

    // Pair the plans that are not already equivalent by root name, keeping
    // equivalent pairs out of the diagnosis.
    let gold_c: Vec<PlanNode> = gold.iter().map(canonicalize).collect();
    let pred_c: Vec<PlanNode> = plans.iter().map(canonicalize).collect();
    let mut pred_used: Vec<bool> = vec![false; pred_c.len()];
    for p in matching.iter().flatten() {
        pred_used[*p] = true;
    }
    let mut pairs = Vec::new();
    for (gi, m) in matching.iter().enumerate() {
        if m.is_some() {
            continue;
        }
        let pi = (0..pred_c.len())
            .find(|&pi| !pred_used[pi] && pred_c[pi].api_name == gold_c[gi].api_name)
            .expect("root multisets agree");
        pred_used[pi] = true;
        pairs.push((&gold_c[gi], &pred_c[pi]));
    }

    for (g, p) in &pairs {
        if let Some(detail) = bypassed_call(g, p, &mut Vec::new()) {
            return verdict(Outcome::Incorrect, ErrorClass::WrongArgumentApi, detail);
        }
    }
    let mut diffs = Vec::new();
    if pairs
        .iter()
        .all(|(g, p)| same_shape(g, p, &mut Vec::new(), &mut diffs))
    {
        return verdict(
            Outcome::Incorrect,
            ErrorClass::WrongArgumentValue,
            diffs.join("; "),
        );
    }
    let detail = pairs
        .iter()
        .map(|(g, p)| format!("expected {g}, got {p}"))
        .collect::<Vec<_>>()
        .join("; ");
    verdict(Outcome::Incorrect, ErrorClass::OtherStructural, detail)
}

/// For each gold plan, the index of its matched prediction (Kuhn's algorithm).
fn max_matching(
    gold: &[PlanNode],
    pred: &[PlanNode],
    fits: impl Fn(&PlanNode, &PlanNode) -> bool,
) -> Vec<Option<usize>> {
    let adj: Vec<Vec<usize>> = gold
        .iter()
        .map(|g| (0..pred.len()).filter(|&p| fits(g, &pred[p])).collect())
        .collect();
    let mut pred_match: Vec<Option<usize>> = vec![None; pred.len()];
    fn augment(g: usize, adj: &[Vec<usize>], seen: &mut [bool], pred_match: &mut [Option<usize>]) -> bool {
        for &p in &adj[g] {
            if seen[p] {
                continue;
            }
            seen[p] = true;
            if pred_match[p].is_none_or(|other| augment(other, adj, seen, pred_match)) {
                pred_match[p] = Some(g);
                return true;
            }
        }
        false
    }
    for g in 0..gold.len() {
        let mut seen = vec![false; pred.len()];
        augment(g, &adj, &mut seen, &mut pred_match);
    }
    let mut gold_match = vec![None; gold.len()];
    for (p, g) in pred_match.iter().enumerate() {
        if let Some(g) = g {
            gold_match[*g] = Some(p);
        }
    }
    gold_match
}

fn show_path(path: &[String], arg: &str) -> String {
    let mut parts: Vec<&str> = path.iter().map(String::as_str).collect();
    parts.push(arg);
    parts.join(".")
}

fn show_binding(b: &Binding) -> String {
    match b {
        Binding::Literal { text, .. } => format!("'{text}'"),
        Binding::SubCall(node) => format!("call to {}", node.api_name),
        Binding::AskUser { .. } => "ASK_USER".into(),
        Binding::Unfilled => "nothing".into(),
    }
}

/// First gold sub-call whose slot the prediction fills without a call.
fn bypassed_call(gold: &PlanNode, pred: &PlanNode, path: &mut Vec<String>) -> Option<String> {
    for (arg, g) in &gold.bindings {
        let Binding::SubCall(g_child) = g else { continue };
        match pred.bindings.get(arg) {
            Some(Binding::SubCall(p_child)) if p_child.api_name == g_child.api_name => {
                path.push(arg.clone());
                let found = bypassed_call(g_child, p_child, path);
                path.pop();
                if found.is_some() {
                    return found;
                }
            }
            Some(b @ (Binding::Literal { .. } | Binding::AskUser { .. } | Binding::Unfilled)) => {
                return Some(format!(
                    "{}: expected call to {}, got {}",
                    show_path(path, arg),
                    g_child.api_name,
                    show_binding(b)
                ));
            }
            _ => {}
        }
    }
    None
}

fn is_value_slot(b: &Binding) -> bool {
    matches!(
        b,
        Binding::Literal { .. } | Binding::AskUser { .. } | Binding::Unfilled
    )
}

/// Same APIs at the same positions with the same argument names, differing
/// at most in value slots. Differences are appended to `diffs`.
fn same_shape(gold: &PlanNode, pred: &PlanNode, path: &mut Vec<String>, diffs: &mut Vec<String>) -> bool {
    if gold.api_name != pred.api_name || gold.bindings.len() != pred.bindings.len() {
        return false;
    }
    for (arg, g) in &gold.bindings {
        let Some(p) = pred.bindings.get(arg) else {
            return false;
        };
        match (g, p) {
            (Binding::SubCall(gc), Binding::SubCall(pc)) => {
                path.push(arg.clone());
                let ok = same_shape(gc, pc, path, diffs);
                path.pop();
                if !ok {
                    return false;
                }
            }
            (g, p) if is_value_slot(g) && is_value_slot(p) => {
                let differs = match (g, p) {
                    (Binding::Literal { text: a, .. }, Binding::Literal { text: b, .. }) => {
                        normalize_literal(a) != normalize_literal(b)
                    }
                    (Binding::AskUser { .. }, Binding::AskUser { .. }) => false,
                    _ => true,
                };
                if differs {
                    diffs.push(format!(
                        "{}: expected {}, got {}",
                        show_path(path, arg),
                        show_binding(g),
                        show_binding(p)
                    ));
                }
            }
            _ => return false,
        }
    }
    true
}
