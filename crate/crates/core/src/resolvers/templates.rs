//! Prompt text for the model-backed resolver.
//!
//! Templates live as plain files under `assets/prompts/<version>/` and use
//! `{{name}}` placeholders. A line holding nothing but a placeholder that
//! renders empty is dropped, so optional sections leave no gap.

use super::{CompletionRequest, Scenario, SelectionRequest};
use crate::registry::{ApiSpec, Fact};

pub const VERSION: &str = "v1";

pub const SYSTEM: &str = include_str!("../../assets/prompts/v1/system.txt");
pub const SELECTION: &str = include_str!("../../assets/prompts/v1/selection.txt");
pub const COMPLETION: &str = include_str!("../../assets/prompts/v1/completion.txt");
pub const EXTRACTION: &str = include_str!("../../assets/prompts/v1/extraction.txt");
pub const RETRY: &str = include_str!("../../assets/prompts/v1/retry.txt");

/// Substitutes `{{key}}` placeholders. Unknown placeholders are left as is.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut lines = Vec::new();
    for line in template.lines() {
        let trimmed = line.trim();
        if let Some(key) = trimmed.strip_prefix("{{").and_then(|r| r.strip_suffix("}}")) {
            if values.iter().any(|(k, v)| *k == key && v.is_empty()) {
                continue;
            }
        }
        let mut out = line.to_string();
        for (k, v) in values {
            out = out.replace(&format!("{{{{{k}}}}}"), v);
        }
        lines.push(out);
    }
    lines.join("\n")
}

/// `- Name: description (returns out: type)`
pub fn candidate_line(api: &ApiSpec) -> String {
    let mut line = format!("- {}", api.name);
    if !api.description.trim().is_empty() {
        line.push_str(": ");
        line.push_str(api.description.trim());
    }
    let out = &api.output;
    if !out.name.is_empty() {
        line.push_str(&format!(" (returns {}: {})", out.name, out.value_type));
    }
    line
}

/// Known facts as a section ending in a blank line, or empty.
pub fn context_section(context: &[Fact]) -> String {
    if context.is_empty() {
        return String::new();
    }
    let mut s = String::from("Known facts:\n");
    for fact in context {
        s.push_str(&format!("- {}: {}\n", fact.key, fact.value));
    }
    s
}

pub fn selection_prompt(request: &SelectionRequest<'_>) -> String {
    let (instruction, label) = match request.scenario {
        Scenario::FinalApi => (
            "Pick the API that directly accomplishes the user's request.",
            "Request",
        ),
        Scenario::ArgumentFill => (
            "Pick the API whose output can supply a missing argument.",
            "Missing argument",
        ),
    };
    let candidates: Vec<String> = request.candidates.iter().map(|c| candidate_line(c)).collect();
    fill(
        SELECTION,
        &[
            ("instruction", instruction),
            ("task_label", label),
            ("task", request.task_description.trim()),
            ("candidates", &candidates.join("\n")),
        ],
    )
}

pub fn completion_prompt(request: &CompletionRequest<'_>) -> String {
    let mut args = Vec::new();
    for arg in &request.unfilled {
        let mut block = format!("- {} ({})", arg.name, arg.value_type);
        if !arg.description.trim().is_empty() {
            block.push_str(": ");
            block.push_str(arg.description.trim());
        }
        let candidates = request
            .candidates_per_arg
            .get(&arg.name)
            .map(Vec::as_slice)
            .unwrap_or_default();
        if candidates.is_empty() {
            block.push_str("\n  candidates: none");
        } else {
            block.push_str("\n  candidates:");
            for c in candidates {
                block.push_str("\n  ");
                block.push_str(&candidate_line(c));
            }
        }
        args.push(block);
    }
    fill(
        COMPLETION,
        &[
            ("query", request.query.trim()),
            ("context", &context_section(request.context)),
            ("signature", &request.api.signature()),
            ("description", request.api.description.trim()),
            ("arguments", &args.join("\n")),
        ],
    )
}

pub fn extraction_prompt(request: &CompletionRequest<'_>) -> String {
    let arg = request
        .unfilled
        .first()
        .expect("extraction requests carry one argument");
    let description = if arg.description.trim().is_empty() {
        arg.name.as_str()
    } else {
        arg.description.trim()
    };
    fill(
        EXTRACTION,
        &[
            ("query", request.query.trim()),
            ("context", &context_section(request.context)),
            ("api", &request.api.name),
            ("argument", &arg.name),
            ("type", arg.value_type.as_str()),
            ("description", description),
        ],
    )
}

pub fn retry_prompt(error: &str) -> String {
    fill(RETRY, &[("error", error)])
}
