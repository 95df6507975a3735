//! Single-prompt baselines: the whole plan is requested in one reply.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::judge::Prediction;
use crate::plan::parse_single_call;
use crate::registry::{ApiSpec, TaskInstance};
use crate::resolvers::templates::{context_section, fill};

const ZERO_SHOT: &str = include_str!("../../assets/prompts/v1/baseline/zero_shot.txt");
const FEW_SHOT: &str = include_str!("../../assets/prompts/v1/baseline/few_shot.txt");
const ZERO_SHOT_COT: &str = include_str!("../../assets/prompts/v1/baseline/zero_shot_cot.txt");
const FEW_SHOT_COT: &str = include_str!("../../assets/prompts/v1/baseline/few_shot_cot.txt");

pub const FEW_SHOT_EXAMPLES: &str = include_str!("../../assets/prompts/v1/baseline/few_shot_examples.txt");
pub const FEW_SHOT_COT_EXAMPLES: &str =
    include_str!("../../assets/prompts/v1/baseline/few_shot_cot_examples.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMethod {
    ZeroShot,
    FewShot,
    ZeroShotCot,
    FewShotCot,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 4] = [
        BaselineMethod::ZeroShot,
        BaselineMethod::FewShot,
        BaselineMethod::ZeroShotCot,
        BaselineMethod::FewShotCot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineMethod::ZeroShot => "zero-shot",
            BaselineMethod::FewShot => "few-shot",
            BaselineMethod::ZeroShotCot => "zero-shot-cot",
            BaselineMethod::FewShotCot => "few-shot-cot",
        }
    }

    fn template(self) -> (&'static str, &'static str) {
        match self {
            BaselineMethod::ZeroShot => (ZERO_SHOT, ""),
            BaselineMethod::FewShot => (FEW_SHOT, FEW_SHOT_EXAMPLES),
            BaselineMethod::ZeroShotCot => (ZERO_SHOT_COT, ""),
            BaselineMethod::FewShotCot => (FEW_SHOT_COT, FEW_SHOT_COT_EXAMPLES),
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == wanted)
            .ok_or_else(|| format!("unknown baseline method `{s}`"))
    }
}

fn api_block(api: &ApiSpec) -> String {
    let mut s = format!("- {}", api.name);
    if !api.description.trim().is_empty() {
        s.push_str(": ");
        s.push_str(api.description.trim());
    }
    if !api.arguments.is_empty() {
        let args: Vec<String> = api
            .arguments
            .iter()
            .map(|a| {
                if a.description.trim().is_empty() {
                    format!("{} ({})", a.name, a.value_type)
                } else {
                    format!("{} ({}): {}", a.name, a.value_type, a.description.trim())
                }
            })
            .collect();
        s.push_str("\n  arguments: ");
        s.push_str(&args.join("; "));
    }
    if !api.output.name.is_empty() {
        s.push_str(&format!(
            "\n  returns: {} ({})",
            api.output.name, api.output.value_type
        ));
    }
    s
}

pub fn render_baseline_prompt(method: BaselineMethod, instance: &TaskInstance) -> String {
    let (template, examples) = method.template();
    let apis: Vec<String> = instance.pool.iter().map(api_block).collect();
    fill(
        template,
        &[
            ("apis", &apis.join("\n")),
            ("examples", examples.trim_end()),
            ("query", instance.query.trim()),
            ("context", &context_section(&instance.context)),
        ],
    )
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Extracts the plan from a free-text reply.
///
/// Every `Name(` at a word boundary that parses as a complete call is a
/// candidate. Calls separated only by whitespace, `;`, `,` or backticks form
/// one block; the last block is the answer, so reasoning that mentions
/// calls before the final answer is ignored.
pub fn parse_baseline_reply(text: &str) -> Prediction {
    let bytes = text.as_bytes();
    let mut calls = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let boundary = i == 0 || !is_ident(bytes[i - 1]);
        if boundary && is_ident_start(bytes[i]) {
            let mut j = i;
            while j < bytes.len() && is_ident(bytes[j]) {
                j += 1;
            }
            if bytes.get(j) == Some(&b'(') {
                if let Ok((node, end)) = parse_single_call(text, i) {
                    calls.push((i, end, node));
                    i = end;
                    continue;
                }
            }
            i = j;
            continue;
        }
        i += 1;
    }

    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (k, (start, _, _)) in calls.iter().enumerate() {
        let joined = k > 0 && {
            let gap = &text[calls[k - 1].1..*start];
            gap.chars()
                .all(|c| c.is_whitespace() || matches!(c, ';' | ',' | '`'))
        };
        if joined {
            blocks.last_mut().expect("joined implies a block").push(k);
        } else {
            blocks.push(vec![k]);
        }
    }
    match blocks.pop() {
        Some(last) => {
            let mut plans = Vec::with_capacity(last.len());
            let mut calls: Vec<_> = calls.into_iter().map(Some).collect();
            for k in last {
                plans.push(calls[k].take().expect("each call used once").2);
            }
            Prediction::Plans(plans)
        }
        None => Prediction::Malformed("no call expression found".into()),
    }
}
