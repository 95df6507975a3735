//! Run configuration: command-line flags over an optional TOML file over
//! environment variables.
//!
//! ```toml
//! [run]
//! resolver = "oracle"            # oracle | scripted:<path> | prompt
//! strategy = "three-step"        # all-at-once | one-by-one | three-step
//! max_depth = 8
//! max_resolver_calls = 64
//! workers = 4
//! strict = false
//!
//! [prompt]
//! endpoint = "http://localhost:8000/v1/chat/completions"
//! model = "gpt-3.5-turbo"
//! temperature = 0.1
//! max_retries = 1
//! timeout_secs = 60
//! max_in_flight = 4
//! candidate_cap = 32
//!
//! [gen]
//! seed = 7
//! count = 500
//! depth_distribution = { "2" = 0.5, "3" = 0.5 }
//! pool_size = [5, 12]
//! args_per_api = [1, 3]
//! distractor_type_share = 0.5
//! branch_probability = 0.25
//! ```
//!
//! The API key is only read from `REVERSE_CHAIN_API_KEY`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use revchain_core::resolvers::{PromptResolverConfig, API_KEY_ENV};
use revchain_core::{StrategyConfig, StrategyMode};

pub const ENDPOINT_ENV: &str = "REVERSE_CHAIN_ENDPOINT";
pub const MODEL_ENV: &str = "REVERSE_CHAIN_MODEL";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub prompt: PromptSection,
    #[serde(default)]
    pub gen: GenSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub resolver: Option<String>,
    pub strategy: Option<String>,
    pub max_depth: Option<usize>,
    pub max_resolver_calls: Option<usize>,
    pub workers: Option<usize>,
    pub strict: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptSection {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_retries: Option<u32>,
    pub timeout_secs: Option<u64>,
    pub max_in_flight: Option<usize>,
    pub candidate_cap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSection {
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub depth_distribution: Option<BTreeMap<String, f64>>,
    pub pool_size: Option<(usize, usize)>,
    pub args_per_api: Option<(usize, usize)>,
    pub distractor_type_share: Option<f64>,
    pub branch_probability: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

/// Flags shared by the commands that run the planner.
#[derive(Args, Debug, Clone, Default)]
pub struct EngineFlags {
    /// oracle, scripted:<trace or request log>, or prompt
    #[arg(long)]
    pub resolver: Option<String>,
    /// all-at-once, one-by-one or three-step
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Resolver call budget per planning session
    #[arg(long)]
    pub max_calls: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Chat-completions URL for the prompt resolver
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Abort on the first malformed dataset sample or unknown answer
    #[arg(long)]
    pub strict: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResolverChoice {
    Oracle,
    Scripted(PathBuf),
    Prompt,
}

impl ResolverChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "oracle" => Ok(ResolverChoice::Oracle),
            "prompt" => Ok(ResolverChoice::Prompt),
            other => match other.strip_prefix("scripted:") {
                Some(path) if !path.is_empty() => Ok(ResolverChoice::Scripted(PathBuf::from(path))),
                _ => bail!("unknown resolver `{other}`; expected oracle, scripted:<path> or prompt"),
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            ResolverChoice::Oracle => "oracle".into(),
            ResolverChoice::Scripted(p) => format!("scripted:{}", p.display()),
            ResolverChoice::Prompt => "prompt".into(),
        }
    }
}

/// Everything a planner run needs after precedence has been applied.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub resolver: ResolverChoice,
    pub strategy: StrategyConfig,
    pub prompt: PromptResolverConfig,
    pub strict: bool,
    pub workers: usize,
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.trim().is_empty())
}

impl RunConfig {
    pub fn resolve(flags: &EngineFlags, file: &FileConfig, workers: Option<usize>) -> Result<Self> {
        let run = &file.run;
        let p = &file.prompt;

        let resolver = ResolverChoice::parse(
            flags
                .resolver
                .as_deref()
                .or(run.resolver.as_deref())
                .unwrap_or("oracle"),
        )?;
        let mode = match flags.strategy.as_deref().or(run.strategy.as_deref()) {
            Some(s) => s.parse::<StrategyMode>().map_err(anyhow::Error::msg)?,
            None => StrategyMode::ThreeStep,
        };
        let mut strategy = StrategyConfig::with_mode(mode);
        if let Some(d) = flags.max_depth.or(run.max_depth) {
            strategy.max_depth = d;
        }
        if let Some(c) = flags.max_calls.or(run.max_resolver_calls) {
            strategy.max_resolver_calls = c;
        }
        strategy.validate()?;

        let defaults = PromptResolverConfig::default();
        let prompt = PromptResolverConfig {
            endpoint_url: flags
                .endpoint
                .clone()
                .or_else(|| p.endpoint.clone())
                .or_else(|| env_var(ENDPOINT_ENV))
                .unwrap_or(defaults.endpoint_url),
            model_name: flags
                .model
                .clone()
                .or_else(|| p.model.clone())
                .or_else(|| env_var(MODEL_ENV))
                .unwrap_or(defaults.model_name),
            temperature: flags
                .temperature
                .or(p.temperature)
                .unwrap_or(defaults.temperature),
            max_retries: flags
                .max_retries
                .or(p.max_retries)
                .unwrap_or(defaults.max_retries),
            timeout: p
                .timeout_secs
                .map(Duration::from_secs)
                .unwrap_or(defaults.timeout),
            request_log_path: None,
            api_key: env_var(API_KEY_ENV),
            max_in_flight: p.max_in_flight.unwrap_or(defaults.max_in_flight),
            candidate_cap: p.candidate_cap.unwrap_or(defaults.candidate_cap),
        };
        if resolver == ResolverChoice::Prompt {
            prompt.validate()?;
            if prompt.api_key.is_none() {
                bail!("the prompt resolver needs an API key in {API_KEY_ENV}");
            }
        }

        let workers = workers.or(run.workers).unwrap_or(1);
        if workers == 0 {
            bail!("workers must be at least 1");
        }
        Ok(RunConfig {
            resolver,
            strategy,
            prompt,
            strict: flags.strict || run.strict.unwrap_or(false),
            workers,
        })
    }
}
