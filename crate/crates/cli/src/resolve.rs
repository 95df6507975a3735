use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};

use revchain_core::resolvers::{PromptClient, ReplaySource};
use revchain_core::{OracleResolver, PlanNode, Resolver};

use crate::config::{ResolverChoice, RunConfig};

/// Builds one resolver per planning session from a run's resolver choice.
pub enum ResolverFactory {
    Oracle,
    Replay(ReplaySource),
    Prompt(Arc<PromptClient>),
}

impl ResolverFactory {
    /// `request_log` is where a prompt-backed run records its exchanges.
    pub fn build(config: &RunConfig, request_log: Option<PathBuf>) -> Result<Self> {
        Ok(match &config.resolver {
            ResolverChoice::Oracle => ResolverFactory::Oracle,
            ResolverChoice::Scripted(path) => ResolverFactory::Replay(
                ReplaySource::load(path).with_context(|| format!("loading {}", path.display()))?,
            ),
            ResolverChoice::Prompt => {
                let mut prompt = config.prompt.clone();
                prompt.request_log_path = request_log;
                ResolverFactory::Prompt(Arc::new(PromptClient::new(prompt)?))
            }
        })
    }

    pub fn make(&self, instance: &str, gold: &[PlanNode]) -> Result<Box<dyn Resolver + Send>> {
        match self {
            ResolverFactory::Oracle => {
                // with several gold plans the first one drives the session
                let first = gold
                    .first()
                    .ok_or_else(|| anyhow!("the oracle resolver needs a gold plan for `{instance}`"))?;
                Ok(Box::new(OracleResolver::new(first.clone())))
            }
            ResolverFactory::Replay(source) => Ok(source.resolver(instance)?),
            ResolverFactory::Prompt(client) => Ok(Box::new(client.resolver(instance))),
        }
    }

    /// The chat client for single-prompt baselines.
    pub fn chat_client(&self) -> Result<&Arc<PromptClient>> {
        match self {
            ResolverFactory::Prompt(client) => Ok(client),
            ResolverFactory::Replay(source) => Ok(source.prompt_client()?),
            ResolverFactory::Oracle => {
                bail!("baselines need a model: use --resolver prompt or a request log")
            }
        }
    }
}
