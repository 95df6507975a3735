use indexmap::IndexMap;

use super::{ArgOutcome, CompletionRequest, Resolver, ResolverError, Scenario, SelectionRequest};
use crate::plan::{Binding, PlanNode};

/// Answers every request from a gold plan, keyed by tree position so that
/// the same API appearing twice with different bindings resolves correctly.
#[derive(Clone, Debug)]
pub struct OracleResolver {
    gold: PlanNode,
    greedy_extraction: bool,
}

impl OracleResolver {
    pub fn new(gold: PlanNode) -> Self {
        OracleResolver {
            gold,
            greedy_extraction: false,
        }
    }

    /// Variant whose value extraction, asked about an argument that the gold
    /// plan fills with a sub-call, returns the first literal found under that
    /// sub-call instead of declining. This mimics a model that extracts a
    /// name where an ID was needed.
    pub fn greedy(gold: PlanNode) -> Self {
        OracleResolver {
            gold,
            greedy_extraction: true,
        }
    }

    pub fn gold(&self) -> &PlanNode {
        &self.gold
    }

    fn node(&self, path: &[String]) -> Result<&PlanNode, ResolverError> {
        self.gold
            .at_path(path)
            .ok_or_else(|| ResolverError::OutsideGold(path.to_vec()))
    }

    fn outcome_for(binding: Option<&Binding>) -> ArgOutcome {
        match binding {
            Some(Binding::Literal { text, .. }) => ArgOutcome::Value(text.clone()),
            Some(Binding::SubCall(child)) => ArgOutcome::UseApi(child.api_name.clone()),
            _ => ArgOutcome::NoneKnown,
        }
    }
}

fn first_literal(node: &PlanNode) -> Option<&str> {
    node.bindings.values().find_map(|b| match b {
        Binding::Literal { text, .. } => Some(text.as_str()),
        Binding::SubCall(child) => first_literal(child),
        _ => None,
    })
}

impl Resolver for OracleResolver {
    fn select_api(&mut self, request: &SelectionRequest<'_>) -> Result<Option<String>, ResolverError> {
        let wanted = match request.scenario {
            Scenario::FinalApi => Some(self.gold.api_name.as_str()),
            Scenario::ArgumentFill => {
                let (arg, parent_path) = request
                    .path
                    .split_last()
                    .ok_or_else(|| ResolverError::OutsideGold(Vec::new()))?;
                match self.node(parent_path)?.bindings.get(arg) {
                    Some(Binding::SubCall(child)) => Some(child.api_name.as_str()),
                    _ => None,
                }
            }
        };
        Ok(wanted
            .filter(|name| request.candidates.iter().any(|c| c.name == *name))
            .map(str::to_string))
    }

    fn complete_arguments(
        &mut self,
        request: &CompletionRequest<'_>,
    ) -> Result<IndexMap<String, ArgOutcome>, ResolverError> {
        let node = self.node(&request.path)?;
        Ok(request
            .unfilled
            .iter()
            .map(|arg| (arg.name.clone(), Self::outcome_for(node.bindings.get(&arg.name))))
            .collect())
    }

    fn extract_value(&mut self, request: &CompletionRequest<'_>) -> Result<ArgOutcome, ResolverError> {
        let node = self.node(&request.path)?;
        let Some(arg) = request.unfilled.first() else {
            return Ok(ArgOutcome::NoneKnown);
        };
        Ok(match node.bindings.get(&arg.name) {
            Some(Binding::Literal { text, .. }) => ArgOutcome::Value(text.clone()),
            Some(Binding::SubCall(child)) if self.greedy_extraction => first_literal(child)
                .map(|t| ArgOutcome::Value(t.to_string()))
                .unwrap_or(ArgOutcome::NoneKnown),
            _ => ArgOutcome::NoneKnown,
        })
    }

    fn kind(&self) -> &'static str {
        "oracle"
    }
}
