use std::collections::VecDeque;

use indexmap::IndexMap;

use super::{ArgOutcome, CompletionRequest, Resolver, ResolverError, SelectionRequest};
use crate::engine::{PlanningTrace, TraceEvent};

/// Replays the decisions recorded in a planning trace, in order.
///
/// Anomalies recorded with each event are handed back through
/// [`Resolver::take_anomalies`], so re-planning with the same inputs
/// reproduces the original trace exactly.
#[derive(Clone, Debug, Default)]
pub struct ScriptedResolver {
    script: VecDeque<TraceEvent>,
    pending_anomalies: Vec<String>,
}

impl ScriptedResolver {
    /// Guard events are dropped; they are not resolver decisions.
    pub fn new(events: impl IntoIterator<Item = TraceEvent>) -> Self {
        ScriptedResolver {
            script: events.into_iter().filter(TraceEvent::is_resolver_call).collect(),
            pending_anomalies: Vec::new(),
        }
    }

    pub fn from_trace(trace: &PlanningTrace) -> Self {
        Self::new(trace.events.iter().cloned())
    }

    pub fn remaining(&self) -> usize {
        self.script.len()
    }

    fn next(&mut self, expected: &'static str) -> Result<TraceEvent, ResolverError> {
        let event = self
            .script
            .pop_front()
            .ok_or(ResolverError::ScriptExhausted(expected))?;
        if event.kind_name() != expected {
            let found = event.kind_name().to_string();
            self.script.push_front(event);
            return Err(ResolverError::ScriptDiverged { expected, found });
        }
        self.pending_anomalies = event.anomalies().to_vec();
        Ok(event)
    }
}

impl Resolver for ScriptedResolver {
    fn select_api(&mut self, _: &SelectionRequest<'_>) -> Result<Option<String>, ResolverError> {
        match self.next("selection")? {
            TraceEvent::Selection(e) => Ok(e.chosen),
            _ => unreachable!("kind checked in next()"),
        }
    }

    fn complete_arguments(
        &mut self,
        _: &CompletionRequest<'_>,
    ) -> Result<IndexMap<String, ArgOutcome>, ResolverError> {
        match self.next("completion")? {
            TraceEvent::Completion(e) => Ok(e.outcomes),
            _ => unreachable!("kind checked in next()"),
        }
    }

    fn extract_value(&mut self, _: &CompletionRequest<'_>) -> Result<ArgOutcome, ResolverError> {
        match self.next("extraction")? {
            TraceEvent::Extraction(e) => Ok(e.outcome),
            _ => unreachable!("kind checked in next()"),
        }
    }

    fn take_anomalies(&mut self) -> Vec<String> {
        std::mem::take(&mut self.pending_anomalies)
    }

    fn kind(&self) -> &'static str {
        "scripted"
    }
}
