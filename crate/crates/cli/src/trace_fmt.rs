//! Human-readable trace listings.

use revchain_core::resolvers::Scenario;
use revchain_core::{ArgOutcome, PlanningTrace, TraceEvent};

fn at(path: &[String]) -> String {
    if path.is_empty() {
        "root".into()
    } else {
        path.join(".")
    }
}

fn outcome(o: &ArgOutcome) -> String {
    match o {
        ArgOutcome::Value(v) => format!("{v:?}"),
        ArgOutcome::UseApi(a) => format!("<{a}>"),
        ArgOutcome::NoneKnown => "?".into(),
    }
}

pub fn format_event(seq: usize, event: &TraceEvent) -> String {
    let mut line = match event {
        TraceEvent::Selection(s) => {
            let scenario = match s.scenario {
                Scenario::FinalApi => "final",
                Scenario::ArgumentFill => "fill",
            };
            format!(
                "{seq:>3} select   {scenario} @ {}: {} of {} candidates",
                at(&s.path),
                s.chosen.as_deref().unwrap_or("(none)"),
                s.candidates.len()
            )
        }
        TraceEvent::Completion(c) => {
            let parts: Vec<String> = c
                .outcomes
                .iter()
                .map(|(k, v)| format!("{k}={}", outcome(v)))
                .collect();
            format!(
                "{seq:>3} complete {} @ {}: {}",
                c.api,
                at(&c.path),
                parts.join(", ")
            )
        }
        TraceEvent::Extraction(e) => format!(
            "{seq:>3} extract  {}.{} @ {}: {}",
            e.api,
            e.argument,
            at(&e.path),
            outcome(&e.outcome)
        ),
        TraceEvent::Guard(g) => format!(
            "{seq:>3} guard    {:?} @ {}: {}",
            g.kind,
            at(&g.location),
            g.detail
        ),
    };
    for a in event.anomalies() {
        line.push_str(&format!("\n      ! {a}"));
    }
    line
}

pub fn format_trace(trace: &PlanningTrace) -> String {
    let mut out = String::new();
    for (i, e) in trace.events.iter().enumerate() {
        out.push_str(&format_event(i, e));
        out.push('\n');
    }
    out.push_str(&format!(
        "{} events, {} resolver calls, {} guards, {} anomalies\n",
        trace.len(),
        trace.resolver_calls(),
        trace.guards().count(),
        trace.anomalies().len()
    ));
    out
}
