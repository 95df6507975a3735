//! Inputs shared by the planner benchmarks in `benches/`.

use revchain_core::evalgen::{generate_tasks, GenConfig, GeneratedCorpus};
use revchain_core::{render_call_expr, PlanNode};

/// A default-shaped generated corpus; same seed, same instances.
pub fn corpus(count: usize) -> GeneratedCorpus {
    generate_tasks(&GenConfig {
        seed: 7,
        instance_count: count,
        ..Default::default()
    })
    .expect("default generator config is satisfiable")
}

/// Rendered gold labels of a corpus, one per instance.
pub fn labels(corpus: &GeneratedCorpus) -> Vec<String> {
    corpus
        .instances
        .iter()
        .map(|i| render_call_expr(&i.gold_plans).expect("gold plans render"))
        .collect()
}

/// The same plan with its bindings listed in reverse, at every level.
pub fn reversed(node: &PlanNode) -> PlanNode {
    let mut out = PlanNode::new(node.api_name.clone());
    for (arg, b) in node.bindings.iter().rev() {
        let b = match b {
            revchain_core::Binding::SubCall(c) => revchain_core::Binding::SubCall(Box::new(reversed(c))),
            other => other.clone(),
        };
        out = out.with(arg.clone(), b);
    }
    out
}
