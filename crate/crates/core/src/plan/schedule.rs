use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Binding, PlanNode};

/// One call in forward execution order. Children always precede parents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionStep {
    pub order_index: usize,
    pub api_name: String,
    pub literal_args: BTreeMap<String, String>,
    /// Argument name → index of the step whose output feeds it.
    pub dependency_args: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("argument `{argument}` of `{api}` is not resolved")]
pub struct ScheduleError {
    pub api: String,
    pub argument: String,
}

/// Post-order linearization of a fully bound plan. Identical sub-calls are
/// scheduled independently.
pub fn execution_order(node: &PlanNode) -> Result<Vec<ExecutionStep>, ScheduleError> {
    let mut steps = Vec::with_capacity(node.call_count());
    push_steps(node, &mut steps)?;
    Ok(steps)
}

fn push_steps(node: &PlanNode, steps: &mut Vec<ExecutionStep>) -> Result<usize, ScheduleError> {
    let mut literal_args = BTreeMap::new();
    let mut dependency_args = BTreeMap::new();
    for (arg, binding) in &node.bindings {
        match binding {
            Binding::Literal { text, .. } => {
                literal_args.insert(arg.clone(), text.clone());
            }
            Binding::SubCall(child) => {
                let idx = push_steps(child, steps)?;
                dependency_args.insert(arg.clone(), idx);
            }
            Binding::AskUser { .. } | Binding::Unfilled => {
                return Err(ScheduleError {
                    api: node.api_name.clone(),
                    argument: arg.clone(),
                })
            }
        }
    }
    let order_index = steps.len();
    steps.push(ExecutionStep {
        order_index,
        api_name: node.api_name.clone(),
        literal_args,
        dependency_args,
    });
    Ok(order_index)
}
