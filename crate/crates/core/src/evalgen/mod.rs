//! Judging, report aggregation, synthetic task generation and the
//! single-prompt baselines.

mod baseline;
mod generate;
mod judge;
mod report;

pub use baseline::{
    parse_baseline_reply, render_baseline_prompt, BaselineMethod, FEW_SHOT_COT_EXAMPLES, FEW_SHOT_EXAMPLES,
};
pub use generate::{
    default_categories, default_depth_distribution, generate_tasks, Category, GenConfig, GenError, GenStats,
    GeneratedCorpus,
};
pub use judge::{judge, ErrorClass, Outcome, Prediction, Verdict};
pub use report::{aggregate, EvalReport, LevelStats, OutcomeCounts, ReportVerdict, RunMetadata};

use crate::engine::PlanningOutcome;

/// The engine's plan as a judge input; no plan judges as an empty prediction.
pub fn prediction_from_outcome(outcome: &PlanningOutcome) -> Prediction {
    Prediction::Plans(outcome.plan.iter().cloned().collect())
}
