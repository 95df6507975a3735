use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::judge::{ErrorClass, Outcome, Verdict};
use crate::registry::{Level, TaskInstance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub total: usize,
    pub correct: usize,
    /// Percentage rounded to two decimals; `None` when `total` is zero.
    pub accuracy: Option<f64>,
}

impl LevelStats {
    fn new(total: usize, correct: usize) -> Self {
        LevelStats {
            total,
            correct,
            accuracy: percent(correct, total),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub total: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub malformed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportVerdict {
    pub level: Level,
    #[serde(flatten)]
    pub verdict: Verdict,
}

/// Facts about how a report was produced. Kept out of the report file so
/// that reruns of the same decisions produce identical reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub resolver: String,
    pub strategy: String,
    pub dataset: Option<String>,
    pub workers: usize,
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub levels: BTreeMap<Level, LevelStats>,
    pub overall: Option<f64>,
    pub counts: OutcomeCounts,
    pub errors: BTreeMap<ErrorClass, usize>,
    pub verdicts: Vec<ReportVerdict>,
    #[serde(skip)]
    pub metadata: Option<RunMetadata>,
}

fn percent(correct: usize, total: usize) -> Option<f64> {
    if total == 0 {
        return None;
    }
    let raw = 100.0 * correct as f64 / total as f64;
    Some((raw * 100.0).round() / 100.0)
}

/// Combines verdicts into per-level and overall accuracy.
///
/// Verdicts are reported in instance order; verdicts for ids not among
/// `instances` are ignored, and instances without a verdict count as
/// malformed.
pub fn aggregate(verdicts: &[Verdict], instances: &[TaskInstance]) -> EvalReport {
    let by_id: HashMap<&str, &Verdict> = verdicts.iter().map(|v| (v.id.as_str(), v)).collect();
    let mut rows = Vec::with_capacity(instances.len());
    for inst in instances {
        let verdict = match by_id.get(inst.id.as_str()) {
            Some(v) => (*v).clone(),
            None => Verdict {
                id: inst.id.clone(),
                outcome: Outcome::Malformed,
                error_class: ErrorClass::OtherStructural,
                detail: "no prediction".into(),
            },
        };
        rows.push(ReportVerdict {
            level: inst.level,
            verdict,
        });
    }

    let mut levels = BTreeMap::new();
    for level in Level::ALL {
        let at: Vec<_> = rows.iter().filter(|r| r.level == level).collect();
        let correct = at.iter().filter(|r| r.verdict.is_correct()).count();
        levels.insert(level, LevelStats::new(at.len(), correct));
    }
    let total: usize = levels.values().map(|s| s.total).sum();
    let correct: usize = levels.values().map(|s| s.correct).sum();

    let mut errors: BTreeMap<ErrorClass, usize> = ErrorClass::ERRORS.iter().map(|c| (*c, 0)).collect();
    let mut counts = OutcomeCounts {
        total,
        ..Default::default()
    };
    for row in &rows {
        match row.verdict.outcome {
            Outcome::Correct => counts.correct += 1,
            Outcome::Incorrect => counts.incorrect += 1,
            Outcome::Malformed => counts.malformed += 1,
        }
        if row.verdict.error_class != ErrorClass::None {
            *errors.entry(row.verdict.error_class).or_default() += 1;
        }
    }

    EvalReport {
        levels,
        overall: percent(correct, total),
        counts,
        errors,
        verdicts: rows,
        metadata: None,
    }
}

fn cell(value: Option<f64>) -> String {
    value
        .map(|v| format!("{v:.2}"))
        .unwrap_or_else(|| "—".to_string())
}

fn pad_left(s: &str, width: usize) -> String {
    let len = s.chars().count();
    format!("{}{s}", " ".repeat(width.saturating_sub(len)))
}

fn pad_right(s: &str, width: usize) -> String {
    let len = s.chars().count();
    format!("{s}{}", " ".repeat(width.saturating_sub(len)))
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Accuracy table with one row labelled `method`, followed by error counts.
    pub fn text_table(&self, method: &str) -> String {
        let header = ["method", "level 1", "level 2", "level 3", "Overall"];
        let mut row = vec![method.to_string()];
        for level in Level::ALL {
            row.push(cell(self.levels.get(&level).and_then(|s| s.accuracy)));
        }
        row.push(cell(self.overall));
        let widths: Vec<usize> = header
            .iter()
            .zip(&row)
            .map(|(h, r)| h.chars().count().max(r.chars().count()))
            .collect();
        let line = |cells: Vec<String>| -> String {
            cells
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i == 0 {
                        pad_right(c, widths[i])
                    } else {
                        pad_left(c, widths[i])
                    }
                })
                .collect::<Vec<_>>()
                .join(" | ")
        };
        let mut out = String::new();
        out.push_str(&line(header.iter().map(|h| h.to_string()).collect()));
        out.push('\n');
        out.push_str(
            &widths
                .iter()
                .map(|w| "-".repeat(*w))
                .collect::<Vec<_>>()
                .join("-+-"),
        );
        out.push('\n');
        out.push_str(&line(row));
        out.push('\n');
        let counts: Vec<String> = Level::ALL
            .iter()
            .map(|l| format!("{l}={}", self.levels.get(l).map_or(0, |s| s.total)))
            .collect();
        out.push_str(&format!(
            "\ninstances: {} ({}); correct {}, incorrect {}, malformed {}\n",
            self.counts.total,
            counts.join(", "),
            self.counts.correct,
            self.counts.incorrect,
            self.counts.malformed
        ));
        let errors: Vec<String> = self.errors.iter().map(|(c, n)| format!("{c}={n}")).collect();
        out.push_str(&format!("errors: {}\n", errors.join(", ")));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn verdict(id: &str, ok: bool) -> Verdict {
        Verdict {
            id: id.into(),
            outcome: if ok { Outcome::Correct } else { Outcome::Incorrect },
            error_class: if ok {
                ErrorClass::None
            } else {
                ErrorClass::WrongFinalTool
            },
            detail: String::new(),
        }
    }

    fn l1(id: &str) -> TaskInstance {
        let mut inst = fixtures::meeting_room_instance();
        inst.id = id.into();
        inst
    }

    #[test]
    fn two_of_three() {
        let insts = [l1("a"), l1("b"), l1("c")];
        let report = aggregate(
            &[verdict("a", true), verdict("b", true), verdict("c", false)],
            &insts,
        );
        assert_eq!(report.levels[&Level::L1].accuracy, Some(66.67));
        assert_eq!(report.overall, Some(66.67));
        assert_eq!(report.levels[&Level::L2].accuracy, None);
        assert_eq!(report.errors[&ErrorClass::WrongFinalTool], 1);
        let table = report.text_table("all-at-once");
        assert!(
            table.contains("all-at-once |   66.67 |       — |       — |   66.67"),
            "{table}"
        );
    }

    #[test]
    fn overall_weights_by_count() {
        let mut insts = vec![l1("a"), fixtures::lucas_instance()];
        insts[1].id = "b".into();
        let report = aggregate(&[verdict("a", true), verdict("b", false)], &insts);
        assert_eq!(report.levels[&Level::L2].total, 1);
        assert_eq!(report.overall, Some(50.0));
    }

    #[test]
    fn empty_report_and_json() {
        let report = aggregate(&[], &[]);
        assert_eq!(report.overall, None);
        let json = report.to_json();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(value["overall"].is_null());
        assert_eq!(value["levels"]["L1"]["total"], 0);
        assert_eq!(value["errors"]["wrong_final_tool"], 0);
        assert!(value.get("metadata").is_none());
        assert_eq!(EvalReport::from_json(&json).unwrap(), report);
    }

    #[test]
    fn missing_verdicts_count_as_malformed() {
        let report = aggregate(&[], &[l1("a")]);
        assert_eq!(report.counts.malformed, 1);
        assert_eq!(report.overall, Some(0.0));
    }
}
