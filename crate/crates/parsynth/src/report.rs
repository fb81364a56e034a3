//! Human-readable training reports plus machine-parseable metric lines
//! (one JSON object per event) for external tooling.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde_json::json;

use crate::enumerate::TraceCensus;
use crate::train::{EvalReport, TrainingReport};

/// Render the per-lesson training report as structured text.
pub fn render_training_report(report: &TrainingReport) -> String {
    let mut out = String::new();
    for lesson in &report.lessons {
        let _ = writeln!(out, "lesson {}: {} new examples", lesson.lesson, lesson.new_examples);
        for p1 in &lesson.phase1 {
            let _ = writeln!(
                out,
                "  phase1 {:24} candidates {:?} first_found_at {} of {}",
                p1.input,
                p1.candidate_lengths,
                p1.first_found_at
                    .map(|i| i.to_string())
                    .unwrap_or_else(|| "-".into()),
                p1.outer_iters,
            );
        }
        let _ = writeln!(
            out,
            "  phase2: satisfiable specification after {} attempt(s), {} epoch(s); assignment {:?}",
            lesson.phase2_attempts, lesson.phase2_epochs, lesson.assignment
        );
    }
    let _ = writeln!(
        out,
        "final training accuracy: {:.4}",
        report.final_training_accuracy
    );
    out
}

/// One pass/fail style line per evaluated pool.
pub fn render_eval_report(name: &str, report: &EvalReport, max_failures: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{name}: {}/{} exact ({:.4})",
        report.correct,
        report.total,
        report.accuracy()
    );
    for failure in report.failures.iter().take(max_failures) {
        let _ = writeln!(
            out,
            "  FAIL {:40} steps {} got {}",
            failure.input,
            failure.partial_steps,
            failure.predicted.as_deref().unwrap_or("<no tree>")
        );
    }
    if report.failures.len() > max_failures {
        let _ = writeln!(out, "  ... and {} more", report.failures.len() - max_failures);
    }
    out
}

/// Census rows in aligned text.
pub fn render_census_table(rows: &[TraceCensus]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<30} {:>5} {:>6} {:>12} {:>16} {:>12} {:>14}",
        "input", "len", "trace", "valid-kind", "valid-exec", "correct-kind", "correct-exec"
    );
    for row in rows {
        let _ = writeln!(
            out,
            "{:<30} {:>5} {:>6} {:>12} {:>16} {:>12} {:>14}",
            row.input,
            row.input_len,
            row.trace_len,
            row.valid_kind_traces,
            row.valid_exec_traces,
            row.correct_kind_traces,
            row.correct_exec_traces
        );
    }
    out
}

/// Append-only JSONL metric stream.
pub struct MetricsSink {
    file: Option<std::fs::File>,
}

impl MetricsSink {
    pub fn to_file(path: &Path) -> std::io::Result<MetricsSink> {
        Ok(MetricsSink {
            file: Some(std::fs::File::create(path)?),
        })
    }

    pub fn disabled() -> MetricsSink {
        MetricsSink { file: None }
    }

    pub fn emit(&mut self, event: &str, fields: serde_json::Value) {
        if let Some(file) = &mut self.file {
            let mut object = json!({ "event": event });
            if let (Some(dst), Some(src)) = (object.as_object_mut(), fields.as_object()) {
                for (k, v) in src {
                    dst.insert(k.clone(), v.clone());
                }
            }
            let _ = writeln!(file, "{object}");
        }
    }
}

/// Census rows as JSON for machine consumption.
pub fn census_to_json(rows: &[TraceCensus]) -> serde_json::Value {
    json!(rows
        .iter()
        .map(|r| {
            json!({
                "input": r.input,
                "input_len": r.input_len,
                "trace_len": r.trace_len,
                "valid_kind_traces": r.valid_kind_traces,
                "valid_exec_traces": r.valid_exec_traces.to_string(),
                "correct_kind_traces": r.correct_kind_traces,
                "correct_exec_traces": r.correct_exec_traces.to_string(),
            })
        })
        .collect::<Vec<_>>())
}
