//! Side-by-side summaries of experiments, one column per configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentResult, ExperimentSummary, MeanStd};
use crate::error::{Error, Result};
use crate::penalties::PenaltyKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportColumn {
    pub label: String,
    pub penalty: PenaltyKind,
    pub lambda: f64,
    pub summary: ExperimentSummary,
}

impl ReportColumn {
    pub fn from_result(label: impl Into<String>, result: &ExperimentResult) -> Self {
        ReportColumn {
            label: label.into(),
            penalty: result.config.train.penalty,
            lambda: result.config.train.lambda,
            summary: result.summary.clone(),
        }
    }
}

pub fn report_json(columns: &[ReportColumn]) -> String {
    let mut s = serde_json::to_string_pretty(columns).expect("report serializes");
    s.push('\n');
    s
}

fn bracketed(values: &[MeanStd], decimals: usize) -> String {
    let inner: Vec<String> = values.iter().map(|v| format!("{:.*}", decimals, v.mean)).collect();
    format!("[{}]", inner.join(", "))
}

pub fn report_table(columns: &[ReportColumn]) -> String {
    let rows: Vec<(&str, Vec<String>)> = vec![
        ("Measure", columns.iter().map(|c| c.label.clone()).collect()),
        (
            "Training accuracy",
            columns.iter().map(|c| format!("{:.4}", c.summary.train_accuracy.mean)).collect(),
        ),
        (
            "Test accuracy",
            columns.iter().map(|c| format!("{:.4}", c.summary.test_accuracy.mean)).collect(),
        ),
        (
            "Training time [s]",
            columns.iter().map(|c| format!("{:.2}", c.summary.seconds.mean)).collect(),
        ),
        ("Sparsity", columns.iter().map(|c| bracketed(&c.summary.sparsity, 2)).collect()),
        ("Neurons", columns.iter().map(|c| bracketed(&c.summary.active_neurons, 1)).collect()),
    ];
    let label_width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..columns.len())
        .map(|i| rows.iter().map(|(_, cells)| cells[i].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (label, cells) in &rows {
        out.push_str(&format!("{label:<label_width$}"));
        for (cell, w) in cells.iter().zip(&widths) {
            out.push_str(&format!("  {cell:>w$}"));
        }
        out.push('\n');
    }
    out
}

/// Writes `path` with a `.json` extension (machine-readable) and `.txt`
/// (aligned table). Returns both paths.
pub fn render_report(columns: &[ReportColumn], path: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let json = path.as_ref().with_extension("json");
    let txt = path.as_ref().with_extension("txt");
    fs::write(&json, report_json(columns)).map_err(|e| Error::io(&json, e))?;
    fs::write(&txt, report_table(columns)).map_err(|e| Error::io(&txt, e))?;
    Ok((json, txt))
}
