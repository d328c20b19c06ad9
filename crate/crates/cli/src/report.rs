//! Metrics report serialization and plain-text table rendering.
//!
//! The table groups rows by category with one line per model variant and
//! Accuracy/F1 columns, followed by macro-average and micro-average blocks.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use dialogic_core::eval::MetricsReport;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportFile {
    pub per_category: Vec<CategoryLine>,
    pub macro_accuracy: f64,
    pub macro_f1: f64,
    pub micro_accuracy: f64,
    pub micro_f1: f64,
    pub meta: MetaBlock,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct CategoryLine {
    pub category: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct MetaBlock {
    pub config_hash: String,
    pub seed: u64,
    pub checkpoint_id: String,
}

impl ReportFile {
    pub fn from_report(report: &MetricsReport) -> Self {
        ReportFile {
            per_category: report
                .per_category
                .iter()
                .map(|entry| CategoryLine {
                    category: entry.category.name().to_string(),
                    accuracy: entry.metrics.accuracy,
                    precision: entry.metrics.precision,
                    recall: entry.metrics.recall,
                    f1: entry.metrics.f1,
                    true_positives: entry.counts.true_positives,
                    false_positives: entry.counts.false_positives,
                    true_negatives: entry.counts.true_negatives,
                    false_negatives: entry.counts.false_negatives,
                })
                .collect(),
            macro_accuracy: report.macro_accuracy,
            macro_f1: report.macro_f1,
            micro_accuracy: report.micro_accuracy,
            micro_f1: report.micro_f1,
            meta: MetaBlock {
                config_hash: report.meta.config_hash.clone(),
                seed: report.meta.seed,
                checkpoint_id: report.meta.checkpoint_id.clone(),
            },
        }
    }
}

/// Writes the JSON report document.
pub fn write_report(path: &Path, report: &MetricsReport) -> Result<()> {
    let file = ReportFile::from_report(report);
    let json = serde_json::to_string_pretty(&file)?;
    std::fs::write(path, json).with_context(|| format!("writing report {}", path.display()))?;
    Ok(())
}

/// Renders one or more variants side by side as a plain-text table.
pub fn render_table(variants: &[(&str, &MetricsReport)]) -> String {
    let mut out = String::new();
    let name_width = variants
        .iter()
        .map(|(name, _)| name.len())
        .max()
        .unwrap_or(5)
        .max(5);
    out.push_str(&format!(
        "{:<16} {:<name_width$} {:>9} {:>9}\n",
        "Instruction", "Model", "Accuracy", "F1"
    ));
    out.push_str(&"-".repeat(16 + 1 + name_width + 1 + 9 + 1 + 9));
    out.push('\n');

    let category_count = variants.first().map_or(0, |(_, r)| r.per_category.len());
    for index in 0..category_count {
        for (row, (name, report)) in variants.iter().enumerate() {
            let entry = &report.per_category[index];
            let label = if row == 0 { entry.category.name() } else { "" };
            out.push_str(&format!(
                "{:<16} {:<name_width$} {:>9.3} {:>9.3}\n",
                label, name, entry.metrics.accuracy, entry.metrics.f1
            ));
        }
    }
    for (row, (name, report)) in variants.iter().enumerate() {
        let label = if row == 0 { "macro-average" } else { "" };
        out.push_str(&format!(
            "{:<16} {:<name_width$} {:>9.3} {:>9.3}\n",
            label, name, report.macro_accuracy, report.macro_f1
        ));
    }
    for (row, (name, report)) in variants.iter().enumerate() {
        let label = if row == 0 { "micro-average" } else { "" };
        out.push_str(&format!(
            "{:<16} {:<name_width$} {:>9.3} {:>9.3}\n",
            label, name, report.micro_accuracy, report.micro_f1
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use dialogic_core::eval::{aggregate, CategoryMetrics, ConfusionCounts, RunMeta};
    use dialogic_core::taxonomy::CategoryLabel;

    fn sample_report() -> MetricsReport {
        let counts = ConfusionCounts {
            true_positives: 8,
            false_positives: 2,
            true_negatives: 8,
            false_negatives: 2,
        };
        let per: Vec<CategoryMetrics> = CategoryLabel::instruction_categories()
            .map(|category| CategoryMetrics {
                category,
                metrics: counts.metrics(),
                counts,
            })
            .collect();
        aggregate(
            per,
            RunMeta {
                config_hash: "cfg".into(),
                seed: 3,
                checkpoint_id: "ckpt".into(),
            },
        )
        .unwrap()
    }

    #[test]
    fn report_serializes_in_taxonomy_order() {
        let report = sample_report();
        let file = ReportFile::from_report(&report);
        let names: Vec<&str> = file
            .per_category
            .iter()
            .map(|c| c.category.as_str())
            .collect();
        assert_eq!(
            names,
            [
                "greeting",
                "commending",
                "guidance",
                "example-giving",
                "repeating",
                "reviewing",
                "note-taking",
                "summarization"
            ]
        );
        let json = serde_json::to_string(&file).unwrap();
        assert!(json.contains("\"macro_f1\""));
        assert!(json.contains("\"checkpoint_id\":\"ckpt\""));
    }

    #[test]
    fn table_lists_eight_categories_plus_averages() {
        let report = sample_report();
        let table = render_table(&[("baseline", &report), ("hard", &report)]);
        assert!(table.contains("greeting"));
        assert!(table.contains("summarization"));
        assert!(table.contains("macro-average"));
        assert!(table.contains("micro-average"));
        // two variants per block: 8 categories + 2 averages, 2 rows each
        let data_rows = table.lines().count() - 2;
        assert_eq!(data_rows, 20);
    }
}
