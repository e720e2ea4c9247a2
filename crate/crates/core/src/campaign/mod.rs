//! Campaign plumbing: run configuration, CSV ingestion, batch analysis and
//! correction, synthetic campaigns and reports.

pub mod config;
pub mod ingest;
pub mod report;
pub mod synth;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::correction::{correct_point, CorrectedPoint};
use crate::performance::{analyze_point, PerformanceSummary};
use config::ResolvedConfig;
use ingest::CampaignRecord;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error("CSV schema: {0}")]
    Schema(String),
    #[error("all {} rows failed; first: {}", .0.len(), .0.first().map(|r| r.to_string()).unwrap_or_default())]
    AllRowsFailed(Vec<RowIssue>),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Map(#[from] crate::refmap::MapError),
}

/// A row that did not produce a result, with the stage that rejected it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowIssue {
    pub row: usize,
    /// `module::operation`
    pub stage: String,
    pub reason: String,
}

impl RowIssue {
    pub fn new(row: usize, stage: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            row,
            stage: stage.into(),
            reason: reason.into(),
        }
    }
}

impl std::fmt::Display for RowIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "row {}: {}: {}", self.row, self.stage, self.reason)
    }
}

/// A row carried through analysis and, when it succeeded, correction.
#[derive(Debug, Clone)]
pub struct ProcessedRow {
    pub record: CampaignRecord,
    pub outcome: Result<(PerformanceSummary, CorrectedPoint), RowIssue>,
}

/// Analysis only, in row order.
pub fn analyze_records(
    records: &[CampaignRecord],
    cfg: &ResolvedConfig,
) -> Vec<Result<PerformanceSummary, RowIssue>> {
    records
        .par_iter()
        .map(|r| {
            analyze_point(&r.point, cfg.eos)
                .map_err(|e| RowIssue::new(r.row, "performance::analyze_point", e.to_string()))
        })
        .collect()
}

/// Analysis and correction to the configured reference, in row order.
pub fn process_records(records: &[CampaignRecord], cfg: &ResolvedConfig) -> Vec<ProcessedRow> {
    records
        .par_iter()
        .map(|r| {
            let outcome = analyze_point(&r.point, cfg.eos)
                .map_err(|e| RowIssue::new(r.row, "performance::analyze_point", e.to_string()))
                .and_then(|s| {
                    correct_point(&s, &cfg.reference, &cfg.correction, cfg.eos)
                        .map(|c| (s, c))
                        .map_err(|e| {
                            RowIssue::new(r.row, "correction::correct_point", e.to_string())
                        })
                });
            ProcessedRow {
                record: r.clone(),
                outcome,
            }
        })
        .collect()
}
