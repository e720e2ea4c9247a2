//! Verification report: per-row corrected results against a reference map,
//! deviation summary, row accounting and flat plot series.

use std::path::Path;

use chrono::{DateTime, Utc};
use serde::Serialize;

use super::config::ResolvedConfig;
use super::ingest::IngestOutcome;
use super::{CampaignError, ProcessedRow, RowIssue};
use crate::refmap::{campaign_report, DeviationReport, ReferenceMap};
use crate::thermo::EosModel;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct RowAccounting {
    pub ingested: usize,
    pub corrected: usize,
    pub excluded: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportPoint {
    pub row: usize,
    pub timestamp: DateTime<Utc>,
    pub composition_id: String,
    pub p1_pa: f64,
    pub t1_k: f64,
    pub p2_pa: f64,
    pub t2_k: f64,
    pub mass_flow_kg_s: f64,
    pub speed_rpm: f64,
    pub eta: f64,
    pub n: f64,
    pub schultz_f: f64,
    pub head_j_kg: f64,
    pub power_w: f64,
    pub p2_c_pa: f64,
    pub t2_c_k: f64,
    pub n_c: f64,
    pub schultz_f_c: f64,
    pub head_c_j_kg: f64,
    pub power_c_w: f64,
    pub speed_c_rpm: f64,
    pub mass_flow_c_kg_s: f64,
    pub iterations: usize,
    pub final_delta: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MapSummary {
    pub n_ref_speed_rpm: f64,
    pub head_coeffs: [f64; 4],
    pub power_coeffs: [f64; 4],
    pub flow_range_kg_s: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub format_version: u32,
    pub config_digest: String,
    pub eos: EosModel,
    pub first_timestamp: Option<DateTime<Utc>>,
    pub last_timestamp: Option<DateTime<Utc>>,
    pub rows: RowAccounting,
    pub map: MapSummary,
    pub points: Vec<ReportPoint>,
    pub deviation: DeviationReport,
    /// Excluded and failed rows, by row number.
    pub issues: Vec<RowIssue>,
}

impl ReportDocument {
    pub fn build(
        cfg: &ResolvedConfig,
        ingest: &IngestOutcome,
        processed: &[ProcessedRow],
        map: &ReferenceMap,
    ) -> Self {
        let mut points = Vec::new();
        let mut corrected = Vec::new();
        let mut issues: Vec<RowIssue> = ingest.excluded.clone();
        let excluded = issues.len();
        issues.extend(ingest.failed.iter().cloned());
        let mut failed = ingest.failed.len();
        for p in processed {
            match &p.outcome {
                Ok((s, c)) => {
                    let mut warnings = p.record.warnings.clone();
                    warnings.extend(c.warnings.iter().cloned());
                    points.push(ReportPoint {
                        row: p.record.row,
                        timestamp: s.point.timestamp,
                        composition_id: p.record.composition_id.clone(),
                        p1_pa: s.point.p1,
                        t1_k: s.point.t1,
                        p2_pa: s.point.p2,
                        t2_k: s.point.t2,
                        mass_flow_kg_s: s.point.mass_flow,
                        speed_rpm: s.point.speed,
                        eta: s.eta,
                        n: s.n_avg,
                        schultz_f: s.schultz_f,
                        head_j_kg: s.head,
                        power_w: s.power,
                        p2_c_pa: c.p2_c,
                        t2_c_k: c.t2_c,
                        n_c: c.n_c,
                        schultz_f_c: c.f_c,
                        head_c_j_kg: c.head_c,
                        power_c_w: c.power_c,
                        speed_c_rpm: c.speed_c,
                        mass_flow_c_kg_s: c.mass_flow_c,
                        iterations: c.iterations_used,
                        final_delta: c.final_delta,
                        converged: c.converged,
                        warnings,
                    });
                    corrected.push((p.record.row, c));
                }
                Err(issue) => {
                    failed += 1;
                    issues.push(issue.clone());
                }
            }
        }
        issues.sort_by_key(|i| i.row);
        let deviation = campaign_report(corrected.iter().map(|(r, c)| (*r, *c)), map);
        let timestamps = points.iter().map(|p| p.timestamp);
        Self {
            format_version: REPORT_FORMAT_VERSION,
            config_digest: cfg.digest.clone(),
            eos: cfg.eos,
            first_timestamp: timestamps.clone().min(),
            last_timestamp: timestamps.max(),
            rows: RowAccounting {
                ingested: ingest.total_rows,
                corrected: points.len(),
                excluded,
                failed,
            },
            map: MapSummary {
                n_ref_speed_rpm: map.n_ref_speed,
                head_coeffs: map.head_coeffs,
                power_coeffs: map.power_coeffs,
                flow_range_kg_s: map.flow_range,
            },
            points,
            deviation,
            issues,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Two-column `row delta%` series, one line per compared point.
    pub fn series(&self, head: bool) -> String {
        let mut out = String::from(if head {
            "# row delta_head_percent\n"
        } else {
            "# row delta_power_percent\n"
        });
        for p in &self.deviation.per_point {
            let d = if head { p.delta_head } else { p.delta_power };
            out.push_str(&format!("{} {}\n", p.index, d));
        }
        out
    }

    /// Writes `report.json`, `head_deviation.dat` and `power_deviation.dat`.
    pub fn write(&self, dir: &Path) -> Result<(), CampaignError> {
        let io = |path: &Path, e: std::io::Error| CampaignError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (name, text) in [
            ("report.json", self.to_json()),
            ("head_deviation.dat", self.series(true)),
            ("power_deviation.dat", self.series(false)),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}
