//! Campaign CSV ingestion.
//!
//! Header: `timestamp,p1_bar,t1_k,p2_bar,t2_k,mass_flow_kg_s,speed_rpm,composition_id`,
//! in any column order. Pressures are converted from bar to Pa.

use std::io::Read;
use std::path::Path;

use chrono::{DateTime, Utc};

use super::config::ResolvedConfig;
use super::{CampaignError, RowIssue};
use crate::performance::OperatingPoint;

pub const COLUMNS: [&str; 8] = [
    "timestamp",
    "p1_bar",
    "t1_k",
    "p2_bar",
    "t2_k",
    "mass_flow_kg_s",
    "speed_rpm",
    "composition_id",
];

/// One accepted row.
#[derive(Debug, Clone)]
pub struct CampaignRecord {
    /// 1-based data row number (the header is row 0).
    pub row: usize,
    pub composition_id: String,
    pub point: OperatingPoint,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub total_rows: usize,
    pub records: Vec<CampaignRecord>,
    /// Rows that parsed but violate a physical precondition.
    pub excluded: Vec<RowIssue>,
    /// Rows that could not be parsed or resolved.
    pub failed: Vec<RowIssue>,
}

pub fn ingest_csv(path: &Path, cfg: &ResolvedConfig) -> Result<IngestOutcome, CampaignError> {
    let file = std::fs::File::open(path).map_err(|e| CampaignError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ingest_reader(file, cfg).map_err(|e| match e {
        CampaignError::Schema(m) => CampaignError::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn ingest_reader<R: Read>(
    reader: R,
    cfg: &ResolvedConfig,
) -> Result<IngestOutcome, CampaignError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CampaignError::Schema(e.to_string()))?
        .clone();
    let mut index = [0usize; COLUMNS.len()];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CampaignError::Schema(format!("missing column `{name}`")))?;
    }

    let mut out = IngestOutcome::default();
    for (i, result) in rdr.records().enumerate() {
        let row = i + 1;
        out.total_rows += 1;
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                out.failed
                    .push(RowIssue::new(row, "campaign::ingest_csv", e.to_string()));
                continue;
            }
        };
        match parse_row(row, &record, &index, cfg) {
            Ok(rec) => match rec.point.validate() {
                Ok(()) => out.records.push(rec),
                Err(e) => {
                    out.excluded
                        .push(RowIssue::new(row, "campaign::ingest_csv", e.to_string()))
                }
            },
            Err(reason) => out
                .failed
                .push(RowIssue::new(row, "campaign::ingest_csv", reason)),
        }
    }
    if out.total_rows > 0 && out.records.is_empty() && out.excluded.is_empty() {
        return Err(CampaignError::AllRowsFailed(out.failed));
    }
    Ok(out)
}

fn parse_row(
    row: usize,
    record: &csv::StringRecord,
    index: &[usize; COLUMNS.len()],
    cfg: &ResolvedConfig,
) -> Result<CampaignRecord, String> {
    let field = |c: usize| record.get(index[c]).unwrap_or("");
    let number = |c: usize| -> Result<f64, String> {
        let s = field(c);
        let v: f64 = s
            .parse()
            .map_err(|_| format!("column `{}`: `{s}` is not a number", COLUMNS[c]))?;
        if !v.is_finite() {
            return Err(format!("column `{}`: `{s}` is not finite", COLUMNS[c]));
        }
        Ok(v)
    };
    let timestamp: DateTime<Utc> = DateTime::parse_from_rfc3339(field(0))
        .map_err(|e| format!("column `timestamp`: `{}`: {e}", field(0)))?
        .with_timezone(&Utc);
    let p1 = number(1)? * 1e5;
    let t1 = number(2)?;
    let p2 = number(3)? * 1e5;
    let t2 = number(4)?;
    let mass_flow = number(5)?;
    let speed = number(6)?;
    let composition_id = field(7).to_string();
    let resolved = cfg.composition(&composition_id)?;
    Ok(CampaignRecord {
        row,
        composition_id,
        point: OperatingPoint {
            timestamp,
            p1,
            t1,
            p2,
            t2,
            mass_flow,
            speed,
            comp: resolved.comp.clone(),
        },
        warnings: resolved.warning.iter().cloned().collect(),
    })
}
