use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polycorr::campaign::config::{resolve_composition, ResolvedConfig, RunConfig};
use polycorr::campaign::ingest::{ingest_csv, IngestOutcome};
use polycorr::campaign::report::ReportDocument;
use polycorr::campaign::synth::Scenario;
use polycorr::campaign::{analyze_records, process_records, RowIssue};
use polycorr::refmap::{fit_reference_map, ReferenceMap};
use polycorr::thermo::{evaluate_state, ComponentDb, EosModel};
use serde::Serialize;

/// Real-gas correction of centrifugal compressor performance to reference
/// inlet conditions.
#[derive(Parser)]
#[command(name = "polycorr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the thermodynamic state at one pressure and temperature.
    Props(PropsArgs),
    /// Uncorrected polytropic analysis of every campaign row.
    Analyze(RunArgs),
    /// Analyze and correct every campaign row to the reference conditions.
    Correct(RunArgs),
    /// Fit a reference map to the corrected campaign.
    FitMap(FitArgs),
    /// Compare a corrected campaign against a reference map.
    Verify(VerifyArgs),
    /// Generate a synthetic campaign from a scenario file.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured equation of state.
    #[arg(long)]
    eos: Option<EosModel>,
}

#[derive(Args)]
struct PropsArgs {
    /// Run configuration; supplies the database and named compositions.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    eos: Option<EosModel>,
    /// Pressure, bar.
    #[arg(long)]
    p_bar: f64,
    /// Temperature, K.
    #[arg(long)]
    t_k: f64,
    /// Composition id from the config, or `NAME=fraction,...`.
    #[arg(long)]
    composition: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Campaign CSV.
    #[arg(long)]
    points: PathBuf,
    /// Output directory; results go to stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    points: PathBuf,
    /// Map file to write; defaults to `<out>/map.toml`.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    points: PathBuf,
    /// Reference map file.
    #[arg(long)]
    map: PathBuf,
    /// Directory for the report and plot series.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for the campaign, compositions, run config and ground-truth map.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

type Fatal = Box<dyn std::error::Error>;

/// Rows reported on stderr; a nonzero count makes the run partial.
struct Outcome {
    failed: Vec<RowIssue>,
}

impl Outcome {
    fn complete() -> Self {
        Self { failed: Vec::new() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Props(a) => props(a),
        Command::Analyze(a) => analyze(a),
        Command::Correct(a) => correct(a),
        Command::FitMap(a) => fit_map(a),
        Command::Verify(a) => verify(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(o) if o.failed.is_empty() => ExitCode::SUCCESS,
        Ok(o) => {
            for issue in &o.failed {
                eprintln!("warning: {issue}");
            }
            eprintln!("{} row(s) failed", o.failed.len());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_config(common: &Common) -> Result<ResolvedConfig, Fatal> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(eos) = common.eos {
        cfg.eos = eos;
    }
    Ok(cfg)
}

fn ingest(points: &Path, cfg: &ResolvedConfig) -> Result<IngestOutcome, Fatal> {
    let outcome = ingest_csv(points, cfg)?;
    for issue in &outcome.excluded {
        eprintln!("excluded: {issue}");
    }
    Ok(outcome)
}

fn writer(out: Option<&Path>, name: &str) -> Result<Box<dyn Write>, Fatal> {
    Ok(match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Box::new(std::fs::File::create(dir.join(name))?)
        }
        None => Box::new(std::io::stdout().lock()),
    })
}

fn props(a: PropsArgs) -> Result<Outcome, Fatal> {
    let cfg = a.config.as_deref().map(RunConfig::load).transpose()?;
    let db = cfg
        .as_ref()
        .map(|c| c.db.clone())
        .unwrap_or_else(ComponentDb::bundled);
    let eos = a.eos.or(cfg.as_ref().map(|c| c.eos)).unwrap_or_default();
    let comp = if a.composition.contains('=') {
        let mut fractions = polycorr::campaign::config::CompositionTable::new();
        let entry = fractions.entry(String::new()).or_default();
        for part in a.composition.split(',') {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| format!("composition entry `{part}` is not NAME=fraction"))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| format!("composition entry `{part}`: bad fraction"))?;
            entry.insert(name.trim().to_string(), value);
        }
        resolve_composition(&db, entry)?.comp
    } else {
        let cfg = cfg
            .as_ref()
            .ok_or("a composition id needs --config; otherwise pass NAME=fraction,...")?;
        cfg.composition(&a.composition)?.comp.clone()
    };
    let state = evaluate_state(a.p_bar * 1e5, a.t_k, &comp, eos)?;
    match writeln!(std::io::stdout().lock(), "{state}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(Outcome::complete()),
    }
}

#[derive(Serialize)]
struct AnalysisRow {
    row: usize,
    timestamp: String,
    composition_id: String,
    n_inlet: f64,
    n_discharge: f64,
    n_avg: f64,
    k_avg: f64,
    x_avg: f64,
    y_avg: f64,
    eta: f64,
    schultz_f: f64,
    head_j_kg: f64,
    power_w: f64,
}

fn analyze(a: RunArgs) -> Result<Outcome, Fatal> {
    let cfg = load_config(&a.common)?;
    let ingested = ingest(&a.points, &cfg)?;
    let results = analyze_records(&ingested.records, &cfg);
    let mut failed = ingested.failed.clone();
    let mut w = csv::Writer::from_writer(writer(a.out.as_deref(), "analysis.csv")?);
    for (rec, res) in ingested.records.iter().zip(results) {
        match res {
            Ok(s) => w.serialize(AnalysisRow {
                row: rec.row,
                timestamp: rec.point.timestamp.to_rfc3339(),
                composition_id: rec.composition_id.clone(),
                n_inlet: s.n_inlet,
                n_discharge: s.n_discharge,
                n_avg: s.n_avg,
                k_avg: s.k_avg,
                x_avg: s.x_avg,
                y_avg: s.y_avg,
                eta: s.eta,
                schultz_f: s.schultz_f,
                head_j_kg: s.head,
                power_w: s.power,
            })?,
            Err(issue) => failed.push(issue),
        }
    }
    w.flush()?;
    failed.sort_by_key(|i| i.row);
    Ok(Outcome { failed })
}

#[derive(Serialize)]
struct CorrectedRow {
    row: usize,
    timestamp: String,
    composition_id: String,
    eta: f64,
    n: f64,
    head_j_kg: f64,
    power_w: f64,
    p2_c_pa: f64,
    t2_c_k: f64,
    n_c: f64,
    schultz_f_c: f64,
    head_c_j_kg: f64,
    power_c_w: f64,
    speed_c_rpm: f64,
    mass_flow_c_kg_s: f64,
    iterations: usize,
    final_delta: f64,
    converged: bool,
    warnings: String,
}

fn correct(a: RunArgs) -> Result<Outcome, Fatal> {
    let cfg = load_config(&a.common)?;
    let ingested = ingest(&a.points, &cfg)?;
    let processed = process_records(&ingested.records, &cfg);
    let mut failed = ingested.failed.clone();
    let mut w = csv::Writer::from_writer(writer(a.out.as_deref(), "corrected.csv")?);
    for p in processed {
        match p.outcome {
            Ok((s, c)) => {
                let mut warnings = p.record.warnings.clone();
                warnings.extend(c.warnings.iter().cloned());
                w.serialize(CorrectedRow {
                    row: p.record.row,
                    timestamp: p.record.point.timestamp.to_rfc3339(),
                    composition_id: p.record.composition_id.clone(),
                    eta: s.eta,
                    n: s.n_avg,
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
                    warnings: warnings.join("; "),
                })?
            }
            Err(issue) => failed.push(issue),
        }
    }
    w.flush()?;
    failed.sort_by_key(|i| i.row);
    Ok(Outcome { failed })
}

fn fit_map(a: FitArgs) -> Result<Outcome, Fatal> {
    let target = match (&a.map, &a.out) {
        (Some(m), _) => m.clone(),
        (None, Some(dir)) => dir.join("map.toml"),
        (None, None) => return Err("fit-map needs --map or --out".into()),
    };
    let cfg = load_config(&a.common)?;
    let ingested = ingest(&a.points, &cfg)?;
    let processed = process_records(&ingested.records, &cfg);
    let mut failed = ingested.failed.clone();
    let mut points = Vec::new();
    for p in processed {
        match p.outcome {
            Ok((_, c)) => points.push(c),
            Err(issue) => failed.push(issue),
        }
    }
    let map = fit_reference_map(&points, &cfg.reference, cfg.n_ref_speed)
        .map_err(|e| format!("refmap::fit_reference_map: {e}"))?;
    if let Some(dir) = target.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    map.save(&target)?;
    eprintln!(
        "map written to {} ({} points, head rms {} J/kg)",
        target.display(),
        map.fit_stats.point_count,
        map.fit_stats.head_rms
    );
    failed.sort_by_key(|i| i.row);
    Ok(Outcome { failed })
}

fn verify(a: VerifyArgs) -> Result<Outcome, Fatal> {
    let cfg = load_config(&a.common)?;
    let map = ReferenceMap::load(&a.map, &cfg.db)?;
    let ingested = ingest(&a.points, &cfg)?;
    let processed = process_records(&ingested.records, &cfg);
    let report = ReportDocument::build(&cfg, &ingested, &processed, &map);
    report.write(&a.out)?;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |d| format!("{d:.4} %"));
    eprintln!(
        "rows: {} ingested, {} corrected, {} excluded, {} failed",
        report.rows.ingested, report.rows.corrected, report.rows.excluded, report.rows.failed
    );
    eprintln!(
        "avg head deviation {}, avg power deviation {} over {} points ({} excluded from averages)",
        fmt(report.deviation.avg_delta_head),
        fmt(report.deviation.avg_delta_power),
        report.deviation.eligible_count,
        report.deviation.excluded_count
    );
    let failed = report
        .issues
        .iter()
        .filter(|i| !ingested.excluded.contains(i))
        .cloned()
        .collect();
    Ok(Outcome { failed })
}

fn synth(a: SynthArgs) -> Result<Outcome, Fatal> {
    let mut scenario = Scenario::load(&a.config)?;
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    }
    let db = match std::env::var_os(polycorr::campaign::config::COMPONENT_DB_ENV) {
        Some(p) => ComponentDb::load(Path::new(&p))?,
        None => ComponentDb::bundled(),
    };
    let campaign = scenario.generate(&db)?;
    campaign.write(&a.out)?;
    eprintln!(
        "{} points written to {}",
        campaign.rows.len(),
        a.out.display()
    );
    Ok(Outcome::complete())
}
