//! Seeded synthetic campaigns from a ground-truth characteristic.
//!
//! The machine obeys volumetric similarity at the reference inlet: a point
//! drawn at equivalent flow `m_eq` and speed `N` has inlet volume flow
//! `m_eq v1_ref N/N_ref`, head `H(m_eq) (N/N_ref)^2` and efficiency `E(m_eq)`,
//! whatever its actual inlet state. The discharge pressure and temperature
//! are then solved so that the analyzer returns exactly that head and
//! efficiency.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{
    resolve_composition, CompositionSource, CompositionTable, MapSettings, ReferenceSpec, RunConfig,
};
use super::ingest::COLUMNS;
use super::CampaignError;
use crate::correction::{CorrectionSettings, ReferenceConditions};
use crate::performance::{analyze_point, OperatingPoint, PerformanceError};
use crate::refmap::{eval_cubic, fit_cubic, FitStats, ReferenceMap};
use crate::roots::{find_root, RootOptions};
use crate::thermo::{
    self, evaluate_state, polytropic_exponent, ComponentDb, EosModel, GasComposition,
};

/// Samples of the ground-truth power curve used for its cubic fit.
const POWER_SAMPLES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationMode {
    /// Uniform in `[-a, a]`.
    #[default]
    Uniform,
    /// `-a` or `+a` with equal probability.
    Edges,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub n_ref_speed_rpm: f64,
    /// J/kg against equivalent flow, kg/s, at `n_ref_speed_rpm`.
    pub head_coeffs: [f64; 4],
    pub efficiency_coeffs: [f64; 4],
    pub flow_range_kg_s: [f64; 2],
    pub speed_range_rpm: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    /// Relative inlet-pressure amplitude.
    #[serde(default)]
    pub p1_rel: f64,
    #[serde(default)]
    pub p1_mode: PerturbationMode,
    /// Inlet-temperature amplitude, K.
    #[serde(default)]
    pub t1_k: f64,
    #[serde(default)]
    pub t1_mode: PerturbationMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub composition: String,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub points: usize,
    pub start: DateTime<Utc>,
    #[serde(default = "default_interval")]
    pub interval_s: i64,
    #[serde(default)]
    pub eos: EosModel,
    pub reference: ReferenceSpec,
    pub truth: GroundTruth,
    #[serde(default)]
    pub perturbation: Perturbation,
    /// Compositions of the generated rows; the reference composition if empty.
    #[serde(default)]
    pub variants: Vec<Variant>,
    pub compositions: CompositionTable,
    #[serde(default)]
    pub correction: CorrectionSettings,
}

fn default_interval() -> i64 {
    600
}

fn scenario_error(message: impl Into<String>) -> CampaignError {
    CampaignError::Scenario(message.into())
}

/// One generated row.
#[derive(Debug, Clone)]
pub struct SynthRow {
    pub composition_id: String,
    pub point: OperatingPoint,
    pub equivalent_flow: f64,
    pub head: f64,
    pub eta: f64,
}

/// Generated campaign with its ground truth.
#[derive(Debug, Clone)]
pub struct SynthCampaign {
    pub rows: Vec<SynthRow>,
    pub truth_map: ReferenceMap,
    pub config: RunConfig,
    pub compositions: CompositionTable,
}

struct Draw {
    m_eq: f64,
    speed: f64,
    p1: f64,
    t1: f64,
    variant: usize,
}

struct Prepared {
    reference: ReferenceConditions,
    variants: Vec<(String, GasComposition, f64)>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CampaignError> {
        toml::from_str(text).map_err(|e| scenario_error(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CampaignError> {
        let text = std::fs::read_to_string(path).map_err(|e| CampaignError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    fn prepare(&self, db: &ComponentDb) -> Result<Prepared, CampaignError> {
        let t = &self.truth;
        if self.points == 0 {
            return Err(scenario_error("points must be at least 1"));
        }
        if !(t.n_ref_speed_rpm > 0.0) {
            return Err(scenario_error(format!(
                "truth.n_ref_speed_rpm = {}",
                t.n_ref_speed_rpm
            )));
        }
        let [m_lo, m_hi] = t.flow_range_kg_s;
        if !(m_lo > 0.0 && m_lo < m_hi) {
            return Err(scenario_error(format!(
                "truth.flow_range_kg_s = [{m_lo}, {m_hi}]"
            )));
        }
        let [n_lo, n_hi] = t.speed_range_rpm;
        if !(n_lo > 0.0 && n_lo <= n_hi) {
            return Err(scenario_error(format!(
                "truth.speed_range_rpm = [{n_lo}, {n_hi}]"
            )));
        }
        let pert = &self.perturbation;
        if !(pert.p1_rel >= 0.0 && pert.p1_rel < 1.0) {
            return Err(scenario_error(format!(
                "perturbation.p1_rel = {}",
                pert.p1_rel
            )));
        }
        if !(pert.t1_k >= 0.0 && pert.t1_k < self.reference.t1_k) {
            return Err(scenario_error(format!("perturbation.t1_k = {}", pert.t1_k)));
        }
        for i in 0..=20 {
            let m = m_lo + (m_hi - m_lo) * i as f64 / 20.0;
            let h = eval_cubic(&t.head_coeffs, m);
            if !(h > 0.0) {
                return Err(scenario_error(format!(
                    "truth.head_coeffs give head {h} J/kg at {m} kg/s"
                )));
            }
            let e = eval_cubic(&t.efficiency_coeffs, m);
            if !(e > 0.0 && e <= thermo::ETA_MAX) {
                return Err(scenario_error(format!(
                    "truth.efficiency_coeffs give efficiency {e} at {m} kg/s"
                )));
            }
        }

        let comp_of = |id: &str| -> Result<GasComposition, CampaignError> {
            let f = self
                .compositions
                .get(id)
                .ok_or_else(|| scenario_error(format!("unknown composition `{id}`")))?;
            resolve_composition(db, f)
                .map(|r| r.comp)
                .map_err(|e| scenario_error(format!("composition `{id}`: {e}")))
        };
        let comp_ref = match &self.reference.composition {
            CompositionSource::Id(id) => comp_of(id)?,
            CompositionSource::Inline(f) => {
                resolve_composition(db, f)
                    .map_err(|e| scenario_error(format!("reference composition: {e}")))?
                    .comp
            }
        };
        let reference =
            ReferenceConditions::new(self.reference.p1_bar * 1e5, self.reference.t1_k, comp_ref)
                .map_err(|e| scenario_error(e.to_string()))?;

        let variants = if self.variants.is_empty() {
            let id = match &self.reference.composition {
                CompositionSource::Id(id) => id.clone(),
                CompositionSource::Inline(_) => {
                    return Err(scenario_error(
                        "variants are required when the reference composition is inline",
                    ))
                }
            };
            vec![(id, reference.comp_ref.clone(), 1.0)]
        } else {
            self.variants
                .iter()
                .map(|v| {
                    if !(v.weight > 0.0 && v.weight.is_finite()) {
                        return Err(scenario_error(format!(
                            "variant `{}` weight {}",
                            v.composition, v.weight
                        )));
                    }
                    Ok((v.composition.clone(), comp_of(&v.composition)?, v.weight))
                })
                .collect::<Result<_, _>>()?
        };
        Ok(Prepared {
            reference,
            variants,
        })
    }

    fn draws(&self, variants: &[(String, GasComposition, f64)]) -> Vec<Draw> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let t = &self.truth;
        let pert = &self.perturbation;
        let total_weight: f64 = variants.iter().map(|v| v.2).sum();
        let offset = |rng: &mut ChaCha8Rng, a: f64, mode: PerturbationMode| -> f64 {
            let u: f64 = rng.gen();
            match mode {
                PerturbationMode::Uniform => a * (2.0 * u - 1.0),
                PerturbationMode::Edges if u < 0.5 => -a,
                PerturbationMode::Edges => a,
            }
        };
        (0..self.points)
            .map(|_| {
                let m_eq = rng.gen_range(t.flow_range_kg_s[0]..=t.flow_range_kg_s[1]);
                let speed = rng.gen_range(t.speed_range_rpm[0]..=t.speed_range_rpm[1]);
                let dp = offset(&mut rng, pert.p1_rel, pert.p1_mode);
                let dt = offset(&mut rng, pert.t1_k, pert.t1_mode);
                let mut pick = rng.gen::<f64>() * total_weight;
                let mut variant = variants.len() - 1;
                for (i, v) in variants.iter().enumerate() {
                    if pick < v.2 {
                        variant = i;
                        break;
                    }
                    pick -= v.2;
                }
                Draw {
                    m_eq,
                    speed,
                    p1: self.reference.p1_bar * 1e5 * (1.0 + dp),
                    t1: self.reference.t1_k + dt,
                    variant,
                }
            })
            .collect()
    }

    /// Generates the campaign. Rows are computed in parallel; the result
    /// depends only on the scenario and `db`.
    pub fn generate(&self, db: &ComponentDb) -> Result<SynthCampaign, CampaignError> {
        let prep = self.prepare(db)?;
        let draws = self.draws(&prep.variants);
        let model = self.eos;
        let t = &self.truth;
        let ref_state = evaluate_state(
            prep.reference.p1_ref,
            prep.reference.t1_ref,
            &prep.reference.comp_ref,
            model,
        )
        .map_err(|e| scenario_error(format!("reference state: {e}")))?;
        let v1_ref = ref_state.v;

        let rows = draws
            .par_iter()
            .enumerate()
            .map(|(i, d)| {
                let (id, comp, _) = &prep.variants[d.variant];
                let s = d.speed / t.n_ref_speed_rpm;
                let head = eval_cubic(&t.head_coeffs, d.m_eq) * s * s;
                let eta = eval_cubic(&t.efficiency_coeffs, d.m_eq);
                let inlet = evaluate_state(d.p1, d.t1, comp, model)
                    .map_err(|e| scenario_error(format!("point {i}: inlet state: {e}")))?;
                let mass_flow = d.m_eq * (v1_ref / inlet.v) * s;
                let (p2, t2) = discharge_for(d.p1, d.t1, comp, head, eta, model)
                    .map_err(|e| scenario_error(format!("point {i}: {e}")))?;
                Ok(SynthRow {
                    composition_id: id.clone(),
                    point: OperatingPoint {
                        timestamp: self.start + Duration::seconds(self.interval_s * i as i64),
                        p1: d.p1,
                        t1: d.t1,
                        p2,
                        t2,
                        mass_flow,
                        speed: d.speed,
                        comp: comp.clone(),
                    },
                    equivalent_flow: d.m_eq,
                    head,
                    eta,
                })
            })
            .collect::<Result<Vec<_>, CampaignError>>()?;

        let truth_map = self.truth_map(&prep.reference)?;
        let mut compositions = CompositionTable::new();
        for (id, f) in &self.compositions {
            compositions.insert(id.clone(), f.clone());
        }
        let config = RunConfig {
            eos: model,
            component_db: None,
            compositions_file: Some(PathBuf::from("compositions.toml")),
            reference: self.reference.clone(),
            correction: self.correction,
            map: MapSettings {
                n_ref_speed_rpm: Some(t.n_ref_speed_rpm),
            },
            compositions: IndexMap::new(),
        };
        Ok(SynthCampaign {
            rows,
            truth_map,
            config,
            compositions,
        })
    }

    /// Ground-truth head cubic and a cubic fit of `m H(m) / E(m)` for power.
    fn truth_map(&self, reference: &ReferenceConditions) -> Result<ReferenceMap, CampaignError> {
        let t = &self.truth;
        let [lo, hi] = t.flow_range_kg_s;
        let m: Vec<f64> = (0..POWER_SAMPLES)
            .map(|i| lo + (hi - lo) * i as f64 / (POWER_SAMPLES - 1) as f64)
            .collect();
        let power: Vec<f64> = m
            .iter()
            .map(|&mi| mi * eval_cubic(&t.head_coeffs, mi) / eval_cubic(&t.efficiency_coeffs, mi))
            .collect();
        let power_coeffs = fit_cubic(&m, &power)?;
        let (mut sq, mut max_rel) = (0.0, 0.0f64);
        for (mi, pi) in m.iter().zip(&power) {
            let r = eval_cubic(&power_coeffs, *mi) - pi;
            sq += r * r;
            max_rel = max_rel.max((r / pi).abs());
        }
        let map = ReferenceMap {
            reference: reference.clone(),
            n_ref_speed: t.n_ref_speed_rpm,
            head_coeffs: t.head_coeffs,
            power_coeffs,
            flow_range: t.flow_range_kg_s,
            fit_stats: FitStats {
                point_count: POWER_SAMPLES,
                head_rms: 0.0,
                head_max_rel: 0.0,
                power_rms: (sq / POWER_SAMPLES as f64).sqrt(),
                power_max_rel: max_rel,
            },
        };
        map.validate()?;
        Ok(map)
    }
}

/// Discharge temperature at which the measured path exponent
/// `ln(p2/p1)/ln(v1/v2)` equals the mean of the endpoint exponents at `eta`,
/// so that [`analyze_point`] returns `eta` for `(p1, t1) -> (p2, t2)`.
pub fn discharge_temperature(
    p1: f64,
    t1: f64,
    p2: f64,
    comp: &GasComposition,
    eta: f64,
    model: EosModel,
) -> Result<f64, PerformanceError> {
    let inlet = evaluate_state(p1, t1, comp, model)?;
    let n1 = polytropic_exponent(inlet.x, inlet.y, inlet.k, eta)?;
    let ln_rp = (p2 / p1).ln();
    let g = |t2: f64| -> Result<f64, PerformanceError> {
        let d = evaluate_state(p2, t2, comp, model)?;
        let n2 = polytropic_exponent(d.x, d.y, d.k, eta)?;
        Ok((inlet.v / d.v).ln() - 2.0 * ln_rp / (n1 + n2))
    };
    let opts = RootOptions {
        f_tol: 1e-15,
        x_tol: 1e-15,
        bisections: 6,
        max_iter: 200,
    };
    find_root(g, t1, (3.0 * t1).min(thermo::T_MAX), opts)
}

/// Discharge `(p2, t2)` at which [`analyze_point`] returns `head` and `eta`
/// for inlet `(p1, t1)`; `p2` is bracketed and solved on head.
pub fn discharge_for(
    p1: f64,
    t1: f64,
    comp: &GasComposition,
    head: f64,
    eta: f64,
    model: EosModel,
) -> Result<(f64, f64), PerformanceError> {
    let point_at = |p2: f64| -> Result<OperatingPoint, PerformanceError> {
        Ok(OperatingPoint {
            timestamp: DateTime::<Utc>::UNIX_EPOCH,
            p1,
            t1,
            p2,
            t2: discharge_temperature(p1, t1, p2, comp, eta, model)?,
            mass_flow: 1.0,
            speed: 1.0,
            comp: comp.clone(),
        })
    };
    let head_gap = |p2: f64| -> Result<f64, PerformanceError> {
        Ok(analyze_point(&point_at(p2)?, model)?.head - head)
    };

    let lo = p1 * 1.001;
    if head_gap(lo)? >= 0.0 {
        return Err(PerformanceError::InvalidPoint(format!(
            "head {head} J/kg is below the smallest generated pressure ratio"
        )));
    }
    let mut hi = p1 * 1.5;
    while head_gap(hi)? < 0.0 {
        if hi >= thermo::P_MAX {
            return Err(PerformanceError::InvalidPoint(format!(
                "head {head} J/kg not reached below {} Pa",
                thermo::P_MAX
            )));
        }
        hi = (hi * 1.5).min(thermo::P_MAX);
    }
    let opts = RootOptions {
        f_tol: 1e-11 * head,
        x_tol: 1e-15,
        bisections: 4,
        max_iter: 200,
    };
    let p2 = find_root(head_gap, lo, hi, opts)?;
    Ok((p2, discharge_temperature(p1, t1, p2, comp, eta, model)?))
}

fn number(v: f64) -> String {
    format!("{v}")
}

impl SynthCampaign {
    /// Campaign CSV with full-precision decimals, LF line ends.
    pub fn csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for r in &self.rows {
            let p = &r.point;
            let fields = [
                p.timestamp
                    .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                number(p.p1 / 1e5),
                number(p.t1),
                number(p.p2 / 1e5),
                number(p.t2),
                number(p.mass_flow),
                number(p.speed),
                r.composition_id.clone(),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn compositions_toml(&self) -> String {
        toml::to_string(&self.compositions).expect("composition table serializes")
    }

    /// Writes `campaign.csv`, `compositions.toml`, `config.toml` and
    /// `ground_truth_map.toml` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CampaignError> {
        let io = |path: &Path, e: std::io::Error| CampaignError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let files = [
            ("campaign.csv", self.csv()),
            ("compositions.toml", self.compositions_toml()),
            ("config.toml", self.config.to_toml()),
            ("ground_truth_map.toml", self.truth_map.to_toml()),
        ];
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}
