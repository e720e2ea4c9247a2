//! Run configuration: reference conditions, equation of state, correction
//! settings and the composition table rows refer to.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CampaignError;
use crate::correction::{CorrectionSettings, ReferenceConditions};
use crate::thermo::{ComponentDb, EosModel, GasComposition};

/// Environment variable that overrides the component database path.
pub const COMPONENT_DB_ENV: &str = "POLYCORR_COMPONENT_DB";

/// Largest departure from unity a composition may have before it is rejected;
/// smaller departures are renormalized with a warning.
pub const COMPOSITION_SUM_TOLERANCE: f64 = 1e-3;

/// Composition id to ordered `component -> mole fraction`.
pub type CompositionTable = IndexMap<String, IndexMap<String, f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CompositionSource {
    Id(String),
    Inline(IndexMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub p1_bar: f64,
    pub t1_k: f64,
    pub composition: CompositionSource,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSettings {
    /// Normalization speed of fitted maps; median corrected speed if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_ref_speed_rpm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub eos: EosModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component_db: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compositions_file: Option<PathBuf>,
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub correction: CorrectionSettings,
    #[serde(default)]
    pub map: MapSettings,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub compositions: CompositionTable,
}

/// A composition table entry checked against the database.
#[derive(Debug, Clone)]
pub struct ResolvedComposition {
    pub comp: GasComposition,
    /// Set when the fractions were renormalized.
    pub warning: Option<String>,
}

/// Everything a run needs, validated.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub eos: EosModel,
    pub db: ComponentDb,
    pub reference: ReferenceConditions,
    pub correction: CorrectionSettings,
    pub n_ref_speed: Option<f64>,
    /// Per id; `Err` holds the reason rows using it fail.
    pub compositions: IndexMap<String, Result<ResolvedComposition, String>>,
    /// Hex SHA-256 over the config, composition file and database contents.
    pub digest: String,
}

impl ResolvedConfig {
    pub fn composition(&self, id: &str) -> Result<&ResolvedComposition, String> {
        match self.compositions.get(id) {
            Some(Ok(c)) => Ok(c),
            Some(Err(e)) => Err(e.clone()),
            None => Err(format!("unknown composition id `{id}`")),
        }
    }
}

fn read(path: &Path) -> Result<String, CampaignError> {
    std::fs::read_to_string(path).map_err(|e| CampaignError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn config_error(path: &Path, message: impl Into<String>) -> CampaignError {
    CampaignError::Config {
        path: path.display().to_string(),
        message: message.into(),
    }
}

pub fn parse_composition_table(text: &str, path: &Path) -> Result<CompositionTable, CampaignError> {
    toml::from_str(text).map_err(|e| config_error(path, e.to_string()))
}

/// Checks one table entry: unknown components and a sum off by more than
/// [`COMPOSITION_SUM_TOLERANCE`] are errors.
pub fn resolve_composition(
    db: &ComponentDb,
    fractions: &IndexMap<String, f64>,
) -> Result<ResolvedComposition, String> {
    let entries: Vec<(&str, f64)> = fractions.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let sum: f64 = entries.iter().map(|e| e.1).sum();
    if !((sum - 1.0).abs() <= COMPOSITION_SUM_TOLERANCE) {
        return Err(format!(
            "mole fractions sum to {sum}, more than {COMPOSITION_SUM_TOLERANCE} from 1"
        ));
    }
    let comp = GasComposition::normalized(db, &entries).map_err(|e| e.to_string())?;
    let warning = ((sum - 1.0).abs() > crate::thermo::FRACTION_SUM_TOLERANCE)
        .then(|| format!("mole fractions sum to {sum}; renormalized"));
    Ok(ResolvedComposition { comp, warning })
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, CampaignError> {
        toml::from_str(text).map_err(|e| config_error(path, e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads, validates and resolves a config file. Relative paths inside it
    /// are taken from the config's directory.
    pub fn load(path: &Path) -> Result<ResolvedConfig, CampaignError> {
        let text = read(path)?;
        let cfg = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(&text, base, path)
    }

    fn resolve(
        &self,
        text: &str,
        base: &Path,
        path: &Path,
    ) -> Result<ResolvedConfig, CampaignError> {
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());

        let db_path = std::env::var_os(COMPONENT_DB_ENV)
            .map(PathBuf::from)
            .or_else(|| self.component_db.as_ref().map(|p| base.join(p)));
        hasher.update([0u8]);
        let db = match &db_path {
            Some(p) => {
                let db_text = read(p)?;
                hasher.update(db_text.as_bytes());
                ComponentDb::parse(&db_text).map_err(|e| config_error(p, e.to_string()))?
            }
            None => {
                hasher.update(crate::thermo::BUNDLED_DATABASE.as_bytes());
                ComponentDb::bundled()
            }
        };

        let mut table = self.compositions.clone();
        hasher.update([0u8]);
        if let Some(file) = &self.compositions_file {
            let file = base.join(file);
            let file_text = read(&file)?;
            hasher.update(file_text.as_bytes());
            for (id, fractions) in parse_composition_table(&file_text, &file)? {
                if table.insert(id.clone(), fractions).is_some() {
                    return Err(config_error(
                        path,
                        format!("composition `{id}` defined twice"),
                    ));
                }
            }
        }

        let compositions: IndexMap<_, _> = table
            .iter()
            .map(|(id, f)| (id.clone(), resolve_composition(&db, f)))
            .collect();

        let spec = &self.reference;
        let comp_ref = match &spec.composition {
            CompositionSource::Id(id) => match compositions.get(id) {
                Some(Ok(c)) => c.comp.clone(),
                Some(Err(e)) => {
                    return Err(config_error(
                        path,
                        format!("reference composition `{id}`: {e}"),
                    ))
                }
                None => {
                    return Err(config_error(
                        path,
                        format!("unknown reference composition `{id}`"),
                    ))
                }
            },
            CompositionSource::Inline(f) => {
                resolve_composition(&db, f)
                    .map_err(|e| config_error(path, format!("reference composition: {e}")))?
                    .comp
            }
        };
        if !(spec.p1_bar.is_finite() && spec.t1_k.is_finite()) {
            return Err(config_error(path, "reference conditions must be finite"));
        }
        let reference = ReferenceConditions::new(spec.p1_bar * 1e5, spec.t1_k, comp_ref)
            .map_err(|e| config_error(path, e.to_string()))?;
        self.correction
            .validate()
            .map_err(|e| config_error(path, e.to_string()))?;
        if let Some(n) = self.map.n_ref_speed_rpm {
            if !(n > 0.0 && n.is_finite()) {
                return Err(config_error(path, format!("map.n_ref_speed_rpm = {n}")));
            }
        }

        Ok(ResolvedConfig {
            eos: self.eos,
            db,
            reference,
            correction: self.correction,
            n_ref_speed: self.map.n_ref_speed_rpm,
            compositions,
            digest: hex::encode(hasher.finalize()),
        })
    }
}
