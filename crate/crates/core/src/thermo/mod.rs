//! Real-gas property engine: Peng-Robinson with one-fluid mixing, plus the
//! Schultz compressibility functions and polytropic exponent.

mod component;
mod composition;
mod eos;
mod exponents;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use component::{ComponentData, ComponentDb, BUNDLED_DATABASE};
pub use composition::{
    mixture_molecular_weight, Constituent, GasComposition, FRACTION_SUM_TOLERANCE,
};
pub use eos::{evaluate_state, P_MAX, T_MAX, T_MIN};
pub use exponents::{
    exponent_calc, polytropic_exponent, state_exponents, SchultzExponents, ETA_MAX,
};

/// Universal gas constant, Pa m^3/(kmol K).
pub const R: f64 = 8314.3;

/// Datum of the ideal-gas enthalpy and entropy (h = 0, s = 0 per component).
pub const T_DATUM: f64 = 298.15;
pub const P_DATUM: f64 = 1.0e5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermoError {
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("component database, line {line}: {message}")]
    Database { line: usize, message: String },
    #[error("invalid composition: {0}")]
    Composition(String),
    #[error("{quantity} = {value} is outside the property range [{min}, {max}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("no vapour root of the EOS at P = {pressure} Pa, T = {temperature} K")]
    NoVaporRoot { pressure: f64, temperature: f64 },
    #[error("unphysical exponent combination: {0}")]
    Exponent(String),
}

/// Equation-of-state selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EosModel {
    /// Peng-Robinson cubic.
    #[default]
    Real,
    /// z = 1 with the same ideal-gas heat capacities.
    Ideal,
}

impl std::str::FromStr for EosModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" => Ok(Self::Real),
            "ideal" => Ok(Self::Ideal),
            other => Err(format!(
                "unknown EOS mode `{other}` (expected real or ideal)"
            )),
        }
    }
}

impl std::fmt::Display for EosModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Real => "real",
            Self::Ideal => "ideal",
        })
    }
}

/// Full property evaluation at one (P, T, composition). SI, mass basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermoState {
    /// Pa
    pub pressure: f64,
    /// K
    pub temperature: f64,
    pub z: f64,
    /// J/(kg K)
    pub cp: f64,
    /// J/kg
    pub h: f64,
    /// J/(kg K)
    pub s: f64,
    /// m^3/kg
    pub v: f64,
    /// (dz/dT) at constant P, 1/K
    pub dz_dt: f64,
    /// (dz/dP) at constant T, 1/Pa
    pub dz_dp: f64,
    /// (dP/dT) at constant v, Pa/K
    pub dp_dt: f64,
    /// (dv/dT) at constant P, m^3/(kg K)
    pub dv_dt: f64,
    pub x: f64,
    pub y: f64,
    pub k: f64,
    /// kg/kmol
    pub molecular_weight: f64,
}

impl std::fmt::Display for ThermoState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "P      = {} Pa", self.pressure)?;
        writeln!(f, "T      = {} K", self.temperature)?;
        writeln!(f, "MW     = {} kg/kmol", self.molecular_weight)?;
        writeln!(f, "z      = {}", self.z)?;
        writeln!(f, "cp     = {} J/(kg K)", self.cp)?;
        writeln!(f, "h      = {} J/kg", self.h)?;
        writeln!(f, "s      = {} J/(kg K)", self.s)?;
        writeln!(f, "v      = {} m3/kg", self.v)?;
        writeln!(f, "dz/dT  = {} 1/K", self.dz_dt)?;
        writeln!(f, "dz/dP  = {} 1/Pa", self.dz_dp)?;
        writeln!(f, "dP/dT  = {} Pa/K", self.dp_dt)?;
        writeln!(f, "dv/dT  = {} m3/(kg K)", self.dv_dt)?;
        writeln!(f, "X      = {}", self.x)?;
        writeln!(f, "Y      = {}", self.y)?;
        write!(f, "k      = {}", self.k)
    }
}
