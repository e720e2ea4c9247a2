//! Iterative correction of an analyzed operating point to reference inlet
//! conditions.
//!
//! Two quantities are held fixed: the polytropic efficiency, and the ratio of
//! inlet to discharge volumetric flow, `(p2/p1)^(1/n)`. The corrected
//! discharge pressure follows from the second, the discharge temperature from
//! the matching temperature relation, and the corrected polytropic exponent
//! is iterated until the discharge-side exponent stops moving.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::performance::{
    self, head_terms, isentropic_discharge, HeadTerms, PerformanceError, PerformanceSummary,
};
use crate::thermo::{
    evaluate_state, polytropic_exponent, state_exponents, EosModel, GasComposition, ThermoError,
    ThermoState,
};

/// |dn| above which a capped loop is reported as not converged.
pub const NONCONVERGENCE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrectionError {
    #[error("invalid reference conditions: {0}")]
    InvalidReference(String),
    #[error("invalid correction settings: {0}")]
    InvalidSettings(String),
    #[error("data quality: {0}")]
    DataQuality(String),
    #[error("{step}: {source}")]
    Step {
        step: CorrectionStep,
        #[source]
        source: PerformanceError,
    },
}

/// Stage of [`correct_point`] at which a failure occurred.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionStep {
    CorrectedInlet,
    InitialExponent,
    DischargeIteration(usize),
    IsentropicState,
    SchultzHead,
    FanLaw,
}

impl std::fmt::Display for CorrectionStep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::CorrectedInlet => write!(f, "corrected inlet state"),
            Self::InitialExponent => write!(f, "initial corrected exponent"),
            Self::DischargeIteration(i) => write!(f, "corrected discharge, iteration {i}"),
            Self::IsentropicState => write!(f, "corrected isentropic state"),
            Self::SchultzHead => write!(f, "corrected Schultz factor and head"),
            Self::FanLaw => write!(f, "fan-law speed and flow"),
        }
    }
}

trait AtStep<T> {
    fn at(self, step: CorrectionStep) -> Result<T, CorrectionError>;
}

impl<T, E: Into<PerformanceError>> AtStep<T> for Result<T, E> {
    fn at(self, step: CorrectionStep) -> Result<T, CorrectionError> {
        self.map_err(|e| CorrectionError::Step {
            step,
            source: e.into(),
        })
    }
}

/// Inlet pressure, temperature and composition the performance is referred to.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceConditions {
    pub p1_ref: f64,
    pub t1_ref: f64,
    pub comp_ref: GasComposition,
}

impl ReferenceConditions {
    pub fn new(
        p1_ref: f64,
        t1_ref: f64,
        comp_ref: GasComposition,
    ) -> Result<Self, CorrectionError> {
        let r = Self {
            p1_ref,
            t1_ref,
            comp_ref,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), CorrectionError> {
        if !(self.p1_ref > 0.0 && self.p1_ref.is_finite()) {
            return Err(CorrectionError::InvalidReference(format!(
                "p1_ref = {}",
                self.p1_ref
            )));
        }
        if !(self.t1_ref > 0.0 && self.t1_ref.is_finite()) {
            return Err(CorrectionError::InvalidReference(format!(
                "t1_ref = {}",
                self.t1_ref
            )));
        }
        if self.comp_ref.is_empty() {
            return Err(CorrectionError::InvalidReference(
                "empty composition".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectionSettings {
    /// Loop cap.
    pub iteration_count: usize,
    /// Early exit once |dn_c| falls below this.
    pub early_exit_tolerance: f64,
    /// Relative inlet-pressure or pressure-ratio drift that raises a warning.
    pub max_pressure_ratio_drift: f64,
}

impl Default for CorrectionSettings {
    fn default() -> Self {
        Self {
            iteration_count: 100,
            early_exit_tolerance: 1e-10,
            max_pressure_ratio_drift: 0.10,
        }
    }
}

impl CorrectionSettings {
    pub fn validate(&self) -> Result<(), CorrectionError> {
        if self.iteration_count < 1 {
            return Err(CorrectionError::InvalidSettings(
                "iteration_count must be >= 1".into(),
            ));
        }
        if !(self.early_exit_tolerance > 0.0) {
            return Err(CorrectionError::InvalidSettings(
                "early_exit_tolerance must be positive".into(),
            ));
        }
        if !(self.max_pressure_ratio_drift > 0.0) {
            return Err(CorrectionError::InvalidSettings(
                "max_pressure_ratio_drift must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Arithmetic means of the endpoint exponents and Schultz functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedProperties {
    pub n: f64,
    pub k: f64,
    pub x: f64,
    pub y: f64,
}

pub fn average_properties(
    inlet: &ThermoState,
    discharge: &ThermoState,
    n1: f64,
    n2: f64,
) -> AveragedProperties {
    AveragedProperties {
        n: 0.5 * (n1 + n2),
        k: 0.5 * (inlet.k + discharge.k),
        x: 0.5 * (inlet.x + discharge.x),
        y: 0.5 * (inlet.y + discharge.y),
    }
}

/// Starting value of the corrected exponent: equal efficiency with the
/// corrected-inlet `k`, `X`, `Y` standing in for the unknown corrected averages.
pub fn initial_corrected_exponent(
    avg: &AveragedProperties,
    k1c: f64,
    x1c: f64,
    y1c: f64,
) -> Result<f64, PerformanceError> {
    let AveragedProperties { n, k, x, y } = *avg;
    let work = y * n * (1.0 - k);
    let denom = (k * (1.0 + x) - y * n * (k + x)) * y1c * (1.0 - k1c) + work * y1c * (k1c + x1c);
    if denom == 0.0 || !denom.is_finite() {
        return Err(PerformanceError::EfficiencyUndefined { x, y, k, n });
    }
    Ok(work * k1c * (1.0 + x1c) / denom)
}

fn check_exponents(n: f64, n_c: f64) -> Result<(), PerformanceError> {
    if !(n > 1.0 && n_c > 1.0) {
        return Err(PerformanceError::HeadUndefined(if n > 1.0 {
            n_c
        } else {
            n
        }));
    }
    Ok(())
}

/// `p2_c = p1_c (p2/p1)^(n_c/n)`: keeps `(p2/p1)^(1/n)` unchanged.
pub fn corrected_discharge_pressure(
    p1_c: f64,
    p1: f64,
    p2: f64,
    n: f64,
    n_c: f64,
) -> Result<f64, PerformanceError> {
    if !(p1_c > 0.0 && p1 > 0.0 && p2 > 0.0) {
        return Err(PerformanceError::InvalidPoint(
            "pressures must be positive".into(),
        ));
    }
    check_exponents(n, n_c)?;
    Ok(p1_c * (p2 / p1).powf(n_c / n))
}

/// `t2_c = t1_c (t2/t1)^((n_c - 1)/(n - 1))`.
pub fn corrected_discharge_temperature(
    t1_c: f64,
    t1: f64,
    t2: f64,
    n: f64,
    n_c: f64,
) -> Result<f64, PerformanceError> {
    if !(t1_c > 0.0 && t1 > 0.0 && t2 > 0.0) {
        return Err(PerformanceError::InvalidPoint(
            "temperatures must be positive".into(),
        ));
    }
    check_exponents(n, n_c)?;
    Ok(t1_c * (t2 / t1).powf((n_c - 1.0) / (n - 1.0)))
}

/// Polytropic exponent at the corrected discharge state.
pub fn corrected_discharge_exponent(
    x2c: f64,
    y2c: f64,
    k2c: f64,
    eta_c: f64,
) -> Result<f64, PerformanceError> {
    Ok(polytropic_exponent(x2c, y2c, k2c, eta_c)?)
}

/// Performance of one point referred to reference inlet conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedPoint {
    pub source: PerformanceSummary,
    pub p1_c: f64,
    pub t1_c: f64,
    pub comp_c: GasComposition,
    pub p2_c: f64,
    pub t2_c: f64,
    pub n_c: f64,
    pub n1_c: f64,
    pub n2_c: f64,
    pub eta_c: f64,
    pub ks_c: f64,
    pub f_c: f64,
    /// J/kg
    pub head_c: f64,
    /// rev/min
    pub speed_c: f64,
    /// kg/s
    pub mass_flow_c: f64,
    /// W
    pub power_c: f64,
    pub iterations_used: usize,
    /// |dn_c| of the last loop pass.
    pub final_delta: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
    pub inlet_state_c: ThermoState,
    pub discharge_state_c: ThermoState,
    pub isentropic_state_c: ThermoState,
}

impl CorrectedPoint {
    /// `(p2_c/p1_c)^(1/n_c)`, the preserved inlet-to-discharge volume-flow ratio.
    pub fn volume_flow_ratio(&self) -> f64 {
        (self.p2_c / self.p1_c).powf(1.0 / self.n_c)
    }

    /// The corrected point as an analyzed point at reference inlet
    /// conditions, carrying `eta_c` rather than re-measuring it.
    pub fn to_summary(&self) -> Result<PerformanceSummary, CorrectionError> {
        let step = CorrectionStep::CorrectedInlet;
        let inlet = &self.inlet_state_c;
        let discharge = &self.discharge_state_c;
        let n_inlet = state_exponents(inlet, self.eta_c).at(step)?.n;
        let n_discharge = state_exponents(discharge, self.eta_c).at(step)?.n;
        let avg = average_properties(inlet, discharge, n_inlet, n_discharge);
        let point = performance::OperatingPoint {
            timestamp: self.source.point.timestamp,
            p1: self.p1_c,
            t1: self.t1_c,
            p2: self.p2_c,
            t2: self.t2_c,
            mass_flow: self.mass_flow_c,
            speed: self.speed_c,
            comp: self.comp_c.clone(),
        };
        Ok(PerformanceSummary {
            point,
            n_measured: (self.p2_c / self.p1_c).ln() / (inlet.v / discharge.v).ln(),
            n_inlet,
            n_discharge,
            n_avg: avg.n,
            k_avg: avg.k,
            x_avg: avg.x,
            y_avg: avg.y,
            eta: self.eta_c,
            eta_sweeps: 0,
            ks: self.ks_c,
            schultz_f: self.f_c,
            head: self.head_c,
            power: self.power_c,
            inlet_state: *inlet,
            discharge_state: *discharge,
            isentropic_state: self.isentropic_state_c,
        })
    }
}

/// Refers an analyzed point to `reference`.
///
/// A loop that reaches `iteration_count` with |dn_c| above
/// [`NONCONVERGENCE_THRESHOLD`] still returns a result, flagged `converged = false`.
pub fn correct_point(
    summary: &PerformanceSummary,
    reference: &ReferenceConditions,
    settings: &CorrectionSettings,
    model: EosModel,
) -> Result<CorrectedPoint, CorrectionError> {
    reference.validate()?;
    settings.validate()?;
    if !(summary.head > 0.0) {
        return Err(CorrectionError::DataQuality(format!(
            "uncorrected head {} J/kg is not positive",
            summary.head
        )));
    }
    let pt = &summary.point;
    let comp = &reference.comp_ref;
    let (p1_c, t1_c) = (reference.p1_ref, reference.t1_ref);
    let eta_c = summary.eta;
    let n = summary.n_avg;

    let inlet_c = evaluate_state(p1_c, t1_c, comp, model).at(CorrectionStep::CorrectedInlet)?;
    let inlet_exp = state_exponents(&inlet_c, eta_c).at(CorrectionStep::CorrectedInlet)?;
    let n1_c = inlet_exp.n;

    let avg = AveragedProperties {
        n,
        k: summary.k_avg,
        x: summary.x_avg,
        y: summary.y_avg,
    };
    let mut n_c = initial_corrected_exponent(&avg, inlet_exp.k, inlet_exp.x, inlet_exp.y)
        .at(CorrectionStep::InitialExponent)?;

    let discharge_at = |n_c: f64, step: CorrectionStep| -> Result<ThermoState, CorrectionError> {
        let p2_c = corrected_discharge_pressure(p1_c, pt.p1, pt.p2, n, n_c).at(step)?;
        let t2_c = corrected_discharge_temperature(t1_c, pt.t1, pt.t2, n, n_c).at(step)?;
        evaluate_state(p2_c, t2_c, comp, model).at(step)
    };

    let mut n2_c = f64::NAN;
    let mut final_delta = f64::INFINITY;
    let mut iterations_used = 0;
    for i in 1..=settings.iteration_count {
        let step = CorrectionStep::DischargeIteration(i);
        let discharge = discharge_at(n_c, step)?;
        n2_c =
            corrected_discharge_exponent(discharge.x, discharge.y, discharge.k, eta_c).at(step)?;
        let next = 0.5 * (n1_c + n2_c);
        final_delta = (next - n_c).abs();
        n_c = next;
        iterations_used = i;
        if final_delta < settings.early_exit_tolerance {
            break;
        }
    }
    let converged = final_delta <= NONCONVERGENCE_THRESHOLD.max(settings.early_exit_tolerance);

    // discharge consistent with the final exponent
    let discharge_c = discharge_at(n_c, CorrectionStep::DischargeIteration(iterations_used))?;
    let isentropic_c = isentropic_discharge(&inlet_c, discharge_c.pressure, comp, model)
        .at(CorrectionStep::IsentropicState)?;
    let HeadTerms { ks, f, head } =
        head_terms(&inlet_c, &discharge_c, &isentropic_c, n_c).at(CorrectionStep::SchultzHead)?;
    if !(head > 0.0) {
        return Err(CorrectionError::Step {
            step: CorrectionStep::FanLaw,
            source: PerformanceError::InvalidPoint(format!("corrected head {head} J/kg")),
        });
    }

    let speed_c = pt.speed * (head / summary.head).sqrt();
    let mass_flow_c = pt.mass_flow * (speed_c / pt.speed);
    let power_c = mass_flow_c * head / eta_c;

    let mut warnings = Vec::new();
    if !converged {
        warnings.push(format!(
            "corrected exponent not converged after {iterations_used} iterations (|dn| = {final_delta:e})"
        ));
    }
    let drift = settings.max_pressure_ratio_drift;
    let inlet_drift = (pt.p1 - p1_c).abs() / p1_c;
    if inlet_drift > drift {
        warnings.push(format!(
            "inlet pressure is {:.1}% away from the reference pressure",
            100.0 * inlet_drift
        ));
    }
    let ratio_drift = ((discharge_c.pressure / p1_c) / (pt.p2 / pt.p1) - 1.0).abs();
    if ratio_drift > drift {
        warnings.push(format!(
            "corrected pressure ratio differs by {:.1}% from the measured ratio",
            100.0 * ratio_drift
        ));
    }

    Ok(CorrectedPoint {
        source: summary.clone(),
        p1_c,
        t1_c,
        comp_c: comp.clone(),
        p2_c: discharge_c.pressure,
        t2_c: discharge_c.temperature,
        n_c,
        n1_c,
        n2_c,
        eta_c,
        ks_c: ks,
        f_c: f,
        head_c: head,
        speed_c,
        mass_flow_c,
        power_c,
        iterations_used,
        final_delta,
        converged,
        warnings,
        inlet_state_c: inlet_c,
        discharge_state_c: discharge_c,
        isentropic_state_c: isentropic_c,
    })
}

/// Analyze and correct in one call.
pub fn analyze_and_correct(
    pt: &performance::OperatingPoint,
    reference: &ReferenceConditions,
    settings: &CorrectionSettings,
    model: EosModel,
) -> Result<CorrectedPoint, CorrectionError> {
    let summary =
        performance::analyze_point(pt, model).map_err(|source| CorrectionError::Step {
            step: CorrectionStep::CorrectedInlet,
            source,
        })?;
    correct_point(&summary, reference, settings, model)
}

impl From<ThermoError> for CorrectionError {
    fn from(e: ThermoError) -> Self {
        CorrectionError::Step {
            step: CorrectionStep::CorrectedInlet,
            source: e.into(),
        }
    }
}
