//! Uncorrected polytropic analysis of one measured operating point.

use chrono::{DateTime, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::roots::{find_root, RootFailure, RootOptions};
use crate::thermo::{
    self, evaluate_state, polytropic_exponent, EosModel, GasComposition, ThermoError, ThermoState,
    R,
};

/// Fixed-point tolerance on the efficiency, and the sweep cap.
pub const ETA_TOLERANCE: f64 = 1e-10;
pub const MAX_ETA_SWEEPS: usize = 100;

/// Absolute entropy residual accepted by the isentropic solve, J/(kg K).
pub const ISENTROPIC_RESIDUAL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerformanceError {
    #[error(transparent)]
    Thermo(#[from] ThermoError),
    #[error("invalid operating point: {0}")]
    InvalidPoint(String),
    #[error("degenerate compression: inlet and discharge specific volumes give no exponent (v1 = {v1}, v2 = {v2})")]
    DegenerateCompression { v1: f64, v2: f64 },
    #[error("efficiency undefined: zero denominator (X = {x}, Y = {y}, k = {k}, n = {n})")]
    EfficiencyUndefined { x: f64, y: f64, k: f64, n: f64 },
    #[error("isentropic discharge solve failed: {0}")]
    IsentropicSolve(String),
    #[error("Schultz factor undefined: {0}")]
    FactorUndefined(String),
    #[error("polytropic head undefined for n = {0}")]
    HeadUndefined(f64),
    #[error("efficiency did not converge after {sweeps} sweeps (last change {last_change})")]
    AnalysisConvergence { sweeps: usize, last_change: f64 },
}

impl From<RootFailure> for PerformanceError {
    fn from(r: RootFailure) -> Self {
        PerformanceError::IsentropicSolve(format!("{r:?}"))
    }
}

/// One measured compressor sample. SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub timestamp: DateTime<Utc>,
    pub p1: f64,
    pub t1: f64,
    pub p2: f64,
    pub t2: f64,
    /// kg/s
    pub mass_flow: f64,
    /// rev/min
    pub speed: f64,
    pub comp: GasComposition,
}

impl OperatingPoint {
    pub fn validate(&self) -> Result<(), PerformanceError> {
        let all = [
            self.p1,
            self.t1,
            self.p2,
            self.t2,
            self.mass_flow,
            self.speed,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(PerformanceError::InvalidPoint("non-finite value".into()));
        }
        if !(self.p1 > 0.0 && self.p2 > self.p1) {
            return Err(PerformanceError::InvalidPoint(format!(
                "non-compressing point (p1 = {} Pa, p2 = {} Pa)",
                self.p1, self.p2
            )));
        }
        if !(self.t1 > 0.0 && self.t2 > self.t1) {
            return Err(PerformanceError::InvalidPoint(format!(
                "no compression heating (t1 = {} K, t2 = {} K)",
                self.t1, self.t2
            )));
        }
        if !(self.mass_flow > 0.0) {
            return Err(PerformanceError::InvalidPoint(
                "mass flow must be positive".into(),
            ));
        }
        if !(self.speed > 0.0) {
            return Err(PerformanceError::InvalidPoint(
                "speed must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of [`analyze_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceSummary {
    pub point: OperatingPoint,
    /// ln(p2/p1) / ln(v1/v2) of the measured states.
    pub n_measured: f64,
    pub n_inlet: f64,
    pub n_discharge: f64,
    pub n_avg: f64,
    pub k_avg: f64,
    pub x_avg: f64,
    pub y_avg: f64,
    pub eta: f64,
    pub eta_sweeps: usize,
    pub ks: f64,
    pub schultz_f: f64,
    /// J/kg
    pub head: f64,
    /// W
    pub power: f64,
    pub inlet_state: ThermoState,
    pub discharge_state: ThermoState,
    pub isentropic_state: ThermoState,
}

/// Flat view of a summary for tabular output.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub n_inlet: f64,
    pub n_discharge: f64,
    pub n_avg: f64,
    pub k_avg: f64,
    pub x_avg: f64,
    pub y_avg: f64,
    pub eta: f64,
    pub schultz_f: f64,
    pub head_j_kg: f64,
    pub power_w: f64,
}

impl From<&PerformanceSummary> for SummaryRow {
    fn from(s: &PerformanceSummary) -> Self {
        Self {
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
        }
    }
}

/// `n = ln(p2/p1) / ln(v1/v2)`.
pub fn measured_polytropic_exponent(
    inlet: &ThermoState,
    discharge: &ThermoState,
) -> Result<f64, PerformanceError> {
    let volume_ratio = (inlet.v / discharge.v).ln();
    let n = (discharge.pressure / inlet.pressure).ln() / volume_ratio;
    if volume_ratio == 0.0 || !n.is_finite() {
        return Err(PerformanceError::DegenerateCompression {
            v1: inlet.v,
            v2: discharge.v,
        });
    }
    Ok(n)
}

/// Polytropic efficiency from the Schultz functions and exponent:
///
/// `eta = Y n (1 - k) / (k (1 + X) - Y n (k + X))`
pub fn efficiency_from_exponents(x: f64, y: f64, k: f64, n: f64) -> Result<f64, PerformanceError> {
    let denom = k * (1.0 + x) - y * n * (k + x);
    if denom == 0.0 || !denom.is_finite() {
        return Err(PerformanceError::EfficiencyUndefined { x, y, k, n });
    }
    Ok(y * n * (1.0 - k) / denom)
}

/// State at `p2` with the inlet entropy.
pub fn isentropic_discharge(
    inlet: &ThermoState,
    p2: f64,
    comp: &GasComposition,
    model: EosModel,
) -> Result<ThermoState, PerformanceError> {
    if p2 == inlet.pressure {
        return Ok(*inlet);
    }
    if !(p2 > inlet.pressure) {
        return Err(PerformanceError::IsentropicSolve(format!(
            "discharge pressure {p2} Pa is below the inlet pressure {} Pa",
            inlet.pressure
        )));
    }
    let s1 = inlet.s;
    let t1 = inlet.temperature;
    let t_hi = (3.0 * t1).min(thermo::T_MAX);
    let opts = RootOptions {
        f_tol: 0.1 * ISENTROPIC_RESIDUAL,
        x_tol: 1e-16,
        bisections: 12,
        max_iter: 200,
    };
    let t2s = find_root(
        |t| Ok::<_, PerformanceError>(evaluate_state(p2, t, comp, model)?.s - s1),
        t1,
        t_hi,
        opts,
    )?;
    let state = evaluate_state(p2, t2s, comp, model)?;
    let residual = state.s - s1;
    if residual.abs() > ISENTROPIC_RESIDUAL {
        return Err(PerformanceError::IsentropicSolve(format!(
            "entropy residual {residual} J/(kg K) at T = {t2s} K"
        )));
    }
    Ok(state)
}

/// `ks = (k1/Y1 + k2/Y2) / 2`.
pub fn schultz_isentropic_exponent(k1: f64, y1: f64, k2: f64, y2: f64) -> f64 {
    0.5 * (k1 / y1 + k2 / y2)
}

/// `f = (ks - 1)(h2s - h1) / (ks (z2s R T2s / MW - z1 R T1 / MW))`
#[allow(clippy::too_many_arguments)]
pub fn schultz_factor(
    ks: f64,
    h1: f64,
    h2s: f64,
    z1: f64,
    t1: f64,
    z2s: f64,
    t2s: f64,
    mw: f64,
) -> Result<f64, PerformanceError> {
    let denom = ks * (z2s * R * t2s / mw - z1 * R * t1 / mw);
    if denom == 0.0 || !denom.is_finite() {
        return Err(PerformanceError::FactorUndefined(format!(
            "zero denominator (ks = {ks}, z1 T1 = {}, z2s T2s = {})",
            z1 * t1,
            z2s * t2s
        )));
    }
    Ok((ks - 1.0) * (h2s - h1) / denom)
}

/// `Hp = f n/(n-1) (z2 R T2 - z1 R T1) / MW`, J/kg.
pub fn polytropic_head(
    f: f64,
    n: f64,
    mw: f64,
    z1: f64,
    t1: f64,
    z2: f64,
    t2: f64,
) -> Result<f64, PerformanceError> {
    if !(n > 1.0) || !n.is_finite() {
        return Err(PerformanceError::HeadUndefined(n));
    }
    Ok(f * (n / (n - 1.0)) * (1.0 / mw) * (z2 * R * t2 - z1 * R * t1))
}

/// Schultz factor and polytropic head between `inlet` and `discharge`, with
/// the isentropic reference state at the discharge pressure.
pub(crate) struct HeadTerms {
    pub ks: f64,
    pub f: f64,
    pub head: f64,
}

pub(crate) fn head_terms(
    inlet: &ThermoState,
    discharge: &ThermoState,
    isentropic: &ThermoState,
    n: f64,
) -> Result<HeadTerms, PerformanceError> {
    let mw = inlet.molecular_weight;
    let ks = schultz_isentropic_exponent(inlet.k, inlet.y, discharge.k, discharge.y);
    let f = schultz_factor(
        ks,
        inlet.h,
        isentropic.h,
        inlet.z,
        inlet.temperature,
        isentropic.z,
        isentropic.temperature,
        mw,
    )?;
    let head = polytropic_head(
        f,
        n,
        mw,
        inlet.z,
        inlet.temperature,
        discharge.z,
        discharge.temperature,
    )?;
    Ok(HeadTerms { ks, f, head })
}

/// Efficiency at which the mean of the endpoint exponents equals the measured
/// path exponent. Newton iteration on `u = 1/eta`, kept inside a bracket.
fn resolve_efficiency(
    inlet: &ThermoState,
    discharge: &ThermoState,
    n_measured: f64,
    start: f64,
) -> Result<(f64, usize), PerformanceError> {
    // n_i(u) = a_i / (b_i - c_i u)
    let coeffs = |s: &ThermoState| ((1.0 + s.x) / s.y, 1.0 + s.x / s.k, 1.0 - 1.0 / s.k);
    let ends = [coeffs(inlet), coeffs(discharge)];
    if ends.iter().any(|&(a, _, c)| !(a > 0.0 && c > 0.0)) {
        return Err(ThermoError::Exponent("need Y > 0 and k > 1 at both ends".into()).into());
    }
    let residual = |u: f64| {
        let mut f = -n_measured;
        let mut df = 0.0;
        for &(a, b, c) in &ends {
            let d = b - c * u;
            f += 0.5 * a / d;
            df += 0.5 * a * c / (d * d);
        }
        (f, df)
    };
    let mut lo = 1.0 / thermo::ETA_MAX;
    let mut hi = ends
        .iter()
        .map(|&(_, b, c)| b / c)
        .fold(f64::INFINITY, f64::min);
    if residual(lo).0 >= 0.0 {
        return Err(PerformanceError::InvalidPoint(format!(
            "measured exponent {n_measured} implies an efficiency above {}",
            thermo::ETA_MAX
        )));
    }
    let mut u = if start.is_finite() && 1.0 / start > lo && 1.0 / start < hi {
        1.0 / start
    } else {
        0.5 * (lo + hi.min(10.0 * lo))
    };
    let mut last_change = f64::INFINITY;
    for sweep in 1..=MAX_ETA_SWEEPS {
        let (f, df) = residual(u);
        if f > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let mut next = u - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        last_change = (1.0 / next - 1.0 / u).abs();
        u = next;
        if last_change < ETA_TOLERANCE {
            return Ok((1.0 / u, sweep));
        }
    }
    Err(PerformanceError::AnalysisConvergence {
        sweeps: MAX_ETA_SWEEPS,
        last_change,
    })
}

/// Polytropic analysis of a measured point.
///
/// The efficiency is the one at which the averaged endpoint exponents,
/// each from the real-gas exponent relation, reproduce the measured
/// `ln(p2/p1)/ln(v1/v2)`. Head follows from the Schultz factor with the
/// isentropic state at `p2`; power is `m Hp / eta`.
pub fn analyze_point(
    pt: &OperatingPoint,
    model: EosModel,
) -> Result<PerformanceSummary, PerformanceError> {
    pt.validate()?;
    let inlet = evaluate_state(pt.p1, pt.t1, &pt.comp, model)?;
    let discharge = evaluate_state(pt.p2, pt.t2, &pt.comp, model)?;
    let n_measured = measured_polytropic_exponent(&inlet, &discharge)?;
    if !(n_measured > 1.0) {
        return Err(PerformanceError::InvalidPoint(format!(
            "measured polytropic exponent {n_measured} is not above 1"
        )));
    }
    let k_avg = 0.5 * (inlet.k + discharge.k);
    let x_avg = 0.5 * (inlet.x + discharge.x);
    let y_avg = 0.5 * (inlet.y + discharge.y);

    let start = efficiency_from_exponents(x_avg, y_avg, k_avg, n_measured)?;
    let (eta, eta_sweeps) = resolve_efficiency(&inlet, &discharge, n_measured, start)?;
    let n_inlet = polytropic_exponent(inlet.x, inlet.y, inlet.k, eta)?;
    let n_discharge = polytropic_exponent(discharge.x, discharge.y, discharge.k, eta)?;
    let n_avg = 0.5 * (n_inlet + n_discharge);

    let isentropic_state = isentropic_discharge(&inlet, pt.p2, &pt.comp, model)?;
    let HeadTerms { ks, f, head } = head_terms(&inlet, &discharge, &isentropic_state, n_avg)?;
    let power = pt.mass_flow * head / eta;
    Ok(PerformanceSummary {
        point: pt.clone(),
        n_measured,
        n_inlet,
        n_discharge,
        n_avg,
        k_avg,
        x_avg,
        y_avg,
        eta,
        eta_sweeps,
        ks,
        schultz_f: f,
        head,
        power,
        inlet_state: inlet,
        discharge_state: discharge,
        isentropic_state,
    })
}
