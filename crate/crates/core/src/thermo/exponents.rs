//! Schultz compressibility functions and the real-gas polytropic exponent.

use serde::Serialize;

use super::{evaluate_state, EosModel, GasComposition, ThermoError, ThermoState, R};

/// Efficiencies above this are treated as a data error.
pub const ETA_MAX: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchultzExponents {
    pub x: f64,
    pub y: f64,
    pub k: f64,
    pub n: f64,
}

/// Real-gas polytropic exponent for efficiency `eta`:
///
/// `n = (1 + X) / (Y [ (1/k)(1/eta + X) - (1/eta - 1) ])`
pub fn polytropic_exponent(x: f64, y: f64, k: f64, eta: f64) -> Result<f64, ThermoError> {
    if !(eta > 0.0 && eta <= ETA_MAX) {
        return Err(ThermoError::Exponent(format!(
            "efficiency {eta} outside (0, {ETA_MAX}]"
        )));
    }
    let inv_eta = 1.0 / eta;
    let denom = y * ((inv_eta + x) / k - (inv_eta - 1.0));
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(ThermoError::Exponent(format!(
            "non-positive denominator {denom} (X = {x}, Y = {y}, k = {k}, eta = {eta})"
        )));
    }
    Ok((1.0 + x) / denom)
}

/// `(X, Y, k, n)` of an already evaluated state.
pub fn state_exponents(state: &ThermoState, eta: f64) -> Result<SchultzExponents, ThermoError> {
    let n = polytropic_exponent(state.x, state.y, state.k, eta)?;
    Ok(SchultzExponents {
        x: state.x,
        y: state.y,
        k: state.k,
        n,
    })
}

/// `ExponentCalc(P, T, cp, z, eta, composition)`.
///
/// The EOS supplies the partial derivatives at `(p, t)`; `cp` and `z` enter
/// `X`, `Y` and `k` as given.
pub fn exponent_calc(
    p: f64,
    t: f64,
    cp: f64,
    z: f64,
    eta: f64,
    comp: &GasComposition,
    model: EosModel,
) -> Result<SchultzExponents, ThermoError> {
    if !(z > 0.0) || !(cp > 0.0) {
        return Err(ThermoError::Exponent(format!(
            "need z > 0 and cp > 0 (z = {z}, cp = {cp})"
        )));
    }
    let st = evaluate_state(p, t, comp, model)?;
    let (x, y, expansion) = match model {
        EosModel::Ideal => (0.0, 1.0, R / st.molecular_weight),
        EosModel::Real => (
            t / z * st.dz_dt,
            1.0 - p / z * st.dz_dp,
            t * st.dp_dt * st.dv_dt,
        ),
    };
    let k = cp / (cp - expansion);
    if !(k > 1.0) || !k.is_finite() {
        return Err(ThermoError::Exponent(format!(
            "heat capacity ratio {k} is not above 1"
        )));
    }
    let n = polytropic_exponent(x, y, k, eta)?;
    Ok(SchultzExponents { x, y, k, n })
}
