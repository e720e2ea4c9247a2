//! Peng-Robinson equation of state with van der Waals one-fluid mixing.
//!
//! Molar quantities are used internally (m^3/kmol, J/kmol); the returned
//! [`ThermoState`] is on a mass basis. Partial derivatives are closed form.

use std::f64::consts::SQRT_2;

use super::{EosModel, GasComposition, ThermoError, ThermoState, P_DATUM, R, T_DATUM};

/// Temperature window of the bundled heat-capacity polynomials, K.
pub const T_MIN: f64 = 100.0;
pub const T_MAX: f64 = 1000.0;
/// Upper pressure bound, Pa.
pub const P_MAX: f64 = 1.0e8;

const OMEGA_A: f64 = 0.457_235_528_921_38;
const OMEGA_B: f64 = 0.077_796_073_903_888;

/// Mixture attraction parameter and its first two temperature derivatives,
/// with the co-volume.
struct MixtureParameters {
    a: f64,
    da_dt: f64,
    d2a_dt2: f64,
    b: f64,
}

fn mixture_parameters(t: f64, comp: &GasComposition) -> MixtureParameters {
    let n = comp.len();
    // sqrt(a_i) = sqrt(ac_i) * m_i(T) and its derivatives
    let mut q = Vec::with_capacity(n);
    let mut dq = Vec::with_capacity(n);
    let mut d2q = Vec::with_capacity(n);
    let mut b = 0.0;
    for c in comp.constituents() {
        let d = &c.component;
        let (tc, pc, w) = (
            d.critical_temperature,
            d.critical_pressure,
            d.acentric_factor,
        );
        let kappa = 0.37464 + 1.54226 * w - 0.26992 * w * w;
        let sqrt_ac = (OMEGA_A * R * R * tc * tc / pc).sqrt();
        let sqrt_ttc = (t * tc).sqrt();
        let m = 1.0 + kappa * (1.0 - (t / tc).sqrt());
        q.push(sqrt_ac * m);
        dq.push(-sqrt_ac * kappa / (2.0 * sqrt_ttc));
        d2q.push(sqrt_ac * kappa / (4.0 * t * sqrt_ttc));
        b += c.fraction * OMEGA_B * R * tc / pc;
    }
    let (mut a, mut da, mut d2a) = (0.0, 0.0, 0.0);
    for (i, ci) in comp.constituents().iter().enumerate() {
        for (j, cj) in comp.constituents().iter().enumerate() {
            let w = ci.fraction * cj.fraction * (1.0 - comp.kij(i, j));
            a += w * q[i] * q[j];
            da += w * (dq[i] * q[j] + q[i] * dq[j]);
            d2a += w * (d2q[i] * q[j] + 2.0 * dq[i] * dq[j] + q[i] * d2q[j]);
        }
    }
    MixtureParameters {
        a,
        da_dt: da,
        d2a_dt2: d2a,
        b,
    }
}

/// Largest real root of `z^3 + c2 z^2 + c1 z + c0 = 0`, Newton-polished.
fn largest_cubic_root(c2: f64, c1: f64, c0: f64) -> f64 {
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    let shift = -c2 / 3.0;
    let mut z = if disc > 0.0 {
        let s = disc.sqrt();
        (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift
    } else if p == 0.0 {
        shift
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0);
        2.0 * r * (arg.acos() / 3.0).cos() + shift
    };
    for _ in 0..4 {
        let f = ((z + c2) * z + c1) * z + c0;
        let df = (3.0 * z + 2.0 * c2) * z + c1;
        if df == 0.0 {
            break;
        }
        let step = f / df;
        z -= step;
        if step.abs() <= 1e-16 * z.abs() {
            break;
        }
    }
    z
}

fn check_range(p: f64, t: f64) -> Result<(), ThermoError> {
    if !(t.is_finite() && (T_MIN..=T_MAX).contains(&t)) {
        return Err(ThermoError::OutOfRange {
            quantity: "temperature",
            value: t,
            min: T_MIN,
            max: T_MAX,
        });
    }
    if !(p.is_finite() && p > 0.0 && p <= P_MAX) {
        return Err(ThermoError::OutOfRange {
            quantity: "pressure",
            value: p,
            min: 0.0,
            max: P_MAX,
        });
    }
    Ok(())
}

/// Ideal-gas molar heat capacity, enthalpy and entropy (without the pressure term).
fn ideal_gas_molar(t: f64, comp: &GasComposition) -> (f64, f64, f64) {
    let mut cp = 0.0;
    let mut h = 0.0;
    let mut s = 0.0;
    for c in comp.constituents() {
        let x = c.fraction;
        cp += x * c.component.cp_molar(t);
        h += x * c.component.enthalpy_integral(T_DATUM, t);
        s += x * c.component.entropy_integral(T_DATUM, t);
        if x > 0.0 {
            s -= R * x * x.ln();
        }
    }
    (cp, h, s)
}

/// Evaluates every property of [`ThermoState`] at `(p, t)`.
pub fn evaluate_state(
    p: f64,
    t: f64,
    comp: &GasComposition,
    model: EosModel,
) -> Result<ThermoState, ThermoError> {
    check_range(p, t)?;
    let mw = comp.molecular_weight();
    let (cp_ig, h_ig, s_ig_t) = ideal_gas_molar(t, comp);
    let s_ig = s_ig_t - R * (p / P_DATUM).ln();

    if model == EosModel::Ideal {
        let v = R * t / (mw * p);
        let cp = cp_ig / mw;
        return Ok(ThermoState {
            pressure: p,
            temperature: t,
            z: 1.0,
            cp,
            h: h_ig / mw,
            s: s_ig / mw,
            v,
            dz_dt: 0.0,
            dz_dp: 0.0,
            dp_dt: p / t,
            dv_dt: v / t,
            x: 0.0,
            y: 1.0,
            k: cp / (cp - R / mw),
            molecular_weight: mw,
        });
    }

    let MixtureParameters {
        a,
        da_dt,
        d2a_dt2,
        b,
    } = mixture_parameters(t, comp);
    let rt = R * t;
    let big_a = a * p / (rt * rt);
    let big_b = b * p / rt;
    let z = largest_cubic_root(
        -(1.0 - big_b),
        big_a - 3.0 * big_b * big_b - 2.0 * big_b,
        -(big_a * big_b - big_b * big_b - big_b * big_b * big_b),
    );
    let no_root = ThermoError::NoVaporRoot {
        pressure: p,
        temperature: t,
    };
    if !(z.is_finite() && z > big_b && z > 0.0) {
        return Err(no_root);
    }

    let vm = z * rt / p;
    let denom = vm * vm + 2.0 * b * vm - b * b;
    let dp_dt_v = R / (vm - b) - da_dt / denom;
    let dp_dv_t = -rt / ((vm - b) * (vm - b)) + a * (2.0 * vm + 2.0 * b) / (denom * denom);
    if dp_dv_t >= 0.0 {
        // mechanically unstable branch
        return Err(no_root);
    }
    let dv_dt_p = -dp_dt_v / dp_dv_t;
    let dz_dt = p / rt * (dv_dt_p - vm / t);
    let dz_dp = vm / rt + p / (rt * dp_dv_t);

    let log_term = ((z + (1.0 + SQRT_2) * big_b) / (z + (1.0 - SQRT_2) * big_b)).ln();
    let k2 = 2.0 * SQRT_2 * b;
    let h_dep = rt * (z - 1.0) + (t * da_dt - a) / k2 * log_term;
    let s_dep = R * (z - big_b).ln() + da_dt / k2 * log_term;
    let cv_dep = t * d2a_dt2 / k2 * log_term;
    let expansion = t * dp_dt_v * dv_dt_p;
    let cp_m = cp_ig - R + cv_dep + expansion;

    let cp = cp_m / mw;
    let dv_dt = dv_dt_p / mw;
    let x = t / z * dz_dt;
    let y = 1.0 - p / z * dz_dp;
    let k = cp / (cp - t * dp_dt_v * dv_dt);
    Ok(ThermoState {
        pressure: p,
        temperature: t,
        z,
        cp,
        h: (h_ig + h_dep) / mw,
        s: (s_ig + s_dep) / mw,
        v: z * R * t / (mw * p),
        dz_dt,
        dz_dp,
        dp_dt: dp_dt_v,
        dv_dt,
        x,
        y,
        k,
        molecular_weight: mw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::ComponentDb;

    fn natural_gas(db: &ComponentDb) -> GasComposition {
        GasComposition::new(
            db,
            &[
                ("CH4", 0.90),
                ("C2H6", 0.05),
                ("C3H8", 0.02),
                ("N2", 0.01),
                ("CO2", 0.02),
            ],
        )
        .unwrap()
    }

    #[test]
    fn cubic_roots() {
        // (z-1)(z-2)(z-3)
        assert!((largest_cubic_root(-6.0, 11.0, -6.0) - 3.0).abs() < 1e-14);
        // z^3 - 1 has one real root
        assert!((largest_cubic_root(0.0, 0.0, -1.0) - 1.0).abs() < 1e-14);
        // triple root at 2
        assert!((largest_cubic_root(-6.0, 12.0, -8.0) - 2.0).abs() < 1e-5);
    }

    #[test]
    fn ideal_mode_is_exact() {
        let db = ComponentDb::bundled();
        let comp = natural_gas(&db);
        for &(p, t) in &[(1e5, 250.0), (7.65e6, 299.5), (2e7, 450.0)] {
            let s = evaluate_state(p, t, &comp, EosModel::Ideal).unwrap();
            assert_eq!(s.z, 1.0);
            assert_eq!(s.x, 0.0);
            assert_eq!(s.y, 1.0);
            let r_spec = R / s.molecular_weight;
            assert!((s.k - s.cp / (s.cp - r_spec)).abs() <= 1e-12 * s.k);
        }
    }

    #[test]
    fn specific_volume_consistent_with_z() {
        let db = ComponentDb::bundled();
        let comp = natural_gas(&db);
        let s = evaluate_state(7.65e6, 299.5, &comp, EosModel::Real).unwrap();
        let v = s.z * R * s.temperature / (s.molecular_weight * s.pressure);
        assert!(((s.v - v) / v).abs() < 1e-9);
        assert!(s.z > 0.7 && s.z < 1.0);
        assert!(s.y > 0.0 && s.k > 1.0);
    }

    #[test]
    fn dh_dt_matches_cp() {
        let db = ComponentDb::bundled();
        let comp = natural_gas(&db);
        for &(p, t) in &[(2e6, 280.0), (7.65e6, 299.5), (1.5e7, 380.0)] {
            let st = evaluate_state(p, t, &comp, EosModel::Real).unwrap();
            let dt = t * 1e-5;
            let hp = evaluate_state(p, t + dt, &comp, EosModel::Real).unwrap().h;
            let hm = evaluate_state(p, t - dt, &comp, EosModel::Real).unwrap().h;
            let fd = (hp - hm) / (2.0 * dt);
            assert!(((fd - st.cp) / st.cp).abs() < 1e-6, "{fd} vs {}", st.cp);
        }
    }

    #[test]
    fn ds_dt_matches_cp_over_t() {
        let db = ComponentDb::bundled();
        let comp = natural_gas(&db);
        let (p, t) = (7.65e6, 299.5);
        let st = evaluate_state(p, t, &comp, EosModel::Real).unwrap();
        let dt = t * 1e-5;
        let sp = evaluate_state(p, t + dt, &comp, EosModel::Real).unwrap().s;
        let sm = evaluate_state(p, t - dt, &comp, EosModel::Real).unwrap().s;
        let fd = (sp - sm) / (2.0 * dt);
        assert!(((fd - st.cp / t) / fd).abs() < 1e-6);
    }

    #[test]
    fn out_of_range_inputs() {
        let db = ComponentDb::bundled();
        let comp = natural_gas(&db);
        assert!(matches!(
            evaluate_state(1e5, 50.0, &comp, EosModel::Real),
            Err(ThermoError::OutOfRange {
                quantity: "temperature",
                ..
            })
        ));
        assert!(matches!(
            evaluate_state(-1.0, 300.0, &comp, EosModel::Real),
            Err(ThermoError::OutOfRange {
                quantity: "pressure",
                ..
            })
        ));
    }

    #[test]
    fn deterministic() {
        let db = ComponentDb::bundled();
        let comp = natural_gas(&db);
        let a = evaluate_state(7.65e6, 299.5, &comp, EosModel::Real).unwrap();
        let b = evaluate_state(7.65e6, 299.5, &comp, EosModel::Real).unwrap();
        assert_eq!(a, b);
    }
}
