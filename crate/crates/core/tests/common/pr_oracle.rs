//! Stand-alone Peng-Robinson reference used by the property tests. Written
//! from the textbook equations with its own constants, root solve and
//! finite-difference derivatives; nothing here calls the library's EOS.

#![allow(dead_code)]

use polycorr::thermo::GasComposition;

pub const R: f64 = 8314.3;

/// `(Omega_a, Omega_b)` from the closed-form critical-point conditions.
pub fn omegas() -> (f64, f64) {
    let s2 = 2f64.sqrt();
    let x = (-1.0 + (6.0 * s2 + 8.0).cbrt() - (6.0 * s2 - 8.0).cbrt()) / 3.0;
    let omega_b = x / (x + 3.0);
    let omega_a = 8.0 * (5.0 * x + 1.0) / (49.0 - 37.0 * x);
    (omega_a, omega_b)
}

/// Mixture `(a, b)` in molar units at temperature `t`, zero kij.
pub fn mixture_ab(comp: &GasComposition, t: f64) -> (f64, f64) {
    let (oa, ob) = omegas();
    let cs = comp.constituents();
    let mut sqrt_a = Vec::with_capacity(cs.len());
    let mut b = 0.0;
    for c in cs {
        let d = &c.component;
        let (tc, pc, w) = (
            d.critical_temperature,
            d.critical_pressure,
            d.acentric_factor,
        );
        let kappa = 0.37464 + 1.54226 * w - 0.26992 * w * w;
        let alpha = (1.0 + kappa * (1.0 - (t / tc).sqrt())).powi(2);
        sqrt_a.push((oa * R * R * tc * tc / pc * alpha).sqrt());
        b += c.fraction * ob * R * tc / pc;
    }
    let mut a = 0.0;
    for (i, ci) in cs.iter().enumerate() {
        for (j, cj) in cs.iter().enumerate() {
            a += ci.fraction * cj.fraction * sqrt_a[i] * sqrt_a[j];
        }
    }
    (a, b)
}

/// Vapour compressibility: Newton from above the largest root.
pub fn z(comp: &GasComposition, p: f64, t: f64) -> f64 {
    let (a, b) = mixture_ab(comp, t);
    let aa = a * p / (R * t).powi(2);
    let bb = b * p / (R * t);
    let c2 = -(1.0 - bb);
    let c1 = aa - 3.0 * bb * bb - 2.0 * bb;
    let c0 = -(aa * bb - bb * bb - bb * bb * bb);
    let mut zz = 3.0;
    for _ in 0..200 {
        let f = ((zz + c2) * zz + c1) * zz + c0;
        let df = (3.0 * zz + 2.0 * c2) * zz + c1;
        let step = f / df;
        zz -= step;
        if step.abs() <= 1e-16 * zz {
            break;
        }
    }
    zz
}

/// Pressure from temperature and molar volume.
pub fn pressure(comp: &GasComposition, t: f64, v_molar: f64) -> f64 {
    let (a, b) = mixture_ab(comp, t);
    R * t / (v_molar - b) - a / (v_molar * v_molar + 2.0 * b * v_molar - b * b)
}

pub fn mw(comp: &GasComposition) -> f64 {
    comp.constituents()
        .iter()
        .map(|c| c.fraction * c.component.molecular_weight)
        .sum()
}

/// Specific volume, m^3/kg.
pub fn v(comp: &GasComposition, p: f64, t: f64) -> f64 {
    z(comp, p, t) * R * t / (mw(comp) * p)
}

/// Fourth-order central difference.
pub fn diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

pub struct Derivatives {
    pub dz_dt: f64,
    pub dz_dp: f64,
    pub dp_dt: f64,
    pub dv_dt: f64,
}

pub fn derivatives(comp: &GasComposition, p: f64, t: f64) -> Derivatives {
    let vm = z(comp, p, t) * R * t / p;
    Derivatives {
        dz_dt: diff(|x| z(comp, p, x), t, 1e-3 * t),
        dz_dp: diff(|x| z(comp, x, t), p, 1e-3 * p),
        dp_dt: diff(|x| pressure(comp, x, vm), t, 1e-3 * t),
        dv_dt: diff(|x| v(comp, p, x), t, 1e-3 * t),
    }
}
