mod common;

use common::pr_oracle as oracle;
use polycorr::thermo::{evaluate_state, ComponentDb, EosModel, GasComposition};

fn compositions(db: &ComponentDb) -> Vec<GasComposition> {
    vec![
        GasComposition::pure(db, "CH4").unwrap(),
        GasComposition::new(
            db,
            &[
                ("CH4", 0.90),
                ("C2H6", 0.05),
                ("C3H8", 0.02),
                ("N2", 0.015),
                ("CO2", 0.015),
            ],
        )
        .unwrap(),
        GasComposition::new(
            db,
            &[
                ("CH4", 0.80),
                ("C2H6", 0.08),
                ("C3H8", 0.04),
                ("nC4H10", 0.02),
                ("nC5H12", 0.005),
                ("nC6H14", 0.005),
                ("N2", 0.02),
                ("CO2", 0.03),
            ],
        )
        .unwrap(),
    ]
}

fn grid() -> impl Iterator<Item = (f64, f64)> {
    let ps = [1e5, 2e6, 5e6, 8e6, 1.5e7];
    let ts = [280.0, 310.0, 350.0, 400.0, 450.0];
    ps.into_iter()
        .flat_map(move |p| ts.into_iter().map(move |t| (p, t)))
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn omegas_match_textbook() {
    let (oa, ob) = oracle::omegas();
    assert!((oa - 0.45724).abs() < 1e-5);
    assert!((ob - 0.07780).abs() < 1e-5);
}

#[test]
fn compressibility_matches_oracle() {
    let db = ComponentDb::bundled();
    for comp in compositions(&db) {
        for (p, t) in grid() {
            let s = evaluate_state(p, t, &comp, EosModel::Real).unwrap();
            let zo = oracle::z(&comp, p, t);
            assert!(rel(s.z, zo) < 1e-10, "z at {p} Pa {t} K: {} vs {zo}", s.z);
            assert!(rel(s.v, oracle::v(&comp, p, t)) < 1e-10);
        }
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let db = ComponentDb::bundled();
    for comp in compositions(&db) {
        for (p, t) in grid() {
            let s = evaluate_state(p, t, &comp, EosModel::Real).unwrap();
            let d = oracle::derivatives(&comp, p, t);
            for (name, lib, fd) in [
                ("dz/dT", s.dz_dt, d.dz_dt),
                ("dz/dP", s.dz_dp, d.dz_dp),
                ("dP/dT", s.dp_dt, d.dp_dt),
                ("dv/dT", s.dv_dt, d.dv_dt),
            ] {
                assert!(rel(lib, fd) < 1e-6, "{name} at {p} Pa {t} K: {lib} vs {fd}");
            }
        }
    }
}

#[test]
fn schultz_functions_from_finite_differences() {
    let db = ComponentDb::bundled();
    let comp = &compositions(&db)[1];
    for (p, t) in grid() {
        let s = evaluate_state(p, t, comp, EosModel::Real).unwrap();
        let d = oracle::derivatives(comp, p, t);
        let zo = oracle::z(comp, p, t);
        let x = t / zo * d.dz_dt;
        let y = 1.0 - p / zo * d.dz_dp;
        assert!(
            (s.x - x).abs() < 1e-6 * x.abs().max(1e-3),
            "X {} vs {x}",
            s.x
        );
        assert!(rel(s.y, y) < 1e-8, "Y {} vs {y}", s.y);
        let cp = oracle::diff(
            |tt| evaluate_state(p, tt, comp, EosModel::Real).unwrap().h,
            t,
            1e-3 * t,
        );
        let k = cp / (cp - t * d.dp_dt * d.dv_dt);
        assert!(rel(s.cp, cp) < 1e-6, "cp {} vs {cp}", s.cp);
        assert!(rel(s.k, k) < 1e-6, "k {} vs {k}", s.k);
    }
}

#[test]
fn maxwell_relations() {
    // (dh/dP)_T = v - T (dv/dT)_P and (ds/dP)_T = -(dv/dT)_P
    let db = ComponentDb::bundled();
    for comp in compositions(&db) {
        for (p, t) in grid() {
            let s = evaluate_state(p, t, &comp, EosModel::Real).unwrap();
            let h = |pp: f64| evaluate_state(pp, t, &comp, EosModel::Real).unwrap().h;
            let en = |pp: f64| evaluate_state(pp, t, &comp, EosModel::Real).unwrap().s;
            let dh_dp = oracle::diff(h, p, 1e-3 * p);
            let ds_dp = oracle::diff(en, p, 1e-3 * p);
            let expect_h = s.v - t * s.dv_dt;
            assert!(
                (dh_dp - expect_h).abs() < 1e-6 * s.v,
                "dh/dP at {p} Pa {t} K: {dh_dp} vs {expect_h}"
            );
            assert!(rel(ds_dp, -s.dv_dt) < 1e-6, "ds/dP {ds_dp} vs {}", -s.dv_dt);
        }
    }
}

#[test]
fn ideal_mode_exact() {
    let db = ComponentDb::bundled();
    for comp in compositions(&db) {
        for (p, t) in grid() {
            let s = evaluate_state(p, t, &comp, EosModel::Ideal).unwrap();
            assert_eq!(s.z, 1.0);
            assert_eq!(s.x, 0.0);
            assert_eq!(s.y, 1.0);
            let r = oracle::R / oracle::mw(&comp);
            assert!(rel(s.k, s.cp / (s.cp - r)) < 1e-14);
        }
    }
}
