use chrono::{TimeZone, Utc};
use polycorr::correction::{correct_point, CorrectionSettings, ReferenceConditions};
use polycorr::performance::{analyze_point, OperatingPoint, PerformanceSummary};
use polycorr::thermo::{ComponentDb, EosModel, GasComposition};

fn pipeline_gas(db: &ComponentDb) -> GasComposition {
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
    .unwrap()
}

fn point(comp: GasComposition, p1: f64, t1: f64, p2: f64, t2: f64) -> OperatingPoint {
    OperatingPoint {
        timestamp: Utc.with_ymd_and_hms(2011, 6, 1, 12, 0, 0).unwrap(),
        p1,
        t1,
        p2,
        t2,
        mass_flow: 180.0,
        speed: 5200.0,
        comp,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn analyzed(model: EosModel) -> PerformanceSummary {
    let db = ComponentDb::bundled();
    analyze_point(
        &point(pipeline_gas(&db), 6.8e6, 298.0, 1.25e7, 362.0),
        model,
    )
    .unwrap()
}

#[test]
fn identity_correction() {
    for model in [EosModel::Real, EosModel::Ideal] {
        let s = analyzed(model);
        let r = ReferenceConditions::new(s.point.p1, s.point.t1, s.point.comp.clone()).unwrap();
        let c = correct_point(&s, &r, &CorrectionSettings::default(), model).unwrap();
        assert!(c.converged);
        assert!(c.warnings.is_empty(), "{:?}", c.warnings);
        assert!(
            rel(c.n_c, s.n_avg) < 1e-6,
            "{model}: n {} vs {}",
            c.n_c,
            s.n_avg
        );
        assert!(rel(c.p2_c, s.point.p2) < 1e-6);
        assert!(rel(c.t2_c, s.point.t2) < 1e-6);
        assert!(rel(c.head_c, s.head) < 1e-6);
        assert!(rel(c.f_c, s.schultz_f) < 1e-6);
        assert!(rel(c.power_c, s.power) < 1e-6);
        assert!(rel(c.speed_c, s.point.speed) < 1e-6);
        assert!(rel(c.mass_flow_c, s.point.mass_flow) < 1e-6);
        assert_eq!(c.eta_c, s.eta);
    }
}

#[test]
fn constraints_preserved() {
    let db = ComponentDb::bundled();
    let s = analyzed(EosModel::Real);
    let comp_ref = GasComposition::new(
        &db,
        &[
            ("CH4", 0.92),
            ("C2H6", 0.04),
            ("C3H8", 0.01),
            ("N2", 0.015),
            ("CO2", 0.015),
        ],
    )
    .unwrap();
    for (p1_ref, t1_ref) in [(7.65e6, 299.5), (6.2e6, 290.0), (7.0e6, 305.0)] {
        let r = ReferenceConditions::new(p1_ref, t1_ref, comp_ref.clone()).unwrap();
        let c = correct_point(&s, &r, &CorrectionSettings::default(), EosModel::Real).unwrap();
        assert!(c.converged);
        assert!(c.iterations_used <= 30, "{} iterations", c.iterations_used);
        assert_eq!(c.eta_c, s.eta);
        let rv = (s.point.p2 / s.point.p1).powf(1.0 / s.n_avg);
        assert!(rel(c.volume_flow_ratio(), rv) < 1e-6);
        // fan laws
        let ratio = c.speed_c / s.point.speed;
        assert!(rel(c.head_c / s.head, ratio * ratio) < 1e-12);
        assert!(rel(c.mass_flow_c / s.point.mass_flow, ratio) < 1e-12);
        assert!(rel(c.power_c, c.mass_flow_c * c.head_c / c.eta_c) < 1e-12);
    }
}

#[test]
fn ideal_pressure_scaling() {
    // ideal gas, same temperature and gas: only the pressure level moves
    let s = analyzed(EosModel::Ideal);
    let r = ReferenceConditions::new(1.1 * s.point.p1, s.point.t1, s.point.comp.clone()).unwrap();
    let c = correct_point(&s, &r, &CorrectionSettings::default(), EosModel::Ideal).unwrap();
    assert!(rel(c.n_c, s.n_avg) < 1e-9);
    assert!(rel(c.p2_c, 1.1 * s.point.p2) < 1e-9);
    assert!(rel(c.t2_c, s.point.t2) < 1e-9);
    assert!(rel(c.head_c, s.head) < 1e-9);
}

#[test]
fn drift_warning() {
    let s = analyzed(EosModel::Real);
    let r = ReferenceConditions::new(1.2 * s.point.p1, s.point.t1, s.point.comp.clone()).unwrap();
    let c = correct_point(&s, &r, &CorrectionSettings::default(), EosModel::Real).unwrap();
    assert!(c.warnings.iter().any(|w| w.contains("inlet pressure")));
}

#[test]
fn capped_loop_flags_nonconvergence() {
    let db = ComponentDb::bundled();
    let s = analyzed(EosModel::Real);
    let comp_ref = GasComposition::pure(&db, "CH4").unwrap();
    let r = ReferenceConditions::new(8.0e6, 310.0, comp_ref).unwrap();
    let settings = CorrectionSettings {
        iteration_count: 1,
        ..Default::default()
    };
    let c = correct_point(&s, &r, &settings, EosModel::Real).unwrap();
    assert_eq!(c.iterations_used, 1);
    assert_eq!(c.converged, c.final_delta <= 1e-6);
}

#[test]
fn idempotent() {
    let db = ComponentDb::bundled();
    let s = analyzed(EosModel::Real);
    let comp_ref =
        GasComposition::new(&db, &[("CH4", 0.93), ("C2H6", 0.04), ("N2", 0.03)]).unwrap();
    let r = ReferenceConditions::new(7.65e6, 299.5, comp_ref).unwrap();
    let settings = CorrectionSettings::default();
    let c1 = correct_point(&s, &r, &settings, EosModel::Real).unwrap();
    let c2 = correct_point(&c1.to_summary().unwrap(), &r, &settings, EosModel::Real).unwrap();
    let pairs = [
        (c2.p2_c, c1.p2_c),
        (c2.t2_c, c1.t2_c),
        (c2.n_c, c1.n_c),
        (c2.n1_c, c1.n1_c),
        (c2.f_c, c1.f_c),
        (c2.ks_c, c1.ks_c),
        (c2.head_c, c1.head_c),
        (c2.power_c, c1.power_c),
        (c2.speed_c, c1.speed_c),
        (c2.mass_flow_c, c1.mass_flow_c),
        (c2.eta_c, c1.eta_c),
    ];
    for (i, (a, b)) in pairs.into_iter().enumerate() {
        assert!(rel(a, b) < 1e-6, "field {i}: {a} vs {b}");
    }
}
