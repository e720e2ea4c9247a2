use std::sync::OnceLock;

use chrono::{TimeZone, Utc};
use polycorr::correction::{
    correct_point, CorrectedPoint, CorrectionSettings, ReferenceConditions,
};
use polycorr::performance::{
    analyze_point, efficiency_from_exponents, OperatingPoint, PerformanceSummary,
};
use polycorr::refmap::{campaign_report, deviation, FitStats, ReferenceMap};
use polycorr::thermo::{polytropic_exponent, ComponentDb, EosModel, GasComposition};
use proptest::prelude::*;

fn summary() -> &'static PerformanceSummary {
    static S: OnceLock<PerformanceSummary> = OnceLock::new();
    S.get_or_init(|| {
        let db = ComponentDb::bundled();
        let comp = GasComposition::new(
            &db,
            &[
                ("CH4", 0.90),
                ("C2H6", 0.05),
                ("C3H8", 0.02),
                ("N2", 0.015),
                ("CO2", 0.015),
            ],
        )
        .unwrap();
        let point = OperatingPoint {
            timestamp: Utc.with_ymd_and_hms(2009, 3, 2, 8, 0, 0).unwrap(),
            p1: 6.8e6,
            t1: 298.0,
            p2: 1.25e7,
            t2: 362.0,
            mass_flow: 180.0,
            speed: 5200.0,
            comp,
        };
        analyze_point(&point, EosModel::Real).unwrap()
    })
}

fn template() -> &'static CorrectedPoint {
    static C: OnceLock<CorrectedPoint> = OnceLock::new();
    C.get_or_init(|| {
        let s = summary();
        let r = ReferenceConditions::new(s.point.p1, s.point.t1, s.point.comp.clone()).unwrap();
        correct_point(s, &r, &CorrectionSettings::default(), EosModel::Real).unwrap()
    })
}

fn map(head: [f64; 4], power: [f64; 4]) -> ReferenceMap {
    let s = summary();
    ReferenceMap {
        reference: ReferenceConditions::new(s.point.p1, s.point.t1, s.point.comp.clone()).unwrap(),
        n_ref_speed: 5000.0,
        head_coeffs: head,
        power_coeffs: power,
        flow_range: [100.0, 250.0],
        fit_stats: FitStats {
            point_count: 8,
            head_rms: 0.0,
            head_max_rel: 0.0,
            power_rms: 0.0,
            power_max_rel: 0.0,
        },
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

proptest! {
    #[test]
    fn exponent_and_efficiency_invert(
        x in 0.0f64..=0.3,
        y in 0.7f64..=1.1,
        k in 1.1f64..=1.6,
        eta in 0.5f64..=1.0,
    ) {
        let n = polytropic_exponent(x, y, k, eta).unwrap();
        let back = efficiency_from_exponents(x, y, k, n).unwrap();
        prop_assert!((back - eta).abs() < 1e-10, "{back} vs {eta}");
    }

    #[test]
    fn deviation_zero_on_match_and_scale_free(
        c in prop_oneof![-1e7f64..-1e-3, 1e-3f64..1e7],
        e in -1e7f64..1e7,
        scale in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3],
    ) {
        prop_assert_eq!(deviation(c, c).unwrap(), 0.0);
        let d = deviation(c, e).unwrap();
        let ds = deviation(scale * c, scale * e).unwrap();
        prop_assert!((d - ds).abs() <= 1e-9 * d.max(1.0), "{d} vs {ds}");
    }

    #[test]
    fn expected_performance_follows_fan_laws(
        flow in 120.0f64..240.0,
        speed in 4000.0f64..6000.0,
        lambda in 0.7f64..1.3,
        a1 in -200.0f64..0.0,
    ) {
        let m = map([1.0e5, a1, 1.0, -3e-3], [1.0e7, 8.0e4, -40.0, 0.01]);
        let base = m.expected_performance(flow, speed);
        let scaled = m.expected_performance(lambda * flow, lambda * speed);
        prop_assert!(rel(scaled.head, lambda * lambda * base.head) < 1e-12);
        prop_assert!(rel(scaled.power, lambda.powi(3) * base.power) < 1e-12);
        prop_assert_eq!(scaled.in_range, base.in_range);
    }

    #[test]
    fn report_mean_ignores_order(
        rows in prop::collection::vec((100.0f64..260.0, 4500.0f64..5500.0, 0.9f64..1.1), 1..40)
            .prop_flat_map(|v| {
                let n = v.len();
                (Just(v), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
            }),
    ) {
        let (rows, order) = rows;
        let m = map([1.0e5, -150.0, 1.0, -3e-3], [1.0e7, 8.0e4, -40.0, 0.01]);
        let points: Vec<CorrectedPoint> = rows
            .iter()
            .map(|&(flow, speed, f)| {
                let mut p = template().clone();
                p.mass_flow_c = flow;
                p.speed_c = speed;
                let e = m.expected_performance(flow, speed);
                p.head_c = f * e.head;
                p.power_c = e.power / f;
                p
            })
            .collect();
        let forward = campaign_report(points.iter().enumerate(), &m);
        let shuffled = campaign_report(order.iter().map(|&i| (i, &points[i])), &m);
        prop_assert_eq!(forward.avg_delta_head, shuffled.avg_delta_head);
        prop_assert_eq!(forward.avg_delta_power, shuffled.avg_delta_power);
        prop_assert_eq!(forward.max_delta_head, shuffled.max_delta_head);
        prop_assert_eq!(forward.eligible_count, shuffled.eligible_count);
        prop_assert_eq!(forward.excluded_count, shuffled.excluded_count);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn correction_keeps_efficiency_and_volume_ratio(
        p_scale in 0.9f64..1.1,
        dt in -10.0f64..10.0,
    ) {
        let s = summary();
        let r = ReferenceConditions::new(p_scale * s.point.p1, s.point.t1 + dt, s.point.comp.clone())
            .unwrap();
        let c = correct_point(s, &r, &CorrectionSettings::default(), EosModel::Real).unwrap();
        prop_assert!(c.converged);
        prop_assert_eq!(c.eta_c, s.eta);
        let rv = (s.point.p2 / s.point.p1).powf(1.0 / s.n_avg);
        prop_assert!(rel(c.volume_flow_ratio(), rv) < 1e-6);
    }
}
