//! Reference performance map: cubic head and power characteristics at one
//! normalization speed, fitted from corrected points, and the deviation
//! metrics that compare corrected against expected performance.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correction::{CorrectedPoint, ReferenceConditions};
use crate::thermo::{ComponentDb, GasComposition, ThermoError};

/// Fewest converged points accepted by [`fit_reference_map`].
pub const MIN_FIT_POINTS: usize = 8;

pub const MAP_FORMAT_VERSION: u32 = 1;

/// Relative pivot size of the triangular factor below which the design
/// matrix is treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("insufficient data: {found} converged points, need at least {needed}")]
    InsufficientData { found: usize, needed: usize },
    #[error("rank-deficient fit: {0}")]
    RankDeficient(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("deviation undefined: corrected value is zero")]
    DeviationUndefined,
    #[error("map file {path}: {message}")]
    File { path: String, message: String },
    #[error(transparent)]
    Thermo(#[from] ThermoError),
}

/// Residual summary of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitStats {
    pub point_count: usize,
    /// J/kg
    pub head_rms: f64,
    pub head_max_rel: f64,
    /// W
    pub power_rms: f64,
    pub power_max_rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMap {
    pub reference: ReferenceConditions,
    /// rev/min
    pub n_ref_speed: f64,
    /// `Hp = a0 + a1 m + a2 m^2 + a3 m^3`, J/kg against kg/s.
    pub head_coeffs: [f64; 4],
    /// W against kg/s.
    pub power_coeffs: [f64; 4],
    /// kg/s
    pub flow_range: [f64; 2],
    pub fit_stats: FitStats,
}

pub fn eval_cubic(c: &[f64; 4], m: f64) -> f64 {
    ((c[3] * m + c[2]) * m + c[1]) * m + c[0]
}

/// Least-squares cubic through `(x, y)`.
///
/// The Vandermonde matrix is built on `t = (x - center)/half_width` against
/// `y - mean(y)`, solved by Householder QR, and the coefficients are expanded
/// back to powers of `x`.
pub fn fit_cubic(x: &[f64], y: &[f64]) -> Result<[f64; 4], MapError> {
    if x.len() != y.len() {
        return Err(MapError::InvalidMap(format!(
            "{} abscissae for {} ordinates",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 4 {
        return Err(MapError::InsufficientData {
            found: x.len(),
            needed: 4,
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(MapError::InvalidMap("non-finite fit data".into()));
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    if !(half > RANK_TOLERANCE * center.abs().max(1.0)) {
        return Err(MapError::RankDeficient(format!("all flows equal ({lo})")));
    }

    let rows = x.len();
    let a = DMatrix::from_fn(rows, 4, |i, j| ((x[i] - center) / half).powi(j as i32));
    let y_mean = y.iter().sum::<f64>() / rows as f64;
    let b = DVector::from_iterator(rows, y.iter().map(|v| v - y_mean));
    let qr = a.qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..4).map(|i| r[(i, i)].abs()).collect();
    let largest = diag.iter().copied().fold(0.0, f64::max);
    if diag.iter().any(|&d| d <= RANK_TOLERANCE * largest) {
        return Err(MapError::RankDeficient(
            "fewer than four distinct flows".into(),
        ));
    }
    let qtb = qr.q().transpose() * b;
    let beta = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| MapError::RankDeficient("singular triangular factor".into()))?;

    // sum_j beta_j ((x - c)/h)^j expanded in powers of x
    let mut coeffs = [y_mean, 0.0, 0.0, 0.0];
    for (j, &bj) in beta.iter().enumerate() {
        let scale = bj / half.powi(j as i32);
        for (i, c) in coeffs.iter_mut().enumerate().take(j + 1) {
            *c += scale * binomial(j, i) * (-center).powi((j - i) as i32);
        }
    }
    Ok(coeffs)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Fan-law normalization of a corrected point to `n_ref`: `(m, Hp, PWR)`.
fn normalized(p: &CorrectedPoint, n_ref: f64) -> (f64, f64, f64) {
    let s = n_ref / p.speed_c;
    (p.mass_flow_c * s, p.head_c * s * s, p.power_c * s * s * s)
}

/// Fits head and power cubics to the converged points. `n_ref_speed`
/// defaults to the median corrected speed of those points.
pub fn fit_reference_map(
    points: &[CorrectedPoint],
    reference: &ReferenceConditions,
    n_ref_speed: Option<f64>,
) -> Result<ReferenceMap, MapError> {
    let usable: Vec<&CorrectedPoint> = points.iter().filter(|p| p.converged).collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(MapError::InsufficientData {
            found: usable.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let n_ref = match n_ref_speed {
        Some(n) if n > 0.0 && n.is_finite() => n,
        Some(n) => return Err(MapError::InvalidMap(format!("n_ref_speed = {n}"))),
        None => median(&mut usable.iter().map(|p| p.speed_c).collect::<Vec<_>>()),
    };

    let mut m = Vec::with_capacity(usable.len());
    let mut hp = Vec::with_capacity(usable.len());
    let mut pw = Vec::with_capacity(usable.len());
    for p in &usable {
        let (mi, hi, wi) = normalized(p, n_ref);
        m.push(mi);
        hp.push(hi);
        pw.push(wi);
    }
    let head_coeffs = fit_cubic(&m, &hp)?;
    let power_coeffs = fit_cubic(&m, &pw)?;

    let residuals = |c: &[f64; 4], y: &[f64]| {
        let mut sq = 0.0;
        let mut max_rel: f64 = 0.0;
        for (mi, yi) in m.iter().zip(y) {
            let r = eval_cubic(c, *mi) - yi;
            sq += r * r;
            max_rel = max_rel.max((r / yi).abs());
        }
        ((sq / y.len() as f64).sqrt(), max_rel)
    };
    let (head_rms, head_max_rel) = residuals(&head_coeffs, &hp);
    let (power_rms, power_max_rel) = residuals(&power_coeffs, &pw);

    let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let map = ReferenceMap {
        reference: reference.clone(),
        n_ref_speed: n_ref,
        head_coeffs,
        power_coeffs,
        flow_range: [lo, hi],
        fit_stats: FitStats {
            point_count: usable.len(),
            head_rms,
            head_max_rel,
            power_rms,
            power_max_rel,
        },
    };
    map.validate()?;
    Ok(map)
}

/// Map prediction at a corrected flow and speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Expected {
    /// J/kg
    pub head: f64,
    /// W
    pub power: f64,
    pub in_range: bool,
}

impl ReferenceMap {
    pub fn validate(&self) -> Result<(), MapError> {
        let [lo, hi] = self.flow_range;
        if !(lo < hi) {
            return Err(MapError::InvalidMap(format!("flow range [{lo}, {hi}]")));
        }
        if !(self.n_ref_speed > 0.0 && self.n_ref_speed.is_finite()) {
            return Err(MapError::InvalidMap(format!(
                "n_ref_speed = {}",
                self.n_ref_speed
            )));
        }
        if self
            .head_coeffs
            .iter()
            .chain(&self.power_coeffs)
            .any(|c| !c.is_finite())
        {
            return Err(MapError::InvalidMap("non-finite coefficient".into()));
        }
        // cubic extrema inside the range plus the end points
        let c = &self.head_coeffs;
        let mut probes = vec![lo, hi];
        let (qa, qb, qc) = (3.0 * c[3], 2.0 * c[2], c[1]);
        if qa != 0.0 {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                probes.push((-qb + sq) / (2.0 * qa));
                probes.push((-qb - sq) / (2.0 * qa));
            }
        } else if qb != 0.0 {
            probes.push(-qc / qb);
        }
        for m in probes.into_iter().filter(|m| (lo..=hi).contains(m)) {
            let h = eval_cubic(c, m);
            if !(h > 0.0) {
                return Err(MapError::InvalidMap(format!(
                    "head {h} J/kg at flow {m} kg/s"
                )));
            }
        }
        Ok(())
    }

    /// Head and power expected at `(flow_c, speed_c)`. Values outside the
    /// fitted flow range are extrapolated and flagged.
    pub fn expected_performance(&self, flow_c: f64, speed_c: f64) -> Expected {
        let s = speed_c / self.n_ref_speed;
        let m = flow_c / s;
        Expected {
            head: eval_cubic(&self.head_coeffs, m) * s * s,
            power: eval_cubic(&self.power_coeffs, m) * s * s * s,
            in_range: m >= self.flow_range[0] && m <= self.flow_range[1],
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&MapFile::from(self)).expect("map serializes")
    }

    pub fn from_toml(text: &str, db: &ComponentDb) -> Result<Self, MapError> {
        let file: MapFile =
            toml::from_str(text).map_err(|e| MapError::InvalidMap(e.to_string()))?;
        file.into_map(db)
    }

    pub fn save(&self, path: &Path) -> Result<(), MapError> {
        std::fs::write(path, self.to_toml()).map_err(|e| MapError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path, db: &ComponentDb) -> Result<Self, MapError> {
        let text = std::fs::read_to_string(path).map_err(|e| MapError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text, db).map_err(|e| MapError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    format_version: u32,
    n_ref_speed_rpm: f64,
    head_coeffs: [f64; 4],
    power_coeffs: [f64; 4],
    flow_range_kg_s: [f64; 2],
    reference: MapReference,
    fit_stats: FitStats,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapReference {
    p1_pa: f64,
    t1_k: f64,
    composition: Vec<MapFraction>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFraction {
    component: String,
    fraction: f64,
}

impl From<&ReferenceMap> for MapFile {
    fn from(m: &ReferenceMap) -> Self {
        MapFile {
            format_version: MAP_FORMAT_VERSION,
            n_ref_speed_rpm: m.n_ref_speed,
            head_coeffs: m.head_coeffs,
            power_coeffs: m.power_coeffs,
            flow_range_kg_s: m.flow_range,
            reference: MapReference {
                p1_pa: m.reference.p1_ref,
                t1_k: m.reference.t1_ref,
                composition: m
                    .reference
                    .comp_ref
                    .entries()
                    .into_iter()
                    .map(|(component, fraction)| MapFraction {
                        component,
                        fraction,
                    })
                    .collect(),
            },
            fit_stats: m.fit_stats,
        }
    }
}

impl MapFile {
    fn into_map(self, db: &ComponentDb) -> Result<ReferenceMap, MapError> {
        if self.format_version != MAP_FORMAT_VERSION {
            return Err(MapError::InvalidMap(format!(
                "unsupported format_version {} (expected {MAP_FORMAT_VERSION})",
                self.format_version
            )));
        }
        let entries: Vec<(String, f64)> = self
            .reference
            .composition
            .into_iter()
            .map(|f| (f.component, f.fraction))
            .collect();
        let comp = GasComposition::new(db, &entries)?;
        let reference = ReferenceConditions::new(self.reference.p1_pa, self.reference.t1_k, comp)
            .map_err(|e| MapError::InvalidMap(e.to_string()))?;
        let map = ReferenceMap {
            reference,
            n_ref_speed: self.n_ref_speed_rpm,
            head_coeffs: self.head_coeffs,
            power_coeffs: self.power_coeffs,
            flow_range: self.flow_range_kg_s,
            fit_stats: self.fit_stats,
        };
        map.validate()?;
        Ok(map)
    }
}

/// `|(corrected - expected) / corrected| * 100`.
pub fn deviation(corrected: f64, expected: f64) -> Result<f64, MapError> {
    if corrected == 0.0 {
        return Err(MapError::DeviationUndefined);
    }
    Ok(((corrected - expected) / corrected).abs() * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointDeviation {
    pub index: usize,
    pub flow_c: f64,
    pub speed_c: f64,
    pub head_c: f64,
    pub head_expected: f64,
    /// %
    pub delta_head: f64,
    pub power_c: f64,
    pub power_expected: f64,
    /// %
    pub delta_power: f64,
    pub in_range: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exclusion {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub per_point: Vec<PointDeviation>,
    /// %, `None` when no point is eligible.
    pub avg_delta_head: Option<f64>,
    pub avg_delta_power: Option<f64>,
    pub max_delta_head: Option<f64>,
    pub max_delta_power: Option<f64>,
    pub eligible_count: usize,
    pub excluded_count: usize,
    pub exclusions: Vec<Exclusion>,
}

/// Order-independent mean.
fn mean(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Deviations of indexed corrected points from `map`. Averages cover the
/// converged, in-range points; the rest are listed as exclusions.
pub fn campaign_report<'a, I>(points: I, map: &ReferenceMap) -> DeviationReport
where
    I: IntoIterator<Item = (usize, &'a CorrectedPoint)>,
{
    let mut per_point = Vec::new();
    let mut exclusions = Vec::new();
    let mut dh = Vec::new();
    let mut dp = Vec::new();
    for (index, p) in points {
        let e = map.expected_performance(p.mass_flow_c, p.speed_c);
        let (Ok(delta_head), Ok(delta_power)) =
            (deviation(p.head_c, e.head), deviation(p.power_c, e.power))
        else {
            exclusions.push(Exclusion {
                index,
                reason: "deviation undefined: zero corrected value".into(),
            });
            continue;
        };
        if !p.converged {
            exclusions.push(Exclusion {
                index,
                reason: format!("correction not converged (|dn| = {:e})", p.final_delta),
            });
        } else if !e.in_range {
            exclusions.push(Exclusion {
                index,
                reason: format!(
                    "normalized flow {:.6} kg/s outside map range [{:.6}, {:.6}]",
                    p.mass_flow_c * map.n_ref_speed / p.speed_c,
                    map.flow_range[0],
                    map.flow_range[1]
                ),
            });
        } else {
            dh.push(delta_head);
            dp.push(delta_power);
        }
        per_point.push(PointDeviation {
            index,
            flow_c: p.mass_flow_c,
            speed_c: p.speed_c,
            head_c: p.head_c,
            head_expected: e.head,
            delta_head,
            power_c: p.power_c,
            power_expected: e.power,
            delta_power,
            in_range: e.in_range,
            converged: p.converged,
        });
    }
    let max = |v: &[f64]| v.iter().copied().reduce(f64::max);
    DeviationReport {
        max_delta_head: max(&dh),
        max_delta_power: max(&dp),
        eligible_count: dh.len(),
        avg_delta_head: mean(&mut dh),
        avg_delta_power: mean(&mut dp),
        excluded_count: exclusions.len(),
        per_point,
        exclusions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deviation_examples() {
        assert_eq!(deviation(5e4, 5e4).unwrap(), 0.0);
        assert!((deviation(50.0, 49.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((deviation(49.0, 50.0).unwrap() - 100.0 / 49.0).abs() < 1e-12);
        assert!(matches!(
            deviation(0.0, 1.0),
            Err(MapError::DeviationUndefined)
        ));
    }

    #[test]
    fn cubic_recovery() {
        let truth = [61_000.0, 310.0, -2.1, 0.0035];
        let x: Vec<f64> = (0..40).map(|i| 80.0 + 3.0 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&m| eval_cubic(&truth, m)).collect();
        let c = fit_cubic(&x, &y).unwrap();
        for (a, b) in c.iter().zip(&truth) {
            assert!(((a - b) / b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn constant_data() {
        let x: Vec<f64> = (0..12).map(|i| 100.0 + i as f64).collect();
        let c = fit_cubic(&x, &[5e4; 12]).unwrap();
        assert!((c[0] - 5e4).abs() < 1e-9 * 5e4);
        for ci in &c[1..] {
            assert!(ci.abs() < 1e-9, "{c:?}");
        }
    }

    #[test]
    fn degenerate_flows() {
        assert!(matches!(
            fit_cubic(&[3.0; 10], &[1.0; 10]),
            Err(MapError::RankDeficient(_))
        ));
        // three distinct abscissae cannot fix a cubic
        let x = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 1.0, 2.0];
        assert!(matches!(
            fit_cubic(&x, &[1.0; 8]),
            Err(MapError::RankDeficient(_))
        ));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(3, 0), 1.0);
        assert_eq!(binomial(3, 1), 3.0);
        assert_eq!(binomial(3, 2), 3.0);
        assert_eq!(binomial(3, 3), 1.0);
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }
}
