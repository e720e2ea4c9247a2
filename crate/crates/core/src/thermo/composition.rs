use std::sync::Arc;

use super::component::{ComponentData, ComponentDb};
use super::ThermoError;

/// Largest tolerated departure of the input fractions from unity.
pub const FRACTION_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Constituent {
    pub component: Arc<ComponentData>,
    pub fraction: f64,
}

/// A resolved gas mixture: components, mole fractions summing to one and the
/// binary interaction matrix taken from the database it was built against.
#[derive(Debug, Clone, PartialEq)]
pub struct GasComposition {
    constituents: Vec<Constituent>,
    kij: Vec<f64>,
}

impl GasComposition {
    /// Builds a composition whose fractions already sum to one within
    /// [`FRACTION_SUM_TOLERANCE`]; the result is renormalized exactly.
    pub fn new<S: AsRef<str>>(db: &ComponentDb, entries: &[(S, f64)]) -> Result<Self, ThermoError> {
        let sum: f64 = entries.iter().map(|(_, x)| *x).sum();
        if (sum - 1.0).abs() > FRACTION_SUM_TOLERANCE {
            return Err(ThermoError::Composition(format!(
                "mole fractions sum to {sum}, expected 1"
            )));
        }
        Self::normalized(db, entries)
    }

    /// Builds a composition from any non-negative fractions with a positive sum.
    pub fn normalized<S: AsRef<str>>(
        db: &ComponentDb,
        entries: &[(S, f64)],
    ) -> Result<Self, ThermoError> {
        if entries.is_empty() {
            return Err(ThermoError::Composition("no components".into()));
        }
        let mut constituents: Vec<Constituent> = Vec::with_capacity(entries.len());
        for (name, fraction) in entries {
            let name = name.as_ref();
            if !(fraction.is_finite() && *fraction >= 0.0) {
                return Err(ThermoError::Composition(format!(
                    "fraction of `{name}` is {fraction}"
                )));
            }
            if constituents.iter().any(|c| c.component.name == name) {
                return Err(ThermoError::Composition(format!("`{name}` listed twice")));
            }
            constituents.push(Constituent {
                component: Arc::clone(db.lookup(name)?),
                fraction: *fraction,
            });
        }
        let sum: f64 = constituents.iter().map(|c| c.fraction).sum();
        if sum <= 0.0 {
            return Err(ThermoError::Composition("fractions sum to zero".into()));
        }
        for c in &mut constituents {
            c.fraction /= sum;
        }
        let n = constituents.len();
        let mut kij = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                kij[i * n + j] = db.kij(
                    &constituents[i].component.name,
                    &constituents[j].component.name,
                );
            }
        }
        Ok(Self { constituents, kij })
    }

    pub fn pure(db: &ComponentDb, name: &str) -> Result<Self, ThermoError> {
        Self::new(db, &[(name, 1.0)])
    }

    pub fn constituents(&self) -> &[Constituent] {
        &self.constituents
    }

    pub fn len(&self) -> usize {
        self.constituents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constituents.is_empty()
    }

    pub(crate) fn kij(&self, i: usize, j: usize) -> f64 {
        self.kij[i * self.constituents.len() + j]
    }

    /// `(name, fraction)` pairs in declaration order.
    pub fn entries(&self) -> Vec<(String, f64)> {
        self.constituents
            .iter()
            .map(|c| (c.component.name.clone(), c.fraction))
            .collect()
    }

    pub fn molecular_weight(&self) -> f64 {
        self.constituents
            .iter()
            .map(|c| c.fraction * c.component.molecular_weight)
            .sum()
    }
}

/// Mole-fraction-weighted molecular weight, kg/kmol.
pub fn mixture_molecular_weight(comp: &GasComposition) -> f64 {
    comp.molecular_weight()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_methane() {
        let db = ComponentDb::bundled();
        let c = GasComposition::pure(&db, "CH4").unwrap();
        assert_eq!(mixture_molecular_weight(&c), 16.043);
    }

    #[test]
    fn equimolar_methane_ethane() {
        let db = ComponentDb::bundled();
        let c = GasComposition::new(&db, &[("CH4", 0.5), ("C2H6", 0.5)]).unwrap();
        assert!((mixture_molecular_weight(&c) - 23.0565).abs() < 1e-12);
    }

    #[test]
    fn eight_component_weighted_sum() {
        let db = ComponentDb::bundled();
        let entries = [
            ("CH4", 0.8520),
            ("C2H6", 0.0620),
            ("C3H8", 0.0280),
            ("nC4H10", 0.0090),
            ("nC5H12", 0.0030),
            ("nC6H14", 0.0010),
            ("N2", 0.0150),
            ("CO2", 0.0300),
        ];
        let c = GasComposition::new(&db, &entries).unwrap();
        // spreadsheet-style: one product per row, summed top to bottom
        let rows = [
            0.8520 * 16.043,
            0.0620 * 30.070,
            0.0280 * 44.097,
            0.0090 * 58.123,
            0.0030 * 72.150,
            0.0010 * 86.177,
            0.0150 * 28.014,
            0.0300 * 44.010,
        ];
        let expected: f64 = rows.iter().sum();
        assert!((mixture_molecular_weight(&c) - expected).abs() < 1e-12);
    }

    #[test]
    fn unknown_component_is_a_lookup_error() {
        let db = ComponentDb::bundled();
        assert_eq!(
            GasComposition::pure(&db, "H2S").unwrap_err(),
            ThermoError::UnknownComponent("H2S".into())
        );
    }

    #[test]
    fn fraction_rules() {
        let db = ComponentDb::bundled();
        assert!(GasComposition::new(&db, &[("CH4", 0.9), ("C2H6", 0.05)]).is_err());
        assert!(GasComposition::new(&db, &[("CH4", 1.1), ("C2H6", -0.1)]).is_err());
        assert!(GasComposition::new::<&str>(&db, &[]).is_err());
        let c = GasComposition::normalized(&db, &[("CH4", 0.9), ("C2H6", 0.05)]).unwrap();
        let sum: f64 = c.constituents().iter().map(|c| c.fraction).sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }
}
