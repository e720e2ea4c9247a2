//! Pure-component constants and the line-oriented component database.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use super::ThermoError;

/// Bundled database: N2, CO2 and the C1-C6 normal alkanes.
pub const BUNDLED_DATABASE: &str = include_str!("../../data/components.dat");

/// Lower edge of the temperature window over which `cp(T) > 0` is checked on load.
const CP_CHECK_MIN_K: f64 = 200.0;
const CP_CHECK_MAX_K: f64 = 600.0;

/// Critical constants and ideal-gas heat capacity of one species.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentData {
    pub name: String,
    /// kg/kmol
    pub molecular_weight: f64,
    /// Pa
    pub critical_pressure: f64,
    /// K
    pub critical_temperature: f64,
    pub acentric_factor: f64,
    /// `cp = c0 + c1 T + c2 T^2 + c3 T^3` in J/(kmol K).
    pub ideal_cp: [f64; 4],
}

impl ComponentData {
    pub fn validate(&self) -> Result<(), ThermoError> {
        let bad = |what: &str| {
            Err(ThermoError::Database {
                line: 0,
                message: format!("component `{}`: {what}", self.name),
            })
        };
        if self.name.is_empty() {
            return bad("empty name");
        }
        if !(self.molecular_weight > 0.0 && self.molecular_weight.is_finite()) {
            return bad("molecular weight must be positive");
        }
        if !(self.critical_pressure > 0.0 && self.critical_pressure.is_finite()) {
            return bad("critical pressure must be positive");
        }
        if !(self.critical_temperature > 0.0 && self.critical_temperature.is_finite()) {
            return bad("critical temperature must be positive");
        }
        if !self.acentric_factor.is_finite() || self.ideal_cp.iter().any(|c| !c.is_finite()) {
            return bad("non-finite constant");
        }
        let steps = 80;
        for i in 0..=steps {
            let t = CP_CHECK_MIN_K + (CP_CHECK_MAX_K - CP_CHECK_MIN_K) * i as f64 / steps as f64;
            if self.cp_molar(t) <= 0.0 {
                return bad(&format!("ideal-gas cp is not positive at {t} K"));
            }
        }
        Ok(())
    }

    /// Ideal-gas molar heat capacity, J/(kmol K).
    pub fn cp_molar(&self, t: f64) -> f64 {
        let [c0, c1, c2, c3] = self.ideal_cp;
        c0 + t * (c1 + t * (c2 + t * c3))
    }

    /// Integral of `cp dT` from `t0` to `t`, J/kmol.
    pub fn enthalpy_integral(&self, t0: f64, t: f64) -> f64 {
        let [c0, c1, c2, c3] = self.ideal_cp;
        let antiderivative = |x: f64| x * (c0 + x * (c1 / 2.0 + x * (c2 / 3.0 + x * c3 / 4.0)));
        antiderivative(t) - antiderivative(t0)
    }

    /// Integral of `cp/T dT` from `t0` to `t`, J/(kmol K).
    pub fn entropy_integral(&self, t0: f64, t: f64) -> f64 {
        let [c0, c1, c2, c3] = self.ideal_cp;
        let poly = |x: f64| x * (c1 + x * (c2 / 2.0 + x * c3 / 3.0));
        c0 * (t / t0).ln() + poly(t) - poly(t0)
    }
}

/// Immutable set of components plus optional binary interaction parameters.
#[derive(Debug, Clone, Default)]
pub struct ComponentDb {
    components: Vec<Arc<ComponentData>>,
    kij: BTreeMap<(String, String), f64>,
}

impl ComponentDb {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_DATABASE).expect("bundled component database is valid")
    }

    pub fn load(path: &Path) -> Result<Self, ThermoError> {
        let text = std::fs::read_to_string(path).map_err(|e| ThermoError::Database {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Parses the record format documented in `data/components.dat`.
    pub fn parse(text: &str) -> Result<Self, ThermoError> {
        let mut db = ComponentDb::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let err = |message: String| ThermoError::Database {
                line: line_no,
                message,
            };
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| err(format!("`{s}` is not a number")))
            };
            if fields[0] == "kij" {
                if fields.len() != 4 {
                    return Err(err("kij record needs: kij name_a name_b value".into()));
                }
                let value = num(fields[3])?;
                for name in &fields[1..3] {
                    if db.get(name).is_none() {
                        return Err(err(format!("kij refers to undeclared component `{name}`")));
                    }
                }
                db.set_kij(fields[1], fields[2], value);
                continue;
            }
            if fields.len() != 9 {
                return Err(err(format!("expected 9 fields, found {}", fields.len())));
            }
            let component = ComponentData {
                name: fields[0].to_string(),
                molecular_weight: num(fields[1])?,
                critical_pressure: num(fields[2])?,
                critical_temperature: num(fields[3])?,
                acentric_factor: num(fields[4])?,
                ideal_cp: [
                    num(fields[5])?,
                    num(fields[6])?,
                    num(fields[7])?,
                    num(fields[8])?,
                ],
            };
            component.validate().map_err(|e| match e {
                ThermoError::Database { message, .. } => err(message),
                other => other,
            })?;
            if db.get(&component.name).is_some() {
                return Err(err(format!("duplicate component `{}`", component.name)));
            }
            db.components.push(Arc::new(component));
        }
        Ok(db)
    }

    /// Adds or replaces a component.
    pub fn insert(&mut self, component: ComponentData) -> Result<(), ThermoError> {
        component.validate()?;
        match self
            .components
            .iter()
            .position(|c| c.name == component.name)
        {
            Some(i) => self.components[i] = Arc::new(component),
            None => self.components.push(Arc::new(component)),
        }
        Ok(())
    }

    pub fn set_kij(&mut self, a: &str, b: &str, value: f64) {
        self.kij.insert(Self::pair_key(a, b), value);
    }

    pub fn kij(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 0.0;
        }
        self.kij.get(&Self::pair_key(a, b)).copied().unwrap_or(0.0)
    }

    pub fn get(&self, name: &str) -> Option<&Arc<ComponentData>> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn lookup(&self, name: &str) -> Result<&Arc<ComponentData>, ThermoError> {
        self.get(name)
            .ok_or_else(|| ThermoError::UnknownComponent(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.components.iter().map(|c| c.name.as_str())
    }

    fn pair_key(a: &str, b: &str) -> (String, String) {
        if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        }
    }
}
