//! Scenario configuration: a JSON document with sections `coefficients`,
//! `initial`, `horizon`, `integrator` and `output`, optionally layered on
//! top of a built-in preset.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::coefficients::{check_positive, Harmonic, PeriodicCoefficient};
use crate::dynamics::{CoefficientSet, State};
use crate::integrator::IntegratorConfig;
use crate::scenarios;

pub const DEFAULT_SAMPLES_PER_PERIOD: usize = 64;
pub const MIN_SAMPLES_PER_PERIOD: usize = 10;

const TOP_LEVEL_KEYS: [&str; 7] = ["preset", "omega", "coefficients", "initial", "horizon", "integrator", "output"];

/// A configuration problem, located by a dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Integrator settings given in the config; unset fields fall back to the
/// command's own defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegratorOverrides {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_steps: Option<usize>,
}

impl IntegratorOverrides {
    pub fn apply(&self, mut base: IntegratorConfig) -> IntegratorConfig {
        if let Some(r) = self.rtol {
            base.rtol = r;
        }
        if let Some(a) = self.atol {
            base.atol = a;
        }
        if let Some(m) = self.max_steps {
            base.max_steps = m;
        }
        base
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub coefficients: CoefficientSet,
    pub initial: State,
    pub horizon: f64,
    pub integrator: IntegratorOverrides,
    pub samples_per_period: usize,
    /// The fully resolved document, echoed into run records.
    pub document: Value,
}

fn coefficient_value(c: &PeriodicCoefficient) -> Value {
    let harmonics: Vec<Value> = c
        .harmonics()
        .iter()
        .map(|h| json!({"k": h.k, "sin": h.sin, "cos": h.cos}))
        .collect();
    json!({"mean": c.mean(), "harmonics": harmonics})
}

/// The JSON document equivalent to a built-in preset.
pub fn preset_document(name: &str) -> Option<Value> {
    let params = scenarios::by_name(name)?;
    let coefficients: Map<String, Value> = params
        .named()
        .iter()
        .map(|(n, c)| (n.to_string(), coefficient_value(c)))
        .collect();
    let x0 = scenarios::INITIAL_STATE;
    Some(json!({
        "omega": params.period(),
        "coefficients": coefficients,
        "initial": {"x1": x0.x1, "x2": x0.x2, "x3": x0.x3},
        "horizon": scenarios::HORIZON,
        "output": {"samples_per_period": DEFAULT_SAMPLES_PER_PERIOD},
    }))
}

/// Overlays `over` onto `base`. Objects merge key by key, except that each
/// entry of `coefficients` is replaced as a whole.
fn merge(base: &mut Value, over: &Value, inside_coefficients: bool) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                if inside_coefficients {
                    b.insert(k.clone(), v.clone());
                } else {
                    let entry = b.entry(k.clone()).or_insert(Value::Null);
                    if entry.is_object() && v.is_object() {
                        merge(entry, v, k == "coefficients");
                    } else {
                        *entry = v.clone();
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// Command-line overrides applied after the file and preset.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub initial: Option<[f64; 3]>,
    pub horizon: Option<f64>,
}

impl ScenarioConfig {
    /// Resolves `preset` (command line), then a file's own `preset` key, then
    /// the file contents, then `overrides`.
    pub fn load(preset: Option<&str>, file: Option<&Path>, overrides: &Overrides) -> Result<Self, ConfigError> {
        let file_doc = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
                let v: Value = serde_json::from_str(&text)
                    .map_err(|e| ConfigError::new("", format!("{} is not valid JSON: {e}", path.display())))?;
                if !v.is_object() {
                    return Err(ConfigError::new("", "configuration must be a JSON object"));
                }
                Some(v)
            }
            None => None,
        };
        let file_preset = match file_doc.as_ref().and_then(|d| d.get("preset")) {
            None => None,
            Some(Value::String(s)) => Some(s.as_str()),
            Some(_) => return Err(ConfigError::new("preset", "must be a string")),
        };
        let mut doc = Value::Object(Map::new());
        for name in [preset, file_preset].into_iter().flatten() {
            let p = preset_document(name)
                .ok_or_else(|| ConfigError::new("preset", format!("unknown preset `{name}` (expected fig1 or fig2)")))?;
            merge(&mut doc, &p, false);
        }
        if let Some(mut f) = file_doc {
            f.as_object_mut().expect("checked above").remove("preset");
            merge(&mut doc, &f, false);
        }
        if let Some(x) = overrides.initial {
            doc["initial"] = json!({"x1": x[0], "x2": x[1], "x3": x[2]});
        }
        if let Some(h) = overrides.horizon {
            doc["horizon"] = json!(h);
        }
        Self::from_document(doc)
    }

    pub fn from_document(doc: Value) -> Result<Self, ConfigError> {
        let root = doc.as_object().ok_or_else(|| ConfigError::new("", "configuration must be a JSON object"))?;
        for key in root.keys() {
            if !TOP_LEVEL_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::new(key.clone(), "unknown field"));
            }
        }
        let omega = number(root.get("omega"), "omega")?;
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(ConfigError::new("omega", format!("period must be positive, got {omega}")));
        }
        let coefficients = parse_coefficients(root.get("coefficients"), omega)?;
        let initial = parse_initial(root.get("initial"))?;
        let horizon = number(root.get("horizon"), "horizon")?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ConfigError::new("horizon", format!("must be positive, got {horizon}")));
        }
        let integrator = parse_integrator(root.get("integrator"))?;
        let samples_per_period = parse_output(root.get("output"))?;
        Ok(Self {
            coefficients,
            initial,
            horizon,
            integrator,
            samples_per_period,
            document: doc,
        })
    }
}

fn number(v: Option<&Value>, path: &str) -> Result<f64, ConfigError> {
    match v {
        None => Err(ConfigError::new(path, "missing")),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| ConfigError::new(path, format!("expected a number, got {v}"))),
    }
}

fn object<'a>(v: Option<&'a Value>, path: &str, required: bool) -> Result<Option<&'a Map<String, Value>>, ConfigError> {
    match v {
        None if required => Err(ConfigError::new(path, "missing")),
        None => Ok(None),
        Some(Value::Object(m)) => Ok(Some(m)),
        Some(other) => Err(ConfigError::new(path, format!("expected an object, got {other}"))),
    }
}

fn reject_unknown(m: &Map<String, Value>, path: &str, known: &[&str]) -> Result<(), ConfigError> {
    match m.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(ConfigError::new(format!("{path}.{k}"), "unknown field")),
        None => Ok(()),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientEntry {
    mean: f64,
    #[serde(default)]
    harmonics: Vec<Harmonic>,
    omega: Option<f64>,
}

fn parse_coefficients(v: Option<&Value>, omega: f64) -> Result<CoefficientSet, ConfigError> {
    let m = object(v, "coefficients", true)?.expect("required");
    reject_unknown(m, "coefficients", &CoefficientSet::NAMES)?;
    let mut parsed = Vec::with_capacity(14);
    for name in CoefficientSet::NAMES {
        let path = format!("coefficients.{name}");
        let entry = match m.get(name) {
            None => return Err(ConfigError::new(path, "missing")),
            Some(Value::Number(n)) => CoefficientEntry {
                mean: n.as_f64().expect("JSON numbers are finite"),
                harmonics: Vec::new(),
                omega: None,
            },
            Some(other) => CoefficientEntry::deserialize(other).map_err(|e| ConfigError::new(path.clone(), e.to_string()))?,
        };
        let period = entry.omega.unwrap_or(omega);
        if (period - omega).abs() > 1e-12 * omega {
            return Err(ConfigError::new(
                format!("{path}.omega"),
                format!("period {period} differs from the scenario period {omega}"),
            ));
        }
        let coef = PeriodicCoefficient::new(omega, entry.mean, entry.harmonics)
            .map_err(|e| ConfigError::new(path.clone(), e.to_string()))?;
        let check = check_positive(&coef).map_err(|e| ConfigError::new(path.clone(), e.to_string()))?;
        if !check.positive {
            return Err(ConfigError::new(
                path,
                format!(
                    "must be positive for all t; minimum {} at t = {}",
                    check.min,
                    check.violation.unwrap_or(0.0)
                ),
            ));
        }
        parsed.push(coef);
    }
    let mut it = parsed.into_iter();
    let mut next = || it.next().expect("fourteen coefficients");
    Ok(CoefficientSet {
        a1: next(),
        a2: next(),
        a3: next(),
        b11: next(),
        b12: next(),
        b21: next(),
        b22: next(),
        c1: next(),
        c2: next(),
        d1: next(),
        d2: next(),
        alpha: next(),
        beta: next(),
        gamma: next(),
    })
}

fn parse_initial(v: Option<&Value>) -> Result<State, ConfigError> {
    let m = object(v, "initial", true)?.expect("required");
    reject_unknown(m, "initial", &["x1", "x2", "x3"])?;
    let mut x = [0.0; 3];
    for (i, key) in ["x1", "x2", "x3"].iter().enumerate() {
        let path = format!("initial.{key}");
        let value = number(m.get(*key), &path)?;
        if !(value >= 0.0 && value.is_finite()) {
            return Err(ConfigError::new(path, format!("density must be nonnegative, got {value}")));
        }
        x[i] = value;
    }
    Ok(State::from(x))
}

fn parse_integrator(v: Option<&Value>) -> Result<IntegratorOverrides, ConfigError> {
    let Some(m) = object(v, "integrator", false)? else {
        return Ok(IntegratorOverrides::default());
    };
    reject_unknown(m, "integrator", &["rtol", "atol", "max_steps"])?;
    let mut out = IntegratorOverrides::default();
    for (key, slot) in [("rtol", &mut out.rtol), ("atol", &mut out.atol)] {
        if let Some(v) = m.get(key) {
            let path = format!("integrator.{key}");
            let x = number(Some(v), &path)?;
            if !(x > 0.0 && x.is_finite()) {
                return Err(ConfigError::new(path, format!("tolerance must be positive, got {x}")));
            }
            *slot = Some(x);
        }
    }
    if let Some(v) = m.get("max_steps") {
        let n = v
            .as_u64()
            .filter(|n| *n >= 1)
            .ok_or_else(|| ConfigError::new("integrator.max_steps", format!("expected a positive integer, got {v}")))?;
        out.max_steps = Some(n as usize);
    }
    Ok(out)
}

fn parse_output(v: Option<&Value>) -> Result<usize, ConfigError> {
    let Some(m) = object(v, "output", false)? else {
        return Ok(DEFAULT_SAMPLES_PER_PERIOD);
    };
    reject_unknown(m, "output", &["samples_per_period"])?;
    match m.get("samples_per_period") {
        None => Ok(DEFAULT_SAMPLES_PER_PERIOD),
        Some(v) => v
            .as_u64()
            .filter(|n| *n as usize >= MIN_SAMPLES_PER_PERIOD)
            .map(|n| n as usize)
            .ok_or_else(|| {
                ConfigError::new(
                    "output.samples_per_period",
                    format!("expected an integer of at least {MIN_SAMPLES_PER_PERIOD}, got {v}"),
                )
            }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in ["fig1", "fig2"] {
            let cfg = ScenarioConfig::load(Some(name), None, &Overrides::default()).unwrap();
            assert_eq!(cfg.coefficients, scenarios::by_name(name).unwrap());
            assert_eq!(cfg.initial, scenarios::INITIAL_STATE);
            assert_eq!(cfg.horizon, 100.0);
            assert_eq!(cfg.samples_per_period, 64);
        }
    }

    #[test]
    fn negative_initial_density_names_field() {
        let o = Overrides {
            initial: Some([-0.5, 0.7, 1.0]),
            horizon: None,
        };
        let err = ScenarioConfig::load(Some("fig1"), None, &o).unwrap_err();
        assert_eq!(err.path, "initial.x1");
    }

    #[test]
    fn coefficient_override_replaces_whole_entry() {
        let mut doc = preset_document("fig1").unwrap();
        merge(&mut doc, &json!({"coefficients": {"a3": 0.5}}), false);
        let cfg = ScenarioConfig::from_document(doc).unwrap();
        assert!(cfg.coefficients.a3.is_constant());
        assert_eq!(cfg.coefficients.a3.mean(), 0.5);
        assert_eq!(cfg.coefficients.a1, scenarios::fig1().a1);
    }

    #[test]
    fn nonpositive_coefficient_rejected() {
        let mut doc = preset_document("fig2").unwrap();
        doc["coefficients"]["gamma"] = json!({"mean": 0.5, "harmonics": [{"k": 1, "sin": 1.0}]});
        let err = ScenarioConfig::from_document(doc).unwrap_err();
        assert_eq!(err.path, "coefficients.gamma");
    }

    #[test]
    fn missing_and_unknown_fields() {
        let mut doc = preset_document("fig1").unwrap();
        doc["coefficients"].as_object_mut().unwrap().remove("d2");
        assert_eq!(ScenarioConfig::from_document(doc).unwrap_err().path, "coefficients.d2");
        let mut doc = preset_document("fig1").unwrap();
        doc["initial"]["x4"] = json!(1.0);
        assert_eq!(ScenarioConfig::from_document(doc).unwrap_err().path, "initial.x4");
        let mut doc = preset_document("fig1").unwrap();
        doc["coefficients"]["a1"]["omega"] = json!(1.0);
        assert_eq!(ScenarioConfig::from_document(doc).unwrap_err().path, "coefficients.a1.omega");
    }
}
