//! Run configuration: schema validation, defaults and the typed view.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::geometry::{AmbientCurvature, CurveSpec, FiberKind, FrameChoice, MetricMode, Tube};
use crate::harness::StudyParams;
use crate::io::sha256_hex;
use crate::spectral::Renorm;

/// The published schema, also installed next to the crate as `schema.toml`.
pub const SCHEMA: &str = include_str!("../schema.toml");

/// Section name of top-level keys in the schema.
const ROOT: &str = "root";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    String,
    Float,
    Integer,
    FloatList,
    IntegerList,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeySpec {
    #[serde(rename = "type")]
    kind: Kind,
    default: Option<Value>,
    allowed: Option<Vec<String>>,
    min: Option<f64>,
    max: Option<f64>,
    #[serde(default)]
    min_open: bool,
    #[serde(default)]
    max_open: bool,
    message: Option<String>,
    #[allow(dead_code)]
    doc: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Schema {
    sections: BTreeMap<String, BTreeMap<String, KeySpec>>,
}

impl Schema {
    pub fn parse(text: &str) -> Result<Self> {
        let sections: BTreeMap<String, BTreeMap<String, KeySpec>> =
            toml::from_str(text).map_err(|e| Error::Config(vec![format!("schema: {e}")]))?;
        Ok(Schema { sections })
    }

    pub fn builtin() -> Self {
        Self::parse(SCHEMA).expect("embedded schema parses")
    }

    /// Checks `input` against the schema and fills defaults. Every violation is reported.
    pub fn validate(&self, input: &Table) -> Result<Table> {
        let mut errors = Vec::new();
        let mut out = Table::new();
        for (key, value) in input {
            if key == ROOT || (!self.sections.contains_key(key) && !self.root_has(key)) {
                errors.push(format!("unknown key `{key}`"));
            } else if self.sections.contains_key(key) && key != ROOT && !value.is_table() {
                errors.push(format!("`{key}` must be a table"));
            }
        }
        for (section, keys) in &self.sections {
            let (given, target) = if section == ROOT {
                (Some(input), &mut out)
            } else {
                let t = out.entry(section.clone()).or_insert_with(|| Value::Table(Table::new()));
                (input.get(section).and_then(Value::as_table), t.as_table_mut().expect("section table"))
            };
            if section != ROOT {
                if let Some(g) = given {
                    for k in g.keys().filter(|k| !keys.contains_key(*k)) {
                        errors.push(format!("unknown key `{section}.{k}`"));
                    }
                }
            }
            for (key, spec) in keys {
                let path = if section == ROOT { key.clone() } else { format!("{section}.{key}") };
                match given.and_then(|g| g.get(key)) {
                    Some(v) => match check(&path, v, spec) {
                        Ok(v) => {
                            target.insert(key.clone(), v);
                        }
                        Err(mut e) => errors.append(&mut e),
                    },
                    None => match &spec.default {
                        Some(d) => {
                            target.insert(key.clone(), d.clone());
                        }
                        None => errors.push(format!("missing required key `{path}`")),
                    },
                }
            }
        }
        cross_checks(&out, &mut errors);
        if errors.is_empty() {
            Ok(out)
        } else {
            Err(Error::Config(errors))
        }
    }

    fn root_has(&self, key: &str) -> bool {
        self.sections.get(ROOT).is_some_and(|r| r.contains_key(key))
    }
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

fn number(path: &str, v: &Value, spec: &KeySpec, integer: bool) -> std::result::Result<Value, String> {
    let x = match (v, integer) {
        (Value::Integer(i), _) => *i as f64,
        (Value::Float(f), false) => *f,
        _ => return Err(format!("`{path}` must be {}, got {}", if integer { "an integer" } else { "a number" }, type_name(v))),
    };
    let low = spec.min.is_some_and(|m| if spec.min_open { !(x > m) } else { !(x >= m) });
    let high = spec.max.is_some_and(|m| if spec.max_open { !(x < m) } else { !(x <= m) });
    if low || high {
        let detail = match &spec.message {
            Some(m) => m.clone(),
            None => {
                let lo = spec.min.map(|m| format!("{}{m}", if spec.min_open { "(" } else { "[" })).unwrap_or_else(|| "(-inf".into());
                let hi = spec.max.map(|m| format!("{m}{}", if spec.max_open { ")" } else { "]" })).unwrap_or_else(|| "inf)".into());
                format!("must be in {lo}, {hi}")
            }
        };
        return Err(format!("`{path}`: {detail}, got {x}"));
    }
    Ok(if integer { v.clone() } else { Value::Float(x) })
}

fn check(path: &str, v: &Value, spec: &KeySpec) -> std::result::Result<Value, Vec<String>> {
    match spec.kind {
        Kind::String => {
            let s = v.as_str().ok_or_else(|| vec![format!("`{path}` must be a string, got {}", type_name(v))])?;
            if let Some(allowed) = &spec.allowed {
                if !allowed.iter().any(|a| a == s) {
                    return Err(vec![format!("`{path}`: \"{s}\" is not one of {}", allowed.join(", "))]);
                }
            }
            Ok(v.clone())
        }
        Kind::Float => number(path, v, spec, false).map_err(|e| vec![e]),
        Kind::Integer => number(path, v, spec, true).map_err(|e| vec![e]),
        Kind::FloatList | Kind::IntegerList => {
            let items = v.as_array().ok_or_else(|| vec![format!("`{path}` must be a list, got {}", type_name(v))])?;
            if items.is_empty() {
                return Err(vec![format!("`{path}` must not be empty")]);
            }
            let integer = spec.kind == Kind::IntegerList;
            let mut errors = Vec::new();
            let mut out = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                match number(&format!("{path}[{i}]"), item, spec, integer) {
                    Ok(x) => out.push(x),
                    Err(e) => errors.push(e),
                }
            }
            if errors.is_empty() {
                Ok(Value::Array(out))
            } else {
                Err(errors)
            }
        }
    }
}

fn cross_checks(t: &Table, errors: &mut Vec<String>) {
    let get = |s: &str, k: &str| t.get(s).and_then(|x| x.get(k));
    for (s, k) in [("grid", "nw"), ("suites", "kato_nw")] {
        if let Some(n) = get(s, k).and_then(Value::as_integer).filter(|n| n % 2 == 0) {
            errors.push(format!("`{s}.{k}` must be odd, got {n}"));
        }
    }
    if let Some(list) = get("suites", "commutator_nw").and_then(Value::as_array) {
        for (i, v) in list.iter().enumerate() {
            if v.as_integer().unwrap_or_default() % 2 == 0 {
                errors.push(format!("`suites.commutator_nw[{i}]` must be odd"));
            }
        }
    }
    if let Some(a) = get("suites", "boundary_slope").and_then(Value::as_array) {
        let slope: Vec<f64> = a.iter().filter_map(Value::as_float).collect();
        if slope.len() != 2 || !(slope[0] < slope[1]) {
            errors.push("`suites.boundary_slope` must be [low, high] with low < high".into());
        }
    }
    if get("curve", "kind").and_then(Value::as_str) == Some("cylinder") && get("curve", "ambient_dim").and_then(Value::as_integer).is_some_and(|d| d != 2) {
        errors.push("`curve.kind = \"cylinder\"` needs `curve.ambient_dim = 2`".into());
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    pub kind: String,
    pub radius: f64,
    pub a: f64,
    pub b: f64,
    pub ambient_dim: usize,
    pub frame: String,
    pub curvature: f64,
    pub metric: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub ns: usize,
    pub nw: usize,
    pub nr: usize,
    pub ntheta: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub epsilons: Vec<f64>,
    pub times: Vec<f64>,
    pub mode: u32,
    pub perturbation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub count: usize,
    pub refine: f64,
    pub certify_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConventionConfig {
    pub renorm: String,
    pub potential: String,
    pub probe: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub epsilons: Vec<f64>,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub kato_ns: usize,
    pub kato_nw: usize,
    pub kato_states: usize,
    pub nochnkato_curvature: f64,
    pub nochnkato_ns: usize,
    pub nochnkato_nr: usize,
    pub nochnkato_ntheta: usize,
    pub nochnkato_max_ratio: f64,
    pub boundary_n: u32,
    pub boundary_t: f64,
    pub boundary_slope: [f64; 2],
    pub regularity_max_ratio: f64,
    pub commutator_ns: usize,
    pub commutator_nw: Vec<usize>,
    pub smooth_ev_levels: usize,
    pub interpolation_states: usize,
    pub interpolation_modes: usize,
    pub maximizer_tol: f64,
}

/// A validated configuration with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub output: String,
    pub curve: CurveConfig,
    pub grid: GridConfig,
    pub study: StudyConfig,
    pub solver: SolverConfig,
    pub conventions: ConventionConfig,
    pub spectrum: SpectrumConfig,
    pub suites: SuiteConfig,
}

/// A configuration together with the hash of the bytes it was read from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub input_hash: String,
}

impl RunConfig {
    pub fn from_table(input: &Table) -> Result<Self> {
        let filled = Schema::builtin().validate(input)?;
        Value::Table(filled).try_into().map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))?;
        Self::from_table(&table)
    }

    /// Reads a TOML configuration, or the `config` field of a run manifest (JSON).
    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Config(vec![format!("{} is not UTF-8", path.display())]))?;
        let config = if path.extension().is_some_and(|e| e == "json") {
            let json: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))?;
            let inner = json.get("config").cloned().unwrap_or(json);
            let table = Table::try_from(inner).map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))?;
            Self::from_table(&table)?
        } else {
            Self::from_toml_str(&text)?
        };
        Ok(LoadedConfig { config, input_hash: sha256_hex(&bytes) })
    }

    pub fn renorm(&self) -> Renorm {
        if self.conventions.renorm == "analytic" {
            Renorm::Analytic
        } else {
            Renorm::Discrete
        }
    }

    pub fn curve_spec(&self) -> CurveSpec {
        let c = &self.curve;
        match c.kind.as_str() {
            "ellipse" => CurveSpec::ellipse(c.a, c.b, c.ambient_dim, self.grid.ns),
            "cylinder" => CurveSpec::cylinder(c.radius, c.ambient_dim, self.grid.ns),
            _ => CurveSpec::circle(c.radius, c.ambient_dim, self.grid.ns),
        }
    }

    pub fn fiber(&self) -> FiberKind {
        if self.curve.ambient_dim == 3 {
            FiberKind::Disk { nr: self.grid.nr, ntheta: self.grid.ntheta }
        } else {
            FiberKind::Interval { nw: self.grid.nw }
        }
    }

    pub fn tube(&self) -> Result<Tube> {
        let frame = if self.curve.frame == "frenet" { FrameChoice::Frenet } else { FrameChoice::Parallel };
        let curvature = if self.curve.curvature == 0.0 {
            AmbientCurvature::Flat
        } else {
            AmbientCurvature::Constant { sectional: self.curve.curvature }
        };
        let metric = match self.curve.metric.as_str() {
            "series1" => MetricMode::Series { order: 1 },
            "series2" => MetricMode::Series { order: 2 },
            _ => MetricMode::Exact,
        };
        Tube::new(&self.curve_spec(), frame, curvature, self.fiber(), metric)
    }

    pub fn study_params(&self) -> StudyParams {
        StudyParams {
            epsilons: self.study.epsilons.clone(),
            times: self.study.times.clone(),
            mode: self.study.mode,
            perturbation: self.study.perturbation,
            tol: self.solver.tol,
            count: self.solver.count,
            seed: self.seed,
            refine: self.solver.refine,
            certify_threshold: self.solver.certify_threshold,
        }
    }
}
