//! Versioned run configuration: a JSON file merged with command-line flags.

use std::path::{Path, PathBuf};

use bosonic_qms::ccr::OperatorPolynomial;
use bosonic_qms::dynamics::{IntegratorConfig, Method};
use bosonic_qms::generator::ModelSpec;
use bosonic_qms::sobolev::SobolevOrder;
use bosonic_qms::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::args::{CommonArgs, IntegratorArgs, ModelArgs};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const WORKERS_ENV: &str = "BQMS_WORKERS";
pub const DEFAULT_OUTPUT: &str = "bqms-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    Vacuum,
    Fock { n: Vec<usize> },
    /// One amplitude per mode, or a single amplitude used on every mode.
    Coherent { alpha: Vec<Complex64> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<SobolevOrder>,
    /// `closed-form`, `tight` or `explicit`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<String>,
    /// For tight constants: `plain`, `c` (largest c at given mu) or `mu` (smallest mu at given c).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Frozen times for time-dependent models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Largest accepted relative spread of `||diff||_1 / eps` across epsilons.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_spread: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EcOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

/// The file schema. Every field but `version` is optional; flags override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    /// `{"model": name, "params": {...}}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoffs: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub certify: CertifyOptions,
    #[serde(default, skip_serializing_if = "is_default")]
    pub perturb: PerturbOptions,
    #[serde(default, skip_serializing_if = "is_default")]
    pub ec_norm: EcOptions,
    #[serde(default, skip_serializing_if = "is_default")]
    pub lemmas: LemmaOptions,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

impl RunConfig {
    pub fn empty() -> Self {
        RunConfig {
            version: SCHEMA_VERSION,
            command: None,
            model: None,
            cutoffs: None,
            integrator: None,
            initial_state: None,
            output_dir: None,
            seed: None,
            workers: None,
            certify: CertifyOptions::default(),
            perturb: PerturbOptions::default(),
            ec_norm: EcOptions::default(),
            lemmas: LemmaOptions::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        if cfg.version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "config version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    /// Loads `--config` if given, then applies the shared flags.
    pub fn from_args(
        command: &str,
        common: &CommonArgs,
        model: Option<&ModelArgs>,
        integrator: Option<&IntegratorArgs>,
    ) -> Result<Self, CliError> {
        let mut cfg = match &common.config {
            Some(p) => Self::load(p)?,
            None => Self::empty(),
        };
        if let Some(c) = &cfg.command {
            if c != command {
                return Err(CliError::Validation(format!(
                    "config is for `{c}`, not `{command}`"
                )));
            }
        }
        cfg.command = Some(command.to_string());
        set(&mut cfg.output_dir, common.output.clone());
        set(&mut cfg.seed, common.seed);
        set(&mut cfg.workers, common.workers);
        if let Some(m) = model {
            m.apply(&mut cfg)?;
        }
        if let Some(i) = integrator {
            i.apply(&mut cfg)?;
        }
        Ok(cfg)
    }

    /// Applies `path.to.key=value` overrides; values are JSON, or strings if
    /// they do not parse as JSON. The result is validated against the schema again.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), CliError> {
        if overrides.is_empty() {
            return Ok(());
        }
        let mut v = serde_json::to_value(&*self).map_err(|e| CliError::Validation(e.to_string()))?;
        for o in overrides {
            let (path, raw) = o
                .split_once('=')
                .ok_or_else(|| CliError::Parse(format!("override `{o}` is not KEY=VALUE")))?;
            let value =
                serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut node = &mut v;
            let keys: Vec<&str> = path.split('.').collect();
            for (i, key) in keys.iter().enumerate() {
                if key.is_empty() {
                    return Err(CliError::Parse(format!("override `{o}` has an empty key")));
                }
                if !node.is_object() {
                    *node = Value::Object(Map::new());
                }
                let obj = node.as_object_mut().expect("object");
                if i + 1 == keys.len() {
                    obj.insert(key.to_string(), value.clone());
                    break;
                }
                node = obj.entry(key.to_string()).or_insert(Value::Object(Map::new()));
            }
        }
        let cfg: RunConfig = serde_json::from_value(v)
            .map_err(|e| CliError::Validation(format!("after overrides: {e}")))?;
        if cfg.version != SCHEMA_VERSION || cfg.command != self.command {
            return Err(CliError::Validation("overrides may not change version or command".into()));
        }
        *self = cfg;
        Ok(())
    }

    /// Copy embedded in artifacts: drops the settings that do not affect results.
    pub fn effective(&self) -> RunConfig {
        RunConfig {
            output_dir: None,
            workers: None,
            ..self.clone()
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        let v = self
            .model
            .clone()
            .ok_or_else(|| CliError::Validation("no model given (use --model)".into()))?;
        let spec: ModelSpec = serde_json::from_value(v)
            .map_err(|e| CliError::Validation(format!("model: {e}")))?;
        spec.validate()
            .map_err(|e| CliError::Validation(format!("model: {e}")))?;
        Ok(spec)
    }

    pub fn cutoffs(&self, default: usize, modes: usize) -> Result<Vec<usize>, CliError> {
        let c = match &self.cutoffs {
            None => vec![default; modes],
            Some(v) if v.len() == 1 => vec![v[0]; modes],
            Some(v) if v.len() == modes => v.clone(),
            Some(v) => {
                return Err(CliError::Validation(format!(
                    "{} cutoffs given for a {modes}-mode model",
                    v.len()
                )))
            }
        };
        Ok(c)
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, CliError> {
        let cfg = self.integrator.clone().unwrap_or_default();
        cfg.validate()
            .map_err(|e| CliError::Validation(format!("integrator: {e}")))?;
        Ok(cfg)
    }
}

pub fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

/// `re` or `re,im`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re` or `re,im`, got `{s}`")),
    }
}

/// Comma-separated numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

/// `vacuum`, `fock:N[,N...]` or `coherent:RE[,IM]`.
pub fn parse_initial(s: &str) -> Result<InitialState, String> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "vacuum" => Ok(InitialState::Vacuum),
        "fock" => Ok(InitialState::Fock {
            n: rest
                .split(',')
                .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
                .collect::<Result<_, _>>()?,
        }),
        "coherent" => Ok(InitialState::Coherent {
            alpha: vec![parse_complex(rest)?],
        }),
        _ => Err(format!("unknown initial state `{s}`")),
    }
}

/// Named Hamiltonians or `@path` to the polynomial text format.
pub fn parse_hamiltonian(s: &str) -> Result<OperatorPolynomial, CliError> {
    use bosonic_qms::ccr::single::{a, ad, n};
    let i = Complex64::new(0.0, 1.0);
    match s {
        "x" => Ok(&a() + &ad()),
        "p" => Ok((&ad() - &a()).scale(i)),
        "n" => Ok(n()),
        _ => match s.strip_prefix('@') {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Parse(format!("{path}: {e}")))?;
                OperatorPolynomial::from_text(&text)
                    .map_err(|e| CliError::Parse(format!("{path}: {e}")))
            }
            None => Err(CliError::Validation(format!(
                "unknown Hamiltonian `{s}` (use x, p, n or @file)"
            ))),
        },
    }
}

/// Inserts `key: value` into the model params, starting a fresh model when
/// the name changes.
pub fn set_model_param(cfg: &mut RunConfig, key: &str, value: Value) {
    let model = cfg
        .model
        .get_or_insert_with(|| Value::Object(Map::new()));
    if !model.is_object() {
        *model = Value::Object(Map::new());
    }
    let obj = model.as_object_mut().expect("object");
    let params = obj
        .entry("params")
        .or_insert_with(|| Value::Object(Map::new()));
    if !params.is_object() {
        *params = Value::Object(Map::new());
    }
    params
        .as_object_mut()
        .expect("object")
        .insert(key.to_string(), value);
}

pub fn set_model_name(cfg: &mut RunConfig, name: &str) {
    let same = cfg
        .model
        .as_ref()
        .and_then(|m| m.get("model"))
        .and_then(Value::as_str)
        == Some(name);
    if !same {
        let mut obj = Map::new();
        obj.insert("model".into(), Value::String(name.into()));
        obj.insert("params".into(), Value::Object(Map::new()));
        cfg.model = Some(Value::Object(obj));
    }
}

/// Fills `kappa = 1`, `period = 1` and `epsilon = 0` where the model takes them and they are absent.
pub fn fill_model_defaults(cfg: &mut RunConfig) {
    let Some(name) = cfg
        .model
        .as_ref()
        .and_then(|m| m.get("model"))
        .and_then(Value::as_str)
        .map(str::to_string)
    else {
        return;
    };
    let Some(entry) = bosonic_qms::generator::catalog_list()
        .into_iter()
        .find(|e| e.name == name)
    else {
        return;
    };
    for (key, default) in [("kappa", 1.0), ("period", 1.0), ("epsilon", 0.0)] {
        let present = cfg
            .model
            .as_ref()
            .and_then(|m| m.get("params"))
            .and_then(|p| p.get(key))
            .is_some();
        if entry.params.contains(&key) && !present {
            set_model_param(cfg, key, Value::from(default));
        }
    }
}

pub fn method_from_flags(
    current: Method,
    method: Option<&str>,
    rtol: Option<f64>,
    atol: Option<f64>,
    dt: Option<f64>,
) -> Result<Method, CliError> {
    let kind = match method {
        Some("rk45") => "rk45",
        Some("rk4") => "rk4",
        Some(other) => {
            return Err(CliError::Validation(format!(
                "unknown method `{other}` (use rk45 or rk4)"
            )))
        }
        None if dt.is_some() => "rk4",
        None => match current {
            Method::Rk45Adaptive { .. } => "rk45",
            Method::Rk4Fixed { .. } => "rk4",
        },
    };
    Ok(match (kind, current) {
        ("rk45", Method::Rk45Adaptive { rtol: r, atol: a }) => Method::Rk45Adaptive {
            rtol: rtol.unwrap_or(r),
            atol: atol.unwrap_or(a),
        },
        ("rk45", _) => {
            let Method::Rk45Adaptive { rtol: r, atol: a } = Method::default() else {
                unreachable!()
            };
            Method::Rk45Adaptive {
                rtol: rtol.unwrap_or(r),
                atol: atol.unwrap_or(a),
            }
        }
        (_, Method::Rk4Fixed { dt: d }) => Method::Rk4Fixed { dt: dt.unwrap_or(d) },
        _ => Method::Rk4Fixed {
            dt: dt.ok_or_else(|| CliError::Validation("rk4 needs --dt".into()))?,
        },
    })
}
