use std::path::PathBuf;

use bosonic_qms::sobolev::SobolevOrder;
use bosonic_qms::Complex64;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::config::{
    self, fill_model_defaults, method_from_flags, parse_complex, parse_initial, parse_list,
    set_model_name, set_model_param, InitialState, RunConfig, WORKERS_ENV,
};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "bqms",
    version,
    about = "Truncated-Fock simulations, moment certificates and perturbation experiments for bosonic Lindblad models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a catalog model and write a trace CSV.
    Simulate(SimulateArgs),
    /// Check a moment-growth bound on the truncated interior.
    Certify(CertifyArgs),
    /// Perturbation experiments for l-photon dissipation and qOU.
    Perturb(PerturbArgs),
    /// Energy-constrained diamond-norm lower bound between a model and its perturbation.
    EcNorm(EcArgs),
    /// Randomized check of the scalar and two-mode inequalities.
    Lemmas(LemmaArgs),
    /// List the built-in models.
    Catalog(CatalogArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Size of the worker pool for independent sweep points.
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    /// Override a config value by dotted path, e.g. `--set certify.k=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Catalog name, see `bqms catalog`.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub l: Option<u32>,
    /// `re` or `re,im`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub alpha: Option<Complex64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub period: Option<f64>,
    /// `x`, `p`, `n` or `@file` with one `coefficient monomial` term per line.
    #[arg(long)]
    pub hamiltonian: Option<String>,
    /// One cutoff for every mode, or one per mode.
    #[arg(long, value_delimiter = ',')]
    pub cutoff: Option<Vec<usize>>,
}

impl ModelArgs {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(name) = &self.model {
            set_model_name(cfg, name);
        }
        let mut params: Vec<(&str, Value)> = Vec::new();
        for (key, v) in [
            ("kappa", self.kappa),
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("epsilon", self.epsilon),
            ("period", self.period),
        ] {
            if let Some(v) = v {
                params.push((key, Value::from(v)));
            }
        }
        if let Some(l) = self.l {
            params.push(("l", Value::from(l)));
        }
        if let Some(a) = self.alpha {
            params.push(("alpha", to_value(&a)?));
        }
        if let Some(h) = &self.hamiltonian {
            params.push(("hamiltonian", to_value(&config::parse_hamiltonian(h)?)?));
        }
        if !params.is_empty() && cfg.model.is_none() {
            return Err(CliError::Validation("model parameters given without --model".into()));
        }
        for (k, v) in params {
            set_model_param(cfg, k, v);
        }
        fill_model_defaults(cfg);
        config::set(&mut cfg.cutoffs, self.cutoff.clone());
        Ok(())
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Validation(e.to_string()))
}

#[derive(Debug, Args)]
pub struct IntegratorArgs {
    #[arg(long)]
    pub t_final: Option<f64>,
    /// `rk45` (adaptive) or `rk4` (fixed step).
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of equispaced sampling intervals on `[0, t_final]`.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Largest tolerated population in the edge band.
    #[arg(long)]
    pub leakage_tol: Option<f64>,
    /// `vacuum`, `fock:N[,N]` or `coherent:RE[,IM]`.
    #[arg(long, value_parser = parse_initial)]
    pub initial: Option<InitialState>,
}

pub const DEFAULT_SAMPLES: usize = 50;

impl IntegratorArgs {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        let from_file = cfg.integrator.is_some();
        let mut ic = cfg.integrator.clone().unwrap_or_default();
        ic.method = method_from_flags(
            ic.method,
            self.method.as_deref(),
            self.rtol,
            self.atol,
            self.dt,
        )?;
        if let Some(t) = self.t_final {
            ic.t_final = t;
        }
        if let Some(n) = self.samples {
            ic = ic.with_uniform_samples(n);
        } else if !from_file {
            ic = ic.with_uniform_samples(DEFAULT_SAMPLES);
        }
        if let Some(tol) = self.leakage_tol {
            ic.leakage_tolerance = tol;
        }
        cfg.integrator = Some(ic);
        config::set(&mut cfg.initial_state, self.initial.clone());
        Ok(())
    }
}

/// `K` for the uniform order or `K1,K2,...` per mode.
pub fn parse_order(s: &str) -> Result<SobolevOrder, String> {
    let v = parse_list(s)?;
    Ok(match v.as_slice() {
        [k] => SobolevOrder::Uniform(*k),
        _ => SobolevOrder::PerMode(v),
    })
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
    /// Record `||rho_t||_{W^{k,1}}`; repeatable.
    #[arg(long = "sobolev", value_parser = parse_order)]
    pub sobolev: Vec<SobolevOrder>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Weight order, `K` or `K1,K2`.
    #[arg(long, value_parser = parse_order)]
    pub k: Option<SobolevOrder>,
    /// `closed-form`, `tight` or `explicit`.
    #[arg(long)]
    pub constants: Option<String>,
    /// Tight target: `plain`, `c` (at --drift-mu) or `mu` (at --drift-c).
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub drift_c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub drift_mu: Option<f64>,
    /// Frozen times for time-dependent models; default eight per period.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Gauss-Legendre panels of the Duhamel quadrature.
    #[arg(long)]
    pub panels: Option<usize>,
    /// qOU perturbation `L[gamma a + eta a^dagger]`.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    /// Largest accepted relative spread of the qOU scaled differences.
    #[arg(long)]
    pub max_spread: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EcArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
    /// Evolution time.
    #[arg(long)]
    pub t: Option<f64>,
    /// Mean photon number constraint.
    #[arg(long)]
    pub energy: Option<f64>,
    /// Random phase patterns per probe family.
    #[arg(long)]
    pub probes: Option<usize>,
    /// Strength of the added dissipator `L[gamma a + eta a^dagger]`.
    #[arg(long)]
    pub perturbation: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}
