use std::fmt::Write as _;
use std::path::Path;

use bosonic_qms::ccr::{single, OperatorPolynomial};
use bosonic_qms::certify::{
    certify_moment_bound, certify_moment_bound_td, ec_diamond_lower_bound,
    estimate_tight_constants, estimate_tight_constants_td, evolved_choi, paper_constants,
    perturbation_experiment_ldiss, perturbation_experiment_qou, scalar_lemma_suite,
    CertificateReport, EcReport, LdissExperiment, LdissReport, MomentBoundSpec, QouExperiment,
    QouReport, TightConstants, TightTarget, Verdict, INITIAL_STATE_LEAKAGE,
};
use bosonic_qms::dynamics::{evolve_td, evolve_with, Observable};
use bosonic_qms::fock::{product_coherent_state, DensityMatrix, FockBasis};
use bosonic_qms::generator::{catalog, catalog_list, GkslGenerator, Model, ModelSpec};
use bosonic_qms::linalg::CMatrix;
use bosonic_qms::sobolev::SobolevOrder;
use serde::Serialize;

use crate::args::{CatalogArgs, CertifyArgs, EcArgs, LemmaArgs, PerturbArgs, SimulateArgs};
use crate::config::{set, InitialState, RunConfig};
use crate::error::CliError;

pub const DEFAULT_CUTOFF: usize = 40;
pub const DEFAULT_CERTIFY_CUTOFF: usize = 100;
pub const DEFAULT_CERTIFY_CUTOFF_TWO_MODE: usize = 24;
pub const DEFAULT_EC_CUTOFF: usize = 16;
/// Frozen times per period for time-dependent certificates.
pub const TIMES_PER_PERIOD: usize = 8;
pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_MAX_SPREAD: f64 = 0.05;

fn init_workers(cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(n) = cfg.workers {
        if n == 0 {
            return Err(CliError::Validation("workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn initial_matrix(state: &InitialState, basis: &FockBasis) -> Result<DensityMatrix, CliError> {
    let modes = basis.modes();
    match state {
        InitialState::Vacuum => Ok(DensityMatrix::fock(basis.clone(), &vec![0; modes])?),
        InitialState::Fock { n } => {
            let n = broadcast(n, modes, "fock occupation")?;
            Ok(DensityMatrix::fock(basis.clone(), &n)?)
        }
        InitialState::Coherent { alpha } => {
            let alpha = broadcast(alpha, modes, "coherent amplitude")?;
            Ok(product_coherent_state(&alpha, basis, INITIAL_STATE_LEAKAGE)?.0)
        }
    }
}

fn broadcast<T: Clone>(v: &[T], modes: usize, what: &str) -> Result<Vec<T>, CliError> {
    match v.len() {
        1 => Ok(vec![v[0].clone(); modes]),
        n if n == modes => Ok(v.to_vec()),
        n => Err(CliError::Validation(format!(
            "{n} values of {what} for a {modes}-mode model"
        ))),
    }
}

fn period(spec: &ModelSpec) -> Option<f64> {
    match spec {
        ModelSpec::XGate { period, .. } | ModelSpec::Cnot { period, .. } => Some(*period),
        _ => None,
    }
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    config: RunConfig,
    model: &'a str,
    cutoffs: &'a [usize],
    edge_band: usize,
    degree: u32,
    columns: Vec<String>,
    accepted_steps: usize,
    rejected_steps: usize,
    max_trace_drift: f64,
    final_leakage: f64,
    final_min_eigenvalue: f64,
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::from_args(
        "simulate",
        &args.common,
        Some(&args.model),
        Some(&args.integrator),
    )?;
    if !args.sobolev.is_empty() {
        if let Some(ic) = cfg.integrator.as_mut() {
            ic.sobolev_orders = args.sobolev.clone();
        }
    }
    cfg.apply_overrides(&args.common.overrides)?;
    init_workers(&cfg)?;
    let spec = cfg.model_spec()?;
    let ic = cfg.integrator()?;
    let model = catalog(&spec)?;
    let basis = FockBasis::new(cfg.cutoffs(DEFAULT_CUTOFF, spec.modes())?)?;
    let state = cfg.initial_state.clone().unwrap_or(InitialState::Vacuum);

    let (trace, realized_basis) = match &model {
        Model::Autonomous(g) => {
            let gen = g.realize(&basis)?;
            let rho0 = initial_matrix(&state, gen.basis())?;
            let obs: Vec<Observable> = gen
                .jumps()
                .iter()
                .enumerate()
                .map(|(j, l)| Observable::lyapunov(format!("lyapunov_{j}"), l))
                .collect();
            (evolve_with(&gen, &rho0, &ic, &obs)?, gen.basis().clone())
        }
        Model::TimeDependent(g) => {
            let gen = g.realize(&basis)?;
            let rho0 = initial_matrix(&state, gen.basis())?;
            (evolve_td(&gen, &rho0, &ic, 0.0)?, gen.basis().clone())
        }
    };

    let dir = cfg.output_dir();
    write_text(&dir, "trace.csv", &trace.to_csv())?;
    let summary = SimulateSummary {
        config: cfg.effective(),
        model: spec.name(),
        cutoffs: realized_basis.cutoffs(),
        edge_band: realized_basis.edge_band(),
        degree: model.degree(),
        columns: trace.header(),
        accepted_steps: trace.accepted_steps,
        rejected_steps: trace.rejected_steps,
        max_trace_drift: trace.max_trace_drift(),
        final_leakage: trace.leakage.last().copied().unwrap_or(0.0),
        final_min_eigenvalue: trace.min_eigenvalue.last().copied().unwrap_or(0.0),
    };
    write_json(&dir, "simulate.json", &summary)
}

#[derive(Serialize)]
struct CertificateArtifact<'a> {
    config: RunConfig,
    model: &'a str,
    constants: &'a MomentBoundSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    tight: Option<&'a TightConstants>,
    report: &'a CertificateReport,
}

fn tight_target(target: &str, c: Option<f64>, mu: Option<f64>) -> Result<TightTarget, CliError> {
    match target {
        "plain" => Ok(TightTarget::Plain),
        "c" => Ok(TightTarget::DriftAtMu {
            mu: mu.ok_or_else(|| CliError::Validation("target c needs --drift-mu".into()))?,
        }),
        "mu" => Ok(TightTarget::DriftAtC {
            c: c.ok_or_else(|| CliError::Validation("target mu needs --drift-c".into()))?,
        }),
        other => Err(CliError::Validation(format!(
            "unknown target `{other}` (use plain, c or mu)"
        ))),
    }
}

pub fn certify(args: &CertifyArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::from_args("certify", &args.common, Some(&args.model), None)?;
    let o = &mut cfg.certify;
    set(&mut o.k, args.k.clone());
    set(&mut o.constants, args.constants.clone());
    set(&mut o.target, args.target.clone());
    set(&mut o.omega, args.omega);
    set(&mut o.c, args.drift_c);
    set(&mut o.mu, args.drift_mu);
    set(&mut o.times, args.times.clone());
    cfg.apply_overrides(&args.common.overrides)?;
    init_workers(&cfg)?;

    let spec = cfg.model_spec()?;
    let modes = spec.modes();
    let default_cutoff = if modes == 1 {
        DEFAULT_CERTIFY_CUTOFF
    } else {
        DEFAULT_CERTIFY_CUTOFF_TWO_MODE
    };
    let basis = FockBasis::new(cfg.cutoffs(default_cutoff, modes)?)?;
    let o = &cfg.certify;
    let k = o.k.clone().unwrap_or(SobolevOrder::Uniform(2.0));
    k.validate(modes)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let model = catalog(&spec)?;
    let times = match (&model, &o.times) {
        (Model::Autonomous(_), _) => Vec::new(),
        (Model::TimeDependent(_), Some(t)) => t.clone(),
        (Model::TimeDependent(_), None) => {
            let p = period(&spec).expect("time-dependent models have a period");
            (0..TIMES_PER_PERIOD)
                .map(|i| p * i as f64 / TIMES_PER_PERIOD as f64)
                .collect()
        }
    };

    let mut tight = None;
    let bound = match o.constants.as_deref().unwrap_or("closed-form") {
        "closed-form" => {
            let comps = k.components(modes);
            if comps.iter().any(|&x| x != comps[0]) {
                return Err(CliError::Validation(
                    "closed-form constants take a uniform order".into(),
                ));
            }
            paper_constants(&spec, comps[0])?
        }
        "explicit" => match (o.omega, o.c, o.mu) {
            (Some(w), None, None) => MomentBoundSpec::plain(k.clone(), w, "explicit"),
            (None, Some(c), Some(mu)) => MomentBoundSpec::drift(k.clone(), c, mu, "explicit"),
            _ => {
                return Err(CliError::Validation(
                    "explicit constants need --omega, or both --drift-c and --drift-mu".into(),
                ))
            }
        },
        "tight" => {
            let target = tight_target(o.target.as_deref().unwrap_or("plain"), o.c, o.mu)?;
            let t = match &model {
                Model::Autonomous(g) => estimate_tight_constants(&g.realize(&basis)?, &k, target)?,
                Model::TimeDependent(g) => {
                    estimate_tight_constants_td(&g.realize(&basis)?, &k, target, &times)?
                }
            };
            let s = t.spec.clone();
            tight = Some(t);
            s
        }
        other => {
            return Err(CliError::Validation(format!(
                "unknown constants `{other}` (use closed-form, tight or explicit)"
            )))
        }
    };

    let report = match &model {
        Model::Autonomous(g) => certify_moment_bound(&g.realize(&basis)?, &bound)?,
        Model::TimeDependent(g) => certify_moment_bound_td(&g.realize(&basis)?, &bound, &times)?,
    };
    let artifact = CertificateArtifact {
        config: cfg.effective(),
        model: spec.name(),
        constants: &bound,
        tight: tight.as_ref(),
        report: &report,
    };
    write_json(&cfg.output_dir(), "certificate.json", &artifact)?;
    match report.verdict {
        Verdict::Certified => Ok(()),
        v => Err(CliError::Violation(format!(
            "verdict {v:?}, interior margin {:.6e}",
            report.margin
        ))),
    }
}

#[derive(Serialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
enum PerturbReport {
    Ldiss(LdissReport),
    Qou { max_spread_allowed: f64, report: QouReport },
}

#[derive(Serialize)]
struct PerturbArtifact {
    config: RunConfig,
    #[serde(flatten)]
    report: PerturbReport,
}

pub fn perturb(args: &PerturbArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::from_args(
        "perturb",
        &args.common,
        Some(&args.model),
        Some(&args.integrator),
    )?;
    let o = &mut cfg.perturb;
    set(&mut o.epsilons, args.epsilons.clone());
    set(&mut o.times, args.times.clone());
    set(&mut o.panels, args.panels);
    set(&mut o.gamma, args.gamma);
    set(&mut o.eta, args.eta);
    set(&mut o.max_spread, args.max_spread);
    cfg.apply_overrides(&args.common.overrides)?;
    init_workers(&cfg)?;

    let spec = cfg.model_spec()?;
    let cutoff = match cfg.cutoffs(DEFAULT_CUTOFF, 1)?.as_slice() {
        [m] => *m,
        _ => unreachable!("one mode"),
    };
    let integrator = cfg.integrator()?;
    let o = &cfg.perturb;
    let epsilons = o.epsilons.clone().unwrap_or(vec![0.0125, 0.025, 0.05, 0.1]);
    let times = o.times.clone().unwrap_or(vec![0.5, 1.0, 2.0]);
    let initial = match &cfg.initial_state {
        Some(s) => Some(initial_matrix(s, &FockBasis::single(cutoff)?)?.into_matrix()),
        None => None,
    };

    let (report, violation) = match spec {
        ModelSpec::LPhotonPlusHamiltonian {
            l,
            alpha,
            kappa,
            hamiltonian,
            ..
        } => {
            if kappa != 1.0 {
                return Err(CliError::Validation(
                    "the l-photon experiment runs at kappa = 1".into(),
                ));
            }
            let r = perturbation_experiment_ldiss(&LdissExperiment {
                l,
                alpha,
                hamiltonian,
                epsilons,
                times,
                cutoff,
                initial,
                integrator,
                panels: o.panels.unwrap_or(4),
            })?;
            let v = (!r.all_hold).then(|| {
                format!("perturbation bound fails, largest lhs/rhs {:.6e}", r.max_ratio)
            });
            (PerturbReport::Ldiss(r), v)
        }
        ModelSpec::Qou { lambda, mu } => {
            let allowed = o.max_spread.unwrap_or(DEFAULT_MAX_SPREAD);
            let r = perturbation_experiment_qou(&QouExperiment {
                lambda,
                mu,
                gamma: o.gamma.unwrap_or(1.0),
                eta: o.eta.unwrap_or(0.0),
                epsilons,
                times,
                cutoff,
                initial,
                integrator,
            })?;
            let v = (r.max_spread > allowed).then(|| {
                format!(
                    "difference is not linear in epsilon: spread {:.6e} > {allowed:e}",
                    r.max_spread
                )
            });
            (
                PerturbReport::Qou {
                    max_spread_allowed: allowed,
                    report: r,
                },
                v,
            )
        }
        other => {
            return Err(CliError::Validation(format!(
                "perturb runs l_photon_plus_hamiltonian or qou, not {}",
                other.name()
            )))
        }
    };

    let dir = cfg.output_dir();
    write_text(&dir, "perturbation.csv", &perturbation_csv(&report))?;
    write_json(
        &dir,
        "perturbation.json",
        &PerturbArtifact {
            config: cfg.effective(),
            report,
        },
    )?;
    match violation {
        Some(msg) => Err(CliError::Violation(msg)),
        None => Ok(()),
    }
}

fn perturbation_csv(report: &PerturbReport) -> String {
    let mut s = String::new();
    match report {
        PerturbReport::Ldiss(r) => {
            s.push_str("epsilon,t,lhs,rhs,ratio,rhs_two_photon,ratio_two_photon,holds,trace_distance,duhamel_residual\n");
            for row in &r.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{}",
                    num(row.epsilon),
                    num(row.time),
                    num(row.lhs),
                    num(row.rhs),
                    num(row.ratio),
                    opt_num(row.rhs_two_photon),
                    opt_num(row.ratio_two_photon),
                    row.holds,
                    num(row.trace_distance),
                    num(row.duhamel_residual)
                );
            }
        }
        PerturbReport::Qou { report: r, .. } => {
            s.push_str("epsilon,t,difference_norm,scaled\n");
            for row in &r.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    num(row.epsilon),
                    num(row.time),
                    num(row.difference_norm),
                    num(row.scaled)
                );
            }
        }
    }
    s
}

#[derive(Serialize)]
struct EcArtifact<'a> {
    config: RunConfig,
    model: &'a str,
    cutoff: usize,
    t: f64,
    perturbation: f64,
    gamma: f64,
    eta: f64,
    report: EcReport,
}

pub fn ec_norm(args: &EcArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::from_args(
        "ec-norm",
        &args.common,
        Some(&args.model),
        Some(&args.integrator),
    )?;
    let o = &mut cfg.ec_norm;
    set(&mut o.t, args.t);
    set(&mut o.energy, args.energy);
    set(&mut o.probes, args.probes);
    set(&mut o.perturbation, args.perturbation);
    set(&mut o.gamma, args.gamma);
    set(&mut o.eta, args.eta);
    cfg.apply_overrides(&args.common.overrides)?;
    init_workers(&cfg)?;

    let spec = cfg.model_spec()?;
    let Model::Autonomous(gen_a) = catalog(&spec)? else {
        return Err(CliError::Validation(
            "ec-norm needs a time-independent single-mode model".into(),
        ));
    };
    let cutoff = match cfg.cutoffs(DEFAULT_EC_CUTOFF, 1)?.as_slice() {
        [m] => *m,
        _ => unreachable!("one mode"),
    };
    let integrator = cfg.integrator()?;
    let o = &cfg.ec_norm;
    let t = o.t.unwrap_or(1.0);
    let eps = o.perturbation.unwrap_or(0.1);
    let (gamma, eta) = (o.gamma.unwrap_or(1.0), o.eta.unwrap_or(0.0));
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(CliError::Validation("perturbation must be nonnegative".into()));
    }
    let jump = &(&(&single::a() * gamma) + &(&single::ad() * eta)) * eps.sqrt();
    let gen_b = gen_a.sum(&GkslGenerator::build(OperatorPolynomial::zero(1), vec![jump])?)?;
    let basis = FockBasis::single(cutoff)?;
    let choi = |g: &GkslGenerator| -> Result<CMatrix, CliError> {
        Ok(evolved_choi(&g.realize(&basis)?, t, &integrator)?)
    };
    let (choi_a, choi_b) = (choi(&gen_a)?, choi(&gen_b)?);
    let report = ec_diamond_lower_bound(
        &choi_a,
        &choi_b,
        cutoff,
        o.energy.unwrap_or(1.0),
        o.probes.unwrap_or(4),
        cfg.seed(),
    )?;
    let consistent = report.lower_bound <= report.ratio_bound * (1.0 + 1e-12);
    let artifact = EcArtifact {
        config: cfg.effective(),
        model: spec.name(),
        cutoff,
        t,
        perturbation: eps,
        gamma,
        eta,
        report,
    };
    write_json(&cfg.output_dir(), "ec_norm.json", &artifact)?;
    if consistent {
        Ok(())
    } else {
        Err(CliError::Violation(format!(
            "lower bound {:.6e} exceeds the energy-scaled bound {:.6e}",
            artifact.report.lower_bound, artifact.report.ratio_bound
        )))
    }
}

#[derive(Serialize)]
struct LemmaArtifact {
    config: RunConfig,
    report: bosonic_qms::certify::LemmaSuiteReport,
}

pub fn lemmas(args: &LemmaArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::from_args("lemmas", &args.common, None, None)?;
    set(&mut cfg.lemmas.trials, args.trials);
    cfg.apply_overrides(&args.common.overrides)?;
    init_workers(&cfg)?;
    let trials = cfg.lemmas.trials.unwrap_or(DEFAULT_TRIALS);
    let report = scalar_lemma_suite(trials, cfg.seed())?;
    let passed = report.passed();
    let failing: Vec<String> = report
        .checks
        .iter()
        .filter(|c| c.failures > 0)
        .map(|c| format!("{} ({} of {})", c.name, c.failures, c.evaluations))
        .collect();
    write_json(
        &cfg.output_dir(),
        "lemmas.json",
        &LemmaArtifact {
            config: cfg.effective(),
            report,
        },
    )?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Violation(format!("failing checks: {}", failing.join(", "))))
    }
}

pub fn catalog_command(args: &CatalogArgs) -> Result<(), CliError> {
    let entries = catalog_list();
    if args.json {
        let text = serde_json::to_string_pretty(&entries)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        println!("{text}");
        return Ok(());
    }
    for e in entries {
        let kind = if e.time_dependent {
            "time-dependent"
        } else {
            "autonomous"
        };
        let modes = if e.modes == 1 {
            "single-mode".to_string()
        } else {
            format!("{}-mode", number_word(e.modes))
        };
        println!("{}  [{modes}, {kind}]", e.name);
        println!("    {}", e.description);
        println!("    params: {}", e.params.join(", "));
        println!("    regime: {}", e.regime);
    }
    Ok(())
}

fn number_word(n: usize) -> String {
    match n {
        2 => "two".into(),
        3 => "three".into(),
        _ => n.to_string(),
    }
}
