//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero when any fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bosonic_qms::ccr::{single, ModeMonomial, OperatorPolynomial};
use bosonic_qms::certify::{
    certify_moment_bound, certify_moment_bound_td, estimate_tight_constants,
    estimate_tight_constants_td, paper_constants, perturbation_experiment_ldiss,
    perturbation_experiment_qou, random_states, scalar_lemma_suite, stein_weiss_semigroup,
    BoundForm, LdissExperiment, QouExperiment, TightTarget, Verdict,
};
use bosonic_qms::dynamics::{evolve, evolve_td, evolve_with, IntegratorConfig, Observable};
use bosonic_qms::fock::{cat_code_basis, coherent_state, product_coherent_state, DensityMatrix, FockBasis};
use bosonic_qms::generator::{catalog, Model, ModelSpec, RealizedGenerator};
use bosonic_qms::linalg::CMatrix;
use bosonic_qms::sobolev::{sobolev_norm, trace_norm, EndpointNorms, SobolevOrder};
use bosonic_qms::Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn autonomous(spec: &ModelSpec, basis: &FockBasis) -> RealizedGenerator {
    match catalog(spec).unwrap() {
        Model::Autonomous(g) => g.realize(basis).unwrap(),
        Model::TimeDependent(_) => panic!("{} is time-dependent", spec.name()),
    }
}

/// Integer coefficients of `prod_{j in js} (x + j)`, lowest order first.
fn expand_linear_factors(js: impl Iterator<Item = i64>) -> Vec<i64> {
    let mut p = vec![1i64];
    for j in js {
        let mut q = vec![0i64; p.len() + 1];
        for (i, &a) in p.iter().enumerate() {
            q[i] += j * a;
            q[i + 1] += a;
        }
        p = q;
    }
    p
}

fn n_poly(coeffs: &[i64]) -> OperatorPolynomial {
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, &a)| a != 0)
        .fold(OperatorPolynomial::zero(1), |acc, (j, &a)| {
            let m = OperatorPolynomial::monomial(1, c(a as f64), &[ModeMonomial::new(0, j as u32, 0)])
                .unwrap();
            &acc + &m
        })
}

fn binomial(n: u64, k: u64) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (n + 1 - i) as f64 / i as f64)
}

fn criterion_1() -> Outcome {
    // Frozen expansions at l = 3.
    assert_eq!(expand_linear_factors([0, -1, -2].into_iter()), vec![0, 2, -3, 1]);
    assert_eq!(expand_linear_factors([1, 2, 3].into_iter()), vec![6, 11, 6, 1]);
    let mut bad = Vec::new();
    for l in 1..=6u32 {
        let al = single::a().pow(l);
        let adl = single::ad().pow(l);
        // (a^dagger)^l a^l = N (N - 1) ... (N - l + 1)
        let falling = n_poly(&expand_linear_factors((0..l as i64).map(|j| -j)));
        if &adl * &al != falling {
            bad.push(format!("(a^dagger)^{l} a^{l}"));
        }
        // a^l (a^dagger)^l = (N + 1) ... (N + l)
        let rising = n_poly(&expand_linear_factors(1..=l as i64));
        if &al * &adl != rising {
            bad.push(format!("a^{l} (a^dagger)^{l}"));
        }
        // a^l (a^dagger)^l = sum_j C(l, j)^2 j! (a^dagger)^{l - j} a^{l - j}
        let wick = (0..=l).fold(OperatorPolynomial::zero(1), |acc, j| {
            let w = binomial(l as u64, j as u64).powi(2) * (1..=j).map(f64::from).product::<f64>();
            let t = &single::ad().pow(l - j) * &single::a().pow(l - j);
            &acc + &t.scale(c(w))
        });
        if wick != &al * &adl {
            bad.push(format!("normal-ordered a^{l} (a^dagger)^{l}"));
        }
    }
    outcome(bad.is_empty(), format!("l = 1..6, mismatches: {bad:?}"))
}

fn criterion_2() -> Outcome {
    const TOL: f64 = 1e-8;
    let basis = FockBasis::single(10).unwrap();
    let gen = autonomous(&ModelSpec::PureLoss { kappa: 1.0 }, &basis);
    let rho0 = DensityMatrix::fock(basis.clone(), &[1]).unwrap();
    let cfg = IntegratorConfig::adaptive(1e-10, 1e-12, 5.0)
        .with_uniform_samples(50)
        .recording_states();
    let run = evolve(&gen, &rho0, &cfg).unwrap();
    let worst = run
        .times
        .iter()
        .zip(run.states.as_ref().unwrap())
        .map(|(&t, rho)| {
            let mut exact = CMatrix::zeros(10, 10);
            exact[(1, 1)] = c((-t).exp());
            exact[(0, 0)] = c(1.0 - (-t).exp());
            trace_norm(&(rho - exact))
        })
        .fold(0.0, f64::max);
    outcome(worst <= TOL, format!("max trace distance {worst:.3e} <= {TOL:e}"))
}

fn criterion_3() -> Outcome {
    const FIXED: f64 = 1e-9;
    const CONVERGED: f64 = 1e-6;
    let m = 60;
    let basis = FockBasis::single(m).unwrap();
    let gen = autonomous(&ModelSpec::Qou { lambda: 2f64.sqrt(), mu: 1.0 }, &basis);
    // Geometric state with ratio mu^2 / lambda^2 = 1/2.
    let weights: Vec<f64> = (0..m).map(|n| 0.5f64.powi(n as i32)).collect();
    let z: f64 = weights.iter().sum();
    let sigma = CMatrix::from_fn(m, m, |i, j| if i == j { c(weights[i] / z) } else { c(0.0) });
    let residual = trace_norm(&gen.apply(&sigma));
    let cfg = IntegratorConfig::adaptive(1e-10, 1e-12, 20.0);
    let run = evolve(&gen, &DensityMatrix::fock(basis, &[0]).unwrap(), &cfg).unwrap();
    let distance = 0.5 * trace_norm(&(&run.final_state - &sigma));
    outcome(
        residual <= FIXED && distance <= CONVERGED,
        format!(
            "||L(sigma)||_1 = {residual:.3e} <= {FIXED:e}, distance at t = 20 {distance:.3e} <= {CONVERGED:e}"
        ),
    )
}

fn criterion_4() -> Outcome {
    const TOL: f64 = 1e-8;
    let basis = FockBasis::single(60).unwrap();
    let gen = autonomous(&ModelSpec::LPhoton { l: 2, alpha: c(2.0), kappa: 1.0 }, &basis);
    let code = cat_code_basis(c(2.0), 2, &basis).unwrap();
    let norms: Vec<f64> = code
        .matrices
        .iter()
        .map(|x| trace_norm(&gen.apply(&x.to_dense())))
        .collect();
    let worst = norms.iter().copied().fold(0.0, f64::max);
    outcome(
        norms.len() == 4 && worst <= TOL,
        format!("{} code matrices, max ||L(x)||_1 = {worst:.3e} <= {TOL:e}", norms.len()),
    )
}

fn criterion_5() -> Outcome {
    const SLACK: f64 = 1e-8;
    const RATE_TOL: f64 = 0.03;
    let basis = FockBasis::single(80).unwrap();
    let gen = autonomous(&ModelSpec::LPhoton { l: 2, alpha: c(2.0), kappa: 1.0 }, &basis);
    let alpha = Complex64::from_polar(2.0, std::f64::consts::FRAC_PI_4);
    let (rho0, _) = coherent_state(alpha, &basis, 1e-12).unwrap();
    let v = Observable::lyapunov("V", &gen.jumps()[0]);
    let cfg = IntegratorConfig::adaptive(1e-10, 1e-12, 4.0).with_uniform_samples(40);
    let run = evolve_with(&gen, &rho0, &cfg, &[v]).unwrap();
    let vs: Vec<f64> = run.observables.iter().map(|o| o[0]).collect();
    let v0 = vs[0];
    let envelope = run
        .times
        .iter()
        .zip(&vs)
        .all(|(&t, &v)| v <= (-2.0 * t).exp() * v0 + SLACK);
    // Least-squares slope of log V over samples above the slack.
    let pts: Vec<(f64, f64)> = run
        .times
        .iter()
        .zip(&vs)
        .filter(|(_, &v)| v > SLACK)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    let n = pts.len() as f64;
    let (mt, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let slope = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
    let rate = -slope;
    outcome(
        envelope && pts.len() >= 2 && rate >= 2.0 * (1.0 - RATE_TOL),
        format!(
            "V(0) = {v0:.6}, envelope holds: {envelope}, fitted rate {rate:.4} over {} samples (need >= {:.2})",
            pts.len(),
            2.0 * (1.0 - RATE_TOL)
        ),
    )
}

fn closed_form_regimes() -> Vec<(ModelSpec, f64)> {
    let h = &single::a() + &single::ad();
    let mut v = Vec::new();
    for k in [1.0, 2.0, 4.0] {
        v.push((ModelSpec::Qou { lambda: 2f64.sqrt(), mu: 1.0 }, k));
        v.push((ModelSpec::Qou { lambda: 1.0, mu: 2.0 }, k));
    }
    for k in [2.0, 4.0] {
        v.push((ModelSpec::LPhoton { l: 2, alpha: c(2.0), kappa: 1.0 }, k));
        v.push((ModelSpec::LPhoton { l: 3, alpha: c(1.0), kappa: 1.0 }, k));
        v.push((
            ModelSpec::LPhotonPlusHamiltonian {
                l: 2,
                alpha: c(2.0),
                kappa: 1.0,
                hamiltonian: h.clone(),
                epsilon: 0.1,
            },
            k,
        ));
        v.push((ModelSpec::ZTheta { alpha: c(2.0), kappa: 1.0, epsilon: 0.1 }, k));
    }
    // Two-photon dissipation with its specialized constants.
    v.push((ModelSpec::LPhoton { l: 2, alpha: c(2.0), kappa: 1.0 }, 2.0));
    v
}

fn criterion_6() -> Outcome {
    const MARGIN: f64 = -1e-9;
    let basis = FockBasis::single(100).unwrap();
    let mut failures = Vec::new();
    let mut worst = f64::INFINITY;
    let regimes = closed_form_regimes();
    for (spec, k) in &regimes {
        let bound = paper_constants(spec, *k).unwrap();
        let r = certify_moment_bound(&autonomous(spec, &basis), &bound).unwrap();
        worst = worst.min(r.margin);
        if r.verdict != Verdict::Certified || r.margin < MARGIN {
            failures.push(format!("{} k = {k}: {:?} margin {:.3e}", spec.name(), r.verdict, r.margin));
        }
    }
    outcome(
        failures.is_empty(),
        format!("{} regimes at M = 100, smallest margin {worst:.3e}, failures {failures:?}", regimes.len()),
    )
}

fn criterion_7() -> Outcome {
    const SLACK: f64 = 1e-6;
    let basis = FockBasis::single(100).unwrap();
    let mut failures = Vec::new();
    let regimes = closed_form_regimes();
    for (spec, k) in &regimes {
        let bound = paper_constants(spec, *k).unwrap();
        let gen = autonomous(spec, &basis);
        let order = SobolevOrder::Uniform(*k);
        match bound.form {
            BoundForm::Plain { omega } => {
                let t = estimate_tight_constants(&gen, &order, TightTarget::Plain).unwrap();
                if t.value > omega + SLACK {
                    failures.push(format!("{} k = {k}: omega* {} > {omega}", spec.name(), t.value));
                }
            }
            BoundForm::Drift { c, mu } => {
                let t = estimate_tight_constants(&gen, &order, TightTarget::DriftAtMu { mu }).unwrap();
                if t.value < c - SLACK {
                    failures.push(format!("{} k = {k}: c* {} < {c}", spec.name(), t.value));
                }
            }
        }
    }
    outcome(failures.is_empty(), format!("{} regimes, failures {failures:?}", regimes.len()))
}

fn criterion_8() -> Outcome {
    let r = scalar_lemma_suite(10_000, 7).unwrap();
    let failing: Vec<String> = r
        .checks
        .iter()
        .filter(|ch| ch.failures > 0)
        .map(|ch| format!("{} ({} of {}, first {:?})", ch.name, ch.failures, ch.evaluations, ch.first_counterexample))
        .collect();
    outcome(
        r.passed(),
        format!("{} trials, {} counterexamples: {failing:?}", r.trials, r.total_failures),
    )
}

fn criterion_9() -> Outcome {
    const RESIDUAL: f64 = 1e-6;
    let r = perturbation_experiment_ldiss(&LdissExperiment {
        l: 2,
        alpha: c(2.0),
        hamiltonian: &single::a() + &single::ad(),
        epsilons: vec![0.01, 0.05],
        times: vec![0.5, 1.0, 2.0, 5.0],
        cutoff: 60,
        initial: None,
        integrator: IntegratorConfig::adaptive(1e-10, 1e-12, 1.0),
        panels: 4,
    })
    .unwrap();
    let min_margin = r.rows.iter().map(|row| row.rhs - row.lhs).fold(f64::INFINITY, f64::min);
    outcome(
        r.all_hold && r.max_duhamel_residual <= RESIDUAL,
        format!(
            "{} points, all hold: {}, min rhs - lhs {min_margin:.3e}, max lhs/rhs {:.3e}, Duhamel residual {:.3e} <= {RESIDUAL:e}",
            r.rows.len(),
            r.all_hold,
            r.max_ratio,
            r.max_duhamel_residual
        ),
    )
}

fn criterion_10() -> Outcome {
    const SPREAD: f64 = 0.05;
    let r = perturbation_experiment_qou(&QouExperiment {
        lambda: 2f64.sqrt(),
        mu: 1.0,
        gamma: 1.0,
        eta: 0.0,
        epsilons: vec![1e-2, 1e-3],
        times: vec![1.0, 5.0, 10.0],
        cutoff: 40,
        initial: None,
        integrator: IntegratorConfig::adaptive(1e-10, 1e-12, 1.0),
    })
    .unwrap();
    outcome(
        r.max_spread <= SPREAD,
        format!("max relative spread of ||.||_1 / eps {:.3e} <= {SPREAD}", r.max_spread),
    )
}

fn criterion_11() -> Outcome {
    const MARGIN: f64 = -1e-9;
    let basis = FockBasis::single(30).unwrap();
    let gen = autonomous(&ModelSpec::PureLoss { kappa: 1.0 }, &basis);
    let samples: Vec<CMatrix> = random_states(&basis, 12, 50, 11)
        .unwrap()
        .into_iter()
        .map(DensityMatrix::into_matrix)
        .collect();
    let cfg = IntegratorConfig::adaptive(1e-10, 1e-12, 1.0);
    let (k0, k1) = (SobolevOrder::Uniform(0.0), SobolevOrder::Uniform(4.0));
    // The loss channel maps diagonals to diagonals, so its norm on states at
    // order k is the largest ratio over Fock inputs.
    let images: Vec<CMatrix> = (0..30 - gen.basis().edge_band())
        .map(|n| {
            let rho = DensityMatrix::fock(basis.clone(), &[n]).unwrap();
            evolve(&gen, &rho, &cfg).unwrap().final_state
        })
        .collect();
    let endpoint = |k: &SobolevOrder| {
        images
            .iter()
            .enumerate()
            .map(|(n, x)| sobolev_norm(x, k, &basis).unwrap() / ((n + 1) as f64).powf(k.components(1)[0] / 2.0))
            .fold(0.0, f64::max)
    };
    let endpoints = EndpointNorms::Supplied { m0: endpoint(&k0), m1: endpoint(&k1) };
    let mut worst = f64::INFINITY;
    for theta in [0.25, 0.5, 0.75] {
        let r = stein_weiss_semigroup(&gen, 1.0, &cfg, (&k0, &k1), theta, &samples, endpoints).unwrap();
        worst = worst.min(r.worst_margin);
    }
    outcome(
        worst >= MARGIN,
        format!("50 states, 3 thetas, endpoints {endpoints:?}, worst margin {worst:.3e} >= {MARGIN:e}"),
    )
}

fn criterion_12() -> Outcome {
    const DRIFT: f64 = 1e-7;
    let spec = ModelSpec::Cnot { alpha: c(1.0), kappa: 1.0, epsilon: 0.1, period: 1.0 };
    let Model::TimeDependent(g) = catalog(&spec).unwrap() else {
        panic!("cnot is time-dependent")
    };
    let basis = FockBasis::new(vec![20, 20]).unwrap();
    let gen = g.realize(&basis).unwrap();
    let times: Vec<f64> = (0..8).map(|i| i as f64 / 8.0).collect();
    let order = SobolevOrder::PerMode(vec![2.0, 2.0]);
    let tight = estimate_tight_constants_td(&gen, &order, TightTarget::DriftAtC { c: 0.375 }, &times)
        .unwrap();
    let report = certify_moment_bound_td(&gen, &tight.spec, &times).unwrap();
    let (rho0, _) = product_coherent_state(&[c(1.0), c(1.0)], &basis, 1e-12).unwrap();
    let cfg = IntegratorConfig::adaptive(1e-10, 1e-12, 2.0).with_uniform_samples(16);
    let run = evolve_td(&gen, &rho0, &cfg, 0.0).unwrap();
    let drift = run.max_trace_drift();
    outcome(
        report.verdict == Verdict::Certified && drift <= DRIFT,
        format!(
            "tight mu* = {:.6} at c = 0.375: {:?} (margin {:.3e}), trace drift {drift:.3e} <= {DRIFT:e}",
            tight.value, report.verdict, report.margin
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome, Duration); 12] = [
        (1, criterion_1, Duration::from_secs(1)),
        (2, criterion_2, Duration::from_secs(1)),
        (3, criterion_3, Duration::from_secs(30)),
        (4, criterion_4, Duration::from_secs(10)),
        (5, criterion_5, Duration::from_secs(60)),
        (6, criterion_6, Duration::from_secs(60)),
        (7, criterion_7, Duration::from_secs(60)),
        (8, criterion_8, Duration::from_secs(10)),
        (9, criterion_9, Duration::from_secs(120)),
        (10, criterion_10, Duration::from_secs(60)),
        (11, criterion_11, Duration::from_secs(30)),
        (12, criterion_12, Duration::from_secs(120)),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, run, budget) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run));
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= budget, o.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2}: {detail} [{:.2} s of {} s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of 12 criteria pass", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
