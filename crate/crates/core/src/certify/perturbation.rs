//! Perturbation experiments, energy-constrained channel distances and the
//! interpolation check for evolved states.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constants::{
    perturbation_constants, perturbation_constants_two_photon, PerturbationConstants,
};
use super::CertifyError;
use crate::ccr::{single, OperatorPolynomial};
use crate::dynamics::{self, semigroup_difference, IntegratorConfig, Observable};
use crate::fock::{coherent_state, DensityMatrix, FockBasis};
use crate::generator::{l_photon_jump, GkslGenerator, RealizedGenerator};
use crate::linalg::{self, CMatrix};
use crate::sobolev::{self, EndpointNorms, SobolevOrder, SteinWeissReport};

/// Slack on `LHS <= RHS` for the l-photon perturbation bound.
pub const PERTURBATION_SLACK: f64 = 1e-7;
/// Poisson mass allowed beyond the cutoff for default coherent initial states.
pub const INITIAL_STATE_LEAKAGE: f64 = 1e-12;

/// `L[a^l - alpha^l]` versus `L[a^l - alpha^l] - i eps [H, .]`.
#[derive(Debug, Clone)]
pub struct LdissExperiment {
    pub l: u32,
    pub alpha: Complex64,
    pub hamiltonian: OperatorPolynomial,
    pub epsilons: Vec<f64>,
    pub times: Vec<f64>,
    pub cutoff: usize,
    /// Defaults to the coherent state `|alpha>`.
    pub initial: Option<CMatrix>,
    pub integrator: IntegratorConfig,
    /// Composite panels of the Duhamel quadrature.
    pub panels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdissRow {
    pub epsilon: f64,
    pub time: f64,
    /// `|tr[L (e^{tA} rho - e^{tB} rho) L^dagger]|`.
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Right side with the specialized two-photon constants, when they apply.
    pub rhs_two_photon: Option<f64>,
    pub ratio_two_photon: Option<f64>,
    pub holds: bool,
    pub trace_distance: f64,
    pub duhamel_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdissReport {
    pub l: u32,
    pub alpha: Complex64,
    pub cutoff: usize,
    /// `||rho_0||_{W^{k,1}}` at the order the bound uses.
    pub norm_order: f64,
    pub initial_norm: f64,
    /// Constants at each epsilon, in grid order.
    pub constants: Vec<PerturbationConstants>,
    pub rows: Vec<LdissRow>,
    pub all_hold: bool,
    pub max_ratio: f64,
    pub max_duhamel_residual: f64,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

fn default_coherent(alpha: Complex64, basis: &FockBasis) -> Result<CMatrix, CertifyError> {
    Ok(coherent_state(alpha, basis, INITIAL_STATE_LEAKAGE)?.0.into_matrix())
}

fn check_grid(name: &str, v: &[f64]) -> Result<(), CertifyError> {
    if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(CertifyError::InvalidParameter(format!(
            "{name} must be a non-empty list of nonnegative numbers"
        )));
    }
    Ok(())
}

/// Evaluates both sides of the l-photon perturbation bound on the grid.
pub fn perturbation_experiment_ldiss(exp: &LdissExperiment) -> Result<LdissReport, CertifyError> {
    check_grid("epsilons", &exp.epsilons)?;
    check_grid("times", &exp.times)?;
    if exp.l == 0 || exp.hamiltonian.modes() != 1 {
        return Err(CertifyError::InvalidParameter("need l >= 1 and a single-mode H".into()));
    }
    if exp.hamiltonian.degree() > 2 * (exp.l - 1) {
        return Err(CertifyError::Regime(format!(
            "deg H = {} exceeds 2(l - 1) = {}",
            exp.hamiltonian.degree(),
            2 * (exp.l - 1)
        )));
    }
    let basis = FockBasis::single(exp.cutoff)?;
    let jump = l_photon_jump(exp.l, exp.alpha);
    let zero = OperatorPolynomial::zero(1);
    let gen_a = GkslGenerator::build(zero, vec![jump.clone()])?.realize(&basis)?;
    let lyapunov = Observable::lyapunov("lyapunov", &gen_a.jumps()[0]);
    let rho0 = match &exp.initial {
        Some(m) => DensityMatrix::new(basis.clone(), m.clone())?.into_matrix(),
        None => default_coherent(exp.alpha, &basis)?,
    };

    let constants = exp
        .epsilons
        .iter()
        .map(|&e| perturbation_constants(exp.l, exp.alpha, &exp.hamiltonian, e))
        .collect::<Result<Vec<_>, _>>()?;
    let norm_order = constants[0].k;
    let initial_norm = sobolev::sobolev_norm(&rho0, &SobolevOrder::Uniform(norm_order), &basis)?;

    let gens_b = exp
        .epsilons
        .iter()
        .map(|&e| {
            GkslGenerator::build(exp.hamiltonian.scale(Complex64::new(e, 0.0)), vec![jump.clone()])?
                .realize(&basis)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let grid: Vec<(usize, f64)> = (0..exp.epsilons.len())
        .flat_map(|i| exp.times.iter().map(move |&t| (i, t)))
        .collect();
    let rows = grid
        .par_iter()
        .map(|&(i, t)| -> Result<LdissRow, CertifyError> {
            let eps = exp.epsilons[i];
            let d = semigroup_difference(&gen_a, &gens_b[i], &rho0, t, &exp.integrator, exp.panels)?;
            let lhs = lyapunov.value(&d.difference).abs();
            let rhs = constants[i].rhs(eps, t, initial_norm);
            let special =
                perturbation_constants_two_photon(exp.l, exp.alpha, &exp.hamiltonian, eps);
            let rhs_two_photon = special.map(|c| {
                let n = sobolev::sobolev_norm(&rho0, &SobolevOrder::Uniform(c.k), &basis)
                    .unwrap_or(f64::INFINITY);
                c.rhs(eps, t, n)
            });
            let holds = lhs <= rhs + PERTURBATION_SLACK
                && rhs_two_photon.is_none_or(|r| lhs <= r + PERTURBATION_SLACK);
            Ok(LdissRow {
                epsilon: eps,
                time: t,
                lhs,
                rhs,
                ratio: ratio(lhs, rhs),
                rhs_two_photon,
                ratio_two_photon: rhs_two_photon.map(|r| ratio(lhs, r)),
                holds,
                trace_distance: d.trace_norm,
                duhamel_residual: d.residual,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LdissReport {
        l: exp.l,
        alpha: exp.alpha,
        cutoff: exp.cutoff,
        norm_order,
        initial_norm,
        constants,
        all_hold: rows.iter().all(|r| r.holds),
        max_ratio: rows.iter().map(|r| r.ratio).fold(0.0, f64::max),
        max_duhamel_residual: rows.iter().map(|r| r.duhamel_residual).fold(0.0, f64::max),
        rows,
    })
}

/// `lambda^2 L[a] + mu^2 L[a^dagger]` versus the same plus `eps L[gamma a + eta a^dagger]`.
#[derive(Debug, Clone)]
pub struct QouExperiment {
    pub lambda: f64,
    pub mu: f64,
    pub gamma: f64,
    pub eta: f64,
    pub epsilons: Vec<f64>,
    pub times: Vec<f64>,
    pub cutoff: usize,
    /// Defaults to the coherent state `|1>`.
    pub initial: Option<CMatrix>,
    pub integrator: IntegratorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QouRow {
    pub epsilon: f64,
    pub time: f64,
    pub difference_norm: f64,
    /// `difference_norm / epsilon`, zero at `epsilon = 0`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QouTimeSummary {
    pub time: f64,
    pub min_scaled: f64,
    pub max_scaled: f64,
    /// `(max - min) / max` over the positive epsilons.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QouReport {
    pub rows: Vec<QouRow>,
    pub per_time: Vec<QouTimeSummary>,
    pub max_spread: f64,
    /// `sup ||difference||_1 / epsilon` over the grid.
    pub empirical_constant: f64,
}

fn qou_generator(
    lambda: f64,
    mu: f64,
    extra: Option<OperatorPolynomial>,
    basis: &FockBasis,
) -> Result<RealizedGenerator, CertifyError> {
    let mut jumps = vec![&single::a() * lambda, &single::ad() * mu];
    jumps.extend(extra);
    Ok(GkslGenerator::build(OperatorPolynomial::zero(1), jumps)?.realize(basis)?)
}

/// Measures `||(e^{tA} - e^{tB}) rho||_1 / eps` across the grid.
pub fn perturbation_experiment_qou(exp: &QouExperiment) -> Result<QouReport, CertifyError> {
    check_grid("epsilons", &exp.epsilons)?;
    check_grid("times", &exp.times)?;
    let (l2, m2) = (exp.lambda * exp.lambda, exp.mu * exp.mu);
    if !(exp.lambda > exp.mu && exp.mu >= 0.0) {
        return Err(CertifyError::Regime("need lambda > mu >= 0".into()));
    }
    if !(l2 - m2 + exp.gamma * exp.gamma - exp.eta * exp.eta > 0.0) {
        return Err(CertifyError::Regime(
            "need lambda^2 - mu^2 + gamma^2 - eta^2 > 0".into(),
        ));
    }
    let basis = FockBasis::single(exp.cutoff)?;
    let rho0 = match &exp.initial {
        Some(m) => DensityMatrix::new(basis.clone(), m.clone())?,
        None => DensityMatrix::new(basis.clone(), default_coherent(Complex64::new(1.0, 0.0), &basis)?)?,
    };
    let t_final = exp.times.iter().copied().fold(0.0, f64::max);
    let cfg = IntegratorConfig {
        t_final,
        sample_times: exp.times.clone(),
        record_states: true,
        sobolev_orders: Vec::new(),
        ..exp.integrator.clone()
    };
    let states = |g: &RealizedGenerator| -> Result<Vec<CMatrix>, CertifyError> {
        let trace = dynamics::evolve(g, &rho0, &cfg)?;
        Ok(trace.states.unwrap_or_default())
    };
    let base = states(&qou_generator(exp.lambda, exp.mu, None, &basis)?)?;
    let g_op = &(&single::a() * exp.gamma) + &(&single::ad() * exp.eta);
    let perturbed = exp
        .epsilons
        .par_iter()
        .map(|&e| {
            states(&qou_generator(
                exp.lambda,
                exp.mu,
                Some(&g_op * e.sqrt()),
                &basis,
            )?)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    for (e, run) in exp.epsilons.iter().zip(&perturbed) {
        for (i, &t) in exp.times.iter().enumerate() {
            let n = sobolev::trace_norm(&(&base[i] - &run[i]));
            rows.push(QouRow {
                epsilon: *e,
                time: t,
                difference_norm: n,
                scaled: if *e > 0.0 { n / e } else { 0.0 },
            });
        }
    }
    let per_time: Vec<QouTimeSummary> = exp
        .times
        .iter()
        .map(|&t| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.time == t && r.epsilon > 0.0)
                .map(|r| r.scaled)
                .collect();
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let max = v.iter().copied().fold(0.0, f64::max);
            QouTimeSummary {
                time: t,
                min_scaled: min,
                max_scaled: max,
                spread: if max > 0.0 { (max - min) / max } else { 0.0 },
            }
        })
        .collect();
    Ok(QouReport {
        max_spread: per_time.iter().map(|p| p.spread).fold(0.0, f64::max),
        empirical_constant: rows.iter().map(|r| r.scaled).fold(0.0, f64::max),
        per_time,
        rows,
    })
}

/// Unnormalized Choi matrix `sum_{ij} T(|i><j|) (x) |i><j|` of `e^{t L}` for a
/// single-mode generator, system as the outer tensor factor.
pub fn evolved_choi(
    gen: &RealizedGenerator,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<CMatrix, CertifyError> {
    let basis = gen.basis();
    if basis.modes() != 1 {
        return Err(CertifyError::InvalidParameter("Choi matrices need a single mode".into()));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(CertifyError::InvalidParameter("t must be nonnegative".into()));
    }
    let m = basis.dim();
    let mut choi = CMatrix::zeros(m * m, m * m);
    for i in 0..m {
        for j in 0..m {
            choi[(i * m + i, j * m + j)] = Complex64::new(1.0, 0.0);
        }
    }
    // The reference is idle, so L (x) id acts block-wise on fixed reference indices.
    let apply = |_: f64, x: &CMatrix, out: &mut CMatrix| {
        let mut blk = CMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                for i in 0..m {
                    for j in 0..m {
                        blk[(i, j)] = x[(i * m + a, j * m + b)];
                    }
                }
                let y = gen.apply(&blk);
                for i in 0..m {
                    for j in 0..m {
                        out[(i * m + a, j * m + b)] = y[(i, j)];
                    }
                }
            }
        }
    };
    if t == 0.0 {
        return Ok(choi);
    }
    let (out, _, _) = dynamics::integrate(
        apply,
        choi,
        0.0,
        &[t],
        cfg.method,
        |_, _| Ok(false),
        |_, _, _| Ok(()),
    )?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcProbe {
    pub family: String,
    pub mean_photons: f64,
    /// `||(T_A - T_B) (x) id (psi)||_1`.
    pub value: f64,
    /// `value / (1 + mean_photons)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcReport {
    pub energy: f64,
    /// Best probe value, a lower bound on the energy-constrained diamond distance.
    pub lower_bound: f64,
    /// `(1 + E) sup ratio` over the same probes.
    pub ratio_bound: f64,
    pub best_family: String,
    pub probes: Vec<EcProbe>,
}

/// Schmidt coefficients `c_n e^{i theta_n}` of a probe `sum_n c_n |n>|n>`.
type Schmidt = Vec<Complex64>;

fn geometric_with_mean(m: usize, energy: f64) -> Vec<f64> {
    let mean = |r: f64| -> f64 {
        let w: Vec<f64> = (0..m).map(|n| r.powi(n as i32)).collect();
        let z: f64 = w.iter().sum();
        w.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / z
    };
    let r = if mean(1.0) <= energy {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mean(mid) > energy {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    };
    let w: Vec<f64> = (0..m).map(|n| r.powi(n as i32)).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|p| (p / z).sqrt()).collect()
}

fn poisson_amplitudes(m: usize, energy: f64) -> Vec<f64> {
    let mut p = vec![0.0; m];
    let mut term = (-energy).exp();
    for (n, slot) in p.iter_mut().enumerate() {
        *slot = term;
        term *= energy / (n + 1) as f64;
    }
    let z: f64 = p.iter().sum();
    p.iter().map(|v| (v / z).sqrt()).collect()
}

fn with_phases(c: &[f64], phases: &[f64]) -> Schmidt {
    c.iter()
        .zip(phases)
        .map(|(&a, &t)| Complex64::from_polar(a, t))
        .collect()
}

fn probe_value(diff: &CMatrix, m: usize, s: &Schmidt) -> f64 {
    let out = CMatrix::from_fn(m * m, m * m, |r, c| {
        let (a, b) = (r % m, c % m);
        s[a] * diff[(r, c)] * s[b].conj()
    });
    sobolev::trace_norm(&linalg::hermitian_part(&out))
}

/// Lower bound on the energy-constrained diamond distance of two channels
/// given by their Choi matrices on a cutoff-`m` mode, maximized over
/// Fock-diagonal Schmidt probes with mean photon number at most `energy`:
/// geometric and Poisson profiles and two-point superpositions, each also
/// with `probes` seeded random phase patterns.
pub fn ec_diamond_lower_bound(
    choi_a: &CMatrix,
    choi_b: &CMatrix,
    m: usize,
    energy: f64,
    probes: usize,
    seed: u64,
) -> Result<EcReport, CertifyError> {
    if !(energy.is_finite() && energy >= 0.0) {
        return Err(CertifyError::InvalidParameter("energy must be nonnegative".into()));
    }
    let d = m * m;
    if choi_a.shape() != (d, d) || choi_b.shape() != (d, d) {
        return Err(CertifyError::InvalidParameter(format!(
            "Choi matrices must be {d}x{d}"
        )));
    }
    let diff = choi_a - choi_b;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<(String, Schmidt)> = Vec::new();
    let zeros = vec![0.0; m];
    if energy == 0.0 || m == 1 {
        let mut v = vec![0.0; m];
        v[0] = 1.0;
        candidates.push(("vacuum".into(), with_phases(&v, &zeros)));
    } else {
        let geo = geometric_with_mean(m, energy);
        let poi = poisson_amplitudes(m, energy);
        candidates.push(("geometric".into(), with_phases(&geo, &zeros)));
        candidates.push(("poisson".into(), with_phases(&poi, &zeros)));
        for n in 1..m {
            let p = energy / n as f64;
            if p <= 1.0 {
                let mut v = vec![0.0; m];
                v[0] = (1.0 - p).sqrt();
                v[n] = p.sqrt();
                candidates.push((format!("two_point_{n}"), with_phases(&v, &zeros)));
            }
        }
        for _ in 0..probes {
            let phases: Vec<f64> = (0..m)
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect();
            candidates.push(("geometric_phased".into(), with_phases(&geo, &phases)));
            candidates.push(("poisson_phased".into(), with_phases(&poi, &phases)));
            let n = rng.random_range(1..m);
            let p = (energy / n as f64).min(1.0);
            let mut v = vec![0.0; m];
            v[0] = (1.0 - p).sqrt();
            v[n] = p.sqrt();
            candidates.push((format!("two_point_{n}_phased"), with_phases(&v, &phases)));
        }
    }
    let probes: Vec<EcProbe> = candidates
        .par_iter()
        .map(|(family, s)| {
            let mean: f64 = s.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum();
            let value = probe_value(&diff, m, s);
            EcProbe {
                family: family.clone(),
                mean_photons: mean,
                value,
                ratio: value / (1.0 + mean),
            }
        })
        .collect();
    let best = probes
        .iter()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one probe");
    let (lower_bound, best_family) = (best.value, best.family.clone());
    Ok(EcReport {
        energy,
        lower_bound,
        ratio_bound: (1.0 + energy) * probes.iter().map(|p| p.ratio).fold(0.0, f64::max),
        best_family,
        probes,
    })
}

/// Random state `G G^dagger / tr` with complex Gaussian `G` supported on the
/// occupations below `support` in every mode.
pub fn random_density_matrix<R: Rng>(
    basis: &FockBasis,
    support: usize,
    rng: &mut R,
) -> Result<DensityMatrix, CertifyError> {
    if support == 0 || support > basis.min_cutoff() {
        return Err(CertifyError::InvalidParameter(format!(
            "support {support} must lie in 1..={}",
            basis.min_cutoff()
        )));
    }
    let idx: Vec<usize> = (0..basis.dim())
        .filter(|&i| basis.occupation(i).iter().all(|&n| n < support))
        .collect();
    let r = idx.len();
    let mut g = CMatrix::zeros(basis.dim(), r);
    for &i in &idx {
        for j in 0..r {
            g[(i, j)] = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
    }
    let mut rho = &g * g.adjoint();
    let tr = linalg::trace(&rho).re;
    rho /= Complex64::new(tr, 0.0);
    Ok(DensityMatrix::new(basis.clone(), linalg::hermitian_part(&rho))?)
}

/// Seeded random states, see [`random_density_matrix`].
pub fn random_states(
    basis: &FockBasis,
    support: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<DensityMatrix>, CertifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_density_matrix(basis, support, &mut rng))
        .collect()
}

/// Interpolation check for `x -> e^{tL} x` on the given samples.
pub fn stein_weiss_semigroup(
    gen: &RealizedGenerator,
    t: f64,
    cfg: &IntegratorConfig,
    k: (&SobolevOrder, &SobolevOrder),
    theta: f64,
    samples: &[CMatrix],
    endpoints: EndpointNorms,
) -> Result<SteinWeissReport, CertifyError> {
    let run = IntegratorConfig {
        t_final: t,
        sample_times: vec![t],
        record_states: false,
        sobolev_orders: Vec::new(),
        ..cfg.clone()
    };
    let images = samples
        .par_iter()
        .map(|x| Ok(dynamics::evolve_matrix(gen, x, &run, &[])?.final_state))
        .collect::<Result<Vec<CMatrix>, CertifyError>>()?;
    Ok(sobolev::stein_weiss_check_images(
        gen.basis(),
        k.0,
        k.1,
        theta,
        samples,
        &images,
        endpoints,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_probe_has_requested_mean() {
        let c = geometric_with_mean(20, 1.5);
        let mean: f64 = c.iter().enumerate().map(|(n, a)| n as f64 * a * a).sum();
        assert!((mean - 1.5).abs() < 1e-12);
        let norm: f64 = c.iter().map(|a| a * a).sum();
        assert!((norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identical_channels_are_at_distance_zero() {
        let basis = FockBasis::single(5).unwrap();
        let g = GkslGenerator::build(OperatorPolynomial::zero(1), vec![single::a()])
            .unwrap()
            .realize(&basis)
            .unwrap();
        let cfg = IntegratorConfig::adaptive(1e-10, 1e-12, 0.5);
        let c = evolved_choi(&g, 0.5, &cfg).unwrap();
        let r = ec_diamond_lower_bound(&c, &c, 5, 1.0, 4, 1).unwrap();
        assert_eq!(r.lower_bound, 0.0);
    }

    #[test]
    fn choi_of_loss_channel_on_one_photon() {
        // <1|.|1> block goes to e^{-t}|1><1| + (1 - e^{-t})|0><0|
        let basis = FockBasis::single(4).unwrap();
        let g = GkslGenerator::build(OperatorPolynomial::zero(1), vec![single::a()])
            .unwrap()
            .realize(&basis)
            .unwrap();
        let cfg = IntegratorConfig::adaptive(1e-11, 1e-13, 1.0);
        let c = evolved_choi(&g, 1.0, &cfg).unwrap();
        let m = 4;
        let e = (-1.0f64).exp();
        assert!((c[(m + 1, m + 1)].re - e).abs() < 1e-9);
        assert!((c[(1, 1)].re - (1.0 - e)).abs() < 1e-9);
        // trace preservation of each block
        let tr: f64 = (0..m).map(|i| c[(i * m + 2, i * m + 2)].re).sum();
        assert!((tr - 1.0).abs() < 1e-9);
    }

    #[test]
    fn random_states_are_supported_and_normalized() {
        let basis = FockBasis::single(10).unwrap();
        let s = random_states(&basis, 4, 3, 9).unwrap();
        for r in &s {
            assert!((linalg::trace(r.matrix()).re - 1.0).abs() < 1e-12);
            assert_eq!(r.matrix()[(7, 7)].norm(), 0.0);
        }
    }
}
