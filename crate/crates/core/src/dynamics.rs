//! Time integration of `rho' = L(rho)` and of evolution systems
//! `rho' = L_s(rho)` on a truncated Fock space.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{DensityMatrix, FockBasis};
use crate::generator::{GeneratorError, RealizedGenerator, RealizedTimeDependentGenerator};
use crate::linalg::{self, CMatrix, SparseMatrix};
use crate::sobolev::{self, SobolevError, SobolevOrder};

/// Gauss-Legendre nodes per panel of the Duhamel quadrature.
pub const DUHAMEL_NODES: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("state lives on cutoffs {state:?}, generator on {generator:?}")]
    BasisMismatch {
        state: Vec<usize>,
        generator: Vec<usize>,
    },
    #[error("edge population {leakage:.3e} exceeds {tolerance:.1e} at t = {time}")]
    LeakageExceeded {
        time: f64,
        leakage: f64,
        tolerance: f64,
    },
    #[error("step size {step:.3e} underflowed at t = {time}")]
    StepUnderflow { time: f64, step: f64 },
    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },
    #[error(transparent)]
    Sobolev(#[from] SobolevError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Rk4Fixed { dt: f64 },
    Rk45Adaptive { rtol: f64, atol: f64 },
}

impl Default for Method {
    fn default() -> Self {
        Method::Rk45Adaptive {
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    #[serde(flatten)]
    pub method: Method,
    pub t_final: f64,
    pub sample_times: Vec<f64>,
    pub leakage_tolerance: f64,
    pub renormalize_trace: bool,
    pub sobolev_orders: Vec<SobolevOrder>,
    pub record_states: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::default(),
            t_final: 1.0,
            sample_times: vec![0.0, 1.0],
            leakage_tolerance: 1e-6,
            renormalize_trace: false,
            sobolev_orders: Vec::new(),
            record_states: false,
        }
    }
}

impl IntegratorConfig {
    pub fn adaptive(rtol: f64, atol: f64, t_final: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk45Adaptive { rtol, atol },
            t_final,
            sample_times: vec![0.0, t_final],
            ..Default::default()
        }
    }

    pub fn fixed(dt: f64, t_final: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4Fixed { dt },
            t_final,
            sample_times: vec![0.0, t_final],
            ..Default::default()
        }
    }

    /// `n + 1` equispaced samples on `[0, t_final]`.
    pub fn with_uniform_samples(mut self, n: usize) -> Self {
        let n = n.max(1);
        self.sample_times = (0..=n)
            .map(|i| self.t_final * i as f64 / n as f64)
            .collect();
        self
    }

    pub fn with_sample_times(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    pub fn with_leakage_tolerance(mut self, tol: f64) -> Self {
        self.leakage_tolerance = tol;
        self
    }

    pub fn with_sobolev_orders(mut self, orders: Vec<SobolevOrder>) -> Self {
        self.sobolev_orders = orders;
        self
    }

    pub fn recording_states(mut self) -> Self {
        self.record_states = true;
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: &str| Err(DynamicsError::InvalidConfig(m.to_string()));
        match self.method {
            Method::Rk4Fixed { dt } if !(dt.is_finite() && dt > 0.0) => {
                return bad("dt must be positive")
            }
            Method::Rk45Adaptive { rtol, atol }
                if !(rtol.is_finite() && atol.is_finite() && rtol > 0.0 && atol > 0.0) =>
            {
                return bad("rtol and atol must be positive")
            }
            _ => {}
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return bad("t_final must be finite and nonnegative");
        }
        if self
            .sample_times
            .iter()
            .any(|&t| !(t.is_finite() && (0.0..=self.t_final).contains(&t)))
        {
            return bad("sample times must lie in [0, t_final]");
        }
        if self.sample_times.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("sample times must be strictly increasing");
        }
        if !(self.leakage_tolerance >= 0.0) {
            return bad("leakage tolerance must be nonnegative");
        }
        for k in &self.sobolev_orders {
            if let SobolevOrder::Uniform(v) = k {
                if !(v.is_finite() && *v >= 0.0) {
                    return bad("Sobolev orders must be nonnegative");
                }
            }
        }
        Ok(())
    }
}

/// A linear functional `rho -> Re tr[O rho]`.
#[derive(Debug, Clone)]
pub struct Observable {
    pub name: String,
    pub operator: SparseMatrix,
}

impl Observable {
    pub fn new(name: impl Into<String>, operator: SparseMatrix) -> Self {
        Observable {
            name: name.into(),
            operator,
        }
    }

    /// `tr[L rho L^dagger] = tr[L^dagger L rho]`.
    pub fn lyapunov(name: impl Into<String>, jump: &SparseMatrix) -> Self {
        Observable::new(name, jump.adjoint().matmul(jump))
    }

    pub fn value(&self, rho: &CMatrix) -> f64 {
        self.operator
            .triplets()
            .map(|(i, j, v)| (v * rho[(j, i)]).re)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    pub trace: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
    pub leakage: Vec<f64>,
    pub sobolev_orders: Vec<SobolevOrder>,
    /// `sobolev_norms[i][j]` is the `j`-th order at sample `i`.
    pub sobolev_norms: Vec<Vec<f64>>,
    pub observable_names: Vec<String>,
    pub observables: Vec<Vec<f64>>,
    pub states: Option<Vec<CMatrix>>,
    pub final_state: CMatrix,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl SimulationTrace {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["t", "trace", "min_eig", "leakage"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(self.sobolev_orders.iter().map(|k| format!("W_{}", k.label())));
        h.extend(self.observable_names.iter().cloned());
        h
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.header().join(","))?;
        for i in 0..self.times.len() {
            let mut row = vec![
                self.times[i],
                self.trace[i],
                self.min_eigenvalue[i],
                self.leakage[i],
            ];
            row.extend(&self.sobolev_norms[i]);
            row.extend(&self.observables[i]);
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.trace.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Population on basis states within the edge band of any cutoff.
pub fn leakage(rho: &CMatrix, basis: &FockBasis) -> f64 {
    basis
        .edge_indices()
        .iter()
        .map(|&i| rho[(i, i)].re)
        .sum::<f64>()
        .max(0.0)
}

fn is_finite(x: &CMatrix) -> bool {
    x.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Integrates `y' = f(t, y)` from `t0` through the increasing `stops`,
/// calling `on_stop(i, t, y)` at each stop (it may modify `y`) and
/// `on_step(t, y)` after every accepted step (returning whether it modified `y`).
pub(crate) fn integrate<F, P, S>(
    f: F,
    mut y: CMatrix,
    t0: f64,
    stops: &[f64],
    method: Method,
    mut on_step: P,
    mut on_stop: S,
) -> Result<(CMatrix, usize, usize), DynamicsError>
where
    F: Fn(f64, &CMatrix, &mut CMatrix),
    P: FnMut(f64, &mut CMatrix) -> Result<bool, DynamicsError>,
    S: FnMut(usize, f64, &mut CMatrix) -> Result<(), DynamicsError>,
{
    let (n, m) = y.shape();
    let mut t = t0;
    let mut accepted = 0;
    let mut rejected = 0;
    let mut k: Vec<CMatrix> = (0..7).map(|_| CMatrix::zeros(n, m)).collect();
    let mut tmp = CMatrix::zeros(n, m);
    let mut h_next: Option<f64> = None;
    let mut err_prev: f64 = 1e-4;

    for (idx, &stop) in stops.iter().enumerate() {
        match method {
            Method::Rk4Fixed { dt } => {
                let span = stop - t;
                if span > 0.0 {
                    let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
                    let h = span / steps as f64;
                    for s in 0..steps {
                        let ts = t + h * s as f64;
                        rk4_step(&f, ts, h, &mut y, &mut k, &mut tmp);
                        accepted += 1;
                        let tn = if s + 1 == steps { stop } else { ts + h };
                        if !is_finite(&y) {
                            return Err(DynamicsError::NonFinite { time: tn });
                        }
                        on_step(tn, &mut y)?;
                    }
                }
            }
            Method::Rk45Adaptive { rtol, atol } => {
                if stop > t {
                    f(t, &y, &mut k[0]);
                    let mut h = h_next.unwrap_or_else(|| initial_step(&y, &k[0], rtol, atol));
                    loop {
                        let remaining = stop - t;
                        let last = h >= remaining * (1.0 - 1e-12);
                        let step = if last { remaining } else { h };
                        if step < 1e-14 * t.abs().max(1.0) {
                            return Err(DynamicsError::StepUnderflow { time: t, step });
                        }
                        let err = dp_step(&f, t, step, &y, &mut k, &mut tmp, rtol, atol);
                        if !err.is_finite() {
                            return Err(DynamicsError::NonFinite { time: t + step });
                        }
                        // PI controller (Hairer-Wanner II, IV.2) damps step-size
                        // oscillation along the stability boundary.
                        let factor = if err == 0.0 {
                            5.0
                        } else {
                            (0.9 * err.powf(-0.17) * err_prev.powf(0.04)).clamp(0.2, 5.0)
                        };
                        if err <= 1.0 {
                            err_prev = err.max(1e-4);
                            accepted += 1;
                            std::mem::swap(&mut y, &mut tmp);
                            t = if last { stop } else { t + step };
                            if on_step(t, &mut y)? {
                                f(t, &y, &mut k[0]);
                            } else {
                                // FSAL: k[6] holds f(t + h, y_new).
                                k.swap(0, 6);
                            }
                            if !last {
                                h = step * factor;
                            } else {
                                // A step shortened to hit the stop keeps the old proposal.
                                h_next = Some(if step < h { h } else { step * factor });
                                break;
                            }
                        } else {
                            rejected += 1;
                            h = step * factor.min(1.0);
                        }
                    }
                }
            }
        }
        t = stop;
        on_stop(idx, t, &mut y)?;
    }
    Ok((y, accepted, rejected))
}

fn initial_step(y: &CMatrix, f0: &CMatrix, rtol: f64, atol: f64) -> f64 {
    let d0 = y.norm();
    let d1 = f0.norm();
    let tol = atol + rtol * d0;
    if d1 <= 1e-300 {
        return 1e-3;
    }
    (0.01 * (tol / d1).powf(0.2) * (d0 / d1).max(1e-6).min(1.0).powf(0.8)).max(1e-10)
}

fn axpy_into(out: &mut CMatrix, y: &CMatrix, terms: &[(f64, &CMatrix)], h: f64) {
    out.copy_from(y);
    for (c, m) in terms {
        if *c != 0.0 {
            out.zip_apply(*m, |o, v| *o += v * (c * h));
        }
    }
}

fn rk4_step<F>(f: &F, t: f64, h: f64, y: &mut CMatrix, k: &mut [CMatrix], tmp: &mut CMatrix)
where
    F: Fn(f64, &CMatrix, &mut CMatrix),
{
    let (k1, rest) = k.split_at_mut(1);
    let (k2, rest) = rest.split_at_mut(1);
    let (k3, rest) = rest.split_at_mut(1);
    let k4 = &mut rest[0];
    f(t, y, &mut k1[0]);
    axpy_into(tmp, y, &[(0.5, &k1[0])], h);
    f(t + 0.5 * h, tmp, &mut k2[0]);
    axpy_into(tmp, y, &[(0.5, &k2[0])], h);
    f(t + 0.5 * h, tmp, &mut k3[0]);
    axpy_into(tmp, y, &[(1.0, &k3[0])], h);
    f(t + h, tmp, k4);
    let c = Complex64::new(h / 6.0, 0.0);
    y.zip_zip_apply(&k1[0], &k2[0], |yv, a, b| *yv += c * (a + b * 2.0));
    y.zip_zip_apply(&k3[0], k4, |yv, a, b| *yv += c * (a * 2.0 + b));
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand-Prince step from `(t, y)` with `k[0] = f(t, y)` already set.
/// Writes the fifth-order solution to `out`, `f(t + h, out)` to `k[6]`, and
/// returns the scaled Frobenius error `||e|| / (atol + rtol ||y||)`.
#[allow(clippy::too_many_arguments)]
fn dp_step<F>(
    f: &F,
    t: f64,
    h: f64,
    y: &CMatrix,
    k: &mut [CMatrix],
    out: &mut CMatrix,
    rtol: f64,
    atol: f64,
) -> f64
where
    F: Fn(f64, &CMatrix, &mut CMatrix),
{
    for s in 1..7 {
        {
            let (done, _) = k.split_at(s);
            let terms: Vec<(f64, &CMatrix)> = (0..s).map(|j| (A[s][j], &done[j])).collect();
            axpy_into(out, y, &terms, h);
        }
        let (_, rest) = k.split_at_mut(s);
        f(t + C[s] * h, out, &mut rest[0]);
    }
    // Stage 6 evaluated f at the fifth-order solution, which is now in `out`.
    let mut err = 0.0;
    for idx in 0..y.len() {
        let mut e = Complex64::new(0.0, 0.0);
        for (s, es) in E.iter().enumerate() {
            if *es != 0.0 {
                e += k[s][idx] * *es;
            }
        }
        err += (e * h).norm_sqr();
    }
    err.sqrt() / (atol + rtol * y.norm().max(out.norm()))
}

struct Recorder<'a> {
    basis: &'a FockBasis,
    cfg: &'a IntegratorConfig,
    observables: &'a [Observable],
    time_offset: f64,
    times: Vec<f64>,
    trace: Vec<f64>,
    min_eig: Vec<f64>,
    leakage: Vec<f64>,
    sobolev: Vec<Vec<f64>>,
    obs: Vec<Vec<f64>>,
    states: Vec<CMatrix>,
}

impl<'a> Recorder<'a> {
    fn new(
        basis: &'a FockBasis,
        cfg: &'a IntegratorConfig,
        observables: &'a [Observable],
        time_offset: f64,
    ) -> Self {
        Recorder {
            basis,
            cfg,
            observables,
            time_offset,
            times: Vec::new(),
            trace: Vec::new(),
            min_eig: Vec::new(),
            leakage: Vec::new(),
            sobolev: Vec::new(),
            obs: Vec::new(),
            states: Vec::new(),
        }
    }

    fn check_step(&self, t: f64, y: &mut CMatrix) -> Result<bool, DynamicsError> {
        let leak = leakage(y, self.basis);
        if leak > self.cfg.leakage_tolerance {
            return Err(DynamicsError::LeakageExceeded {
                time: t,
                leakage: leak,
                tolerance: self.cfg.leakage_tolerance,
            });
        }
        if self.cfg.renormalize_trace {
            let tr = linalg::trace(y).re;
            if tr > 0.0 {
                *y /= Complex64::new(tr, 0.0);
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn record(&mut self, t: f64, y: &CMatrix) -> Result<(), DynamicsError> {
        self.times.push(t + self.time_offset);
        self.trace.push(linalg::trace(y).re);
        self.min_eig.push(linalg::min_eigenvalue(y));
        self.leakage.push(leakage(y, self.basis));
        let mut norms = Vec::with_capacity(self.cfg.sobolev_orders.len());
        for k in &self.cfg.sobolev_orders {
            norms.push(sobolev::sobolev_norm(y, k, self.basis)?);
        }
        self.sobolev.push(norms);
        self.obs
            .push(self.observables.iter().map(|o| o.value(y)).collect());
        if self.cfg.record_states {
            self.states.push(y.clone());
        }
        Ok(())
    }

    fn finish(self, final_state: CMatrix, accepted: usize, rejected: usize) -> SimulationTrace {
        SimulationTrace {
            times: self.times,
            trace: self.trace,
            min_eigenvalue: self.min_eig,
            leakage: self.leakage,
            sobolev_orders: self.cfg.sobolev_orders.clone(),
            sobolev_norms: self.sobolev,
            observable_names: self.observables.iter().map(|o| o.name.clone()).collect(),
            observables: self.obs,
            states: if self.cfg.record_states {
                Some(self.states)
            } else {
                None
            },
            final_state,
            accepted_steps: accepted,
            rejected_steps: rejected,
        }
    }
}

fn check_state(rho0: &CMatrix, basis: &FockBasis) -> Result<(), DynamicsError> {
    let d = basis.dim();
    if rho0.nrows() != d || rho0.ncols() != d {
        return Err(DynamicsError::InvalidConfig(format!(
            "state is {}x{}, basis dimension is {d}",
            rho0.nrows(),
            rho0.ncols()
        )));
    }
    Ok(())
}

fn run<F>(
    f: F,
    basis: &FockBasis,
    rho0: &CMatrix,
    cfg: &IntegratorConfig,
    observables: &[Observable],
    t0: f64,
) -> Result<SimulationTrace, DynamicsError>
where
    F: Fn(f64, &CMatrix, &mut CMatrix),
{
    cfg.validate()?;
    check_state(rho0, basis)?;
    for o in observables {
        if o.operator.nrows() != basis.dim() || o.operator.ncols() != basis.dim() {
            return Err(DynamicsError::InvalidConfig(format!(
                "observable `{}` has the wrong shape",
                o.name
            )));
        }
    }
    let leak0 = leakage(rho0, basis);
    if leak0 > cfg.leakage_tolerance {
        return Err(DynamicsError::LeakageExceeded {
            time: t0,
            leakage: leak0,
            tolerance: cfg.leakage_tolerance,
        });
    }
    let mut stops: Vec<f64> = cfg.sample_times.clone();
    let record_final = stops.last().is_none_or(|&t| t < cfg.t_final);
    if record_final {
        stops.push(cfg.t_final);
    }
    let n_samples = cfg.sample_times.len();
    let recorder = std::cell::RefCell::new(Recorder::new(basis, cfg, observables, t0));
    let (y, acc, rej) = integrate(
        |t, x, out| f(t0 + t, x, out),
        rho0.clone(),
        0.0,
        &stops,
        cfg.method,
        |t, y| recorder.borrow().check_step(t0 + t, y),
        |i, t, y| {
            if i < n_samples {
                recorder.borrow_mut().record(t, y)
            } else {
                Ok(())
            }
        },
    )?;
    Ok(recorder.into_inner().finish(y, acc, rej))
}

fn check_basis(rho0: &DensityMatrix, basis: &FockBasis) -> Result<(), DynamicsError> {
    if rho0.basis().cutoffs() != basis.cutoffs() {
        return Err(DynamicsError::BasisMismatch {
            state: rho0.basis().cutoffs().to_vec(),
            generator: basis.cutoffs().to_vec(),
        });
    }
    Ok(())
}

/// Integrates the master equation of `gen` from `rho0`.
pub fn evolve(
    gen: &RealizedGenerator,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
) -> Result<SimulationTrace, DynamicsError> {
    evolve_with(gen, rho0, cfg, &[])
}

pub fn evolve_with(
    gen: &RealizedGenerator,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
    observables: &[Observable],
) -> Result<SimulationTrace, DynamicsError> {
    check_basis(rho0, gen.basis())?;
    evolve_matrix(gen, rho0.matrix(), cfg, observables)
}

/// As [`evolve_with`] for an arbitrary, possibly non-physical, initial matrix.
pub fn evolve_matrix(
    gen: &RealizedGenerator,
    x0: &CMatrix,
    cfg: &IntegratorConfig,
    observables: &[Observable],
) -> Result<SimulationTrace, DynamicsError> {
    run(
        |_, x, out| gen.apply_into(x, out),
        gen.basis(),
        x0,
        cfg,
        observables,
        0.0,
    )
}

/// Integrates the evolution system from `s0` to `s0 + t_final`; sample times
/// are relative to `s0`, recorded times are absolute.
pub fn evolve_td(
    gen: &RealizedTimeDependentGenerator,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
    s0: f64,
) -> Result<SimulationTrace, DynamicsError> {
    evolve_td_with(gen, rho0, cfg, s0, &[])
}

pub fn evolve_td_with(
    gen: &RealizedTimeDependentGenerator,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
    s0: f64,
    observables: &[Observable],
) -> Result<SimulationTrace, DynamicsError> {
    check_basis(rho0, gen.basis())?;
    evolve_td_matrix(gen, rho0.matrix(), cfg, s0, observables)
}

pub fn evolve_td_matrix(
    gen: &RealizedTimeDependentGenerator,
    x0: &CMatrix,
    cfg: &IntegratorConfig,
    s0: f64,
    observables: &[Observable],
) -> Result<SimulationTrace, DynamicsError> {
    if !s0.is_finite() {
        return Err(DynamicsError::InvalidConfig("start time must be finite".into()));
    }
    run(
        |s, x, out| gen.materialize_at(s).apply_into(x, out),
        gen.basis(),
        x0,
        cfg,
        observables,
        s0,
    )
}

#[derive(Debug, Clone)]
pub struct SemigroupDifference {
    /// `e^{t L_A}(rho0) - e^{t L_B}(rho0)`.
    pub difference: CMatrix,
    /// The same difference assembled from the Duhamel quadrature.
    pub duhamel: CMatrix,
    /// `|| difference - duhamel ||_1`.
    pub residual: f64,
    pub trace_norm: f64,
}

/// Direct difference of the two semigroups together with the Duhamel form
/// `e^{tA}x - e^{tB}x = -t int_0^1 e^{(1-s)tA} (B - A) e^{stB} x ds`,
/// evaluated with `panels` composite Gauss-Legendre panels of
/// [`DUHAMEL_NODES`] nodes.
///
/// The quadrature takes one pass of `B` that stops at the nodes, then one
/// pass of `A` that adds the weighted integrand at each node.
pub fn semigroup_difference(
    gen_a: &RealizedGenerator,
    gen_b: &RealizedGenerator,
    rho0: &CMatrix,
    t: f64,
    cfg: &IntegratorConfig,
    panels: usize,
) -> Result<SemigroupDifference, DynamicsError> {
    if gen_a.basis().cutoffs() != gen_b.basis().cutoffs() {
        return Err(DynamicsError::BasisMismatch {
            state: gen_b.basis().cutoffs().to_vec(),
            generator: gen_a.basis().cutoffs().to_vec(),
        });
    }
    let basis = gen_a.basis().clone().with_edge_band(
        gen_a.basis().edge_band().max(gen_b.basis().edge_band()),
    );
    check_state(rho0, &basis)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(DynamicsError::InvalidConfig("t must be nonnegative".into()));
    }
    let single = IntegratorConfig {
        t_final: t,
        sample_times: vec![t],
        record_states: false,
        sobolev_orders: Vec::new(),
        ..cfg.clone()
    };
    single.validate()?;
    let a_run = evolve_matrix(gen_a, rho0, &single, &[])?;
    let b_run = evolve_matrix(gen_b, rho0, &single, &[])?;
    let difference = &a_run.final_state - &b_run.final_state;

    let zero = CMatrix::zeros(rho0.nrows(), rho0.ncols());
    let duhamel = if t == 0.0 {
        zero
    } else {
        let panels = panels.max(1);
        let (x, w) = linalg::gauss_legendre(DUHAMEL_NODES);
        let mut nodes = Vec::with_capacity(panels * DUHAMEL_NODES);
        for p in 0..panels {
            for q in 0..DUHAMEL_NODES {
                let s = (p as f64 + x[q]) / panels as f64;
                nodes.push((s * t, w[q] / panels as f64 * t));
            }
        }
        let stops: Vec<f64> = nodes.iter().map(|n| n.0).collect();
        let leak_tol = cfg.leakage_tolerance;
        let check = |time: f64, y: &mut CMatrix| {
            let leak = leakage(y, &basis);
            if leak > leak_tol {
                Err(DynamicsError::LeakageExceeded {
                    time,
                    leakage: leak,
                    tolerance: leak_tol,
                })
            } else {
                Ok(false)
            }
        };
        // (B - A) applied to e^{s t B} x at every node.
        let mut kicks: Vec<CMatrix> = Vec::with_capacity(stops.len());
        let mut ta = CMatrix::zeros(rho0.nrows(), rho0.ncols());
        integrate(
            |_, y, out| gen_b.apply_into(y, out),
            rho0.clone(),
            0.0,
            &stops,
            cfg.method,
            check,
            |i, _, y| {
                gen_a.apply_into(y, &mut ta);
                let mut k = gen_b.apply(y);
                k -= &ta;
                k *= Complex64::new(nodes[i].1, 0.0);
                kicks.push(k);
                Ok(())
            },
        )?;
        let mut final_stops = stops.clone();
        final_stops.push(t);
        let (acc, _, _) = integrate(
            |_, y, out| gen_a.apply_into(y, out),
            zero,
            0.0,
            &final_stops,
            cfg.method,
            |_, _| Ok(false),
            |i, _, y| {
                if i < kicks.len() {
                    *y += &kicks[i];
                }
                Ok(())
            },
        )?;
        -acc
    };
    let residual = sobolev::trace_norm(&(&difference - &duhamel));
    let trace_norm = sobolev::trace_norm(&difference);
    Ok(SemigroupDifference {
        difference,
        duhamel,
        residual,
        trace_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccr::single::*;
    use crate::ccr::OperatorPolynomial;
    use crate::generator::GkslGenerator;

    fn loss(m: usize) -> RealizedGenerator {
        GkslGenerator::build(OperatorPolynomial::zero(1), vec![a()])
            .unwrap()
            .realize(&FockBasis::single(m).unwrap())
            .unwrap()
    }

    #[test]
    fn vacuum_is_fixed_under_loss() {
        let g = loss(8);
        let rho = DensityMatrix::fock(g.basis().clone(), &[0]).unwrap();
        let cfg = IntegratorConfig::adaptive(1e-10, 1e-12, 3.0).with_uniform_samples(6);
        let tr = evolve(&g, &rho, &cfg).unwrap();
        assert!(tr.max_trace_drift() <= 1e-10);
        assert!((tr.final_state.clone() - rho.matrix()).norm() < 1e-14);
    }

    #[test]
    fn rk4_and_rk45_agree_on_a_decay() {
        let g = loss(6);
        let rho = DensityMatrix::fock(g.basis().clone(), &[3]).unwrap();
        let a45 = evolve(&g, &rho, &IntegratorConfig::adaptive(1e-10, 1e-12, 1.0)).unwrap();
        let a4 = evolve(&g, &rho, &IntegratorConfig::fixed(1e-3, 1.0)).unwrap();
        let d = (&a45.final_state - &a4.final_state).norm();
        assert!(d < 1e-10, "{d}");
        // <3|rho|3> = e^{-3t}
        assert!((a45.final_state[(3, 3)].re - (-3.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        let mut cfg = IntegratorConfig::adaptive(1e-8, 1e-10, 1.0);
        cfg.sample_times = vec![0.5, 0.2];
        assert!(cfg.validate().is_err());
        cfg.sample_times = vec![0.0, 2.0];
        assert!(cfg.validate().is_err());
        assert!(IntegratorConfig::fixed(0.0, 1.0).validate().is_err());
    }

    #[test]
    fn leakage_breach_aborts() {
        // Pumping a^dagger drives population into the edge.
        let g = GkslGenerator::build(OperatorPolynomial::zero(1), vec![ad()])
            .unwrap()
            .realize(&FockBasis::single(6).unwrap())
            .unwrap();
        let rho = DensityMatrix::fock(g.basis().clone(), &[0]).unwrap();
        let cfg = IntegratorConfig::adaptive(1e-8, 1e-10, 5.0).with_leakage_tolerance(1e-3);
        match evolve(&g, &rho, &cfg) {
            Err(DynamicsError::LeakageExceeded { time, .. }) => assert!(time < 5.0),
            other => panic!("expected leakage error, got {other:?}"),
        }
    }

    #[test]
    fn csv_layout() {
        let g = loss(5);
        let rho = DensityMatrix::fock(g.basis().clone(), &[1]).unwrap();
        let cfg = IntegratorConfig::adaptive(1e-9, 1e-11, 1.0)
            .with_uniform_samples(2)
            .with_sobolev_orders(vec![SobolevOrder::Uniform(2.0)]);
        let obs = [Observable::lyapunov("tr_LrhoLdag", &g.jumps()[0])];
        let tr = evolve_with(&g, &rho, &cfg, &obs).unwrap();
        let csv = tr.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,trace,min_eig,leakage,W_2,tr_LrhoLdag");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0"));
        // W_2 of |1><1| is (1 + 1)^{1} = 2, and tr[a rho a^dagger] = 1.
        let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert!((first[4] - 2.0).abs() < 1e-12);
        assert!((first[5] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_generators_have_zero_difference() {
        let g = loss(6);
        let rho = DensityMatrix::fock(g.basis().clone(), &[2]).unwrap();
        let cfg = IntegratorConfig::adaptive(1e-10, 1e-12, 1.0);
        let d = semigroup_difference(&g, &g, rho.matrix(), 1.0, &cfg, 1).unwrap();
        assert_eq!(d.trace_norm, 0.0);
        assert!(d.residual <= 1e-12);
    }
}
