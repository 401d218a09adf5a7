//! Randomized checks of the scalar inequalities for `g_l` and the falling and
//! rising products, and of the two-mode operator bound.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CertifyError;
use crate::linalg::{self, CMatrix};

/// Relative slack for floating-point evaluation of both sides.
pub const SCALAR_TOLERANCE: f64 = 1e-10;
/// Occupation cutoff per mode of the two-mode operator check.
pub const OPERATOR_CHECK_CUTOFF: usize = 6;

/// `f(x) = (x + 1)^{k/2}` for `x >= -1`, else 0.
pub fn f_power(x: f64, k: f64) -> f64 {
    if x >= -1.0 {
        (x + 1.0).powf(k / 2.0)
    } else {
        0.0
    }
}

/// The piecewise function `g_l`.
pub fn g_l(x: f64, l: u32, k: f64) -> f64 {
    let lf = f64::from(l);
    if x >= lf - 1.0 {
        f_power(x, k) - f_power(x - lf, k)
    } else if x >= 0.0 {
        f_power(x, k)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub k: u32,
    pub l: u32,
    pub x: f64,
    /// Left and right side of `lhs <= rhs`.
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub evaluations: usize,
    pub failures: usize,
    pub first_counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuiteReport {
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<CheckSummary>,
    pub total_failures: usize,
}

impl LemmaSuiteReport {
    pub fn passed(&self) -> bool {
        self.total_failures == 0
    }
}

const CHECKS: &[&str] = &[
    "g_definition",
    "g_monotone_in_l",
    "g_monotone_shift",
    "g_lower_gradient",
    "g_lower_linear",
    "g_lower_small",
    "g_lower_negative",
    "g_upper_gradient",
    "g_upper_power",
    "g_upper_negative",
    "falling_product_lower",
    "falling_product_upper",
    "rising_product_lower",
    "rising_product_upper",
    "two_mode_hamiltonian_bound",
];

struct Tally(Vec<CheckSummary>);

impl Tally {
    fn record(&mut self, name: &str, k: u32, l: u32, x: f64, lhs: f64, rhs: f64) {
        let c = self
            .0
            .iter_mut()
            .find(|c| c.name == name)
            .expect("registered check");
        c.evaluations += 1;
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        if !(lhs <= rhs + SCALAR_TOLERANCE * scale) {
            c.failures += 1;
            if c.first_counterexample.is_none() {
                c.first_counterexample = Some(Counterexample { k, l, x, lhs, rhs });
            }
        }
    }
}

fn scalar_checks(t: &mut Tally, k: u32, l: u32, x: f64, x_neg: f64, x_big: f64) {
    let kf = f64::from(k);
    let lf = f64::from(l);
    let g = g_l(x, l, kf);
    let y = x + 1.0;

    let direct = f_power(x, kf) - f_power(x - lf, kf);
    t.record("g_definition", k, l, x, (g - direct).abs(), 0.0);

    if k >= 2 {
        t.record("g_monotone_in_l", k, l, x, g, g_l(x, l + 1, kf));
        t.record("g_monotone_shift", k, l, x, g_l(x - lf, l, kf), g);
    }

    if x >= lf - 1.0 {
        let corr = if k >= 3 {
            y.powf(kf / 2.0 - 2.0) * (kf * lf).powi(2) / 8.0
        } else {
            0.0
        };
        t.record(
            "g_lower_gradient",
            k,
            l,
            x,
            y.powf(kf / 2.0 - 1.0) * kf * lf / 2.0 - corr,
            g,
        );
        t.record("g_lower_linear", k, l, x, y.powf(kf / 2.0 - 1.0) * lf, g);
    } else {
        t.record("g_lower_small", k, l, x, y.powf(kf / 2.0), g);
    }
    t.record("g_lower_negative", k, l, x_neg, 0.0, g_l(x_neg, l, kf));

    let boost = if k == 1 { 2.0 } else { 1.0 };
    t.record(
        "g_upper_gradient",
        k,
        l,
        x,
        g,
        kf * lf / 2.0 * boost * y.powf(kf / 2.0 - 1.0),
    );
    t.record("g_upper_power", k, l, x, g, y.powf(kf / 2.0));
    t.record("g_upper_negative", k, l, x_neg, g_l(x_neg, l, kf), 0.0);

    let yb = x_big + 1.0;
    let falling: f64 = (1..=l).map(|j| yb - f64::from(j)).product();
    let rising: f64 = (0..l).map(|j| yb + f64::from(j)).product();
    let factorial: f64 = (1..=l).map(f64::from).product();
    t.record(
        "falling_product_lower",
        k,
        l,
        x_big,
        yb.powi(l as i32) - lf * (lf + 1.0) / 2.0 * yb.powi(l as i32 - 1),
        falling,
    );
    t.record("falling_product_upper", k, l, x_big, falling, yb.powi(l as i32));
    t.record("rising_product_lower", k, l, x_big, yb.powi(l as i32), rising);
    t.record("rising_product_upper", k, l, x_big, rising, factorial * yb.powi(l as i32));
}

/// `sqrt(n! / (n - m)!)`, zero for `n < m`.
fn lowering_factor(n: usize, m: usize) -> f64 {
    if n < m {
        0.0
    } else {
        ((n - m + 1)..=n).map(|j| (j as f64).sqrt()).product()
    }
}

/// Smallest eigenvalue of `2|z| h~(N_1 + m_1, N_2 + m_2) - K` on the block
/// `n_i < cutoff`, where `K = z a^ell h(N) (a^dagger)^k + h.c.` per mode pair.
pub fn two_mode_bound_margin(
    ell: [usize; 2],
    kk: [usize; 2],
    z: Complex64,
    h: &dyn Fn(usize, usize) -> f64,
    cutoff: usize,
) -> f64 {
    let m = [ell[0].max(kk[0]), ell[1].max(kk[1])];
    let h_tilde = |n1: usize, n2: usize| -> f64 {
        lowering_factor(n1, m[0]) * lowering_factor(n2, m[1]) * h(n1, n2)
    };
    let dim = cutoff * cutoff;
    let idx = |p1: usize, p2: usize| p1 * cutoff + p2;
    let mut op = CMatrix::zeros(dim, dim);
    for p1 in 0..cutoff {
        for p2 in 0..cutoff {
            op[(idx(p1, p2), idx(p1, p2))] +=
                Complex64::new(2.0 * z.norm() * h_tilde(p1 + m[0], p2 + m[1]), 0.0);
        }
    }
    // K = sum_{n >= m} h~(n) (z |n - ell><n - k| + conj(z) |n - k><n - ell|).
    let top = cutoff + m[0].max(m[1]);
    for n1 in m[0]..top {
        for n2 in m[1]..top {
            let (r1, r2) = (n1 - ell[0], n2 - ell[1]);
            let (c1, c2) = (n1 - kk[0], n2 - kk[1]);
            if r1 >= cutoff || r2 >= cutoff || c1 >= cutoff || c2 >= cutoff {
                continue;
            }
            let g = h_tilde(n1, n2);
            op[(idx(r1, r2), idx(c1, c2))] -= z * g;
            op[(idx(c1, c2), idx(r1, r2))] -= z.conj() * g;
        }
    }
    linalg::min_eigenvalue(&op)
}

fn operator_check<R: Rng>(t: &mut Tally, rng: &mut R, trial_k: u32, trial_l: u32) {
    let cutoff = OPERATOR_CHECK_CUTOFF;
    let mut pair = || {
        let v = rng.random_range(0..=2usize);
        if rng.random_bool(0.5) {
            (v, 0)
        } else {
            (0, v)
        }
    };
    let (e1, k1) = pair();
    let (e2, k2) = pair();
    let z = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    // Positive and increasing in both arguments: a 2-D cumulative sum of
    // positive increments.
    let size = cutoff + 3;
    let inc: Vec<f64> = (0..size * size).map(|_| rng.random_range(0.01..1.0)).collect();
    let mut table = vec![0.0; size * size];
    for a in 0..size {
        for b in 0..size {
            let mut v = inc[a * size + b];
            if a > 0 {
                v += table[(a - 1) * size + b];
            }
            if b > 0 {
                v += table[a * size + b - 1];
            }
            if a > 0 && b > 0 {
                v -= table[(a - 1) * size + b - 1];
            }
            table[a * size + b] = v;
        }
    }
    let h = |a: usize, b: usize| table[a * size + b];
    let margin = two_mode_bound_margin([e1, e2], [k1, k2], z, &h, cutoff);
    let scale = 2.0 * z.norm() * table[size * size - 1] * 10.0;
    let x = (e1 * 1000 + k1 * 100 + e2 * 10 + k2) as f64;
    t.record(
        "two_mode_hamiltonian_bound",
        trial_k,
        trial_l,
        x,
        -margin,
        SCALAR_TOLERANCE * scale,
    );
}

/// Samples `k` in `1..=8`, `l` in `1..=5` and `x` in `[0, 1000]`, and checks
/// every scalar bound where it is stated, plus one random instance of the
/// two-mode operator bound per trial.
pub fn scalar_lemma_suite(trials: usize, seed: u64) -> Result<LemmaSuiteReport, CertifyError> {
    if trials == 0 {
        return Err(CertifyError::InvalidParameter("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally(
        CHECKS
            .iter()
            .map(|n| CheckSummary {
                name: (*n).to_string(),
                evaluations: 0,
                failures: 0,
                first_counterexample: None,
            })
            .collect(),
    );
    for _ in 0..trials {
        let k = rng.random_range(1..=8u32);
        let l = rng.random_range(1..=5u32);
        let lf = f64::from(l);
        // Half the draws near the kinks of g_l, half across the full range.
        let x = if rng.random_bool(0.5) {
            rng.random_range(0.0..3.0 * lf)
        } else {
            rng.random_range(0.0..=1000.0)
        };
        let x_neg = rng.random_range(-10.0..0.0);
        let x_big = rng.random_range(lf..=1000.0);
        scalar_checks(&mut tally, k, l, x, x_neg, x_big);
        operator_check(&mut tally, &mut rng, k, l);
    }
    let total_failures = tally.0.iter().map(|c| c.failures).sum();
    Ok(LemmaSuiteReport {
        trials,
        seed,
        checks: tally.0,
        total_failures,
    })
}
