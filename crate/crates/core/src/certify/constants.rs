//! Closed-form moment-growth constants of the catalog models and the
//! constants of the l-photon perturbation bound.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CertifyError;
use crate::ccr::{single, OperatorPolynomial};
use crate::generator::ModelSpec;
use crate::sobolev::SobolevOrder;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum BoundForm {
    /// `tr[L(rho) W] <= omega tr[rho W]`.
    Plain { omega: f64 },
    /// `tr[L(rho) W] <= -c tr[rho W] + mu`.
    Drift { c: f64, mu: f64 },
}

/// A moment-growth inequality for the weight `W = prod_i (N_i + 1)^{k_i / 2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentBoundSpec {
    pub k: SobolevOrder,
    #[serde(flatten)]
    pub form: BoundForm,
    /// Where the constants come from, e.g. `"closed-form"` or `"tight"`.
    pub source: String,
}

impl MomentBoundSpec {
    pub fn plain(k: impl Into<SobolevOrder>, omega: f64, source: impl Into<String>) -> Self {
        MomentBoundSpec {
            k: k.into(),
            form: BoundForm::Plain { omega },
            source: source.into(),
        }
    }

    pub fn drift(k: impl Into<SobolevOrder>, c: f64, mu: f64, source: impl Into<String>) -> Self {
        MomentBoundSpec {
            k: k.into(),
            form: BoundForm::Drift { c, mu },
            source: source.into(),
        }
    }

    pub fn validate(&self, modes: usize) -> Result<(), CertifyError> {
        self.k.validate(modes)?;
        let ok = match self.form {
            BoundForm::Plain { omega } => omega.is_finite(),
            BoundForm::Drift { c, mu } => c.is_finite() && mu.is_finite() && c > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(CertifyError::InvalidParameter(format!(
                "constants must be finite with c > 0, got {:?}",
                self.form
            )))
        }
    }
}

/// `(nu - 1)^{nu - 1} / nu^nu`, so that `sup_{x >= 0} (-x^nu + C x^{nu - 1}) = C^nu` times it.
pub fn optimum_factor(nu: f64) -> f64 {
    (nu - 1.0).powf(nu - 1.0) / nu.powf(nu)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `Delta_l = (l + 1) l + 2 |alpha|^l k l^{k/2 - 1} sqrt(l!)`.
pub fn delta_l(l: u32, alpha: Complex64, k: f64) -> f64 {
    let lf = f64::from(l);
    (lf + 1.0) * lf
        + 2.0 * alpha.norm().powi(l as i32) * k * lf.powf(k / 2.0 - 1.0) * factorial(l).sqrt()
}

/// `mu_k^{(l)}` of `L[a^l - alpha^l] - i[H, .]` for a Hamiltonian with
/// largest coefficient `lambda`; `lambda = 0` is pure l-photon dissipation.
pub fn l_photon_mu(l: u32, alpha: Complex64, lambda: f64, k: f64) -> f64 {
    let lf = f64::from(l);
    let nu = lf + k / 2.0 - 1.0;
    let c = delta_l(l, alpha, k) + lambda * (2.0 * lf).powf(k / 2.0) * factorial(2 * l).sqrt();
    c.powf(nu) * optimum_factor(nu)
}

/// Closed-form constants for `model` at the scalar order `k`.
pub fn paper_constants(model: &ModelSpec, k: f64) -> Result<MomentBoundSpec, CertifyError> {
    model.validate()?;
    if !(k.is_finite() && k > 0.0) {
        return Err(CertifyError::Regime(format!("order k = {k} must be positive")));
    }
    const SOURCE: &str = "closed-form";
    match model {
        ModelSpec::PureLoss { kappa } => Ok(qou_constants(kappa.sqrt(), 0.0, k)),
        ModelSpec::Qou { lambda, mu } => {
            if *lambda < 0.0 || *mu < 0.0 {
                return Err(CertifyError::Regime("lambda, mu must be nonnegative".into()));
            }
            Ok(qou_constants(*lambda, *mu, k))
        }
        ModelSpec::LPhoton { l, alpha, kappa } => {
            if *l < 2 {
                return Err(CertifyError::Regime("l-photon constants need l >= 2".into()));
            }
            let lf = f64::from(*l);
            Ok(MomentBoundSpec::drift(
                k,
                kappa * lf / 2.0,
                kappa * lf / 2.0 * l_photon_mu(*l, *alpha, 0.0, k),
                SOURCE,
            ))
        }
        ModelSpec::LPhotonPlusHamiltonian {
            l,
            alpha,
            kappa,
            hamiltonian,
            epsilon,
        } => {
            if *l < 2 {
                return Err(CertifyError::Regime("l-photon constants need l >= 2".into()));
            }
            let lambda = epsilon / kappa * hamiltonian.hermitian_coefficient_bound()?;
            let lf = f64::from(*l);
            Ok(MomentBoundSpec::drift(
                k,
                kappa * lf / 2.0,
                kappa * lf / 2.0 * l_photon_mu(*l, *alpha, lambda, k),
                SOURCE,
            ))
        }
        ModelSpec::ZTheta {
            alpha,
            kappa,
            epsilon,
        } => {
            let nu = k / 2.0 + 1.0;
            let c = delta_l(2, *alpha, k) + 4.0 * k * epsilon / kappa;
            Ok(MomentBoundSpec::drift(
                k,
                *kappa,
                kappa * c.powf(nu) * optimum_factor(nu),
                SOURCE,
            ))
        }
        ModelSpec::XGate { alpha, kappa, .. } => Ok(MomentBoundSpec::drift(
            k,
            *kappa,
            kappa * l_photon_mu(2, *alpha, 0.0, k),
            SOURCE,
        )),
        ModelSpec::Cnot { .. } => Err(CertifyError::NoClosedForm(model.name().into())),
    }
}

fn qou_constants(lambda: f64, mu: f64, k: f64) -> MomentBoundSpec {
    let (l2, m2) = (lambda * lambda, mu * mu);
    if lambda <= mu {
        return MomentBoundSpec::plain(k, k / 2.0 * (2.0 * m2 + k), "closed-form");
    }
    let c = k / 4.0 * (l2 - m2);
    let nu = k / 2.0;
    let mu_k = if nu < 1.0 {
        k / 2.0 * (l2 + m2 + k)
    } else {
        // The optimum carries the weight of the half drift term.
        c * (2.0 * (l2 + m2 + k) / (l2 - m2)).powf(nu) * optimum_factor(nu)
    };
    MomentBoundSpec::drift(k, c, mu_k, "closed-form")
}

/// Constants of the l-photon perturbation bound
/// `|tr[L D L^dagger]| <= eps c (1 - e^{-l! t}) max{gamma, ||rho||_{W^{k,1}}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConstants {
    pub c: f64,
    pub gamma: f64,
    /// Sobolev order of the initial-state norm.
    pub k: f64,
    /// Rate in `1 - e^{-rate t}`.
    pub rate: f64,
}

impl PerturbationConstants {
    pub fn rhs(&self, epsilon: f64, t: f64, initial_norm: f64) -> f64 {
        epsilon * self.c * (1.0 - (-self.rate * t).exp()) * self.gamma.max(initial_norm)
    }
}

/// General constants for `L[a^l - alpha^l]` perturbed by `eps H[H]`.
pub fn perturbation_constants(
    l: u32,
    alpha: Complex64,
    hamiltonian: &OperatorPolynomial,
    epsilon: f64,
) -> Result<PerturbationConstants, CertifyError> {
    if hamiltonian.modes() != 1 {
        return Err(CertifyError::InvalidParameter("H must be single-mode".into()));
    }
    let d = hamiltonian.degree();
    let lambda = hamiltonian.hermitian_coefficient_bound()?;
    let a = alpha.norm();
    let lf = f64::from(l);
    let fact_l = factorial(l);
    let c = std::f64::consts::PI.powi(2) / 3.0
        * lambda
        * f64::from(d * d)
        * factorial(d).sqrt()
        * (1.0 + a.powi(l as i32) * (lf + 1.0) * fact_l.sqrt() + a.powi(2 * l as i32))
        / fact_l;
    let k = 2.0 * f64::from(l + d + 2);
    Ok(PerturbationConstants {
        c,
        gamma: l_photon_mu(l, alpha, epsilon * lambda, k),
        k,
        rate: fact_l,
    })
}

/// The specialized constants for `l = 2`, `H = a + a^dagger`, if they apply.
pub fn perturbation_constants_two_photon(
    l: u32,
    alpha: Complex64,
    hamiltonian: &OperatorPolynomial,
    epsilon: f64,
) -> Option<PerturbationConstants> {
    if l != 2 || *hamiltonian != &single::a() + &single::ad() {
        return None;
    }
    let a2 = alpha.norm_sqr();
    let base = 6.0 + 2f64.sqrt() * 64.0 * 5.0 * a2 + epsilon * 4f64.powi(5) * 24f64.sqrt();
    Some(PerturbationConstants {
        c: 2.0 * (1.0 + 6.0 * a2 + a2 * a2),
        gamma: base.powi(6) / 25.0,
        k: 10.0,
        rate: 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn two_photon_vacuum_constants() {
        let s = paper_constants(
            &ModelSpec::LPhoton {
                l: 2,
                alpha: c(0.0),
                kappa: 1.0,
            },
            2.0,
        )
        .unwrap();
        // (l/2) mu with Delta_2 = 6, nu = 2: 36 / 4
        assert_eq!(s.form, BoundForm::Drift { c: 1.0, mu: 9.0 });
    }

    #[test]
    fn qou_cases() {
        let s = paper_constants(&ModelSpec::Qou { lambda: 2f64.sqrt(), mu: 1.0 }, 2.0).unwrap();
        match s.form {
            BoundForm::Drift { c, mu } => {
                assert!((c - 0.5).abs() < 1e-15);
                // c C with C = 2(2 + 1 + 2) / 1 at nu = 1
                assert!((mu - 5.0).abs() < 1e-12);
            }
            _ => panic!(),
        }
        let s = paper_constants(&ModelSpec::Qou { lambda: 1.0, mu: 2.0 }, 2.0).unwrap();
        assert_eq!(s.form, BoundForm::Plain { omega: 10.0 });
    }

    #[test]
    fn corollary_base_matches_general_base() {
        // Same bracket, different prefactors.
        let h = &single::a() + &single::ad();
        let alpha = c(1.5);
        let g = perturbation_constants(2, alpha, &h, 0.1).unwrap();
        let s = perturbation_constants_two_photon(2, alpha, &h, 0.1).unwrap();
        assert_eq!(g.k, s.k);
        let ratio = g.gamma / s.gamma;
        assert!((ratio - 25.0 * optimum_factor(6.0)).abs() < 1e-9 * ratio);
    }

    #[test]
    fn cnot_has_no_closed_form() {
        let m = ModelSpec::Cnot {
            alpha: c(1.0),
            kappa: 1.0,
            epsilon: 0.1,
            period: 1.0,
        };
        assert!(matches!(
            paper_constants(&m, 2.0),
            Err(CertifyError::NoClosedForm(_))
        ));
    }
}
