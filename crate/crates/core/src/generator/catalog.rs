//! Named bosonic models. Rates enter the jumps as `sqrt(rate)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::time_dependent::{Coefficient, TimeDependentGenerator, TimeDependentPolynomial};
use super::{GeneratorError, GkslGenerator};
use crate::ccr::{single, OperatorPolynomial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `kappa L[a]`.
    PureLoss { kappa: f64 },
    /// `lambda^2 L[a] + mu^2 L[a^dagger]`.
    Qou { lambda: f64, mu: f64 },
    /// `kappa L[a^l - alpha^l]`.
    LPhoton { l: u32, alpha: Complex64, kappa: f64 },
    /// `kappa L[a^l - alpha^l] - i epsilon [H, .]` with `deg H <= 2(l - 1)`.
    LPhotonPlusHamiltonian {
        l: u32,
        alpha: Complex64,
        kappa: f64,
        hamiltonian: OperatorPolynomial,
        epsilon: f64,
    },
    /// `kappa L[a^2 - alpha^2] - i epsilon [a + a^dagger, .]`.
    ZTheta {
        alpha: Complex64,
        kappa: f64,
        epsilon: f64,
    },
    /// `kappa L[a^2 - e^{2 pi i s / T} alpha^2]`.
    XGate {
        alpha: Complex64,
        kappa: f64,
        period: f64,
    },
    /// `kappa L[a^2 - alpha^2] + epsilon L[b^2 - alpha^2 + z(s)(a - alpha)]`,
    /// `z(s) = -(alpha / 2)(1 - e^{2 pi i s / T})`.
    Cnot {
        alpha: Complex64,
        kappa: f64,
        epsilon: f64,
        period: f64,
    },
}

#[derive(Debug, Clone)]
pub enum Model {
    Autonomous(GkslGenerator),
    TimeDependent(TimeDependentGenerator),
}

impl Model {
    pub fn modes(&self) -> usize {
        match self {
            Model::Autonomous(g) => g.modes(),
            Model::TimeDependent(g) => g.modes(),
        }
    }

    pub fn degree(&self) -> u32 {
        match self {
            Model::Autonomous(g) => g.degree(),
            Model::TimeDependent(g) => g.degree(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub modes: usize,
    pub time_dependent: bool,
    pub params: &'static [&'static str],
    pub description: &'static str,
    /// Parameter ranges and caveats of the closed-form bounds.
    pub regime: &'static str,
}

pub fn catalog_list() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "pure_loss",
            modes: 1,
            time_dependent: false,
            params: &["kappa"],
            description: "photon loss kappa L[a]",
            regime: "kappa > 0; drift bound for every k > 0",
        },
        CatalogEntry {
            name: "qou",
            modes: 1,
            time_dependent: false,
            params: &["lambda", "mu"],
            description: "quantum Ornstein-Uhlenbeck lambda^2 L[a] + mu^2 L[a^dagger]",
            regime: "lambda, mu >= 0; drift bound when lambda > mu, growth bound otherwise",
        },
        CatalogEntry {
            name: "l_photon",
            modes: 1,
            time_dependent: false,
            params: &["l", "alpha", "kappa"],
            description: "l-photon dissipation kappa L[a^l - alpha^l]",
            regime: "l >= 1, kappa > 0; closed-form constants need l >= 2",
        },
        CatalogEntry {
            name: "l_photon_plus_hamiltonian",
            modes: 1,
            time_dependent: false,
            params: &["l", "alpha", "kappa", "hamiltonian", "epsilon"],
            description: "l-photon dissipation plus epsilon H with deg H <= 2(l - 1)",
            regime: "l >= 1, epsilon >= 0, deg H <= 2(l - 1); closed-form constants need l >= 2",
        },
        CatalogEntry {
            name: "z_theta",
            modes: 1,
            time_dependent: false,
            params: &["alpha", "kappa", "epsilon"],
            description: "two-photon dissipation plus epsilon (a + a^dagger)",
            regime: "kappa > 0, epsilon >= 0",
        },
        CatalogEntry {
            name: "x_gate",
            modes: 1,
            time_dependent: true,
            params: &["alpha", "kappa", "period"],
            description: "two-photon dissipation with rotating target e^{2 pi i s / T} alpha^2",
            regime: "kappa > 0, period > 0; time-dependent, certified at frozen times",
        },
        CatalogEntry {
            name: "cnot",
            modes: 2,
            time_dependent: true,
            params: &["alpha", "kappa", "epsilon", "period"],
            description: "two-mode CNOT gate generator",
            regime: "kappa > 0, epsilon >= 0, period > 0; no closed-form mu, certify with tight constants",
        },
    ]
}

fn check(cond: bool, msg: &str) -> Result<(), GeneratorError> {
    if cond {
        Ok(())
    } else {
        Err(GeneratorError::InvalidParameter(msg.to_string()))
    }
}

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `a^l - alpha^l` on one mode.
pub fn l_photon_jump(l: u32, alpha: Complex64) -> OperatorPolynomial {
    &single::a().pow(l) - &single::c(alpha.powu(l))
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::PureLoss { .. } => "pure_loss",
            ModelSpec::Qou { .. } => "qou",
            ModelSpec::LPhoton { .. } => "l_photon",
            ModelSpec::LPhotonPlusHamiltonian { .. } => "l_photon_plus_hamiltonian",
            ModelSpec::ZTheta { .. } => "z_theta",
            ModelSpec::XGate { .. } => "x_gate",
            ModelSpec::Cnot { .. } => "cnot",
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            ModelSpec::Cnot { .. } => 2,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        match self {
            ModelSpec::PureLoss { kappa } => check(kappa.is_finite() && *kappa > 0.0, "kappa must be positive"),
            ModelSpec::Qou { lambda, mu } => check(
                lambda.is_finite() && mu.is_finite() && *lambda >= 0.0 && *mu >= 0.0,
                "lambda and mu must be finite and nonnegative",
            ),
            ModelSpec::LPhoton { l, alpha, kappa } => {
                check(*l >= 1, "l must be at least 1")?;
                check(finite(*alpha), "alpha must be finite")?;
                check(kappa.is_finite() && *kappa > 0.0, "kappa must be positive")
            }
            ModelSpec::LPhotonPlusHamiltonian {
                l,
                alpha,
                kappa,
                hamiltonian,
                epsilon,
            } => {
                check(*l >= 1, "l must be at least 1")?;
                check(finite(*alpha), "alpha must be finite")?;
                check(kappa.is_finite() && *kappa > 0.0, "kappa must be positive")?;
                check(epsilon.is_finite() && *epsilon >= 0.0, "epsilon must be nonnegative")?;
                check(hamiltonian.modes() == 1, "hamiltonian must act on one mode")?;
                check(
                    hamiltonian.degree() <= 2 * (l - 1),
                    "hamiltonian degree must not exceed 2(l - 1)",
                )
            }
            ModelSpec::ZTheta {
                alpha,
                kappa,
                epsilon,
            } => {
                check(finite(*alpha), "alpha must be finite")?;
                check(kappa.is_finite() && *kappa > 0.0, "kappa must be positive")?;
                check(epsilon.is_finite() && *epsilon >= 0.0, "epsilon must be nonnegative")
            }
            ModelSpec::XGate {
                alpha,
                kappa,
                period,
            } => {
                check(finite(*alpha), "alpha must be finite")?;
                check(kappa.is_finite() && *kappa > 0.0, "kappa must be positive")?;
                check(period.is_finite() && *period > 0.0, "period must be positive")
            }
            ModelSpec::Cnot {
                alpha,
                kappa,
                epsilon,
                period,
            } => {
                check(finite(*alpha), "alpha must be finite")?;
                check(kappa.is_finite() && *kappa > 0.0, "kappa must be positive")?;
                check(epsilon.is_finite() && *epsilon >= 0.0, "epsilon must be nonnegative")?;
                check(period.is_finite() && *period > 0.0, "period must be positive")
            }
        }
    }
}

/// Builds the generator of a catalog model.
pub fn catalog(spec: &ModelSpec) -> Result<Model, GeneratorError> {
    spec.validate()?;
    let zero = OperatorPolynomial::zero(1);
    Ok(match spec {
        ModelSpec::PureLoss { kappa } => {
            Model::Autonomous(GkslGenerator::build(zero, vec![&single::a() * kappa.sqrt()])?)
        }
        ModelSpec::Qou { lambda, mu } => Model::Autonomous(GkslGenerator::build(
            zero,
            vec![&single::a() * *lambda, &single::ad() * *mu],
        )?),
        ModelSpec::LPhoton { l, alpha, kappa } => Model::Autonomous(GkslGenerator::build(
            zero,
            vec![&l_photon_jump(*l, *alpha) * kappa.sqrt()],
        )?),
        ModelSpec::LPhotonPlusHamiltonian {
            l,
            alpha,
            kappa,
            hamiltonian,
            epsilon,
        } => Model::Autonomous(GkslGenerator::build(
            hamiltonian * *epsilon,
            vec![&l_photon_jump(*l, *alpha) * kappa.sqrt()],
        )?),
        ModelSpec::ZTheta {
            alpha,
            kappa,
            epsilon,
        } => Model::Autonomous(GkslGenerator::build(
            &(&single::a() + &single::ad()) * *epsilon,
            vec![&l_photon_jump(2, *alpha) * kappa.sqrt()],
        )?),
        ModelSpec::XGate {
            alpha,
            kappa,
            period,
        } => {
            let omega = 2.0 * std::f64::consts::PI / period;
            let s = kappa.sqrt();
            let jump = TimeDependentPolynomial {
                terms: vec![
                    (Coefficient::constant(re(s)), single::a().pow(2)),
                    (
                        Coefficient::Phase {
                            amplitude: -alpha * alpha * s,
                            frequency: omega,
                        },
                        single::id(),
                    ),
                ],
            };
            Model::TimeDependent(TimeDependentGenerator::new(
                1,
                TimeDependentPolynomial { terms: vec![] },
                vec![jump],
                probe_times(*period),
            )?)
        }
        ModelSpec::Cnot {
            alpha,
            kappa,
            epsilon,
            period,
        } => {
            let omega = 2.0 * std::f64::consts::PI / period;
            let a = OperatorPolynomial::annihilation(2, 0)?;
            let b = OperatorPolynomial::annihilation(2, 1)?;
            let one = OperatorPolynomial::identity(2);
            let first = TimeDependentPolynomial::constant(
                &(&a.pow(2) - &one.scale(alpha * alpha)) * kappa.sqrt(),
            );
            let e = epsilon.sqrt();
            // z(s) (a - alpha) with z(s) = -alpha/2 + (alpha/2) e^{i omega s}
            let z = Coefficient::AffinePhase {
                offset: -alpha * 0.5 * e,
                amplitude: alpha * 0.5 * e,
                frequency: omega,
            };
            let second = TimeDependentPolynomial {
                terms: vec![
                    (
                        Coefficient::constant(re(e)),
                        &b.pow(2) - &one.scale(alpha * alpha),
                    ),
                    (z, &a - &one.scale(*alpha)),
                ],
            };
            Model::TimeDependent(TimeDependentGenerator::new(
                2,
                TimeDependentPolynomial { terms: vec![] },
                vec![first, second],
                probe_times(*period),
            )?)
        }
    })
}

fn probe_times(period: f64) -> Vec<f64> {
    (0..8).map(|i| period * i as f64 / 8.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names_round_trip_through_json() {
        let spec = ModelSpec::LPhoton {
            l: 2,
            alpha: Complex64::new(2.0, 0.0),
            kappa: 1.0,
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"model\":\"l_photon\""));
        let back: ModelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        for e in catalog_list() {
            assert!(!e.params.is_empty());
            assert!(catalog_list().iter().filter(|f| f.name == e.name).count() == 1);
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(catalog(&ModelSpec::PureLoss { kappa: -1.0 }).is_err());
        assert!(catalog(&ModelSpec::Qou {
            lambda: f64::NAN,
            mu: 0.0
        })
        .is_err());
        let h = single::a().pow(3);
        let h = &h + &h.adjoint();
        assert!(catalog(&ModelSpec::LPhotonPlusHamiltonian {
            l: 2,
            alpha: Complex64::new(1.0, 0.0),
            kappa: 1.0,
            hamiltonian: h,
            epsilon: 0.1
        })
        .is_err());
    }

    #[test]
    fn cnot_at_time_zero_decouples() {
        let m = catalog(&ModelSpec::Cnot {
            alpha: Complex64::new(1.0, 0.0),
            kappa: 1.0,
            epsilon: 1.0,
            period: 2.0,
        })
        .unwrap();
        let Model::TimeDependent(g) = m else {
            panic!("expected time dependence")
        };
        let g0 = g.at(0.0).unwrap();
        assert_eq!(g0.jumps().len(), 2);
        // z(0) = 0, so the second jump is b^2 - alpha^2.
        let b = OperatorPolynomial::annihilation(2, 1).unwrap();
        let want = &b.pow(2) - &OperatorPolynomial::identity(2);
        assert!((&g0.jumps()[1] - &want).max_abs_coefficient() < 1e-15);
        assert_eq!(g.degree(), 2);
    }
}
