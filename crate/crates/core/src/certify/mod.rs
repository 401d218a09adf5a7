//! Numerical certificates: moment-growth bounds, the scalar inequalities
//! behind them, interpolation, perturbation bounds and energy-constrained
//! channel distances.

mod constants;
mod lemmas;
mod moment;
mod perturbation;

use thiserror::Error;

use crate::ccr::CcrError;
use crate::dynamics::DynamicsError;
use crate::fock::FockError;
use crate::generator::GeneratorError;
use crate::sobolev::SobolevError;

pub use constants::{
    delta_l, l_photon_mu, optimum_factor, paper_constants, perturbation_constants,
    perturbation_constants_two_photon, BoundForm, MomentBoundSpec, PerturbationConstants,
};
pub use lemmas::{
    f_power, g_l, scalar_lemma_suite, two_mode_bound_margin, CheckSummary, Counterexample,
    LemmaSuiteReport, OPERATOR_CHECK_CUTOFF, SCALAR_TOLERANCE,
};
pub use moment::{
    certify_moment_bound, certify_moment_bound_td, estimate_tight_constants,
    estimate_tight_constants_td, CertificateReport, TightConstants, TightTarget, Verdict,
    CERTIFICATE_TOLERANCE, CUTOFF_SENSITIVITY, HERMITICITY_TOLERANCE,
};
pub use perturbation::{
    ec_diamond_lower_bound, evolved_choi, perturbation_experiment_ldiss,
    perturbation_experiment_qou, random_density_matrix, random_states, stein_weiss_semigroup,
    EcProbe, EcReport, LdissExperiment, LdissReport, LdissRow, QouExperiment, QouReport, QouRow,
    QouTimeSummary, INITIAL_STATE_LEAKAGE, PERTURBATION_SLACK,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("cutoff {cutoff} is below the required {required}")]
    CutoffTooSmall { cutoff: usize, required: usize },
    #[error("L^dagger(W) is not Hermitian (relative defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("outside the stated parameter regime: {0}")]
    Regime(String),
    #[error("no closed-form constants for `{0}`; estimate tight constants instead")]
    NoClosedForm(String),
    #[error("no finite certificate at this cutoff: {0}")]
    NoFiniteCertificate(String),
    #[error("{0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Ccr(#[from] CcrError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Sobolev(#[from] SobolevError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}
