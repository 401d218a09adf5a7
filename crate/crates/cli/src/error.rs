use bosonic_qms::certify::CertifyError;
use bosonic_qms::dynamics::DynamicsError;
use bosonic_qms::fock::FockError;
use bosonic_qms::generator::GeneratorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Validation(String),
    /// An asserted inequality failed; artifacts were still written.
    #[error("inequality violated: {0}")]
    Violation(String),
    /// Leakage, step underflow, non-finite state, I/O.
    #[error("runtime breach: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => 2,
            CliError::Violation(_) => 1,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        match e {
            FockError::LeakageTooLarge { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<GeneratorError> for CliError {
    fn from(e: GeneratorError) -> Self {
        match e {
            GeneratorError::Fock(f) => f.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::LeakageExceeded { .. }
            | DynamicsError::StepUnderflow { .. }
            | DynamicsError::NonFinite { .. } => CliError::Runtime(e.to_string()),
            DynamicsError::Generator(g) => g.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<CertifyError> for CliError {
    fn from(e: CertifyError) -> Self {
        match e {
            CertifyError::NoFiniteCertificate(_) => CliError::Violation(e.to_string()),
            CertifyError::NotHermitian { .. } => CliError::Runtime(e.to_string()),
            CertifyError::Fock(f) => f.into(),
            CertifyError::Generator(g) => g.into(),
            CertifyError::Dynamics(d) => d.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
