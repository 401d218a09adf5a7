//! GKSL generators `L(x) = G x + x G^dagger + sum_j L_j x L_j^dagger` with
//! `G = -iH - 1/2 sum_j L_j^dagger L_j`, in symbolic and realized form.

mod catalog;
mod time_dependent;

use num_complex::Complex64;
use thiserror::Error;

use crate::ccr::{CcrError, OperatorPolynomial};
use crate::fock::{realize, FockBasis, FockError};
use crate::linalg::{CMatrix, SparseMatrix};

pub use catalog::{catalog, catalog_list, l_photon_jump, CatalogEntry, Model, ModelSpec};
pub use time_dependent::{
    Coefficient, RealizedTimeDependentGenerator, TimeDependentGenerator, TimeDependentPolynomial,
};

/// Relative tolerance for symbolic Hermiticity and trace-annihilation checks.
pub const SYMBOLIC_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("Hamiltonian is not symmetric")]
    NotHermitian,
    #[error("term has {found} modes, expected {expected}")]
    ModeMismatch { expected: usize, found: usize },
    #[error("G + G^dagger + sum L^dagger L does not vanish (largest coefficient {residual:.3e})")]
    TraceNotAnnihilated { residual: f64 },
    #[error("{0}")]
    InvalidParameter(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error(transparent)]
    Ccr(#[from] CcrError),
    #[error(transparent)]
    Fock(#[from] FockError),
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Symbolic GKSL generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GkslGenerator {
    modes: usize,
    hamiltonian: OperatorPolynomial,
    jumps: Vec<OperatorPolynomial>,
    g: OperatorPolynomial,
    degree: u32,
}

impl GkslGenerator {
    /// Validates a symmetric `H` and `tr[L(x)] = 0`, the latter as the
    /// polynomial identity `G + G^dagger + sum_j L_j^dagger L_j = 0`.
    pub fn build(
        hamiltonian: OperatorPolynomial,
        jumps: Vec<OperatorPolynomial>,
    ) -> Result<Self, GeneratorError> {
        let modes = hamiltonian.modes();
        for l in &jumps {
            if l.modes() != modes {
                return Err(GeneratorError::ModeMismatch {
                    expected: modes,
                    found: l.modes(),
                });
            }
        }
        if !hamiltonian.is_hermitian(SYMBOLIC_TOLERANCE) {
            return Err(GeneratorError::NotHermitian);
        }
        let jumps: Vec<OperatorPolynomial> = jumps.into_iter().filter(|l| !l.is_zero()).collect();
        let mut dissipative = OperatorPolynomial::zero(modes);
        for l in &jumps {
            dissipative = &dissipative + &(&l.adjoint() * l);
        }
        let g = &hamiltonian.scale(-I) - &(&dissipative * 0.5);
        let defect = &(&g + &g.adjoint()) + &dissipative;
        let scale = dissipative
            .max_abs_coefficient()
            .max(hamiltonian.max_abs_coefficient())
            .max(1.0);
        let residual = defect.max_abs_coefficient();
        if residual > SYMBOLIC_TOLERANCE * scale {
            return Err(GeneratorError::TraceNotAnnihilated { residual });
        }
        let degree = jumps
            .iter()
            .map(OperatorPolynomial::degree)
            .chain(std::iter::once(hamiltonian.degree()))
            .max()
            .unwrap_or(0);
        Ok(GkslGenerator {
            modes,
            hamiltonian,
            jumps,
            g,
            degree,
        })
    }

    /// Purely Hamiltonian generator `-i[H, .]`.
    pub fn hamiltonian_only(h: OperatorPolynomial) -> Result<Self, GeneratorError> {
        Self::build(h, Vec::new())
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn hamiltonian(&self) -> &OperatorPolynomial {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[OperatorPolynomial] {
        &self.jumps
    }

    pub fn g(&self) -> &OperatorPolynomial {
        &self.g
    }

    /// `max(deg H, deg L_j)`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Generator of the sum `L_self + L_other`.
    pub fn sum(&self, other: &GkslGenerator) -> Result<Self, GeneratorError> {
        if other.modes != self.modes {
            return Err(GeneratorError::ModeMismatch {
                expected: self.modes,
                found: other.modes,
            });
        }
        let mut jumps = self.jumps.clone();
        jumps.extend(other.jumps.iter().cloned());
        Self::build(&self.hamiltonian + &other.hamiltonian, jumps)
    }

    /// Lifts a generator onto `modes` modes starting at `offset`.
    pub fn embed(&self, modes: usize, offset: usize) -> Result<Self, GeneratorError> {
        let h = self.hamiltonian.embed(modes, offset)?;
        let jumps = self
            .jumps
            .iter()
            .map(|l| l.embed(modes, offset))
            .collect::<Result<Vec<_>, _>>()?;
        Self::build(h, jumps)
    }

    /// `L(x)` on a polynomial.
    pub fn apply_symbolic(&self, x: &OperatorPolynomial) -> OperatorPolynomial {
        let mut out = &(&self.g * x) + &(x * &self.g.adjoint());
        for l in &self.jumps {
            out = &out + &(&(l * x) * &l.adjoint());
        }
        out
    }

    /// Heisenberg-picture `L^dagger(X) = G^dagger X + X G + sum_j L_j^dagger X L_j`.
    pub fn adjoint_symbolic(&self, x: &OperatorPolynomial) -> OperatorPolynomial {
        let mut out = &(&self.g.adjoint() * x) + &(x * &self.g);
        for l in &self.jumps {
            out = &out + &(&(&l.adjoint() * x) * l);
        }
        out
    }

    pub fn realize(&self, basis: &FockBasis) -> Result<RealizedGenerator, GeneratorError> {
        RealizedGenerator::new(self, basis)
    }
}

/// Sparse matrices of `G` and `L_j` on a truncated basis.
///
/// `G` is the exact compression of the symbolic `G`, so the realized evolution
/// loses trace only through jumps that push population past the cutoff.
#[derive(Debug, Clone)]
pub struct RealizedGenerator {
    basis: FockBasis,
    degree: u32,
    g: SparseMatrix,
    g_dag: SparseMatrix,
    jumps: Vec<SparseMatrix>,
    jumps_dag: Vec<SparseMatrix>,
}

impl RealizedGenerator {
    pub fn new(generator: &GkslGenerator, basis: &FockBasis) -> Result<Self, GeneratorError> {
        if generator.modes() != basis.modes() {
            return Err(GeneratorError::ModeMismatch {
                expected: basis.modes(),
                found: generator.modes(),
            });
        }
        let basis = basis.clone().with_edge_band(generator.degree() as usize);
        let g = realize(generator.g(), &basis)?.to_sparse();
        let jumps = generator
            .jumps()
            .iter()
            .map(|l| realize(l, &basis).map(|m| m.to_sparse()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_parts(basis, generator.degree(), g, jumps))
    }

    pub(crate) fn from_parts(
        basis: FockBasis,
        degree: u32,
        g: SparseMatrix,
        jumps: Vec<SparseMatrix>,
    ) -> Self {
        let g_dag = g.adjoint();
        let jumps_dag = jumps.iter().map(SparseMatrix::adjoint).collect();
        RealizedGenerator {
            basis,
            degree,
            g,
            g_dag,
            jumps,
            jumps_dag,
        }
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn g(&self) -> &SparseMatrix {
        &self.g
    }

    pub fn jumps(&self) -> &[SparseMatrix] {
        &self.jumps
    }

    /// `out = L(x)`.
    pub fn apply_into(&self, x: &CMatrix, out: &mut CMatrix) {
        let one = Complex64::new(1.0, 0.0);
        out.fill(Complex64::new(0.0, 0.0));
        self.g.mul_dense_acc(one, x, out);
        self.g.dense_mul_adjoint_acc(one, x, out);
        for l in &self.jumps {
            let lx = l.mul_dense(x);
            l.dense_mul_adjoint_acc(one, &lx, out);
        }
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.nrows(), x.ncols());
        self.apply_into(x, &mut out);
        out
    }

    /// `L^dagger(X) = G^dagger X + X G + sum_j L_j^dagger X L_j` with truncated matrices.
    pub fn adjoint_apply(&self, x: &CMatrix) -> CMatrix {
        let one = Complex64::new(1.0, 0.0);
        let mut out = CMatrix::zeros(x.nrows(), x.ncols());
        self.g_dag.mul_dense_acc(one, x, &mut out);
        self.g_dag.dense_mul_adjoint_acc(one, x, &mut out);
        for ld in &self.jumps_dag {
            let xl = ld.dense_mul_adjoint(x);
            ld.mul_dense_acc(one, &xl, &mut out);
        }
        out
    }
}
