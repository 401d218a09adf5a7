//! Truncated Fock-space realizations of CCR polynomials.
//!
//! Each monomial is realized entrywise, so `realize(p)` is the exact
//! compression `P p P` onto the span of `|n>` with `n_i < M_i`. Edge effects
//! only enter when truncated matrices are multiplied.

use std::fmt::Write as _;

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::ccr::{ModeMonomial, OperatorPolynomial};
use crate::linalg::{self, CMatrix, SparseMatrix};
use crate::sobolev::SobolevOrder;

/// Population below this fraction of the full matrix is stored sparse.
pub const SPARSE_DENSITY_THRESHOLD: f64 = 0.25;
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const TRACE_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_PSD_TOLERANCE: f64 = 1e-12;
/// Smallest admissible Gram eigenvalue when orthonormalizing coherent states.
pub const GRAM_CONDITION_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("cutoffs must be non-empty and at least 1, got {0:?}")]
    InvalidCutoffs(Vec<usize>),
    #[error("polynomial has {poly} modes but the basis has {basis}")]
    ModeMismatch { poly: usize, basis: usize },
    #[error("polynomial degree {degree} is not below the smallest cutoff {cutoff}")]
    DegreeTooLarge { degree: u32, cutoff: usize },
    #[error("matrix is {rows}x{cols}, basis dimension is {dim}")]
    ShapeMismatch { rows: usize, cols: usize, dim: usize },
    #[error("matrix is not Hermitian (relative defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("trace {trace:.12} is not 1")]
    TraceNotUnit { trace: f64 },
    #[error("minimum eigenvalue {min_eigenvalue:.3e} below -{tolerance:.1e}")]
    NotPositive { min_eigenvalue: f64, tolerance: f64 },
    #[error("coherent amplitude leaks {leakage:.3e} beyond the cutoff (tolerance {tolerance:.1e})")]
    LeakageTooLarge { leakage: f64, tolerance: f64 },
    #[error("coherent states are nearly dependent: smallest Gram eigenvalue {min_eigenvalue:.3e}")]
    IllConditioned { min_eigenvalue: f64 },
    #[error("{0}")]
    InvalidParameter(String),
}

/// Product Fock basis `|n_1, ..., n_m>` with `n_i < cutoffs[i]`, mode 0 most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FockBasis {
    cutoffs: Vec<usize>,
    edge_band: usize,
}

impl FockBasis {
    pub fn new(cutoffs: Vec<usize>) -> Result<Self, FockError> {
        if cutoffs.is_empty() || cutoffs.contains(&0) {
            return Err(FockError::InvalidCutoffs(cutoffs));
        }
        Ok(FockBasis {
            cutoffs,
            edge_band: 0,
        })
    }

    pub fn single(cutoff: usize) -> Result<Self, FockError> {
        Self::new(vec![cutoff])
    }

    /// Number of outermost levels per mode treated as unreliable.
    pub fn with_edge_band(mut self, band: usize) -> Self {
        self.edge_band = band;
        self
    }

    pub fn edge_band(&self) -> usize {
        self.edge_band
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn dim(&self) -> usize {
        self.cutoffs.iter().product()
    }

    pub fn min_cutoff(&self) -> usize {
        *self.cutoffs.iter().min().unwrap()
    }

    pub fn index(&self, n: &[usize]) -> usize {
        debug_assert_eq!(n.len(), self.modes());
        n.iter()
            .zip(&self.cutoffs)
            .fold(0, |acc, (&ni, &m)| acc * m + ni)
    }

    pub fn occupation(&self, mut idx: usize) -> Vec<usize> {
        let mut n = vec![0; self.modes()];
        for (slot, &m) in n.iter_mut().zip(&self.cutoffs).rev() {
            *slot = idx % m;
            idx /= m;
        }
        n
    }

    /// True when every mode sits at least `band` levels below its cutoff.
    pub fn is_interior(&self, idx: usize, band: usize) -> bool {
        self.occupation(idx)
            .iter()
            .zip(&self.cutoffs)
            .all(|(&n, &m)| n + band < m)
    }

    pub fn interior_indices(&self, band: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.is_interior(i, band))
            .collect()
    }

    /// Indices lying in the edge band of some mode.
    pub fn edge_indices(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| !self.is_interior(i, self.edge_band))
            .collect()
    }

    pub fn tensor(&self, other: &FockBasis) -> FockBasis {
        let mut cutoffs = self.cutoffs.clone();
        cutoffs.extend_from_slice(&other.cutoffs);
        FockBasis {
            cutoffs,
            edge_band: self.edge_band.max(other.edge_band),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(CMatrix),
    Sparse(SparseMatrix),
}

/// Matrix on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    basis: FockBasis,
    storage: Storage,
}

impl TruncatedOperator {
    fn check_shape(basis: &FockBasis, rows: usize, cols: usize) -> Result<(), FockError> {
        let dim = basis.dim();
        if rows != dim || cols != dim {
            return Err(FockError::ShapeMismatch { rows, cols, dim });
        }
        Ok(())
    }

    pub fn dense(basis: FockBasis, m: CMatrix) -> Result<Self, FockError> {
        Self::check_shape(&basis, m.nrows(), m.ncols())?;
        Ok(TruncatedOperator {
            basis,
            storage: Storage::Dense(m),
        })
    }

    pub fn sparse(basis: FockBasis, m: SparseMatrix) -> Result<Self, FockError> {
        Self::check_shape(&basis, m.nrows(), m.ncols())?;
        Ok(TruncatedOperator {
            basis,
            storage: Storage::Sparse(m),
        })
    }

    /// Picks sparse storage when the population is below [`SPARSE_DENSITY_THRESHOLD`].
    pub fn from_sparse_auto(basis: FockBasis, m: SparseMatrix) -> Result<Self, FockError> {
        if m.density() < SPARSE_DENSITY_THRESHOLD {
            Self::sparse(basis, m)
        } else {
            Self::dense(basis, m.to_dense())
        }
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn to_dense(&self) -> CMatrix {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(s) => s.to_dense(),
        }
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        match &self.storage {
            Storage::Dense(m) => SparseMatrix::from_dense(m),
            Storage::Sparse(s) => s.clone(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        match &self.storage {
            Storage::Dense(m) => m[(i, j)],
            Storage::Sparse(s) => s.get(i, j),
        }
    }

    pub fn adjoint(&self) -> Self {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m.adjoint()),
            Storage::Sparse(s) => Storage::Sparse(s.adjoint()),
        };
        TruncatedOperator {
            basis: self.basis.clone(),
            storage,
        }
    }

    /// Matrix product of the truncations; differs from `realize(p * q)` near the edge.
    pub fn matmul(&self, rhs: &TruncatedOperator) -> Result<Self, FockError> {
        if self.basis.cutoffs != rhs.basis.cutoffs {
            return Err(FockError::ModeMismatch {
                poly: rhs.basis.modes(),
                basis: self.basis.modes(),
            });
        }
        let storage = match (&self.storage, &rhs.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => Storage::Sparse(a.matmul(b)),
            (Storage::Sparse(a), Storage::Dense(b)) => Storage::Dense(a.mul_dense(b)),
            (a, b) => {
                let a = match a {
                    Storage::Dense(m) => m.clone(),
                    Storage::Sparse(s) => s.to_dense(),
                };
                let b = match b {
                    Storage::Dense(m) => m.clone(),
                    Storage::Sparse(s) => s.to_dense(),
                };
                Storage::Dense(a * b)
            }
        };
        Ok(TruncatedOperator {
            basis: self.basis.clone(),
            storage,
        })
    }

    /// Tensor product; the result lives on the concatenated basis.
    pub fn kron(&self, rhs: &TruncatedOperator) -> Self {
        let basis = self.basis.tensor(&rhs.basis);
        let s = self.to_sparse().kron(&rhs.to_sparse());
        TruncatedOperator::from_sparse_auto(basis, s).expect("kron shape")
    }

    /// COO text: a `# cutoffs ...` header, then `row col re im` per nonzero.
    pub fn export_coo(&self) -> String {
        let mut out = String::from("# cutoffs");
        for m in self.basis.cutoffs() {
            let _ = write!(out, " {m}");
        }
        out.push('\n');
        for (i, j, v) in self.to_sparse().triplets() {
            let _ = writeln!(out, "{i} {j} {:.16e} {:.16e}", v.re, v.im);
        }
        out
    }
}

/// `sqrt(n (n-1) ... (n-k+1))`.
fn sqrt_falling(n: usize, k: u32) -> f64 {
    (0..k as usize).map(|r| ((n - r) as f64).sqrt()).product()
}

/// Nonzero entries `(row, col, value)` of a single-mode monomial on `M` levels.
fn mode_entries(m: ModeMonomial, cutoff: usize) -> Vec<(usize, usize, f64)> {
    let (i, j, k) = (m.creation, m.number, m.annihilation);
    let mut out = Vec::new();
    for n in (k as usize)..cutoff {
        let mid = n - k as usize;
        let target = mid + i as usize;
        if target >= cutoff {
            continue;
        }
        // a^k |n> = sqrt(n!/(n-k)!) |n-k>, N^j scales by (n-k)^j, then (a^dagger)^i.
        let v = sqrt_falling(n, k) * (mid as f64).powi(j as i32) * sqrt_falling(target, i);
        if v != 0.0 {
            out.push((target, n, v));
        }
    }
    out
}

/// Exact compression of `p` onto the truncated basis.
pub fn realize(p: &OperatorPolynomial, basis: &FockBasis) -> Result<TruncatedOperator, FockError> {
    if p.modes() != basis.modes() {
        return Err(FockError::ModeMismatch {
            poly: p.modes(),
            basis: basis.modes(),
        });
    }
    let degree = p.degree();
    if degree as usize >= basis.min_cutoff() {
        return Err(FockError::DegreeTooLarge {
            degree,
            cutoff: basis.min_cutoff(),
        });
    }
    let mut triplets = Vec::new();
    for (factors, coeff) in p.terms() {
        let per_mode: Vec<Vec<(usize, usize, f64)>> = factors
            .iter()
            .zip(basis.cutoffs())
            .map(|(m, &cut)| mode_entries(*m, cut))
            .collect();
        let mut partial: Vec<(usize, usize, Complex64)> = vec![(0, 0, coeff)];
        for (entries, &cut) in per_mode.iter().zip(basis.cutoffs()) {
            let mut next = Vec::with_capacity(partial.len() * entries.len());
            for &(r, c, v) in &partial {
                for &(er, ec, ev) in entries {
                    next.push((r * cut + er, c * cut + ec, v * ev));
                }
            }
            partial = next;
        }
        triplets.extend(partial);
    }
    let n = basis.dim();
    TruncatedOperator::from_sparse_auto(basis.clone(), SparseMatrix::from_triplets(n, n, triplets))
}

/// Density matrix on a truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    basis: FockBasis,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(basis: FockBasis, matrix: CMatrix) -> Result<Self, FockError> {
        Self::with_tolerance(basis, matrix, DEFAULT_PSD_TOLERANCE)
    }

    /// Validates Hermiticity, unit trace and `min eig >= -psd_tolerance`.
    pub fn with_tolerance(
        basis: FockBasis,
        matrix: CMatrix,
        psd_tolerance: f64,
    ) -> Result<Self, FockError> {
        TruncatedOperator::check_shape(&basis, matrix.nrows(), matrix.ncols())?;
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOLERANCE {
            return Err(FockError::NotHermitian { defect });
        }
        let tr = linalg::trace(&matrix);
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOLERANCE {
            return Err(FockError::TraceNotUnit { trace: tr.re });
        }
        let min_eigenvalue = linalg::min_eigenvalue(&matrix);
        if min_eigenvalue < -psd_tolerance {
            return Err(FockError::NotPositive {
                min_eigenvalue,
                tolerance: psd_tolerance,
            });
        }
        Ok(DensityMatrix { basis, matrix })
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(basis: FockBasis, psi: &DVector<Complex64>) -> Result<Self, FockError> {
        let norm2 = psi.norm_squared();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(FockError::InvalidParameter("zero or non-finite state vector".into()));
        }
        let m = psi * psi.adjoint() / Complex64::new(norm2, 0.0);
        Self::new(basis, linalg::hermitian_part(&m))
    }

    pub fn fock(basis: FockBasis, n: &[usize]) -> Result<Self, FockError> {
        if n.len() != basis.modes() || n.iter().zip(basis.cutoffs()).any(|(a, b)| a >= b) {
            return Err(FockError::InvalidParameter(format!(
                "occupation {n:?} outside cutoffs {:?}",
                basis.cutoffs()
            )));
        }
        let mut psi = DVector::zeros(basis.dim());
        psi[basis.index(n)] = Complex64::new(1.0, 0.0);
        Self::pure(basis, &psi)
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            basis: self.basis.tensor(&other.basis),
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }
}

/// Truncation diagnostics of a coherent state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentInfo {
    /// Poisson mass at or beyond the cutoff.
    pub leakage: f64,
    /// Bound on `||a psi - alpha psi||` for the renormalized truncated vector.
    pub residual_bound: f64,
}

/// Truncated coherent amplitudes and the Poisson mass lost beyond `cutoff`.
pub fn coherent_amplitudes(alpha: Complex64, cutoff: usize) -> (DVector<Complex64>, f64) {
    let mut c = DVector::zeros(cutoff);
    let mut cn = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..cutoff {
        c[n] = cn;
        cn = cn * alpha / ((n + 1) as f64).sqrt();
    }
    // Tail summed directly to avoid cancellation in 1 - sum.
    let mut tail = 0.0;
    let mut n = cutoff;
    let mean = alpha.norm_sqr();
    loop {
        let p = cn.norm_sqr();
        tail += p;
        cn = cn * alpha / ((n + 1) as f64).sqrt();
        n += 1;
        let past_peak = n as f64 > mean + 1.0;
        if (past_peak && p <= 1e-17 * tail) || n > cutoff + 100_000 {
            break;
        }
    }
    (c, tail)
}

/// Renormalized truncated coherent state `|alpha>` on a single mode.
pub fn coherent_state(
    alpha: Complex64,
    basis: &FockBasis,
    tolerance: f64,
) -> Result<(DensityMatrix, CoherentInfo), FockError> {
    product_coherent_state(&[alpha], basis, tolerance)
}

/// `|alpha_1> (x) ... (x) |alpha_m>`, each mode truncated and renormalized.
pub fn product_coherent_state(
    alphas: &[Complex64],
    basis: &FockBasis,
    tolerance: f64,
) -> Result<(DensityMatrix, CoherentInfo), FockError> {
    let psi = product_coherent_vector(alphas, basis, tolerance)?;
    let (leakage, residual_bound) = alphas
        .iter()
        .zip(basis.cutoffs())
        .map(|(&a, &m)| {
            let (_, leak) = coherent_amplitudes(a, m);
            (leak, (m as f64 * leak / (1.0 - leak)).sqrt())
        })
        .fold((0.0, 0.0), |(l, r), (a, b)| (l + a, f64::max(r, b)));
    let rho = DensityMatrix::pure(basis.clone(), &psi)?;
    Ok((
        rho,
        CoherentInfo {
            leakage,
            residual_bound,
        },
    ))
}

/// Normalized product coherent vector.
pub fn product_coherent_vector(
    alphas: &[Complex64],
    basis: &FockBasis,
    tolerance: f64,
) -> Result<DVector<Complex64>, FockError> {
    if alphas.len() != basis.modes() {
        return Err(FockError::ModeMismatch {
            poly: alphas.len(),
            basis: basis.modes(),
        });
    }
    let mut psi = DVector::from_element(1, Complex64::new(1.0, 0.0));
    for (&alpha, &m) in alphas.iter().zip(basis.cutoffs()) {
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(FockError::InvalidParameter("non-finite amplitude".into()));
        }
        let (c, leakage) = coherent_amplitudes(alpha, m);
        if leakage > tolerance {
            return Err(FockError::LeakageTooLarge { leakage, tolerance });
        }
        let c = &c / Complex64::new(c.norm(), 0.0);
        psi = psi.kronecker(&c);
    }
    Ok(psi)
}

/// Orthonormal basis of the span of `|alpha e^{2 pi i j / l}>`, `j < l`.
#[derive(Debug, Clone)]
pub struct CatCode {
    pub vectors: Vec<DVector<Complex64>>,
    /// Eigenvalues of the Gram matrix of the truncated coherent states, ascending.
    pub gram_eigenvalues: Vec<f64>,
    /// Largest Poisson tail among the coherent states.
    pub leakage: f64,
    /// `|e_a><e_b|` for all pairs, orthonormal in Hilbert-Schmidt.
    pub matrices: Vec<TruncatedOperator>,
}

impl CatCode {
    pub fn projector(&self) -> CMatrix {
        let n = self.vectors[0].len();
        let mut p = CMatrix::zeros(n, n);
        for v in &self.vectors {
            p += v * v.adjoint();
        }
        p
    }
}

pub fn cat_code_basis(alpha: Complex64, l: usize, basis: &FockBasis) -> Result<CatCode, FockError> {
    if basis.modes() != 1 {
        return Err(FockError::ModeMismatch {
            poly: 1,
            basis: basis.modes(),
        });
    }
    if l == 0 {
        return Err(FockError::InvalidParameter("l must be positive".into()));
    }
    let m = basis.cutoffs()[0];
    let mut raw = Vec::with_capacity(l);
    let mut leakage: f64 = 0.0;
    for j in 0..l {
        let phase = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / l as f64);
        let (c, leak) = coherent_amplitudes(alpha * phase, m);
        leakage = leakage.max(leak);
        raw.push(c);
    }
    let gram = CMatrix::from_fn(l, l, |i, j| raw[i].dotc(&raw[j]));
    let gram_eigenvalues = linalg::hermitian_eigenvalues(&gram);
    let scale = gram_eigenvalues.last().copied().unwrap_or(1.0);
    if gram_eigenvalues[0] < GRAM_CONDITION_FLOOR * scale {
        return Err(FockError::IllConditioned {
            min_eigenvalue: gram_eigenvalues[0],
        });
    }
    // Modified Gram-Schmidt, applied twice for stability.
    let mut vectors: Vec<DVector<Complex64>> = Vec::with_capacity(l);
    for v in raw {
        let mut w = v;
        for _ in 0..2 {
            for e in &vectors {
                let proj = e.dotc(&w);
                w -= e * proj;
            }
        }
        let nrm = w.norm();
        vectors.push(w / Complex64::new(nrm, 0.0));
    }
    let mut matrices = Vec::with_capacity(l * l);
    for a in &vectors {
        for b in &vectors {
            matrices.push(TruncatedOperator::dense(basis.clone(), a * b.adjoint())?);
        }
    }
    Ok(CatCode {
        vectors,
        gram_eigenvalues,
        leakage,
        matrices,
    })
}

/// Diagonal of `prod_i (N_i + 1)^{exponents[i]}`.
pub fn weight_diagonal(basis: &FockBasis, exponents: &[f64]) -> Vec<f64> {
    assert_eq!(exponents.len(), basis.modes());
    let per_mode: Vec<Vec<f64>> = basis
        .cutoffs()
        .iter()
        .zip(exponents)
        .map(|(&m, &e)| (0..m).map(|n| ((n + 1) as f64).powf(e)).collect())
        .collect();
    (0..basis.dim())
        .map(|idx| {
            basis
                .occupation(idx)
                .iter()
                .zip(&per_mode)
                .map(|(&n, w)| w[n])
                .product()
        })
        .collect()
}

/// `prod_i (N_i + 1)^{k_i / 4}`, the two-sided Sobolev weight.
pub fn weight_matrix(k: &SobolevOrder, basis: &FockBasis) -> TruncatedOperator {
    let exps: Vec<f64> = k.components(basis.modes()).iter().map(|k| k / 4.0).collect();
    let d = weight_diagonal(basis, &exps);
    let n = d.len();
    let s = SparseMatrix::from_triplets(
        n,
        n,
        d.iter()
            .enumerate()
            .map(|(i, &v)| (i, i, Complex64::new(v, 0.0))),
    );
    TruncatedOperator::sparse(basis.clone(), s).expect("diagonal shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccr::single::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn annihilation_matrix_entries() {
        let b = FockBasis::single(5).unwrap();
        let m = realize(&a(), &b).unwrap().to_dense();
        for n in 1..5 {
            assert_eq!(m[(n - 1, n)], c((n as f64).sqrt()));
        }
        assert_eq!(m.iter().filter(|v| v.norm() > 0.0).count(), 4);
    }

    #[test]
    fn realize_is_exact_compression() {
        // <n| a a^dagger |n> = n + 1 even at the last level; the product of truncations misses it.
        let b = FockBasis::single(6).unwrap();
        let aad = realize(&(&a() * &ad()), &b).unwrap().to_dense();
        assert_eq!(aad[(5, 5)], c(6.0));
        let prod = realize(&a(), &b).unwrap().to_dense() * realize(&ad(), &b).unwrap().to_dense();
        assert_eq!(prod[(5, 5)], c(0.0));
        assert!((prod[(4, 4)] - c(5.0)).norm() < 1e-14);
    }

    #[test]
    fn degree_limit() {
        let b = FockBasis::single(3).unwrap();
        assert!(matches!(
            realize(&a().pow(3), &b),
            Err(FockError::DegreeTooLarge { .. })
        ));
    }

    #[test]
    fn multi_mode_is_kronecker() {
        let b = FockBasis::new(vec![3, 4]).unwrap();
        let a0 = OperatorPolynomial::annihilation(2, 0).unwrap();
        let ad1 = OperatorPolynomial::creation(2, 1).unwrap();
        let m = realize(&(&a0 * &ad1), &b).unwrap().to_dense();
        let ka = realize(&a(), &FockBasis::single(3).unwrap()).unwrap().to_dense();
        let kb = realize(&ad(), &FockBasis::single(4).unwrap()).unwrap().to_dense();
        assert!((m - ka.kronecker(&kb)).norm() < 1e-14);
        assert_eq!(b.occupation(b.index(&[2, 1])), vec![2, 1]);
    }

    #[test]
    fn coherent_state_is_eigenvector_up_to_bound() {
        let b = FockBasis::single(30).unwrap();
        let alpha = Complex64::new(1.5, -0.7);
        let (rho, info) = coherent_state(alpha, &b, 1e-6).unwrap();
        let psi = product_coherent_vector(&[alpha], &b, 1e-6).unwrap();
        let am = realize(&a(), &b).unwrap().to_dense();
        let res = (&am * &psi - &psi * alpha).norm();
        assert!(res <= info.residual_bound);
        assert!((linalg::trace(rho.matrix()).re - 1.0).abs() < 1e-12);
        assert!(info.leakage < 1e-12);
    }

    #[test]
    fn coherent_leakage_is_reported() {
        let b = FockBasis::single(5).unwrap();
        let err = coherent_state(c(2.0), &b, 1e-8).unwrap_err();
        match err {
            FockError::LeakageTooLarge { leakage, .. } => {
                // P(n >= 5) for Poisson(4)
                let mut head = 0.0;
                let mut term = (-4.0f64).exp();
                for n in 0..5 {
                    head += term;
                    term *= 4.0 / (n + 1) as f64;
                }
                assert!((leakage - (1.0 - head)).abs() < 1e-14);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn density_validation() {
        let b = FockBasis::single(2).unwrap();
        let mut m = CMatrix::identity(2, 2) * c(0.5);
        assert!(DensityMatrix::new(b.clone(), m.clone()).is_ok());
        m[(0, 1)] = Complex64::new(0.0, 1e-6);
        assert!(matches!(
            DensityMatrix::new(b.clone(), m.clone()),
            Err(FockError::NotHermitian { .. })
        ));
        let bad = CMatrix::from_diagonal(&DVector::from_vec(vec![c(1.2), c(-0.2)]));
        assert!(matches!(
            DensityMatrix::new(b.clone(), bad),
            Err(FockError::NotPositive { .. })
        ));
        let half = CMatrix::identity(2, 2) * c(0.4);
        assert!(matches!(
            DensityMatrix::new(b, half),
            Err(FockError::TraceNotUnit { .. })
        ));
    }

    #[test]
    fn cat_code_is_rotation_invariant() {
        let b = FockBasis::single(40).unwrap();
        let code = cat_code_basis(c(2.0), 2, &b).unwrap();
        assert_eq!(code.vectors.len(), 2);
        assert_eq!(code.matrices.len(), 4);
        let p = code.projector();
        let u = CMatrix::from_diagonal(&DVector::from_fn(40, |n, _| {
            Complex64::from_polar(1.0, std::f64::consts::PI * n as f64)
        }));
        assert!((&u * &p * u.adjoint() - &p).norm() < 1e-9);
        for (i, x) in code.vectors.iter().enumerate() {
            for (j, y) in code.vectors.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((x.dotc(y) - c(want)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cat_code_rejects_degenerate_amplitude() {
        let b = FockBasis::single(10).unwrap();
        assert!(matches!(
            cat_code_basis(c(0.0), 2, &b),
            Err(FockError::IllConditioned { .. })
        ));
    }

    #[test]
    fn coo_export_lists_nonzeros() {
        let b = FockBasis::single(3).unwrap();
        let text = realize(&ad(), &b).unwrap().export_coo();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# cutoffs 3");
        assert_eq!(lines.len(), 3);
        let parts: Vec<&str> = lines[2].split_whitespace().collect();
        assert_eq!((parts[0], parts[1]), ("2", "1"));
        assert_eq!(parts[2].parse::<f64>().unwrap(), 2f64.sqrt());
    }

    #[test]
    fn weights_multiply_across_modes() {
        let b = FockBasis::new(vec![2, 3]).unwrap();
        let w = weight_matrix(&SobolevOrder::PerMode(vec![4.0, 8.0]), &b).to_dense();
        // (n1 + 1) (n2 + 1)^2 at |1, 2>
        let i = b.index(&[1, 2]);
        assert_eq!(w[(i, i)], c(2.0 * 9.0));
    }
}
