//! Dense and sparse complex matrix helpers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, Complex64::new(1.0, 0.0))))
    }

    /// Duplicates are summed, exact zeros dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Self {
        let mut t: Vec<(usize, usize, Complex64)> = triplets.into_iter().collect();
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut rows = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if rows.last() == Some(&r) && indices.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                indices.push(c);
                values.push(v);
            }
        }
        let mut keep_idx = Vec::with_capacity(indices.len());
        let mut keep_val = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.iter().zip(indices).zip(values) {
            if v != ZERO {
                indptr[r + 1] += 1;
                keep_idx.push(c);
                keep_val.push(v);
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        SparseMatrix {
            nrows,
            ncols,
            indptr,
            indices: keep_idx,
            values: keep_val,
        }
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let mut t = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != ZERO {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn density(&self) -> f64 {
        self.nnz() as f64 / (self.nrows * self.ncols).max(1) as f64
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[s..e]
            .iter()
            .copied()
            .zip(self.values[s..e].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        match self.indices[s..e].binary_search(&j) {
            Ok(p) => self.values[s + p],
            Err(_) => ZERO,
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v.conj())),
        )
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn linear_combination(terms: &[(Complex64, &SparseMatrix)]) -> Self {
        assert!(!terms.is_empty());
        let (nr, nc) = (terms[0].1.nrows, terms[0].1.ncols);
        let t = terms.iter().flat_map(|(c, m)| {
            assert_eq!((m.nrows, m.ncols), (nr, nc), "shape mismatch");
            m.triplets().map(move |(i, j, v)| (i, j, c * v))
        });
        Self::from_triplets(nr, nc, t)
    }

    pub fn matmul(&self, rhs: &SparseMatrix) -> Self {
        assert_eq!(self.ncols, rhs.nrows, "shape mismatch");
        let mut t = Vec::new();
        let mut acc = vec![ZERO; rhs.ncols];
        let mut touched = Vec::new();
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in rhs.row(k) {
                    if acc[j] == ZERO {
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                t.push((i, j, acc[j]));
                acc[j] = ZERO;
            }
            touched.clear();
        }
        Self::from_triplets(self.nrows, rhs.ncols, t)
    }

    pub fn mul_vec(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = ZERO;
            for p in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[p] * x[self.indices[p]];
            }
            *yi = s;
        }
    }

    /// `out += alpha * self * x`.
    pub fn mul_dense_acc(&self, alpha: Complex64, x: &CMatrix, out: &mut CMatrix) {
        assert_eq!(self.ncols, x.nrows());
        let n = x.nrows();
        let m = self.nrows;
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for c in 0..x.ncols() {
            let xc = &xs[c * n..(c + 1) * n];
            let oc = &mut os[c * m..(c + 1) * m];
            for (o, w) in oc.iter_mut().zip(self.indptr.windows(2)) {
                let (lo, hi) = (w[0], w[1]);
                let mut s = ZERO;
                for (v, &k) in self.values[lo..hi].iter().zip(&self.indices[lo..hi]) {
                    s += v * xc[k];
                }
                *o += alpha * s;
            }
        }
    }

    pub fn mul_dense(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.nrows, x.ncols());
        self.mul_dense_acc(Complex64::new(1.0, 0.0), x, &mut out);
        out
    }

    /// `out += alpha * x * self^dagger`.
    pub fn dense_mul_adjoint_acc(&self, alpha: Complex64, x: &CMatrix, out: &mut CMatrix) {
        assert_eq!(self.ncols, x.ncols());
        let n = x.nrows();
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for j in 0..self.nrows {
            let oc = &mut os[j * n..(j + 1) * n];
            for p in self.indptr[j]..self.indptr[j + 1] {
                let k = self.indices[p];
                let w = alpha * self.values[p].conj();
                for (o, &v) in oc.iter_mut().zip(&xs[k * n..(k + 1) * n]) {
                    *o += w * v;
                }
            }
        }
    }

    pub fn dense_mul_adjoint(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.nrows(), self.nrows);
        self.dense_mul_adjoint_acc(Complex64::new(1.0, 0.0), x, &mut out);
        out
    }

    /// Kronecker product `self (x) rhs`.
    pub fn kron(&self, rhs: &SparseMatrix) -> Self {
        let t = self.triplets().flat_map(|(i, j, a)| {
            rhs.triplets()
                .map(move |(k, l, b)| (i * rhs.nrows + k, j * rhs.ncols + l, a * b))
        });
        Self::from_triplets(self.nrows * rhs.nrows, self.ncols * rhs.ncols, t)
    }
}

/// `(x + x^dagger) / 2`.
pub fn hermitian_part(x: &CMatrix) -> CMatrix {
    (x + x.adjoint()).scale(0.5)
}

/// Largest entry of `x - x^dagger` relative to the largest entry of `x`.
pub fn hermiticity_defect(x: &CMatrix) -> f64 {
    let scale = x.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let mut worst: f64 = 0.0;
    for j in 0..x.ncols() {
        for i in 0..=j.min(x.nrows().saturating_sub(1)) {
            worst = worst.max((x[(i, j)] - x[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

/// Zeroes entries below `1e-40` of the largest. The QL and SVD iterations
/// underflow to inf/NaN on entries spanning hundreds of decades, and the flush
/// moves eigenvalues far less than rounding does.
fn flush_tiny(mut h: CMatrix) -> CMatrix {
    let floor = 1e-40 * h.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for v in h.iter_mut() {
        if v.norm() < floor {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    h
}

fn eigen_input(x: &CMatrix) -> CMatrix {
    flush_tiny(hermitian_part(x))
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn hermitian_eigenvalues(x: &CMatrix) -> Vec<f64> {
    if x.nrows() == 0 {
        return Vec::new();
    }
    let e = eigen_input(x).symmetric_eigenvalues();
    let mut v: Vec<f64> = e.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Smallest eigenvalue of the Hermitian part with its eigenvector.
pub fn min_eigenpair(x: &CMatrix) -> (f64, DVector<Complex64>) {
    let e = eigen_input(x).symmetric_eigen();
    let (idx, val) = e
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("empty matrix");
    (val, e.eigenvectors.column(idx).into_owned())
}

pub fn min_eigenvalue(x: &CMatrix) -> f64 {
    hermitian_eigenvalues(x)
        .first()
        .copied()
        .unwrap_or(f64::INFINITY)
}

/// Whether the Hermitian matrix `x` admits a Cholesky factorization with positive real pivots.
pub fn cholesky_succeeds(x: &CMatrix) -> bool {
    let n = x.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = x[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = x[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    true
}

/// Sum of singular values.
pub fn nuclear_norm(x: &CMatrix) -> f64 {
    if x.nrows() == 0 || x.ncols() == 0 {
        return 0.0;
    }
    flush_tiny(x.clone()).singular_values().sum()
}

pub fn trace(x: &CMatrix) -> Complex64 {
    x.diagonal().sum()
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample() -> SparseMatrix {
        SparseMatrix::from_triplets(
            3,
            3,
            vec![
                (0, 1, c(1.0, 2.0)),
                (2, 0, c(-0.5, 0.0)),
                (1, 1, c(0.0, 3.0)),
                (0, 1, c(1.0, 0.0)),
            ],
        )
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = sample();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 1), c(2.0, 2.0));
    }

    #[test]
    fn products_match_dense() {
        let a = sample();
        let x = CMatrix::from_fn(3, 2, |i, j| c(i as f64 - j as f64, 0.5 * i as f64));
        let y = CMatrix::from_fn(2, 3, |i, j| c(j as f64 + 1.0, i as f64 - 0.25));
        assert!((a.mul_dense(&x) - a.to_dense() * &x).norm() < 1e-14);
        assert!((a.dense_mul_adjoint(&y) - &y * a.to_dense().adjoint()).norm() < 1e-14);
        assert!((a.matmul(&a).to_dense() - a.to_dense() * a.to_dense()).norm() < 1e-14);
        assert!((a.adjoint().to_dense() - a.to_dense().adjoint()).norm() == 0.0);
    }

    #[test]
    fn kron_matches_definition() {
        let a = sample();
        let b = SparseMatrix::identity(2).scale(c(0.0, 1.0));
        let k = a.kron(&b).to_dense();
        let d = a.to_dense().kronecker(&b.to_dense());
        assert!((k - d).norm() == 0.0);
    }

    #[test]
    fn cholesky_detects_indefinite() {
        let pd = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        assert!(cholesky_succeeds(&pd));
        assert!(!cholesky_succeeds(&-pd));
        let sing = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(!cholesky_succeeds(&sing));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(32);
        for p in 0..64 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            assert!((s - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "degree {p}");
        }
        let (x1, w1) = gauss_legendre(1);
        assert_eq!((x1[0], w1[0]), (0.5, 1.0));
    }

    #[test]
    fn nuclear_norm_of_hermitian_is_abs_eigen_sum() {
        let m = CMatrix::from_fn(4, 4, |i, j| {
            c((i + j) as f64 - 3.0, if i < j { 1.0 } else if i > j { -1.0 } else { 0.0 })
        });
        let ev: f64 = hermitian_eigenvalues(&m).iter().map(|v| v.abs()).sum();
        assert!((nuclear_norm(&m) - ev).abs() < 1e-12);
    }
}
