//! Trace and Sobolev norms, moments, and interpolation checks.
//!
//! `||x||_{W^{k,1}} = || (N+1)^{k/4} x (N+1)^{k/4} ||_1` with the weight taken
//! as a product over modes for a multi-index `k`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{weight_diagonal, DensityMatrix, FockBasis};
use crate::linalg::{self, CMatrix};

/// Eigenvalues above `-PSD_THRESHOLD * scale` count as nonnegative.
pub const PSD_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SobolevError {
    #[error("Sobolev order must be finite and nonnegative, got {0:?}")]
    InvalidOrder(Vec<f64>),
    #[error("order has {order} components but the basis has {modes} modes")]
    ModeMismatch { order: usize, modes: usize },
    #[error("matrix is {rows}x{cols}, basis dimension is {dim}")]
    ShapeMismatch { rows: usize, cols: usize, dim: usize },
    #[error("k = {k} lies outside the grid hull [{lo}, {hi}]")]
    OutsideGrid { k: f64, lo: f64, hi: f64 },
    #[error("grid must be non-empty with strictly increasing orders")]
    BadGrid,
    #[error("theta = {0} is outside [0, 1]")]
    ThetaOutOfRange(f64),
    #[error("no samples with nonzero norm")]
    NoSamples,
    #[error("{samples} samples but {images} images")]
    CountMismatch { samples: usize, images: usize },
}

/// Scalar order `k`, meaning `(k, ..., k)`, or an explicit per-mode multi-index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SobolevOrder {
    Uniform(f64),
    PerMode(Vec<f64>),
}

impl SobolevOrder {
    /// Per-mode components; panics on a length mismatch, see [`SobolevOrder::validate`].
    pub fn components(&self, modes: usize) -> Vec<f64> {
        match self {
            SobolevOrder::Uniform(k) => vec![*k; modes],
            SobolevOrder::PerMode(v) => {
                assert_eq!(v.len(), modes, "Sobolev order length mismatch");
                v.clone()
            }
        }
    }

    pub fn validate(&self, modes: usize) -> Result<(), SobolevError> {
        let v = match self {
            SobolevOrder::Uniform(k) => vec![*k],
            SobolevOrder::PerMode(v) => {
                if v.len() != modes {
                    return Err(SobolevError::ModeMismatch {
                        order: v.len(),
                        modes,
                    });
                }
                v.clone()
            }
        };
        if v.iter().any(|k| !k.is_finite() || *k < 0.0) {
            return Err(SobolevError::InvalidOrder(v));
        }
        Ok(())
    }

    /// `(1 - theta) self + theta other`.
    pub fn interpolate(&self, other: &SobolevOrder, theta: f64, modes: usize) -> SobolevOrder {
        let a = self.components(modes);
        let b = other.components(modes);
        SobolevOrder::PerMode(
            a.iter()
                .zip(&b)
                .map(|(x, y)| (1.0 - theta) * x + theta * y)
                .collect(),
        )
    }

    pub fn label(&self) -> String {
        match self {
            SobolevOrder::Uniform(k) => format!("{k}"),
            SobolevOrder::PerMode(v) => v
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join("_"),
        }
    }
}

impl From<f64> for SobolevOrder {
    fn from(k: f64) -> Self {
        SobolevOrder::Uniform(k)
    }
}

/// PSD test by a Cholesky factorization of `x + delta I`, `delta = PSD_THRESHOLD * max(1, max |x_ii|)`.
pub fn is_psd(x: &CMatrix) -> bool {
    if linalg::hermiticity_defect(x) > PSD_THRESHOLD {
        return false;
    }
    let scale = x
        .diagonal()
        .iter()
        .map(|v| v.norm())
        .fold(1.0, f64::max);
    let mut shifted = linalg::hermitian_part(x);
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += Complex64::new(PSD_THRESHOLD * scale, 0.0);
    }
    linalg::cholesky_succeeds(&shifted)
}

/// Nuclear norm, via eigenvalues for Hermitian input and singular values otherwise.
pub fn trace_norm(x: &CMatrix) -> f64 {
    if linalg::hermiticity_defect(x) <= PSD_THRESHOLD {
        linalg::hermitian_eigenvalues(x).iter().map(|v| v.abs()).sum()
    } else {
        linalg::nuclear_norm(x)
    }
}

fn check_shape(x: &CMatrix, basis: &FockBasis) -> Result<(), SobolevError> {
    let dim = basis.dim();
    if x.nrows() != dim || x.ncols() != dim {
        return Err(SobolevError::ShapeMismatch {
            rows: x.nrows(),
            cols: x.ncols(),
            dim,
        });
    }
    Ok(())
}

/// `W x W` with `W = prod_i (N_i + 1)^{k_i/4}`.
pub fn weighted(x: &CMatrix, k: &SobolevOrder, basis: &FockBasis) -> Result<CMatrix, SobolevError> {
    k.validate(basis.modes())?;
    check_shape(x, basis)?;
    let exps: Vec<f64> = k.components(basis.modes()).iter().map(|k| k / 4.0).collect();
    let w = weight_diagonal(basis, &exps);
    Ok(CMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * (w[i] * w[j])))
}

/// `||x||_{W^{k,1}}`; PSD input takes the trace shortcut.
pub fn sobolev_norm(x: &CMatrix, k: &SobolevOrder, basis: &FockBasis) -> Result<f64, SobolevError> {
    let y = weighted(x, k, basis)?;
    if is_psd(&y) {
        Ok(linalg::trace(&y).re.max(0.0))
    } else {
        Ok(trace_norm(&y))
    }
}

/// `tr[rho (N+1)^{k/2}]` with the weight multiplied over modes.
pub fn moment_matrix(rho: &CMatrix, k: &SobolevOrder, basis: &FockBasis) -> Result<f64, SobolevError> {
    k.validate(basis.modes())?;
    check_shape(rho, basis)?;
    let exps: Vec<f64> = k.components(basis.modes()).iter().map(|k| k / 2.0).collect();
    let w = weight_diagonal(basis, &exps);
    Ok(w.iter().enumerate().map(|(i, wi)| rho[(i, i)].re * wi).sum())
}

pub fn moment(rho: &DensityMatrix, k: &SobolevOrder) -> Result<f64, SobolevError> {
    moment_matrix(rho.matrix(), k, rho.basis())
}

/// Linear interpolation of growth constants between the two grid orders
/// bracketing `k` most tightly. A missing node at `k = 0` is taken as `omega_0 = 0`.
pub fn interpolate_omega(k: f64, grid: &[(f64, f64)]) -> Result<f64, SobolevError> {
    let mut nodes: Vec<(f64, f64)> = grid.to_vec();
    if nodes.is_empty() || nodes.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(SobolevError::BadGrid);
    }
    if nodes[0].0 > 0.0 && k < nodes[0].0 && k >= 0.0 {
        nodes.insert(0, (0.0, 0.0));
    }
    let (lo, hi) = (nodes[0].0, nodes[nodes.len() - 1].0);
    if !(k >= lo && k <= hi) {
        return Err(SobolevError::OutsideGrid { k, lo, hi });
    }
    if let Some(&(_, w)) = nodes.iter().find(|(kr, _)| *kr == k) {
        return Ok(w);
    }
    let r = nodes.iter().position(|(kr, _)| *kr > k).unwrap();
    let (k0, w0) = nodes[r - 1];
    let (k1, w1) = nodes[r];
    Ok(((k1 - k) * w0 + (k - k0) * w1) / (k1 - k0))
}

/// Endpoint operator norms for the interpolation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndpointNorms {
    /// Known bounds `M0 >= ||T||_{W^{k0}}`, `M1 >= ||T||_{W^{k1}}`.
    Supplied { m0: f64, m1: f64 },
    /// Largest norm ratios over the samples themselves.
    Estimated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteinWeissReport {
    pub k_theta: SobolevOrder,
    pub m0: f64,
    pub m1: f64,
    /// `M0^{1-theta} M1^theta`.
    pub bound: f64,
    /// `||T x||_{W^{k_theta}} / ||x||_{W^{k_theta}}` per sample.
    pub ratios: Vec<f64>,
    pub worst_margin: f64,
}

/// Checks `||T x||_{k_theta} <= M0^{1-theta} M1^theta ||x||_{k_theta}` on each sample.
pub fn stein_weiss_check<F>(
    map: F,
    basis: &FockBasis,
    k0: &SobolevOrder,
    k1: &SobolevOrder,
    theta: f64,
    samples: &[CMatrix],
    endpoints: EndpointNorms,
) -> Result<SteinWeissReport, SobolevError>
where
    F: Fn(&CMatrix) -> CMatrix + Sync,
{
    let images: Vec<CMatrix> = samples.par_iter().map(&map).collect();
    stein_weiss_check_images(basis, k0, k1, theta, samples, &images, endpoints)
}

/// As [`stein_weiss_check`] with the images `T x` already computed.
pub fn stein_weiss_check_images(
    basis: &FockBasis,
    k0: &SobolevOrder,
    k1: &SobolevOrder,
    theta: f64,
    samples: &[CMatrix],
    images: &[CMatrix],
    endpoints: EndpointNorms,
) -> Result<SteinWeissReport, SobolevError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(SobolevError::ThetaOutOfRange(theta));
    }
    if samples.len() != images.len() {
        return Err(SobolevError::CountMismatch {
            samples: samples.len(),
            images: images.len(),
        });
    }
    k0.validate(basis.modes())?;
    k1.validate(basis.modes())?;
    let k_theta = k0.interpolate(k1, theta, basis.modes());
    let ratio = |k: &SobolevOrder| -> Result<Vec<f64>, SobolevError> {
        samples
            .iter()
            .zip(images)
            .filter_map(|(x, tx)| {
                let nx = match sobolev_norm(x, k, basis) {
                    Ok(v) => v,
                    Err(e) => return Some(Err(e)),
                };
                if nx == 0.0 {
                    return None;
                }
                Some(sobolev_norm(tx, k, basis).map(|ntx| ntx / nx))
            })
            .collect()
    };
    let ratios = ratio(&k_theta)?;
    if ratios.is_empty() {
        return Err(SobolevError::NoSamples);
    }
    let (m0, m1) = match endpoints {
        EndpointNorms::Supplied { m0, m1 } => (m0, m1),
        EndpointNorms::Estimated => {
            let max = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
            (max(ratio(k0)?), max(ratio(k1)?))
        }
    };
    let bound = m0.powf(1.0 - theta) * m1.powf(theta);
    let worst_margin = ratios
        .iter()
        .map(|r| bound - r)
        .fold(f64::INFINITY, f64::min);
    Ok(SteinWeissReport {
        k_theta,
        m0,
        m1,
        bound,
        ratios,
        worst_margin,
    })
}
