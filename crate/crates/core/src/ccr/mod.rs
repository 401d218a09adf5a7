//! Symbolic algebra of the canonical commutation relations.
//!
//! Every polynomial in `a_i`, `a_i^dagger` is stored in the canonical basis
//! `(a^dagger)^i N^j a^k` per mode with `min(i, k) = 0`. That basis is unique:
//! an operator that shifts the photon number by `s >= 0` is `(a^dagger)^s f(N)`
//! and one that shifts it by `-s` is `f(N) a^s`, for a unique polynomial `f`.

mod npoly;
mod text;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use npoly::NPoly;

pub use text::ParseError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CcrError {
    #[error("mode index {mode} out of range for a {modes}-mode algebra")]
    ModeOutOfRange { mode: usize, modes: usize },
    #[error("mode count mismatch: {left} vs {right}")]
    ModeMismatch { left: usize, right: usize },
    #[error("a polynomial needs at least one mode")]
    NoModes,
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Single-mode factor `(a^dagger)^creation N^number a^annihilation`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeMonomial {
    pub creation: u32,
    pub number: u32,
    pub annihilation: u32,
}

impl ModeMonomial {
    pub const IDENTITY: ModeMonomial = ModeMonomial::new(0, 0, 0);

    pub const fn new(creation: u32, number: u32, annihilation: u32) -> Self {
        ModeMonomial {
            creation,
            number,
            annihilation,
        }
    }

    /// `i + k + 2j`.
    pub fn degree(&self) -> u32 {
        self.creation + self.annihilation + 2 * self.number
    }

    /// Net change of the photon number, `i - k`.
    pub fn shift(&self) -> i64 {
        self.creation as i64 - self.annihilation as i64
    }

    pub fn is_canonical(&self) -> bool {
        self.creation == 0 || self.annihilation == 0
    }

    pub fn adjoint(&self) -> Self {
        ModeMonomial::new(self.annihilation, self.number, self.creation)
    }
}

/// `(a^dagger)^big_i R(N) a^big_k` rewritten in the canonical basis.
fn normalize(big_i: u32, r: &NPoly, big_k: u32) -> Vec<(ModeMonomial, i128)> {
    let m = big_i.min(big_k);
    // (a^dagger)^m R(N) a^m = R(N - m) N (N - 1) ... (N - m + 1)
    let r = if m == 0 {
        r.clone()
    } else {
        &r.shift(-(m as i64)) * &NPoly::rising(1 - m as i64, 0)
    };
    r.coefficients()
        .map(|(j, c)| (ModeMonomial::new(big_i - m, j, big_k - m), c))
        .collect()
}

/// Product of two single-mode monomials as an integer combination of canonical ones.
fn mode_product(x: ModeMonomial, y: ModeMonomial) -> Vec<(ModeMonomial, i128)> {
    let p1 = NPoly::monomial(x.number);
    let p2 = NPoly::monomial(y.number);
    let (k1, i2) = (x.annihilation, y.creation);
    if k1 <= i2 {
        // a^k1 (a^dagger)^i2 = (N+1)...(N+k1) (a^dagger)^(i2-k1)
        let r = (i2 - k1) as i64;
        let q = NPoly::rising(1, k1 as i64);
        let inner = &(&p1 * &q).shift(r) * &p2;
        normalize(x.creation + (i2 - k1), &inner, y.annihilation)
    } else {
        // a^k1 (a^dagger)^i2 = a^(k1-i2) (N+1)...(N+i2)
        let s = (k1 - i2) as i64;
        let q = NPoly::rising(1, i2 as i64);
        let inner = &p1 * &(&q * &p2).shift(s);
        normalize(x.creation, &inner, y.annihilation + (k1 - i2))
    }
}

/// Canonical form of a possibly non-canonical single-mode word.
fn canonicalize(m: ModeMonomial) -> Vec<(ModeMonomial, i128)> {
    if m.is_canonical() {
        vec![(m, 1)]
    } else {
        normalize(m.creation, &NPoly::monomial(m.number), m.annihilation)
    }
}

/// Finite complex linear combination of multi-mode normal-ordered monomials.
///
/// Serializes as its text format.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPolynomial {
    modes: usize,
    terms: BTreeMap<Vec<ModeMonomial>, Complex64>,
}

impl OperatorPolynomial {
    pub fn zero(modes: usize) -> Self {
        assert!(modes > 0, "a polynomial needs at least one mode");
        OperatorPolynomial {
            modes,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(modes: usize, c: Complex64) -> Self {
        let mut p = Self::zero(modes);
        p.add_term(vec![ModeMonomial::IDENTITY; modes], c);
        p
    }

    pub fn identity(modes: usize) -> Self {
        Self::scalar(modes, Complex64::new(1.0, 0.0))
    }

    /// `coeff * prod_i (a_i^dagger)^c_i N_i^n_i a_i^k_i`, canonicalized.
    pub fn monomial(
        modes: usize,
        coeff: Complex64,
        factors: &[ModeMonomial],
    ) -> Result<Self, CcrError> {
        if modes == 0 {
            return Err(CcrError::NoModes);
        }
        if factors.len() != modes {
            return Err(CcrError::ModeMismatch {
                left: modes,
                right: factors.len(),
            });
        }
        let mut out = Self::scalar(modes, coeff);
        for (mode, f) in factors.iter().enumerate() {
            let mut single = Self::zero(modes);
            for (m, c) in canonicalize(*f) {
                let mut key = vec![ModeMonomial::IDENTITY; modes];
                key[mode] = m;
                single.add_term(key, Complex64::new(c as f64, 0.0));
            }
            out = out.multiply(&single)?;
        }
        Ok(out)
    }

    fn single(modes: usize, mode: usize, m: ModeMonomial) -> Result<Self, CcrError> {
        if mode >= modes {
            return Err(CcrError::ModeOutOfRange { mode, modes });
        }
        let mut key = vec![ModeMonomial::IDENTITY; modes];
        key[mode] = m;
        let mut p = Self::zero(modes);
        p.add_term(key, Complex64::new(1.0, 0.0));
        Ok(p)
    }

    pub fn annihilation(modes: usize, mode: usize) -> Result<Self, CcrError> {
        Self::single(modes, mode, ModeMonomial::new(0, 0, 1))
    }

    pub fn creation(modes: usize, mode: usize) -> Result<Self, CcrError> {
        Self::single(modes, mode, ModeMonomial::new(1, 0, 0))
    }

    pub fn number(modes: usize, mode: usize) -> Result<Self, CcrError> {
        Self::single(modes, mode, ModeMonomial::new(0, 1, 0))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in lexicographic order of `(mode, i, j, k)`.
    pub fn terms(&self) -> impl Iterator<Item = (&[ModeMonomial], Complex64)> {
        self.terms.iter().map(|(k, &c)| (k.as_slice(), c))
    }

    pub fn coefficient(&self, factors: &[ModeMonomial]) -> Complex64 {
        self.terms
            .get(factors)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    fn add_term(&mut self, key: Vec<ModeMonomial>, c: Complex64) {
        use std::collections::btree_map::Entry;
        debug_assert!(key.iter().all(ModeMonomial::is_canonical));
        let zero = Complex64::new(0.0, 0.0);
        match self.terms.entry(key) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == zero {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                if c != zero {
                    v.insert(c);
                }
            }
        }
    }

    /// Largest total degree `sum_i (c_i + k_i + 2 n_i)` over the terms; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|k| k.iter().map(ModeMonomial::degree).sum())
            .max()
            .unwrap_or(0)
    }

    /// Largest degree carried by a single mode.
    pub fn mode_degree(&self, mode: usize) -> u32 {
        self.terms
            .keys()
            .map(|k| k[mode].degree())
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.modes);
        for (k, c) in &self.terms {
            out.add_term(k.iter().map(ModeMonomial::adjoint).collect(), c.conj());
        }
        out
    }

    /// Coefficient-wise comparison with the adjoint, relative tolerance `tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let adj = self.adjoint();
        let keys = self.terms.keys().chain(adj.terms.keys());
        for k in keys {
            let a = self.coefficient(k);
            let b = adj.coefficient(k);
            if (a - b).norm() > tol * a.norm().max(b.norm()).max(1.0) {
                return false;
            }
        }
        true
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.modes);
        if c == Complex64::new(0.0, 0.0) {
            return out;
        }
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v * c);
        }
        out
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, CcrError> {
        self.check_modes(other)?;
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), *v);
        }
        Ok(out)
    }

    fn check_modes(&self, other: &Self) -> Result<(), CcrError> {
        if self.modes != other.modes {
            return Err(CcrError::ModeMismatch {
                left: self.modes,
                right: other.modes,
            });
        }
        Ok(())
    }

    /// Normal-ordered product `self * other`.
    pub fn multiply(&self, other: &Self) -> Result<Self, CcrError> {
        self.check_modes(other)?;
        let mut out = Self::zero(self.modes);
        for (kx, cx) in &self.terms {
            for (ky, cy) in &other.terms {
                // Cartesian product of the per-mode expansions.
                let mut partial: Vec<(Vec<ModeMonomial>, i128)> = vec![(Vec::new(), 1)];
                for (x, y) in kx.iter().zip(ky) {
                    let expansion = mode_product(*x, *y);
                    let mut next = Vec::with_capacity(partial.len() * expansion.len());
                    for (prefix, c) in &partial {
                        for (m, d) in &expansion {
                            let mut key = prefix.clone();
                            key.push(*m);
                            next.push((key, c * d));
                        }
                    }
                    partial = next;
                }
                let c = cx * cy;
                for (key, n) in partial {
                    out.add_term(key, c * n as f64);
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::identity(self.modes);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Places a polynomial on `modes` total modes, its own modes starting at `offset`.
    pub fn embed(&self, modes: usize, offset: usize) -> Result<Self, CcrError> {
        if offset + self.modes > modes {
            return Err(CcrError::ModeOutOfRange {
                mode: offset + self.modes - 1,
                modes,
            });
        }
        let mut out = Self::zero(modes);
        for (k, c) in &self.terms {
            let mut key = vec![ModeMonomial::IDENTITY; modes];
            key[offset..offset + self.modes].copy_from_slice(k);
            out.add_term(key, *c);
        }
        Ok(out)
    }

    /// Coefficients `lambda_{p,q}` of a single-mode polynomial written as
    /// `sum_{p,q} lambda_{p,q} a^p (a^dagger)^q`, keyed by `(p, q)`.
    pub fn antinormal_coefficients(&self) -> Result<BTreeMap<(u32, u32), Complex64>, CcrError> {
        if self.modes != 1 {
            return Err(CcrError::ModeMismatch {
                left: self.modes,
                right: 1,
            });
        }
        let mut rest = self.clone();
        let mut out = BTreeMap::new();
        // a^p (a^dagger)^q has canonical leading term (a^dagger)^(q-p) N^p or N^q a^(p-q)
        // with unit coefficient; peel off the highest-degree term repeatedly.
        while let Some((key, c)) = rest
            .terms
            .iter()
            .max_by_key(|(k, _)| (k[0].degree(), k[0]))
            .map(|(k, c)| (k.clone(), *c))
        {
            let m = key[0];
            let (p, q) = (m.number + m.annihilation, m.number + m.creation);
            let word = &single::a().pow(p) * &single::ad().pow(q);
            rest = &rest - &word.scale(c);
            *out.entry((p, q)).or_insert(Complex64::new(0.0, 0.0)) += c;
            // Guard against floating residue re-creating the same key.
            if rest.coefficient(&key).norm() <= 1e-14 * c.norm() {
                rest.terms.remove(&key);
            }
        }
        Ok(out)
    }

    /// Largest `|lambda_{i,j}|` over a representation
    /// `sum_{i <= j} lambda_{i,j} a^i (a^dagger)^j + conj(lambda_{i,j}) a^j (a^dagger)^i`.
    pub fn hermitian_coefficient_bound(&self) -> Result<f64, CcrError> {
        let coeffs = self.antinormal_coefficients()?;
        Ok(coeffs
            .iter()
            .map(|(&(p, q), c)| if p == q { c.norm() / 2.0 } else { c.norm() })
            .fold(0.0, f64::max))
    }

    /// Serializes to the line-oriented text format; see [`OperatorPolynomial::from_text`].
    pub fn to_text(&self) -> String {
        text::write(self)
    }

    /// Parses the text format. Coefficients round-trip bit-exactly.
    pub fn from_text(s: &str) -> Result<Self, CcrError> {
        let (modes, terms) = text::read(s)?;
        let mut out = Self::zero(modes);
        for (key, c) in terms {
            // Already canonical keys are taken as is, anything else is reduced.
            if key.iter().all(ModeMonomial::is_canonical) {
                out.add_term(key, c);
            } else {
                out = &out + &Self::monomial(modes, c, &key)?;
            }
        }
        Ok(out)
    }
}

impl Serialize for OperatorPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

impl<'de> Deserialize<'de> for OperatorPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Self::from_text(&text).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for OperatorPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for (mode, m) in k.iter().enumerate() {
                if m.creation > 0 {
                    write!(f, " ad{mode}^{}", m.creation)?;
                }
                if m.number > 0 {
                    write!(f, " N{mode}^{}", m.number)?;
                }
                if m.annihilation > 0 {
                    write!(f, " a{mode}^{}", m.annihilation)?;
                }
            }
        }
        Ok(())
    }
}

impl Add for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn add(self, rhs: &OperatorPolynomial) -> OperatorPolynomial {
        self.try_add(rhs).expect("mode count mismatch")
    }
}

impl Sub for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn sub(self, rhs: &OperatorPolynomial) -> OperatorPolynomial {
        self.try_add(&-rhs).expect("mode count mismatch")
    }
}

impl Neg for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn neg(self) -> OperatorPolynomial {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn mul(self, rhs: &OperatorPolynomial) -> OperatorPolynomial {
        self.multiply(rhs).expect("mode count mismatch")
    }
}

impl Mul<Complex64> for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn mul(self, rhs: Complex64) -> OperatorPolynomial {
        self.scale(rhs)
    }
}

impl Mul<f64> for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn mul(self, rhs: f64) -> OperatorPolynomial {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

/// Short-hand constructors for single-mode work.
pub mod single {
    use super::*;

    pub fn a() -> OperatorPolynomial {
        OperatorPolynomial::annihilation(1, 0).unwrap()
    }

    pub fn ad() -> OperatorPolynomial {
        OperatorPolynomial::creation(1, 0).unwrap()
    }

    pub fn n() -> OperatorPolynomial {
        OperatorPolynomial::number(1, 0).unwrap()
    }

    pub fn id() -> OperatorPolynomial {
        OperatorPolynomial::identity(1)
    }

    pub fn c(z: Complex64) -> OperatorPolynomial {
        OperatorPolynomial::scalar(1, z)
    }
}
