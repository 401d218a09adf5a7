//! Integer polynomials in the number operator.
//!
//! Normal ordering only ever multiplies, shifts and composes polynomials in
//! `N` with integer coefficients, so this type keeps the reduction exact.

use std::ops::{Add, Mul};

/// Polynomial `sum_j c[j] N^j` with exact integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct NPoly(pub(crate) Vec<i128>);

impl NPoly {
    pub(crate) fn monomial(j: u32) -> Self {
        let mut c = vec![0; j as usize + 1];
        c[j as usize] = 1;
        NPoly(c)
    }

    pub(crate) fn one() -> Self {
        NPoly(vec![1])
    }

    fn trim(mut self) -> Self {
        while self.0.len() > 1 && *self.0.last().unwrap() == 0 {
            self.0.pop();
        }
        self
    }

    /// `p(N + s)`.
    pub(crate) fn shift(&self, s: i64) -> Self {
        let n = self.0.len();
        let mut out = vec![0i128; n];
        // (N+s)^j = sum_r C(j,r) s^(j-r) N^r
        for (j, &c) in self.0.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mut binom: i128 = 1;
            for r in (0..=j).rev() {
                // term N^r with coefficient C(j, r) s^(j-r)
                let pow = (s as i128).pow((j - r) as u32);
                out[r] += c * binom * pow;
                if r > 0 {
                    binom = binom * r as i128 / (j - r + 1) as i128;
                }
            }
        }
        NPoly(out).trim()
    }

    /// `(N + from)(N + from + 1) ... (N + to)`; empty product when `to < from`.
    pub(crate) fn rising(from: i64, to: i64) -> Self {
        let mut p = NPoly::one();
        let mut r = from;
        while r <= to {
            p = &p * &NPoly(vec![r as i128, 1]);
            r += 1;
        }
        p
    }

    pub(crate) fn coefficients(&self) -> impl Iterator<Item = (u32, i128)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(j, &c)| (j as u32, c))
    }
}

impl Mul for &NPoly {
    type Output = NPoly;
    fn mul(self, rhs: &NPoly) -> NPoly {
        let mut out = vec![0i128; self.0.len() + rhs.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        NPoly(out).trim()
    }
}

impl Add for &NPoly {
    type Output = NPoly;
    fn add(self, rhs: &NPoly) -> NPoly {
        let n = self.0.len().max(rhs.0.len());
        let mut out = vec![0i128; n];
        for (i, v) in out.iter_mut().enumerate() {
            *v = self.0.get(i).copied().unwrap_or(0) + rhs.0.get(i).copied().unwrap_or(0);
        }
        NPoly(out).trim()
    }
}
