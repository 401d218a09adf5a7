//! Generators whose `H(s)` and `L_j(s)` are finite sums `sum_t c_t(s) P_t`.
//!
//! Realization caches every `P_t` and every product `P_t^dagger P_u` once;
//! materializing at a time `s` only recombines cached matrices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{GeneratorError, GkslGenerator, RealizedGenerator};
use crate::ccr::OperatorPolynomial;
use crate::fock::{realize, FockBasis};
use crate::linalg::SparseMatrix;

/// Scalar coefficient functions of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficient {
    Constant { value: Complex64 },
    /// `amplitude * e^{i frequency s}`.
    Phase { amplitude: Complex64, frequency: f64 },
    /// `offset + amplitude * e^{i frequency s}`.
    AffinePhase {
        offset: Complex64,
        amplitude: Complex64,
        frequency: f64,
    },
    /// Piecewise linear through `(times[i], values[i])`, constant outside.
    Tabulated {
        times: Vec<f64>,
        values: Vec<Complex64>,
    },
}

impl Coefficient {
    pub fn constant(value: Complex64) -> Self {
        Coefficient::Constant { value }
    }

    pub fn eval(&self, s: f64) -> Complex64 {
        match self {
            Coefficient::Constant { value } => *value,
            Coefficient::Phase {
                amplitude,
                frequency,
            } => amplitude * Complex64::from_polar(1.0, frequency * s),
            Coefficient::AffinePhase {
                offset,
                amplitude,
                frequency,
            } => offset + amplitude * Complex64::from_polar(1.0, frequency * s),
            Coefficient::Tabulated { times, values } => {
                if s <= times[0] {
                    return values[0];
                }
                let last = times.len() - 1;
                if s >= times[last] {
                    return values[last];
                }
                let r = times.partition_point(|&t| t <= s);
                let (t0, t1) = (times[r - 1], times[r]);
                let w = (s - t0) / (t1 - t0);
                values[r - 1] * (1.0 - w) + values[r] * w
            }
        }
    }

    fn validate(&self) -> Result<(), GeneratorError> {
        if let Coefficient::Tabulated { times, values } = self {
            if times.is_empty()
                || times.len() != values.len()
                || times.windows(2).any(|w| !(w[0] < w[1]))
            {
                return Err(GeneratorError::InvalidParameter(
                    "tabulated coefficient needs matching, strictly increasing nodes".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `sum_t c_t(s) P_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDependentPolynomial {
    pub terms: Vec<(Coefficient, OperatorPolynomial)>,
}

impl TimeDependentPolynomial {
    pub fn constant(p: OperatorPolynomial) -> Self {
        TimeDependentPolynomial {
            terms: vec![(Coefficient::constant(Complex64::new(1.0, 0.0)), p)],
        }
    }

    pub fn at(&self, s: f64, modes: usize) -> OperatorPolynomial {
        self.terms
            .iter()
            .fold(OperatorPolynomial::zero(modes), |acc, (c, p)| {
                &acc + &p.scale(c.eval(s))
            })
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, p)| p.degree()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDependentGenerator {
    modes: usize,
    hamiltonian: TimeDependentPolynomial,
    jumps: Vec<TimeDependentPolynomial>,
    /// Times used to validate `H(s)` symmetry at construction.
    probe_times: Vec<f64>,
}

impl TimeDependentGenerator {
    /// Validates term shapes and checks the GKSL conditions at `probe_times`.
    pub fn new(
        modes: usize,
        hamiltonian: TimeDependentPolynomial,
        jumps: Vec<TimeDependentPolynomial>,
        probe_times: Vec<f64>,
    ) -> Result<Self, GeneratorError> {
        for (c, p) in hamiltonian.terms.iter().chain(jumps.iter().flat_map(|j| &j.terms)) {
            c.validate()?;
            if p.modes() != modes {
                return Err(GeneratorError::ModeMismatch {
                    expected: modes,
                    found: p.modes(),
                });
            }
        }
        let g = TimeDependentGenerator {
            modes,
            hamiltonian,
            jumps,
            probe_times,
        };
        for &s in &g.probe_times {
            g.at(s)?;
        }
        Ok(g)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn degree(&self) -> u32 {
        self.jumps
            .iter()
            .map(TimeDependentPolynomial::degree)
            .chain(std::iter::once(self.hamiltonian.degree()))
            .max()
            .unwrap_or(0)
    }

    pub fn probe_times(&self) -> &[f64] {
        &self.probe_times
    }

    /// The frozen generator `L_s`.
    pub fn at(&self, s: f64) -> Result<GkslGenerator, GeneratorError> {
        GkslGenerator::build(
            self.hamiltonian.at(s, self.modes),
            self.jumps.iter().map(|j| j.at(s, self.modes)).collect(),
        )
    }

    pub fn realize(
        &self,
        basis: &FockBasis,
    ) -> Result<RealizedTimeDependentGenerator, GeneratorError> {
        RealizedTimeDependentGenerator::new(self, basis)
    }
}

type Cached = Vec<(Coefficient, SparseMatrix)>;

#[derive(Debug, Clone)]
pub struct RealizedTimeDependentGenerator {
    basis: FockBasis,
    degree: u32,
    hamiltonian: Cached,
    jumps: Vec<Cached>,
    /// `products[j][t][u]` realizes `P_t^dagger P_u` of jump `j`.
    products: Vec<Vec<Vec<SparseMatrix>>>,
}

impl RealizedTimeDependentGenerator {
    fn new(g: &TimeDependentGenerator, basis: &FockBasis) -> Result<Self, GeneratorError> {
        if g.modes != basis.modes() {
            return Err(GeneratorError::ModeMismatch {
                expected: basis.modes(),
                found: g.modes,
            });
        }
        let degree = g.degree();
        let basis = basis.clone().with_edge_band(degree as usize);
        let cache = |p: &TimeDependentPolynomial| -> Result<Cached, GeneratorError> {
            p.terms
                .iter()
                .map(|(c, poly)| Ok((c.clone(), realize(poly, &basis)?.to_sparse())))
                .collect()
        };
        let hamiltonian = cache(&g.hamiltonian)?;
        let jumps = g.jumps.iter().map(cache).collect::<Result<Vec<_>, _>>()?;
        let mut products = Vec::with_capacity(g.jumps.len());
        for j in &g.jumps {
            let mut per_t = Vec::with_capacity(j.terms.len());
            for (_, pt) in &j.terms {
                let mut per_u = Vec::with_capacity(j.terms.len());
                for (_, pu) in &j.terms {
                    per_u.push(realize(&(&pt.adjoint() * pu), &basis)?.to_sparse());
                }
                per_t.push(per_u);
            }
            products.push(per_t);
        }
        Ok(RealizedTimeDependentGenerator {
            basis,
            degree,
            hamiltonian,
            jumps,
            products,
        })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Realized `L_s`, identical to realizing the frozen symbolic generator.
    pub fn materialize_at(&self, s: f64) -> RealizedGenerator {
        let minus_i = Complex64::new(0.0, -1.0);
        let mut g_terms: Vec<(Complex64, &SparseMatrix)> = self
            .hamiltonian
            .iter()
            .map(|(c, m)| (minus_i * c.eval(s), m))
            .collect();
        let mut jumps = Vec::with_capacity(self.jumps.len());
        for (j, cached) in self.jumps.iter().enumerate() {
            let coeffs: Vec<Complex64> = cached.iter().map(|(c, _)| c.eval(s)).collect();
            for (t, ct) in coeffs.iter().enumerate() {
                for (u, cu) in coeffs.iter().enumerate() {
                    g_terms.push((-0.5 * ct.conj() * cu, &self.products[j][t][u]));
                }
            }
            let parts: Vec<(Complex64, &SparseMatrix)> =
                coeffs.iter().zip(cached).map(|(c, (_, m))| (*c, m)).collect();
            jumps.push(if parts.is_empty() {
                SparseMatrix::zeros(self.basis.dim(), self.basis.dim())
            } else {
                SparseMatrix::linear_combination(&parts)
            });
        }
        let g = if g_terms.is_empty() {
            SparseMatrix::zeros(self.basis.dim(), self.basis.dim())
        } else {
            SparseMatrix::linear_combination(&g_terms)
        };
        RealizedGenerator::from_parts(self.basis.clone(), self.degree, g, jumps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccr::single::*;

    #[test]
    fn coefficient_evaluation() {
        let c = Coefficient::AffinePhase {
            offset: Complex64::new(1.0, 0.0),
            amplitude: Complex64::new(0.0, 2.0),
            frequency: std::f64::consts::PI,
        };
        assert!((c.eval(0.5) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        let tab = Coefficient::Tabulated {
            times: vec![0.0, 1.0, 3.0],
            values: vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 4.0),
            ],
        };
        assert_eq!(tab.eval(0.5), Complex64::new(1.0, 0.0));
        assert_eq!(tab.eval(2.0), Complex64::new(1.0, 2.0));
        assert_eq!(tab.eval(9.0), Complex64::new(0.0, 4.0));
    }

    #[test]
    fn materialized_matches_frozen_realization() {
        let omega = 2.0 * std::f64::consts::PI / 3.0;
        let jump = TimeDependentPolynomial {
            terms: vec![
                (Coefficient::constant(Complex64::new(1.0, 0.0)), a().pow(2)),
                (
                    Coefficient::Phase {
                        amplitude: Complex64::new(-2.0, 0.0),
                        frequency: omega,
                    },
                    id(),
                ),
                (
                    Coefficient::AffinePhase {
                        offset: Complex64::new(0.1, 0.0),
                        amplitude: Complex64::new(-0.1, 0.0),
                        frequency: omega,
                    },
                    a(),
                ),
            ],
        };
        let h = TimeDependentPolynomial::constant(&(&a() + &ad()) * 0.2);
        let g = TimeDependentGenerator::new(1, h, vec![jump], vec![0.0, 1.0]).unwrap();
        let basis = FockBasis::single(12).unwrap();
        let rt = g.realize(&basis).unwrap();
        for s in [0.0, 0.4, 1.7] {
            let a1 = rt.materialize_at(s);
            let a2 = g.at(s).unwrap().realize(&basis).unwrap();
            let d = (a1.g().to_dense() - a2.g().to_dense()).norm();
            assert!(d < 1e-12, "s = {s}: {d}");
            let dj = (a1.jumps()[0].to_dense() - a2.jumps()[0].to_dense()).norm();
            assert!(dj < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_tables() {
        let bad = TimeDependentPolynomial {
            terms: vec![(
                Coefficient::Tabulated {
                    times: vec![1.0, 0.0],
                    values: vec![Complex64::new(1.0, 0.0); 2],
                },
                a(),
            )],
        };
        assert!(TimeDependentGenerator::new(
            1,
            TimeDependentPolynomial { terms: vec![] },
            vec![bad],
            vec![]
        )
        .is_err());
    }
}
