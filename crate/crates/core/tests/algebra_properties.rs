use bosonic_qms::ccr::{single, ModeMonomial, OperatorPolynomial};
use bosonic_qms::fock::{cat_code_basis, coherent_state, product_coherent_vector, realize, FockBasis};
use bosonic_qms::linalg::CMatrix;
use bosonic_qms::Complex64;
use proptest::prelude::*;

/// Monomial with `i + k + 2j <= max_degree` on one mode.
fn mode_monomial(max_degree: u32) -> impl Strategy<Value = ModeMonomial> {
    (0..=max_degree, 0..=max_degree / 2, 0..=max_degree)
        .prop_filter("degree bound", move |(i, j, k)| i + k + 2 * j <= max_degree)
        .prop_map(|(i, j, k)| ModeMonomial::new(i, j, k))
}

fn term(modes: usize, max_degree: u32, coeff: BoxedStrategy<Complex64>)
    -> impl Strategy<Value = OperatorPolynomial>
{
    // Spread the degree budget over the modes by giving all of it to one.
    (0..modes, mode_monomial(max_degree), coeff).prop_map(move |(mode, m, c)| {
        let mut factors = vec![ModeMonomial::IDENTITY; modes];
        factors[mode] = m;
        OperatorPolynomial::monomial(modes, c, &factors).unwrap()
    })
}

fn poly_with(modes: usize, max_degree: u32, coeff: BoxedStrategy<Complex64>)
    -> impl Strategy<Value = OperatorPolynomial>
{
    prop::collection::vec(term(modes, max_degree, coeff), 1..5).prop_map(move |ts| {
        ts.iter()
            .fold(OperatorPolynomial::zero(modes), |acc, t| &acc + t)
    })
}

fn integer_coeff() -> BoxedStrategy<Complex64> {
    (-3i32..=3, -3i32..=3)
        .prop_map(|(a, b)| Complex64::new(a as f64, b as f64))
        .boxed()
}

fn real_coeff() -> BoxedStrategy<Complex64> {
    (-2.0f64..2.0, -2.0f64..2.0)
        .prop_map(|(a, b)| Complex64::new(a, b))
        .boxed()
}

fn max_abs(x: &CMatrix) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_reverses_products(
        p in poly_with(2, 4, integer_coeff()),
        q in poly_with(2, 4, integer_coeff()),
    ) {
        let lhs = (&p * &q).adjoint();
        let rhs = &q.adjoint() * &p.adjoint();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn product_degree_is_subadditive(
        p in poly_with(2, 4, real_coeff()),
        q in poly_with(2, 4, real_coeff()),
    ) {
        prop_assert!((&p * &q).degree() <= p.degree() + q.degree());
    }

    #[test]
    fn text_round_trip_is_exact(p in poly_with(2, 4, real_coeff())) {
        let back = OperatorPolynomial::from_text(&p.to_text()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn realize_is_multiplicative_on_interior(
        p in poly_with(1, 4, real_coeff()),
        q in poly_with(1, 4, real_coeff()),
        extra in 2usize..8,
    ) {
        let (dp, dq) = (p.degree() as usize, q.degree() as usize);
        let m = dp + dq + extra;
        let basis = FockBasis::single(m).unwrap();
        let pq = realize(&(&p * &q), &basis).unwrap().to_dense();
        let prod = realize(&p, &basis).unwrap().to_dense() * realize(&q, &basis).unwrap().to_dense();
        let scale = max_abs(&prod).max(1.0);
        // Rows and columns n, m <= M - deg p - deg q.
        let last = m - dp - dq;
        for i in 0..=last.min(m - 1) {
            for j in 0..=last.min(m - 1) {
                prop_assert!((pq[(i, j)] - prod[(i, j)]).norm() <= 1e-10 * scale,
                    "entry ({}, {}): {} vs {}", i, j, pq[(i, j)], prod[(i, j)]);
            }
        }
    }

    #[test]
    fn realize_commutes_with_adjoint(p in poly_with(2, 4, real_coeff()), m in 5usize..8) {
        let basis = FockBasis::new(vec![m, m]).unwrap();
        let a = realize(&p.adjoint(), &basis).unwrap().to_dense();
        let b = realize(&p, &basis).unwrap().to_dense().adjoint();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coherent_eigen_residual_within_reported_bound(
        r in 0.0f64..3.0,
        phi in 0.0f64..std::f64::consts::TAU,
        m in 12usize..50,
    ) {
        let alpha = Complex64::from_polar(r, phi);
        let basis = FockBasis::single(m).unwrap();
        let (_, info) = coherent_state(alpha, &basis, 1.0).unwrap();
        let psi = product_coherent_vector(&[alpha], &basis, 1.0).unwrap();
        let a = realize(&single::a(), &basis).unwrap().to_dense();
        let residual: f64 = (0..m)
            .map(|i| {
                let ai: Complex64 = (0..m).map(|j| a[(i, j)] * psi[j]).sum();
                (ai - alpha * psi[i]).norm_sqr()
            })
            .sum::<f64>()
            .sqrt();
        prop_assert!(residual <= info.residual_bound + 1e-12,
            "residual {} above bound {}", residual, info.residual_bound);
    }

    #[test]
    fn cat_code_is_orthonormal_and_rotation_invariant(
        r in 1.2f64..3.0,
        phi in 0.0f64..std::f64::consts::TAU,
        l in 1usize..5,
    ) {
        let alpha = Complex64::from_polar(r, phi);
        let m = 60;
        let basis = FockBasis::single(m).unwrap();
        let code = cat_code_basis(alpha, l, &basis).unwrap();
        for (i, u) in code.vectors.iter().enumerate() {
            for (j, v) in code.vectors.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((u.dotc(v) - Complex64::new(expect, 0.0)).norm() <= 1e-12);
            }
        }
        let theta = std::f64::consts::TAU / l as f64;
        let p = code.projector();
        let rotated = CMatrix::from_fn(m, m, |i, j| {
            p[(i, j)] * Complex64::from_polar(1.0, theta * (i as f64 - j as f64))
        });
        prop_assert!(max_abs(&(rotated - &p)) <= 1e-9);
    }
}
