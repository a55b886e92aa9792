//! Property tests for the algebraic and homogeneity invariants.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use fmpd::dynamics::{footnote_discrepancy, pfaffian4, pfaffian_identity_residual};
use fmpd::geometry::{frame_at, Needs, SpinTensor};
use fmpd::jets::FinslerSpace;
use fmpd::spaces::{self, Params};

fn antisym(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            m[(i, j)] = v[k];
            m[(j, i)] = -v[k];
            k += 1;
        }
    }
    m
}

/// Lorentzian metric `η + ε h` with small symmetric `h`.
fn metric(h: &[f64]) -> DMatrix<f64> {
    let mut g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, -1.0, -1.0]));
    let mut k = 0;
    for i in 0..4 {
        for j in i..4 {
            g[(i, j)] += 0.3 * h[k];
            g[(j, i)] = g[(i, j)];
            k += 1;
        }
    }
    g
}

fn randers() -> FinslerSpace {
    spaces::build("randers-axisym3", &Params::new()).unwrap().space
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spin_tensor_is_antisymmetric(v in prop::collection::vec(-5.0..5.0f64, 6)) {
        let s = SpinTensor::from_upper(4, &v).unwrap();
        let m = s.upper_matrix();
        prop_assert!((m + m.transpose()).amax() == 0.0);
        prop_assert_eq!(s.upper(), v);
        prop_assert!(SpinTensor::from_matrix(DMatrix::identity(4, 4)).is_err());
    }

    #[test]
    fn pfaffian_identity(
        om in prop::collection::vec(-2.0..2.0f64, 6),
        f in prop::collection::vec(-2.0..2.0f64, 6),
        h in prop::collection::vec(-1.0..1.0f64, 10),
    ) {
        let g = metric(&h);
        prop_assume!(g.clone().determinant().abs() > 0.05);
        let (om, f) = (antisym(&om, 4), antisym(&f, 4));
        let gi = g.clone().try_inverse().unwrap();
        let scale = om.amax().powi(2).max(1e-3) * f.amax().max(1e-3) * gi.amax().powi(2);
        let r = pfaffian_identity_residual(&om, &f, &g).unwrap().amax() / scale;
        prop_assert!(r <= 1e-10, "residual {}", r);
        let pf = pfaffian4(&om, &g).unwrap();
        let det = om.clone().determinant() / g.clone().determinant().abs();
        prop_assert!((pf * pf - det).abs() <= 1e-10 * det.abs().max(1.0));
    }

    #[test]
    fn footnote_inverse_matches_lu(a in prop::collection::vec(-1.0..1.0f64, 12), b in prop::collection::vec(-1.0..1.0f64, 12)) {
        let m = DMatrix::from_row_slice(4, 3, &a) * DMatrix::from_row_slice(3, 4, &b);
        let d = footnote_discrepancy(&m);
        prop_assume!(d.is_ok());
        prop_assert!(d.unwrap() <= 1e-10);
    }

    #[test]
    fn frame_is_degree_zero_in_y(
        x in prop::collection::vec(-1.0..1.0f64, 3),
        y in prop::collection::vec(-2.0..2.0f64, 3),
        lambda in 0.1..10.0f64,
    ) {
        prop_assume!(y.iter().map(|v| v * v).sum::<f64>() > 0.01);
        let space = randers();
        let ys: Vec<f64> = y.iter().map(|v| v * lambda).collect();
        let a = frame_at(&space, &x, &y, Needs::ALL).unwrap();
        let b = frame_at(&space, &x, &ys, Needs::ALL).unwrap();
        prop_assert!((a.g() - b.g()).amax() <= 1e-9 * a.g().amax());
        prop_assert!((a.l_section().unwrap() - b.l_section().unwrap()).amax() <= 1e-9);
        let (ca, cb) = (a.cartan_homogeneous().unwrap(), b.cartan_homogeneous().unwrap());
        let diff = ca.data().iter().zip(cb.data()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-9 * ca.max_abs().max(1.0));
        let (ga, gb) = (a.chern().unwrap(), b.chern().unwrap());
        let diff = ga.data().iter().zip(gb.data()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-9 * ga.max_abs().max(1.0));
        // N^ν_μ is degree one.
        let na = a.nonlinear().unwrap() * lambda;
        prop_assert!((na - b.nonlinear().unwrap()).amax() <= 1e-9 * (lambda * a.nonlinear().unwrap().amax()).max(1.0));
    }

    #[test]
    fn l_is_two_homogeneous(
        x in prop::collection::vec(-1.0..1.0f64, 3),
        y in prop::collection::vec(-2.0..2.0f64, 3),
        lambda in 0.1..10.0f64,
    ) {
        prop_assume!(y.iter().map(|v| v * v).sum::<f64>() > 0.01);
        let space = randers();
        let ys: Vec<f64> = y.iter().map(|v| v * lambda).collect();
        let (l, ls) = (space.l(&x, &y).unwrap(), space.l(&x, &ys).unwrap());
        prop_assert!((ls - lambda * lambda * l).abs() <= 1e-12 * ls.abs().max(1.0));
    }
}
