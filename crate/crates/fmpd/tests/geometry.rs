use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fmpd::geometry::{
    cartan_connection_at, covariant_rate_along, curvature_contractions, frame_at, killing_residual,
    Connection, CurveTensor, Needs, SpinTensor,
};
use fmpd::spaces::{self, Params};

fn space(name: &str) -> spaces::SpaceDescriptor {
    spaces::build(name, &Params::new()).unwrap()
}

#[test]
fn euclidean_frame_is_trivial() {
    let d = space("euclidean-3");
    let f = frame_at(&d.space, &[0.3, -1.0, 2.0], &[1.0, 0.0, 0.0], Needs::ALL).unwrap();
    assert_abs_diff_eq!(f.g().clone(), DMatrix::identity(3, 3), epsilon = 1e-14);
    assert!(f.spray().unwrap().amax() < 1e-14);
    assert!(f.nonlinear().unwrap().amax() < 1e-14);
    assert!(f.chern().unwrap().max_abs() < 1e-14);
    assert!(f.curvature().unwrap().max_abs() < 1e-14);
}

#[test]
fn sphere_matches_levi_civita_and_gaussian_curvature() {
    let d = space("sphere");
    let th: f64 = 1.1;
    let f = frame_at(&d.space, &[th, 0.4], &[0.3, -0.8], Needs::ALL).unwrap();
    let gam = f.chern().unwrap();
    // Γ^θ_φφ = −sinθ cosθ, Γ^φ_θφ = cotθ.
    assert_abs_diff_eq!(gam[(0, 1, 1)], -th.sin() * th.cos(), epsilon = 1e-12);
    assert_abs_diff_eq!(gam[(1, 0, 1)], th.cos() / th.sin(), epsilon = 1e-12);
    assert_abs_diff_eq!(gam[(1, 1, 0)], th.cos() / th.sin(), epsilon = 1e-12);
    assert_abs_diff_eq!(gam[(0, 0, 0)], 0.0, epsilon = 1e-12);
    // Lowering the upper slot: g_{θμ} R_φ^μ_{θφ} = sin²θ, and the slot pair
    // (ν, μ) is antisymmetric on a Riemannian space.
    let r = f.curvature().unwrap();
    let g = f.g();
    let lowered = |nu: usize, mu: usize, l: usize, s: usize| -> f64 {
        (0..2).map(|a| g[(mu, a)] * r[(nu, a, l, s)]).sum()
    };
    assert_abs_diff_eq!(lowered(1, 0, 0, 1), th.sin().powi(2), epsilon = 1e-10);
    assert_abs_diff_eq!(lowered(0, 1, 0, 1), -th.sin().powi(2), epsilon = 1e-10);
    assert!(f.cartan().unwrap().max_abs() < 1e-13);
}

#[test]
fn linear_diag_christoffels() {
    let d = space("linear-diag");
    let x0: f64 = 0.7;
    let f = frame_at(&d.space, &[x0, 0.2], &[1.0, 0.5], Needs::CONNECTIONS).unwrap();
    let gam = f.chern().unwrap();
    assert_abs_diff_eq!(gam[(0, 0, 0)], 0.5 / (1.0 + x0), epsilon = 1e-12);
    for (a, b, c) in [(0, 0, 1), (0, 1, 1), (1, 0, 0), (1, 1, 1), (1, 0, 1)] {
        assert_abs_diff_eq!(gam[(a, b, c)], 0.0, epsilon = 1e-12);
    }
}

#[test]
fn declared_killing_fields_pass_on_every_catalog_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in spaces::catalog() {
        for _ in 0..20 {
            let (x, y) = d.sample_point(&mut rng);
            for z in d.space.killing_fields() {
                let r = killing_residual(&d.space, z, &x, &y).unwrap();
                assert!(r <= 1e-8, "{} / {}: residual {r:e} at {x:?} {y:?}", d.name, z.name);
            }
        }
    }
}

#[test]
fn non_killing_field_is_detected() {
    let d = space("linear-diag");
    let z = fmpd::jets::KillingField::new("shift", spaces::Translation { n: 2, axis: 0 });
    let r = killing_residual(&d.space, &z, &[0.3, 0.1], &[1.0, 0.4]).unwrap();
    assert!(r > 1e-3);
}

#[test]
fn randers_constant_has_zero_spray_but_nonzero_cartan() {
    let d = space("randers-const");
    let f = frame_at(&d.space, &[0.2, 0.1], &[1.0, 1.0], Needs::ALL).unwrap();
    assert!(f.spray().unwrap().amax() < 1e-13);
    assert!(f.curvature().unwrap().max_abs() < 1e-12);
    assert!(f.cartan().unwrap().max_abs() > 1e-3);
}

#[test]
fn chern_and_cartan_coincide_on_riemannian_spaces() {
    let d = space("sphere");
    let f = frame_at(&d.space, &[1.0, 0.3], &[0.4, 0.9], Needs::ALL).unwrap();
    let conn = cartan_connection_at(&f).unwrap();
    assert!(conn.vertical.max_abs() < 1e-13);
    let t = CurveTensor::Vector(DVector::from_vec(vec![0.3, -0.2]));
    let raw = CurveTensor::Vector(DVector::from_vec(vec![0.1, 0.7]));
    let xd = DVector::from_vec(vec![0.5, 0.5]);
    let vd = DVector::from_vec(vec![-0.3, 0.2]);
    let a = covariant_rate_along(&f, &t, &raw, &xd, &vd, Connection::Chern).unwrap();
    let b = covariant_rate_along(&f, &t, &raw, &xd, &vd, Connection::Cartan).unwrap();
    match (a, b) {
        (CurveTensor::Vector(a), CurveTensor::Vector(b)) => assert!((a - b).amax() < 1e-13),
        _ => unreachable!(),
    }
}

#[test]
fn riemannian_contractions_vanish_except_r() {
    let d = space("schwarzschild-weak");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (x, y) = d.sample_point(&mut rng);
    let f = frame_at(&d.space, &x, &y, Needs::ALL).unwrap();
    let s = SpinTensor::from_upper(4, &[0.1, -0.2, 0.05, 0.3, 0.07, -0.1]).unwrap();
    let c = curvature_contractions(&f, &s).unwrap();
    assert!(c.p_s().unwrap().amax() < 1e-12);
    assert!(c.q_s().unwrap().amax() < 1e-12);
    assert!(c.r_s.amax() > 1e-6);
}

#[test]
fn identities_hold_on_every_catalog_space() {
    use fmpd::geometry::identity_residuals;
    for (k, d) in spaces::catalog().iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(40 + k as u64);
        for _ in 0..8 {
            let (x, y) = d.sample_point(&mut rng);
            let r = identity_residuals(&d.space, &x, &y).unwrap();
            let name = &d.name;
            assert!(r.euler <= 1e-10 && r.cartan_l <= 1e-10, "{name}: {r:?}");
            assert!(r.h_metricity <= 1e-7 && r.v_metricity <= 1e-7, "{name}: {r:?}");
            assert!(r.bianchi <= 1e-6 && r.antisymmetry_defect <= 1e-6, "{name}: {r:?}");
            assert!(r.interchange_hh <= 1e-6, "{name}: {r:?}");
            assert!(r.interchange_hv.is_none_or(|v| v <= 1e-6), "{name}: {r:?}");
            assert_eq!(r.interchange_hv.is_some(), d.space.is_riemannian());
            if let (Some(h), Some(v)) = (r.l_horizontal, r.l_vertical) {
                assert!(h <= 1e-10 && v <= 1e-10, "{name}: {r:?}");
            }
        }
    }
}

#[test]
fn antisymmetry_defect_needs_the_cartan_term() {
    // On a Randers space R_{μνλσ} alone is not antisymmetric in (μ, ν).
    let d = space("randers-axisym3");
    let (x, y) = ([0.3, -0.2, 0.1], [0.4, 0.2, 1.0]);
    let f = frame_at(&d.space, &x, &y, Needs::ALL).unwrap();
    let (r, g) = (f.curvature().unwrap(), f.g());
    let mut sym = 0.0f64;
    for mu in 0..3 {
        for nu in 0..3 {
            for l in 0..3 {
                for s in 0..3 {
                    let low = |a: usize, b: usize| (0..3).map(|e| g[(b, e)] * r[(a, e, l, s)]).sum::<f64>();
                    sym = sym.max((low(mu, nu) + low(nu, mu)).abs());
                }
            }
        }
    }
    assert!(sym > 1e-3, "{sym}");
    let res = fmpd::geometry::identity_residuals(&d.space, &x, &y).unwrap();
    assert!(res.antisymmetry_defect <= 1e-12, "{}", res.antisymmetry_defect);
}
