mod common;

use std::f64::consts::PI;

use nalgebra::DVector;

use common::*;
use fmpd::dynamics::{ClosureKind, ClosureSpec, WorldlineState};
use fmpd::error::FinslerError;
use fmpd::geometry::SpinTensor;
use fmpd::integrator::{
    conservation_audit, convergence_study, geodesic_convergence_study, integrate,
    integrate_geodesic, IntegratorConfig, Method, Projection, Termination,
};

fn config(tau_end: f64, rel_tol: f64) -> IntegratorConfig {
    IntegratorConfig {
        tau_end,
        rel_tol,
        abs_tol: rel_tol * 1e-3,
        ..IntegratorConfig::default()
    }
}

/// Unit-speed great circle through the equator at heading `a` from the φ axis.
fn great_circle(a: f64, tau: f64) -> [f64; 2] {
    let (x, y, z) = (tau.cos(), tau.sin() * a.cos(), -tau.sin() * a.sin());
    let mut phi = y.atan2(x);
    let turns = (tau / (2.0 * PI)).round();
    if phi < 0.0 && tau > PI {
        phi += 2.0 * PI;
    }
    if (phi + 2.0 * PI * (turns - 1.0) - tau).abs() < (phi - tau).abs() && turns >= 1.0 {
        phi += 2.0 * PI * (turns - 1.0);
    }
    [z.acos(), phi]
}

#[test]
fn flat_geodesic_is_a_straight_line() {
    let d = space("euclidean-3");
    let state = WorldlineState::new(
        0.0,
        DVector::zeros(3),
        DVector::from_vec(vec![1.0, 1.0, 0.0]),
        SpinTensor::zeros(3),
    )
    .unwrap();
    let rec = integrate(&d.space, &ClosureSpec::geodesic(), &state, &config(5.0, 1e-9)).unwrap();
    assert!(rec.termination.is_completed());
    for s in &rec.samples {
        let want = DVector::from_vec(vec![s.state.tau, s.state.tau, 0.0]);
        assert!((&s.state.x - want).amax() <= 1e-12);
    }
    let sol = integrate_geodesic(&d.space, &[0.0; 3], &[1.0, 1.0, 0.0], &config(5.0, 1e-9)).unwrap();
    let end = &sol.final_knot().y;
    assert!((end[0] - 5.0).abs() <= 1e-12 && (end[1] - 5.0).abs() <= 1e-12 && end[2].abs() <= 1e-12);
}

#[test]
fn sphere_geodesic_closes_after_two_pi() {
    let d = space("sphere");
    let a: f64 = 0.6;
    let v0 = [a.sin(), a.cos()];
    let sol = integrate_geodesic(&d.space, &[PI / 2.0, 0.0], &v0, &config(2.0 * PI, 1e-10)).unwrap();
    assert!(sol.termination.is_completed());
    let end = &sol.final_knot().y;
    assert!((end[0] - PI / 2.0).abs() <= 1e-8, "{end:?}");
    assert!((end[1] - 2.0 * PI).abs() <= 1e-8, "{end:?}");
    // Dense output between steps follows the closed form.
    for k in 1..20 {
        let tau = 2.0 * PI * k as f64 / 20.0 + 0.013;
        let y = sol.at(tau).unwrap();
        let want = great_circle(a, tau);
        assert!((y[0] - want[0]).abs() < 1e-6 && (y[1] - want[1]).abs() < 1e-6, "{tau}: {y:?} vs {want:?}");
    }
}

#[test]
fn sphere_worldline_conserves_rotation_charges() {
    let d = space("sphere");
    let a: f64 = 0.6;
    let state = WorldlineState::new(
        0.0,
        DVector::from_vec(vec![PI / 2.0, 0.0]),
        DVector::from_vec(vec![a.sin(), a.cos()]),
        SpinTensor::zeros(2),
    )
    .unwrap();
    let rec = integrate(&d.space, &ClosureSpec::geodesic(), &state, &config(2.0 * PI, 1e-10)).unwrap();
    let audit = conservation_audit(&rec, &["rotation-x", "rotation-y", "rotation-z"]).unwrap();
    assert!(audit.worst_conserved() <= 1e-7, "{audit:?}");
    assert!(audit.pp.drift <= 1e-8);
    let end = &rec.final_state().x;
    assert!((end[0] - PI / 2.0).abs() <= 1e-8 && (end[1] - 2.0 * PI).abs() <= 1e-8);
}

#[test]
fn spinoptics_in_flat_space_is_a_straight_ray() {
    let d = space("euclidean-3");
    let state = spinoptics_state(&d.space, &[0.0; 3], &[1.0, 2.0, 2.0], 3.0, 0.2);
    let spec = ClosureSpec::spinoptics3(3.0, 0.2, 1.0).unwrap();
    let rec = integrate(&d.space, &spec, &state, &config(4.0, 1e-9)).unwrap();
    assert!(rec.termination.is_completed());
    let end = rec.final_state();
    let want = DVector::from_vec(vec![1.0, 2.0, 2.0]) * (4.0 / 3.0);
    assert!((&end.x - want).amax() < 1e-12);
    let names = rec.killing_names();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let audit = conservation_audit(&rec, &refs).unwrap();
    assert!(audit.worst_conserved() <= 1e-12, "{audit:?}");
    assert!(audit.pp.drift <= 1e-12 && audit.s2.drift <= 1e-12);
}

#[test]
fn geodesic_self_convergence_is_fourth_order() {
    let base = IntegratorConfig {
        tau_end: 6.0,
        ..IntegratorConfig::default()
    };
    let tols = [1e-5, 1e-6, 1e-7, 1e-8, 1e-11];
    let sphere = space("sphere");
    let r = geodesic_convergence_study(&sphere.space, &[1.0, 0.3], &[0.4, 0.9], &base, &tols).unwrap();
    assert!(r.order >= 4.0, "{r:?}");
    let randers = space("randers-varying");
    let r = geodesic_convergence_study(&randers.space, &[-1.0, 0.5], &[1.0, 0.2], &base, &tols).unwrap();
    assert!(r.order >= 4.0, "{r:?}");
    let fixed = IntegratorConfig {
        method: Method::Rk4Fixed,
        ..base
    };
    let r = geodesic_convergence_study(&sphere.space, &[1.0, 0.3], &[0.4, 0.9], &fixed, &[0.2, 0.1, 0.05, 0.002]).unwrap();
    assert!((r.order - 4.0).abs() < 0.3, "{r:?}");
}

#[test]
fn singular_study_aborts() {
    let d = space("minkowski-4");
    let state = massless_state(&d.space, &[0.0; 4], &[0.3, 0.4, 1.0], &[1.0, 0.0, 0.0, 0.0], 1.0);
    let spec = ClosureSpec::massless4_exact(1.0, 1.0).unwrap();
    let err = convergence_study(&d.space, &spec, &state, &config(1.0, 1e-8), &[1e-6, 1e-7, 1e-8]).unwrap_err();
    assert!(matches!(err, FinslerError::ClosureSingularity { .. }), "{err:?}");
}

#[test]
fn reruns_are_bit_identical() {
    let d = space("randers-axisym3");
    let spec = ClosureSpec::spinoptics3(1.0, 0.1, -1.0).unwrap();
    let state = spinoptics_state(&d.space, &[0.4, -0.2, 0.0], &[0.3, 0.5, 1.0], 1.0, spec.signed_s());
    let cfg = config(1.0, 1e-8);
    let a = integrate(&d.space, &spec, &state, &cfg).unwrap();
    let b = integrate(&d.space, &spec, &state, &cfg).unwrap();
    assert_eq!(a.samples, b.samples);
    assert_eq!(a.steps, b.steps);
}

#[test]
fn projection_pins_the_casimirs() {
    let d = space("randers-axisym3");
    let spec = ClosureSpec::spinoptics3(1.0, 0.1, 1.0).unwrap();
    let state = spinoptics_state(&d.space, &[0.4, -0.2, 0.0], &[0.3, 0.5, 1.0], 1.0, 0.1);
    let cfg = IntegratorConfig {
        projection: Projection::RenormalizeConstraints,
        ..config(1.0, 1e-6)
    };
    let rec = integrate(&d.space, &spec, &state, &cfg).unwrap();
    let audit = conservation_audit(&rec, &[]).unwrap();
    assert!(audit.pp.drift <= 1e-14 && audit.tulczyjew <= 1e-14, "{audit:?}");
}

#[test]
fn step_underflow_is_reported() {
    let d = space("sphere");
    let state = WorldlineState::new(
        0.0,
        DVector::from_vec(vec![1.0, 0.0]),
        DVector::from_vec(vec![0.3, 1.0]),
        SpinTensor::zeros(2),
    )
    .unwrap();
    let cfg = IntegratorConfig {
        min_step: 0.5,
        max_step: 1.0,
        initial_step: Some(1.0),
        ..config(10.0, 1e-12)
    };
    let rec = integrate(&d.space, &ClosureSpec::geodesic(), &state, &cfg).unwrap();
    assert!(matches!(rec.termination, Termination::Stiffness { .. }), "{:?}", rec.termination);
}

#[test]
fn initial_constraints_are_enforced() {
    let d = space("randers-axisym3");
    let state = spinoptics_state(&d.space, &[0.0; 3], &[0.0, 0.0, 1.0], 1.0, 0.1);
    let wrong_p = ClosureSpec::spinoptics3(2.0, 0.1, 1.0).unwrap();
    assert!(matches!(
        integrate(&d.space, &wrong_p, &state, &config(1.0, 1e-8)),
        Err(FinslerError::Constraint(_))
    ));
    let wrong_dim = ClosureSpec::massive4(1.0, 0.1).unwrap();
    assert!(integrate(&d.space, &wrong_dim, &state, &config(1.0, 1e-8)).is_err());
    assert_eq!(wrong_dim.kind, ClosureKind::Massive4d);
}

#[test]
fn config_validation() {
    assert!(IntegratorConfig { rel_tol: 0.0, ..IntegratorConfig::default() }.validate().is_err());
    assert!(IntegratorConfig { min_step: 2.0, ..IntegratorConfig::default() }.validate().is_err());
    let json = serde_json_like(&IntegratorConfig::default());
    assert!(json.contains("Rk45Adaptive"));
}

fn serde_json_like(c: &IntegratorConfig) -> String {
    format!("{c:?}")
}
