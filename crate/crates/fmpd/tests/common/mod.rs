#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use fmpd::dynamics::{initial_massive4, initial_massless4, initial_spinoptics3, WorldlineState};
use fmpd::geometry::SpinTensor;
use fmpd::jets::{FinslerSpace, NamedField, Scalar, Signature};
use fmpd::spaces::{self, GradedIndex, Params, SpaceDescriptor};

pub fn space(name: &str) -> SpaceDescriptor {
    spaces::build(name, &Params::new()).unwrap()
}

/// `max|a − b| / max(max|b|, floor)`.
pub fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> f64 {
    (a - b).amax() / b.amax().max(floor)
}

pub fn relv(a: &DVector<f64>, b: &DVector<f64>, floor: f64) -> f64 {
    (a - b).amax() / b.amax().max(floor)
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| gauss(rng))
}

pub fn random_antisym(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| gauss(rng));
    &a - a.transpose()
}

/// Graded-index medium without the Randers one-form: a curved Riemannian 3-space.
pub fn graded_riemannian() -> FinslerSpace {
    let probes: Vec<Vec<f64>> = (0..8).map(|i| vec![0.2 * i as f64 - 0.8, 0.1, -0.3]).collect();
    spaces::make_riemannian("graded-index", 3, Signature::PositiveDefinite, GradedIndex { k: 0.3 }, &probes)
        .unwrap()
}

pub fn tilted_observer() -> Arc<NamedField> {
    spaces::observer_field("tilted").unwrap()
}

pub fn spinoptics_state(space: &FinslerSpace, x: &[f64], dir: &[f64], p: f64, signed_s: f64) -> WorldlineState {
    initial_spinoptics3(space, x, dir, p, signed_s).unwrap()
}

pub fn massive_state(space: &FinslerSpace, x: &[f64], dir: &[f64], m: f64, j: &[f64], s: f64) -> WorldlineState {
    initial_massive4(space, x, dir, m, j, s).unwrap()
}

pub fn massless_state(space: &FinslerSpace, x: &[f64], spatial: &[f64], t: &[f64], signed_s: f64) -> WorldlineState {
    initial_massless4(space, x, spatial, t, signed_s).unwrap()
}

pub fn random_spin(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SpinTensor {
    SpinTensor::from_matrix(random_antisym(rng, n) * scale).unwrap()
}

/// Generic curved Lorentzian metric with off-diagonal terms.
pub struct WavyMetric;

impl fmpd::spaces::MetricField for WavyMetric {
    fn metric<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
        let z = S::from(0.0);
        let g00 = (x[1].clone() + x[2].clone()).sin() * 0.2 + 1.0;
        let g11 = -(x[3].clone().cos() * 0.1 + 1.0);
        let g22 = -((x[0].clone() * 0.5).sin() * 0.1 + (x[1].clone() * x[3].clone() * 0.3).cos() * 0.05 + 1.0);
        let g33 = -(x[1].clone().sin() * 0.08 + 1.0);
        let g01 = x[2].clone().sin() * 0.05;
        let g23 = (x[0].clone() + x[1].clone()).cos() * 0.04;
        vec![
            vec![g00, g01.clone(), z.clone(), z.clone()],
            vec![g01, g11, z.clone(), z.clone()],
            vec![z.clone(), z.clone(), g22, g23.clone()],
            vec![z.clone(), z, g23, g33],
        ]
    }
}

pub fn wavy_spacetime() -> FinslerSpace {
    let probes: Vec<Vec<f64>> = (0..8).map(|i| vec![0.3 * i as f64, -0.5, 0.2 * i as f64, 1.0]).collect();
    spaces::make_riemannian("wavy", 4, Signature::Lorentzian, WavyMetric, &probes).unwrap()
}
