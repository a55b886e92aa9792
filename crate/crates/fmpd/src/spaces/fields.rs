use std::sync::Arc;

use crate::jets::{KillingField, NamedField, Scalar, VectorField};

fn zeros<S: Scalar>(n: usize) -> Vec<S> {
    (0..n).map(|_| S::from(0.0)).collect()
}

/// Coordinate translation `∂_i`.
pub struct Translation {
    pub n: usize,
    pub axis: usize,
}

impl VectorField for Translation {
    fn eval<S: Scalar>(&self, _x: &[S]) -> Vec<S> {
        let mut z = zeros(self.n);
        z[self.axis] = S::from(1.0);
        z
    }
}

/// Rotation `x^i ∂_j − x^j ∂_i` in the `(i, j)` plane.
pub struct Rotation {
    pub n: usize,
    pub i: usize,
    pub j: usize,
}

impl VectorField for Rotation {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let mut z = zeros(self.n);
        z[self.j] = x[self.i].clone();
        z[self.i] = -x[self.j].clone();
        z
    }
}

/// Boost `x^i ∂_0 + x^0 ∂_i` for the `(+, −, −, −)` signature.
pub struct Boost {
    pub n: usize,
    pub i: usize,
}

impl VectorField for Boost {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let mut z = zeros(self.n);
        z[0] = x[self.i].clone();
        z[self.i] = x[0].clone();
        z
    }
}

/// Rotations of the round sphere in `(θ, φ)` coordinates.
pub struct SphereRotation {
    pub axis: usize,
}

impl VectorField for SphereRotation {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let (th, ph) = (&x[0], &x[1]);
        let cot = th.cos() / th.sin();
        match self.axis {
            0 => vec![-ph.sin(), -(cot * ph.cos())],
            1 => vec![ph.cos(), -(cot * ph.sin())],
            _ => vec![S::from(0.0), S::from(1.0)],
        }
    }
}

pub fn translation(name: &str, n: usize, axis: usize) -> KillingField {
    KillingField::new(name, Translation { n, axis })
}

pub fn rotation(name: &str, n: usize, i: usize, j: usize) -> KillingField {
    KillingField::new(name, Rotation { n, i, j })
}

pub fn boost(name: &str, n: usize, i: usize) -> KillingField {
    KillingField::new(name, Boost { n, i })
}

pub fn sphere_rotation(name: &str, axis: usize) -> KillingField {
    KillingField::new(name, SphereRotation { axis })
}

/// Observer `t = (1 + 0.01 x¹, 0.05 x², 0, 0.02 x³)`: nearly static, with a
/// position-dependent tilt so that `∇t ≠ 0` even in flat space.
pub struct TiltedObserver;

impl VectorField for TiltedObserver {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![
            x[1].clone() * 0.01 + 1.0,
            x[2].clone() * 0.05,
            S::from(0.0),
            x[3].clone() * 0.02,
        ]
    }
}

/// Named observer fields for the massless observer closure: `static` (`∂_0`)
/// and `tilted` ([`TiltedObserver`]).
pub fn observer_field(name: &str) -> Option<Arc<NamedField>> {
    match name {
        "static" => Some(Arc::new(NamedField::new("static", Translation { n: 4, axis: 0 }))),
        "tilted" => Some(Arc::new(NamedField::new("tilted", TiltedObserver))),
        _ => None,
    }
}
