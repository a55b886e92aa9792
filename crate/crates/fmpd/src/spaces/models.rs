use nalgebra::DMatrix;

use crate::error::{FinslerError, Result};
use crate::jets::{dot, quadratic_form, FinslerSpace, Lagrangian, Scalar, Signature};

use super::fields;

/// A position-dependent symmetric matrix `g̃_ij(x)`, rows of length `n`.
pub trait MetricField: Send + Sync + 'static {
    fn metric<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>>;
}

/// A position-dependent covector `b_i(x)`.
pub trait OneFormField: Send + Sync + 'static {
    fn form<S: Scalar>(&self, x: &[S]) -> Vec<S>;
}

/// `L = g̃_ij(x) y^i y^j`.
pub struct Riemannian<M>(pub M);

impl<M: MetricField> Lagrangian for Riemannian<M> {
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        quadratic_form(&self.0.metric(x), y)
    }
}

/// `L = (√(a_ij y^i y^j) + b_i y^i)²`.
pub struct Randers<M, B> {
    pub a: M,
    pub b: B,
}

impl<M: MetricField, B: OneFormField> Lagrangian for Randers<M, B> {
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        let alpha = quadratic_form(&self.a.metric(x), y).sqrt();
        (alpha + dot(&self.b.form(x), y)).square()
    }
}

fn metric_at<M: MetricField>(m: &M, x: &[f64]) -> DMatrix<f64> {
    let rows = m.metric(x);
    DMatrix::from_fn(rows.len(), rows.len(), |i, j| rows[i][j])
}

/// Constant metric `diag(entries)`.
pub struct ConstantDiagonal(pub Vec<f64>);

impl MetricField for ConstantDiagonal {
    fn metric<S: Scalar>(&self, _x: &[S]) -> Vec<Vec<S>> {
        let n = self.0.len();
        (0..n)
            .map(|i| (0..n).map(|j| S::from(if i == j { self.0[i] } else { 0.0 })).collect())
            .collect()
    }
}

/// Round unit sphere in `(θ, φ)`.
pub struct RoundSphere;

impl MetricField for RoundSphere {
    fn metric<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
        let s = x[0].sin();
        vec![vec![S::from(1.0), S::from(0.0)], vec![S::from(0.0), s.square()]]
    }
}

/// `diag(1 + x¹, 1)`.
pub struct LinearDiagonal;

impl MetricField for LinearDiagonal {
    fn metric<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
        vec![
            vec![x[0].clone() + 1.0, S::from(0.0)],
            vec![S::from(0.0), S::from(1.0)],
        ]
    }
}

/// Isotropic medium `n(ρ)² δ` with `n = 1 + k e^{−ρ²}`, `ρ` the distance to the `z` axis.
pub struct GradedIndex {
    pub k: f64,
}

impl GradedIndex {
    pub fn index<S: Scalar>(&self, x: &[S]) -> S {
        let rho2 = x[0].square() + x[1].square();
        (-rho2).exp() * self.k + 1.0
    }
}

impl MetricField for GradedIndex {
    fn metric<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
        let n2 = self.index(x).square();
        (0..3)
            .map(|i| (0..3).map(|j| if i == j { n2.clone() } else { S::from(0.0) }).collect())
            .collect()
    }
}

/// Weak-field Schwarzschild in isotropic coordinates:
/// `g̃ = diag(1 − 2M/r, −(1 + 2M/r), −(1 + 2M/r), −(1 + 2M/r))`.
pub struct WeakSchwarzschild {
    pub mass: f64,
}

impl MetricField for WeakSchwarzschild {
    fn metric<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
        let r = (x[1].square() + x[2].square() + x[3].square()).sqrt();
        let phi = r.recip() * (2.0 * self.mass);
        (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| match (i, j) {
                        (0, 0) => -phi.clone() + 1.0,
                        _ if i == j => -(phi.clone() + 1.0),
                        _ => S::from(0.0),
                    })
                    .collect()
            })
            .collect()
    }
}

/// Constant covector.
pub struct ConstantForm(pub Vec<f64>);

impl OneFormField for ConstantForm {
    fn form<S: Scalar>(&self, _x: &[S]) -> Vec<S> {
        self.0.iter().map(|&v| S::from(v)).collect()
    }
}

/// `b = (k / (1 + (x²)²), 0)`.
pub struct DecayingForm {
    pub k: f64,
}

impl OneFormField for DecayingForm {
    fn form<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![(x[1].square() + 1.0).recip() * self.k, S::from(0.0)]
    }
}

/// Weak-field Schwarzschild plus the quartic anisotropy `ε (y³)⁴ / (y⁰)²`.
pub struct AnisotropicSchwarzschild {
    pub base: WeakSchwarzschild,
    pub epsilon: f64,
}

impl Lagrangian for AnisotropicSchwarzschild {
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        let quad = quadratic_form(&self.base.metric(x), y);
        quad + y[3].square().square() / y[0].square() * self.epsilon
    }
}

fn signature_ok(g: &DMatrix<f64>, signature: Signature) -> bool {
    let eig = g.clone().symmetric_eigen().eigenvalues;
    let scale = eig.amax();
    let pos = eig.iter().filter(|&&v| v > 1e-12 * scale).count();
    let neg = eig.iter().filter(|&&v| v < -1e-12 * scale).count();
    match signature {
        Signature::PositiveDefinite => pos == g.nrows(),
        Signature::Lorentzian => pos == 1 && neg == g.nrows() - 1,
    }
}

/// `L = g̃_ij(x) y^i y^j`, rejected if `g̃` is degenerate or of the wrong
/// signature at any probe point.
pub fn make_riemannian<M: MetricField>(
    name: &str,
    n: usize,
    signature: Signature,
    metric: M,
    probes: &[Vec<f64>],
) -> Result<FinslerSpace> {
    for x in probes {
        let g = metric_at(&metric, x);
        if g.nrows() != n {
            return Err(FinslerError::Construction(format!(
                "metric of size {} in dimension {n}",
                g.nrows()
            )));
        }
        if !signature_ok(&g, signature) || (&g - g.transpose()).amax() > 1e-12 * g.amax() {
            return Err(FinslerError::Construction(format!(
                "metric at x = {x:?} is degenerate, asymmetric or not {signature:?}"
            )));
        }
    }
    Ok(FinslerSpace::new(name, n, signature, Riemannian(metric))?.mark_riemannian())
}

/// `L = (√(a(y, y)) + b(y))²`, rejected unless `‖b‖_a < 1` at every probe point.
pub fn make_randers<M: MetricField, B: OneFormField>(
    name: &str,
    n: usize,
    a: M,
    b: B,
    probes: &[Vec<f64>],
) -> Result<FinslerSpace> {
    for x in probes {
        let am = metric_at(&a, x);
        if am.nrows() != n || !signature_ok(&am, Signature::PositiveDefinite) {
            return Err(FinslerError::Construction(format!(
                "Randers metric a is not positive definite at x = {x:?}"
            )));
        }
        let bv = nalgebra::DVector::from_vec(b.form(x));
        let inv = am.try_inverse().expect("positive definite");
        let norm = bv.dot(&(inv * &bv)).sqrt();
        if !(norm < 1.0) {
            return Err(FinslerError::Construction(format!(
                "Randers one-form has ‖b‖ = {norm:.6} ≥ 1 at x = {x:?}"
            )));
        }
    }
    let space = FinslerSpace::new(name, n, Signature::PositiveDefinite, Randers { a, b })?;
    Ok(space)
}

/// Flat space with the full isometry algebra as Killing fields.
pub fn make_flat(n: usize, signature: Signature) -> Result<FinslerSpace> {
    if !(2..=4).contains(&n) {
        return Err(FinslerError::Construction(format!(
            "flat spaces are provided for n in 2..=4, got {n}"
        )));
    }
    let diag: Vec<f64> = match signature {
        Signature::PositiveDefinite => vec![1.0; n],
        Signature::Lorentzian => (0..n).map(|i| if i == 0 { 1.0 } else { -1.0 }).collect(),
    };
    let name = match signature {
        Signature::PositiveDefinite => format!("euclidean-{n}"),
        Signature::Lorentzian => format!("minkowski-{n}"),
    };
    let mut space =
        FinslerSpace::new(&name, n, signature, Riemannian(ConstantDiagonal(diag)))?.mark_riemannian();
    for i in 0..n {
        space = space.with_killing(fields::translation(&format!("translation-{i}"), n, i));
    }
    let first_spatial = usize::from(signature == Signature::Lorentzian);
    for i in first_spatial..n {
        for j in i + 1..n {
            space = space.with_killing(fields::rotation(&format!("rotation-{i}{j}"), n, i, j));
        }
    }
    if signature == Signature::Lorentzian {
        for i in 1..n {
            space = space.with_killing(fields::boost(&format!("boost-{i}"), n, i));
        }
    }
    Ok(space)
}
