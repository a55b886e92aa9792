use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dd::DoubleDouble;
use super::hyperdual::HyperDual;
use super::scalar::Scalar;
use super::taylor::{Layout, Taylor};
use crate::error::{FinslerError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Signature {
    PositiveDefinite,
    /// `(+, −, −, −)`.
    Lorentzian,
}

/// A degree-2 homogeneous function `L(x, y)`, written once for every scalar type.
pub trait Lagrangian: Send + Sync + 'static {
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> S;
}

/// Object-safe view of a [`Lagrangian`] at the scalar types the crate uses.
pub trait DynLagrangian: Send + Sync {
    fn eval_f64(&self, x: &[f64], y: &[f64]) -> f64;
    fn eval_taylor(&self, x: &[Taylor], y: &[Taylor]) -> Taylor;
    fn eval_dd(&self, x: &[DoubleDouble], y: &[DoubleDouble]) -> DoubleDouble;
    fn eval_hyper(&self, x: &[HyperDual], y: &[HyperDual]) -> HyperDual;
}

impl<T: Lagrangian> DynLagrangian for T {
    fn eval_f64(&self, x: &[f64], y: &[f64]) -> f64 {
        self.eval(x, y)
    }
    fn eval_taylor(&self, x: &[Taylor], y: &[Taylor]) -> Taylor {
        self.eval(x, y)
    }
    fn eval_dd(&self, x: &[DoubleDouble], y: &[DoubleDouble]) -> DoubleDouble {
        self.eval(x, y)
    }
    fn eval_hyper(&self, x: &[HyperDual], y: &[HyperDual]) -> HyperDual {
        self.eval(x, y)
    }
}

/// A vector field `Z^μ(x)` on the base manifold.
pub trait VectorField: Send + Sync + 'static {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S>;
}

pub trait DynVectorField: Send + Sync {
    fn eval_f64(&self, x: &[f64]) -> Vec<f64>;
    fn eval_taylor(&self, x: &[Taylor]) -> Vec<Taylor>;
}

impl<T: VectorField> DynVectorField for T {
    fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        self.eval(x)
    }
    fn eval_taylor(&self, x: &[Taylor]) -> Vec<Taylor> {
        self.eval(x)
    }
}

/// A named vector field together with its first derivatives.
#[derive(Clone)]
pub struct NamedField {
    pub name: String,
    field: Arc<dyn DynVectorField>,
}

impl fmt::Debug for NamedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NamedField").field("name", &self.name).finish()
    }
}

impl NamedField {
    pub fn new(name: impl Into<String>, field: impl VectorField) -> Self {
        NamedField {
            name: name.into(),
            field: Arc::new(field),
        }
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        self.field.eval_f64(x)
    }

    /// Value and Jacobian `J[κ][μ] = ∂_μ Z^κ`.
    pub fn value_and_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let n = x.len();
        let layout = Layout::get(n, 1);
        let xs: Vec<Taylor> = (0..n).map(|i| Taylor::variable(&layout, i, x[i])).collect();
        let z = self.field.eval_taylor(&xs);
        if z.len() != n {
            return Err(FinslerError::RejectedInput(format!(
                "field `{}` has {} components in dimension {}",
                self.name,
                z.len(),
                n
            )));
        }
        let mut e = vec![0u8; n];
        let value: Vec<f64> = z.iter().map(|c| c.value()).collect();
        let jac = DMatrix::from_fn(n, n, |k, m| {
            e.iter_mut().for_each(|v| *v = 0);
            e[m] = 1;
            z[k].partial(&e)
        });
        if value.iter().chain(jac.iter()).any(|v| !v.is_finite()) {
            return Err(FinslerError::EvaluationFailure {
                what: format!("field `{}`", self.name),
                x: x.to_vec(),
                y: vec![],
            });
        }
        Ok((value, jac))
    }
}

pub type KillingField = NamedField;

/// Dimension, signature, `L` and declared Killing fields.
#[derive(Clone)]
pub struct FinslerSpace {
    name: String,
    n: usize,
    signature: Signature,
    lagrangian: Arc<dyn DynLagrangian>,
    killing: Vec<KillingField>,
    riemannian: bool,
}

impl fmt::Debug for FinslerSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FinslerSpace")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("signature", &self.signature)
            .field("killing", &self.killing)
            .field("riemannian", &self.riemannian)
            .finish()
    }
}

impl FinslerSpace {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        signature: Signature,
        lagrangian: impl Lagrangian,
    ) -> Result<Self> {
        if n < 2 {
            return Err(FinslerError::Construction(format!("dimension {n} < 2")));
        }
        Ok(FinslerSpace {
            name: name.into(),
            n,
            signature,
            lagrangian: Arc::new(lagrangian),
            killing: Vec::new(),
            riemannian: false,
        })
    }

    pub fn with_killing(mut self, field: KillingField) -> Self {
        self.killing.push(field);
        self
    }

    /// Marks `L` as quadratic in `y` (a Riemannian space, `A = 0`).
    pub fn mark_riemannian(mut self) -> Self {
        self.riemannian = true;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn is_riemannian(&self) -> bool {
        self.riemannian
    }

    pub fn killing_fields(&self) -> &[KillingField] {
        &self.killing
    }

    pub fn killing(&self, name: &str) -> Option<&KillingField> {
        self.killing.iter().find(|k| k.name == name)
    }

    pub fn lagrangian(&self) -> &dyn DynLagrangian {
        self.lagrangian.as_ref()
    }

    /// `L(x, y)` with input validation.
    pub fn l(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x, y)?;
        let v = self.lagrangian.eval_f64(x, y);
        if !v.is_finite() {
            return Err(FinslerError::EvaluationFailure {
                what: "L".into(),
                x: x.to_vec(),
                y: y.to_vec(),
            });
        }
        Ok(v)
    }

    pub(crate) fn check_point(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.n || y.len() != self.n {
            return Err(FinslerError::RejectedInput(format!(
                "expected {}-vectors, got x: {}, y: {}",
                self.n,
                x.len(),
                y.len()
            )));
        }
        if y.iter().all(|&v| v == 0.0) {
            return Err(FinslerError::RejectedInput("zero direction y".into()));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(FinslerError::RejectedInput("non-finite coordinates".into()));
        }
        Ok(())
    }
}
