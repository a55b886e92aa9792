use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number type that Finsler functions are written against.
///
/// Catalog spaces implement `L` once, generically over `Scalar`, and the crate
/// instantiates it with `f64`, truncated Taylor series, double-double numbers
/// (finite-difference oracle) and second-order hyper-duals (Riemannian oracle).
pub trait Scalar:
    Clone
    + Debug
    + Send
    + Sync
    + From<f64>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// Leading (point) value as `f64`.
    fn value(&self) -> f64;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn recip(&self) -> Self;

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }

    fn powi(&self, k: i32) -> Self {
        let base = if k < 0 { self.recip() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::from(1.0);
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b.clone();
            }
            e >>= 1;
            if e > 0 {
                b = b.square();
            }
        }
        acc
    }
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn recip(&self) -> Self {
        1.0 / *self
    }
    fn powi(&self, k: i32) -> Self {
        f64::powi(*self, k)
    }
}

/// Sum of `a[i] * b[i]`.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = S::from(0.0);
    for (p, q) in a.iter().zip(b) {
        acc = acc + p.clone() * q.clone();
    }
    acc
}

/// Quadratic form `m_ij v^i v^j` for a row-major `m`.
pub fn quadratic_form<S: Scalar>(m: &[Vec<S>], v: &[S]) -> S {
    let mut acc = S::from(0.0);
    for (i, row) in m.iter().enumerate() {
        for (j, mij) in row.iter().enumerate() {
            acc = acc + mij.clone() * v[i].clone() * v[j].clone();
        }
    }
    acc
}
