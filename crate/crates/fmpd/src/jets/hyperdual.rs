//! Second-order forward-mode numbers: value, gradient and Hessian.
//!
//! Used by the Riemannian oracle, which needs metric derivatives up to second
//! order and must not share code with the Taylor pipeline.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct HyperDual {
    pub v: f64,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl HyperDual {
    pub fn constant(v: f64, n: usize) -> Self {
        HyperDual {
            v,
            g: vec![0.0; n],
            h: vec![0.0; n * n],
        }
    }

    pub fn variable(v: f64, i: usize, n: usize) -> Self {
        let mut x = HyperDual::constant(v, n);
        x.g[i] = 1.0;
        x
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.h[i * self.dim() + j]
    }

    /// Chain rule with `f(v)`, `f'(v)`, `f''(v)`.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let n = self.dim();
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                h[i * n + j] = f1 * self.h[i * n + j] + f2 * self.g[i] * self.g[j];
            }
        }
        HyperDual {
            v: f0,
            g: self.g.iter().map(|d| f1 * d).collect(),
            h,
        }
    }

    fn align(a: &Self, b: &Self) -> usize {
        a.dim().max(b.dim())
    }

    fn padded(&self, n: usize) -> Self {
        if self.dim() == n {
            self.clone()
        } else {
            let mut out = HyperDual::constant(self.v, n);
            let m = self.dim();
            out.g[..m].copy_from_slice(&self.g);
            for i in 0..m {
                for j in 0..m {
                    out.h[i * n + j] = self.h[i * m + j];
                }
            }
            out
        }
    }
}

impl From<f64> for HyperDual {
    fn from(v: f64) -> Self {
        HyperDual::constant(v, 0)
    }
}

impl Add for HyperDual {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let n = HyperDual::align(&self, &b);
        let (a, b) = (self.padded(n), b.padded(n));
        HyperDual {
            v: a.v + b.v,
            g: a.g.iter().zip(&b.g).map(|(x, y)| x + y).collect(),
            h: a.h.iter().zip(&b.h).map(|(x, y)| x + y).collect(),
        }
    }
}

impl Neg for HyperDual {
    type Output = Self;
    fn neg(self) -> Self {
        self.chain(-self.v, -1.0, 0.0)
    }
}

impl Sub for HyperDual {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for HyperDual {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let n = HyperDual::align(&self, &b);
        let (a, b) = (self.padded(n), b.padded(n));
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                h[i * n + j] = a.v * b.h[i * n + j]
                    + b.v * a.h[i * n + j]
                    + a.g[i] * b.g[j]
                    + a.g[j] * b.g[i];
            }
        }
        HyperDual {
            v: a.v * b.v,
            g: (0..n).map(|i| a.v * b.g[i] + b.v * a.g[i]).collect(),
            h,
        }
    }
}

impl Div for HyperDual {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, b: Self) -> Self {
        self * b.recip()
    }
}

impl Add<f64> for HyperDual {
    type Output = Self;
    fn add(mut self, b: f64) -> Self {
        self.v += b;
        self
    }
}

impl Sub<f64> for HyperDual {
    type Output = Self;
    fn sub(mut self, b: f64) -> Self {
        self.v -= b;
        self
    }
}

impl Mul<f64> for HyperDual {
    type Output = Self;
    fn mul(self, b: f64) -> Self {
        self.chain(self.v * b, b, 0.0)
    }
}

impl Div<f64> for HyperDual {
    type Output = Self;
    fn div(self, b: f64) -> Self {
        self * (1.0 / b)
    }
}

impl Scalar for HyperDual {
    fn value(&self) -> f64 {
        self.v
    }
    fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn sin(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn ln(&self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }
    fn recip(&self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_second_order() {
        let x = HyperDual::variable(1.5, 0, 2);
        let y = HyperDual::variable(-0.5, 1, 2);
        let f = x.clone() * x.clone() * y.clone().sin();
        let s = (-0.5f64).sin();
        let c = (-0.5f64).cos();
        assert!((f.v - 2.25 * s).abs() < 1e-15);
        assert!((f.g[0] - 3.0 * s).abs() < 1e-15);
        assert!((f.g[1] - 2.25 * c).abs() < 1e-15);
        assert!((f.hess(0, 0) - 2.0 * s).abs() < 1e-15);
        assert!((f.hess(0, 1) - 3.0 * c).abs() < 1e-15);
        assert!((f.hess(1, 1) + 2.25 * s).abs() < 1e-15);
    }
}
