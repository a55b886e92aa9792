//! Double-double arithmetic (about 32 significant digits).
//!
//! Only the finite-difference oracle uses this type: fifth-order stencils at
//! `h = 1e-4` divide by `h⁵ = 1e-20`, which plain `f64` cannot absorb.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

const PI: DoubleDouble = DoubleDouble {
    hi: std::f64::consts::PI,
    lo: 1.224_646_799_147_353_2e-16,
};
const LN2: DoubleDouble = DoubleDouble {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };

    pub fn new(v: f64) -> Self {
        DoubleDouble { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        DoubleDouble { hi, lo }
    }

    fn ldexp(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        DoubleDouble {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    /// Taylor series of sin and cos for `|r| ≤ π/4`.
    fn sin_cos_reduced(r: Self) -> (Self, Self) {
        let r2 = r * r;
        let mut sin = DoubleDouble::ZERO;
        let mut cos = DoubleDouble::ZERO;
        let mut term_s = r;
        let mut term_c = DoubleDouble::ONE;
        for k in 0..30 {
            sin = sin + term_s;
            cos = cos + term_c;
            let a = (2 * k + 2) as f64;
            let b = (2 * k + 3) as f64;
            term_s = -(term_s * r2) / (a * b);
            term_c = -(term_c * r2) / ((2 * k + 1) as f64 * a);
            if term_s.hi.abs() < 1e-40 && term_c.hi.abs() < 1e-40 {
                break;
            }
        }
        (sin, cos)
    }

    fn sin_cos(self) -> (Self, Self) {
        let half_pi = PI.mul_f64(0.5);
        let k = (self.to_f64() / half_pi.hi).round();
        let r = self - half_pi.mul_f64(k);
        let (s, c) = Self::sin_cos_reduced(r);
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

impl From<f64> for DoubleDouble {
    fn from(v: f64) -> Self {
        DoubleDouble::new(v)
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo } + DoubleDouble::new(q3)
    }
}

impl Add<f64> for DoubleDouble {
    type Output = Self;
    fn add(self, b: f64) -> Self {
        self + DoubleDouble::new(b)
    }
}

impl Sub<f64> for DoubleDouble {
    type Output = Self;
    fn sub(self, b: f64) -> Self {
        self - DoubleDouble::new(b)
    }
}

impl Mul<f64> for DoubleDouble {
    type Output = Self;
    fn mul(self, b: f64) -> Self {
        self.mul_f64(b)
    }
}

impl Div<f64> for DoubleDouble {
    type Output = Self;
    fn div(self, b: f64) -> Self {
        self / DoubleDouble::new(b)
    }
}

impl Scalar for DoubleDouble {
    fn value(&self) -> f64 {
        self.to_f64()
    }

    fn sqrt(&self) -> Self {
        if self.hi <= 0.0 {
            return DoubleDouble::new(self.hi.sqrt());
        }
        let x = DoubleDouble::new(1.0 / self.hi.sqrt());
        let ax = DoubleDouble::new(self.hi * x.hi);
        // Karp's trick: one Newton step on the reciprocal square root.
        let corr = (*self - ax * ax).hi * (x.hi * 0.5);
        ax + DoubleDouble::new(corr)
    }

    fn sin(&self) -> Self {
        self.sin_cos().0
    }

    fn cos(&self) -> Self {
        self.sin_cos().1
    }

    fn exp(&self) -> Self {
        let k = (self.to_f64() / LN2.hi).round();
        let r = *self - LN2.mul_f64(k);
        // exp(r) = exp(r/2⁴)^(2⁴)
        let s = r.ldexp(-4);
        let mut sum = DoubleDouble::ONE;
        let mut term = DoubleDouble::ONE;
        for i in 1..25 {
            term = term * s / i as f64;
            sum = sum + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..4 {
            sum = sum * sum;
        }
        sum.ldexp(k as i32)
    }

    fn ln(&self) -> Self {
        let mut y = DoubleDouble::new(self.hi.ln());
        for _ in 0..2 {
            let e = y.exp();
            y = y + (*self - e) / (*self + e) * 2.0;
        }
        y
    }

    fn recip(&self) -> Self {
        DoubleDouble::ONE / *self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: DoubleDouble, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn arithmetic_keeps_extra_digits() {
        let third = DoubleDouble::ONE / DoubleDouble::new(3.0);
        let back = third * 3.0 - 1.0;
        assert!(back.to_f64().abs() < 1e-31);
        let two = DoubleDouble::new(2.0);
        let r = two.sqrt();
        assert!((r * r - 2.0).to_f64().abs() < 1e-31);
    }

    #[test]
    fn transcendental_functions_are_consistent() {
        for &x in &[0.1, 0.7, 1.3, 2.9, -4.2, 10.0] {
            let d = DoubleDouble::new(x);
            let (s, c) = (d.sin(), d.cos());
            assert!((s * s + c * c - 1.0).to_f64().abs() < 1e-30);
            assert!(close(s, x.sin(), 1e-15));
            let e = d.exp();
            assert!(close(e, x.exp(), 1e-15));
            assert!((e.ln() - d).to_f64().abs() < 1e-29 * x.abs().max(1.0));
        }
        let half = DoubleDouble::new(0.5);
        let e = half.exp() * half.exp();
        let e1 = DoubleDouble::ONE.exp();
        assert!((e - e1).to_f64().abs() < 1e-30, "{:e}", (e - e1).to_f64());
    }
}
