//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Taylor`] holds the coefficients `c_α` of `Σ c_α δ^α` over all monomials
//! of total degree `≤ deg`, where `δ` is the displacement from the expansion
//! point. Partial derivatives at the point are `α! c_α`. Each series carries the
//! degree up to which its coefficients are exact, so differentiation lowers it
//! by one and products keep the smaller of the two.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock, RwLock};

use super::scalar::Scalar;

/// Monomial tables for a fixed number of variables and maximal degree.
#[derive(Debug)]
pub struct Layout {
    vars: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    degree: Vec<usize>,
    count_upto: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    products: Vec<Vec<u32>>,
    shifts: Vec<Vec<u32>>,
}

impl Layout {
    /// Shared layout for `vars` variables truncated at total degree `order`.
    pub fn get(vars: usize, order: usize) -> Arc<Layout> {
        static CACHE: OnceLock<RwLock<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(l) = cache.read().expect("layout cache poisoned").get(&(vars, order)) {
            return l.clone();
        }
        let built = Arc::new(Layout::build(vars, order));
        cache
            .write()
            .expect("layout cache poisoned")
            .entry((vars, order))
            .or_insert(built)
            .clone()
    }

    fn build(vars: usize, order: usize) -> Layout {
        let mut exps = Vec::new();
        let mut count_upto = Vec::with_capacity(order + 1);
        for d in 0..=order {
            let mut cur = vec![0u8; vars];
            push_degree(&mut exps, &mut cur, 0, d);
            count_upto.push(exps.len());
        }
        let degree: Vec<usize> = exps.iter().map(|e| e.iter().map(|&k| k as usize).sum()).collect();
        let index: HashMap<Vec<u8>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();

        let mut products = Vec::with_capacity(exps.len());
        for (i, ei) in exps.iter().enumerate() {
            let room = order - degree[i];
            let row: Vec<u32> = exps[..count_upto[room]]
                .iter()
                .map(|ej| {
                    let sum: Vec<u8> = ei.iter().zip(ej).map(|(a, b)| a + b).collect();
                    index[&sum] as u32
                })
                .collect();
            products.push(row);
        }

        let lower = if order == 0 { 0 } else { count_upto[order - 1] };
        let shifts = (0..vars)
            .map(|v| {
                exps[..lower]
                    .iter()
                    .map(|e| {
                        let mut up = e.clone();
                        up[v] += 1;
                        index[&up] as u32
                    })
                    .collect()
            })
            .collect();

        Layout {
            vars,
            order,
            exps,
            degree,
            count_upto,
            index,
            products,
            shifts,
        }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of monomials of total degree `≤ d`.
    pub fn len_upto(&self, d: usize) -> usize {
        self.count_upto[d.min(self.order)]
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }

    pub fn degree_of(&self, i: usize) -> usize {
        self.degree[i]
    }
}

fn push_degree(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, pos: usize, left: usize) {
    if pos + 1 == cur.len() {
        cur[pos] = left as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k as u8;
        push_degree(out, cur, pos + 1, left - k);
    }
    cur[pos] = 0;
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Truncated multivariate Taylor series. Series without a layout are plain
/// constants, exact to every degree.
#[derive(Clone, Debug)]
pub struct Taylor {
    layout: Option<Arc<Layout>>,
    deg: usize,
    c: Vec<f64>,
}

impl Taylor {
    pub fn constant(v: f64) -> Self {
        Taylor {
            layout: None,
            deg: usize::MAX,
            c: vec![v],
        }
    }

    /// The coordinate function `v`, expanded about `value`.
    pub fn variable(layout: &Arc<Layout>, v: usize, value: f64) -> Self {
        let order = layout.order;
        let mut c = vec![0.0; layout.len_upto(order)];
        c[0] = value;
        if order > 0 {
            let mut e = vec![0u8; layout.vars];
            e[v] = 1;
            c[layout.index[&e]] = 1.0;
        }
        Taylor {
            layout: Some(layout.clone()),
            deg: order,
            c,
        }
    }

    pub fn layout(&self) -> Option<&Arc<Layout>> {
        self.layout.as_ref()
    }

    /// Degree up to which the coefficients are exact.
    pub fn degree(&self) -> usize {
        match &self.layout {
            Some(l) => self.deg.min(l.order),
            None => usize::MAX,
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    /// Taylor coefficient of the monomial with exponents `e`.
    pub fn coefficient(&self, e: &[u8]) -> f64 {
        match &self.layout {
            None => {
                if e.iter().all(|&k| k == 0) {
                    self.c[0]
                } else {
                    0.0
                }
            }
            Some(l) => {
                let d: usize = e.iter().map(|&k| k as usize).sum();
                assert!(d <= self.degree(), "coefficient beyond truncation degree");
                l.index_of(e).map_or(0.0, |i| self.c[i])
            }
        }
    }

    /// Partial derivative `∂^e` at the expansion point.
    pub fn partial(&self, e: &[u8]) -> f64 {
        let fact: f64 = e.iter().map(|&k| factorial(k as usize)).product();
        fact * self.coefficient(e)
    }

    /// `∂/∂v` of the series; exact to one degree less.
    pub fn derivative(&self, v: usize) -> Taylor {
        let Some(l) = &self.layout else {
            return Taylor::constant(0.0);
        };
        let deg = self.degree();
        assert!(deg >= 1, "derivative of a degree-0 series");
        let out_len = l.len_upto(deg - 1);
        let shift = &l.shifts[v];
        let c = (0..out_len)
            .map(|i| {
                let j = shift[i] as usize;
                (l.exps[i][v] as f64 + 1.0) * self.c[j]
            })
            .collect();
        Taylor {
            layout: Some(l.clone()),
            deg: deg - 1,
            c,
        }
    }

    /// Drops coefficients above degree `d`.
    pub fn truncate(&self, d: usize) -> Taylor {
        match &self.layout {
            None => self.clone(),
            Some(l) => {
                let d = d.min(self.degree());
                Taylor {
                    layout: Some(l.clone()),
                    deg: d,
                    c: self.c[..l.len_upto(d)].to_vec(),
                }
            }
        }
    }

    fn scaled(&self, k: f64) -> Taylor {
        Taylor {
            layout: self.layout.clone(),
            deg: self.deg,
            c: self.c.iter().map(|v| v * k).collect(),
        }
    }

    fn shifted(mut self, k: f64) -> Taylor {
        self.c[0] += k;
        self
    }

    fn combine(&self, other: &Taylor, sign: f64) -> Taylor {
        match (&self.layout, &other.layout) {
            (None, None) => Taylor::constant(self.c[0] + sign * other.c[0]),
            (Some(_), None) => self.clone().shifted(sign * other.c[0]),
            (None, Some(_)) => other.scaled(sign).shifted(self.c[0]),
            (Some(l), Some(_)) => {
                let deg = self.degree().min(other.degree());
                let len = l.len_upto(deg);
                let c = self.c[..len]
                    .iter()
                    .zip(&other.c[..len])
                    .map(|(a, b)| a + sign * b)
                    .collect();
                Taylor {
                    layout: Some(l.clone()),
                    deg,
                    c,
                }
            }
        }
    }

    fn product(&self, other: &Taylor) -> Taylor {
        match (&self.layout, &other.layout) {
            (None, None) => Taylor::constant(self.c[0] * other.c[0]),
            (Some(_), None) => self.scaled(other.c[0]),
            (None, Some(_)) => other.scaled(self.c[0]),
            (Some(l), Some(_)) => {
                let deg = self.degree().min(other.degree());
                let len = l.len_upto(deg);
                let mut c = vec![0.0; len];
                for (i, &a) in self.c[..len].iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let room = deg - l.degree[i];
                    let row = &l.products[i][..l.count_upto[room]];
                    for (&b, &k) in other.c.iter().zip(row) {
                        c[k as usize] += a * b;
                    }
                }
                Taylor {
                    layout: Some(l.clone()),
                    deg,
                    c,
                }
            }
        }
    }

    /// `f(self)` from the derivatives `f^(k)(u0)/k!` at the leading value `u0`.
    fn compose(&self, coeffs: impl Fn(f64, usize) -> Vec<f64>) -> Taylor {
        let Some(l) = &self.layout else {
            return Taylor::constant(coeffs(self.c[0], 0)[0]);
        };
        let deg = self.degree();
        let u0 = self.c[0];
        let a = coeffs(u0, deg);
        let mut h = self.truncate(deg);
        h.c[0] = 0.0;
        let mut r = Taylor {
            layout: Some(l.clone()),
            deg,
            c: {
                let mut c = vec![0.0; l.len_upto(deg)];
                c[0] = a[deg];
                c
            },
        };
        for k in (0..deg).rev() {
            r = r.product(&h).shifted(a[k]);
        }
        r
    }
}

fn binomial_series(p: f64, u0: f64, deg: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(deg + 1);
    let mut coef = 1.0;
    for k in 0..=deg {
        out.push(coef * u0.powf(p - k as f64));
        coef *= (p - k as f64) / (k as f64 + 1.0);
    }
    out
}

impl From<f64> for Taylor {
    fn from(v: f64) -> Self {
        Taylor::constant(v)
    }
}

impl Add for Taylor {
    type Output = Taylor;
    fn add(self, rhs: Taylor) -> Taylor {
        self.combine(&rhs, 1.0)
    }
}

impl Sub for Taylor {
    type Output = Taylor;
    fn sub(self, rhs: Taylor) -> Taylor {
        self.combine(&rhs, -1.0)
    }
}

impl Mul for Taylor {
    type Output = Taylor;
    fn mul(self, rhs: Taylor) -> Taylor {
        self.product(&rhs)
    }
}

impl Div for Taylor {
    type Output = Taylor;
    fn div(self, rhs: Taylor) -> Taylor {
        self.product(&rhs.recip())
    }
}

impl Neg for Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scaled(-1.0)
    }
}

impl Add<f64> for Taylor {
    type Output = Taylor;
    fn add(self, rhs: f64) -> Taylor {
        self.shifted(rhs)
    }
}

impl Sub<f64> for Taylor {
    type Output = Taylor;
    fn sub(self, rhs: f64) -> Taylor {
        self.shifted(-rhs)
    }
}

impl Mul<f64> for Taylor {
    type Output = Taylor;
    fn mul(self, rhs: f64) -> Taylor {
        self.scaled(rhs)
    }
}

impl Div<f64> for Taylor {
    type Output = Taylor;
    fn div(self, rhs: f64) -> Taylor {
        self.scaled(1.0 / rhs)
    }
}

impl<'a> Add<&'a Taylor> for &'a Taylor {
    type Output = Taylor;
    fn add(self, rhs: &Taylor) -> Taylor {
        self.combine(rhs, 1.0)
    }
}

impl<'a> Sub<&'a Taylor> for &'a Taylor {
    type Output = Taylor;
    fn sub(self, rhs: &Taylor) -> Taylor {
        self.combine(rhs, -1.0)
    }
}

impl<'a> Mul<&'a Taylor> for &'a Taylor {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        self.product(rhs)
    }
}

impl Scalar for Taylor {
    fn value(&self) -> f64 {
        self.c[0]
    }

    fn sqrt(&self) -> Self {
        self.compose(|u0, d| binomial_series(0.5, u0, d))
    }

    fn recip(&self) -> Self {
        self.compose(|u0, d| {
            let inv = 1.0 / u0;
            let mut out = Vec::with_capacity(d + 1);
            let mut p = inv;
            for _ in 0..=d {
                out.push(p);
                p *= -inv;
            }
            out
        })
    }

    fn exp(&self) -> Self {
        self.compose(|u0, d| {
            let e = u0.exp();
            (0..=d).map(|k| e / factorial(k)).collect()
        })
    }

    fn ln(&self) -> Self {
        self.compose(|u0, d| {
            let mut out = vec![u0.ln()];
            for k in 1..=d {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                out.push(sign / (k as f64 * u0.powi(k as i32)));
            }
            out
        })
    }

    fn sin(&self) -> Self {
        self.compose(|u0, d| {
            let (s, c) = u0.sin_cos();
            let cycle = [s, c, -s, -c];
            (0..=d).map(|k| cycle[k % 4] / factorial(k)).collect()
        })
    }

    fn cos(&self) -> Self {
        self.compose(|u0, d| {
            let (s, c) = u0.sin_cos();
            let cycle = [c, -s, -c, s];
            (0..=d).map(|k| cycle[k % 4] / factorial(k)).collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_counts_match_binomials() {
        let l = Layout::get(4, 4);
        assert_eq!(l.len_upto(4), 70);
        let l = Layout::get(8, 4);
        assert_eq!(l.len_upto(4), 495);
        assert_eq!(l.len_upto(2), 45);
    }

    #[test]
    fn product_of_variables() {
        let l = Layout::get(2, 3);
        let x = Taylor::variable(&l, 0, 2.0);
        let y = Taylor::variable(&l, 1, -1.0);
        let f = x.clone() * x.clone() * y.clone();
        assert_eq!(f.value(), -4.0);
        assert_eq!(f.partial(&[1, 0]), -4.0);
        assert_eq!(f.partial(&[0, 1]), 4.0);
        assert_eq!(f.partial(&[2, 0]), -2.0);
        assert_eq!(f.partial(&[1, 1]), 4.0);
        assert_eq!(f.partial(&[2, 1]), 2.0);
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let l = Layout::get(1, 5);
        let x = Taylor::variable(&l, 0, 0.7);
        let s = x.sin();
        let e = x.exp();
        let r = x.sqrt();
        let q = x.ln();
        for k in 0..=5u8 {
            let ds = [0.7f64.sin(), 0.7f64.cos(), -0.7f64.sin(), -0.7f64.cos()][k as usize % 4];
            assert!((s.partial(&[k]) - ds).abs() < 1e-13);
            assert!((e.partial(&[k]) - 0.7f64.exp()).abs() < 1e-13);
        }
        assert!((r.partial(&[2]) + 0.25 * 0.7f64.powf(-1.5)).abs() < 1e-13);
        assert!((q.partial(&[3]) - 2.0 / 0.7f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn derivative_lowers_degree() {
        let l = Layout::get(2, 4);
        let x = Taylor::variable(&l, 0, 1.0);
        let y = Taylor::variable(&l, 1, 2.0);
        let f = (x.clone() * y.clone()).sin();
        let fx = f.derivative(0);
        assert_eq!(fx.degree(), 3);
        let expected = 2.0 * (2.0f64).cos();
        assert!((fx.value() - expected).abs() < 1e-14);
        let fxy = fx.derivative(1);
        assert!((fxy.value() - (f.partial(&[1, 1]))).abs() < 1e-14);
    }
}
