use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;

use crate::error::{FinslerError, Result};

/// Dense rank-3 array with row-major slot order.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Tensor3 {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    t[(a, b, c)] = f(a, b, c);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Tensor3 {
            n: self.n,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;
    fn index(&self, (a, b, c): (usize, usize, usize)) -> &f64 {
        &self.data[(a * self.n + b) * self.n + c]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (a, b, c): (usize, usize, usize)) -> &mut f64 {
        &mut self.data[(a * self.n + b) * self.n + c]
    }
}

/// Dense rank-4 array with row-major slot order.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Tensor4 {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor4::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        t[(a, b, c, d)] = f(a, b, c, d);
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Tensor4 {
            n: self.n,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }
}

impl Index<(usize, usize, usize, usize)> for Tensor4 {
    type Output = f64;
    fn index(&self, (a, b, c, d): (usize, usize, usize, usize)) -> &f64 {
        &self.data[((a * self.n + b) * self.n + c) * self.n + d]
    }
}

impl IndexMut<(usize, usize, usize, usize)> for Tensor4 {
    fn index_mut(&mut self, (a, b, c, d): (usize, usize, usize, usize)) -> &mut f64 {
        &mut self.data[((a * self.n + b) * self.n + c) * self.n + d]
    }
}

/// Contravariant spin tensor `S^{μν}`, antisymmetric by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinTensor {
    s: DMatrix<f64>,
}

impl SpinTensor {
    pub fn zeros(n: usize) -> Self {
        SpinTensor {
            s: DMatrix::zeros(n, n),
        }
    }

    /// Builds `S` from its `n(n−1)/2` upper-triangle entries, ordered
    /// `(0,1), (0,2), …, (n−2, n−1)`.
    pub fn from_upper(n: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != n * (n - 1) / 2 {
            return Err(FinslerError::RejectedInput(format!(
                "expected {} spin components, got {}",
                n * (n - 1) / 2,
                upper.len()
            )));
        }
        let mut s = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                s[(i, j)] = upper[k];
                s[(j, i)] = -upper[k];
                k += 1;
            }
        }
        Ok(SpinTensor { s })
    }

    /// Accepts a matrix only if it is antisymmetric to `1e-12` relative.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let defect = (&m + m.transpose()).amax();
        if !m.is_square() || defect > 1e-12 * scale {
            return Err(FinslerError::RejectedInput(format!(
                "spin tensor is not antisymmetric (defect {defect:.3e})"
            )));
        }
        Ok(SpinTensor {
            s: (&m - m.transpose()) * 0.5,
        })
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// `S^{μν}`.
    pub fn upper_matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn upper(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.s[(i, j)]);
            }
        }
        out
    }

    /// `S_{μν} = g_{μα} S^{αβ} g_{βν}`.
    pub fn lowered(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        g * &self.s * g
    }

    /// `S^μ{}_ν = S^{μα} g_{αν}`, the operator form.
    pub fn mixed(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        &self.s * g
    }

    /// `s² = ½ S^{μν} S_{μν}`.
    pub fn s2(&self, g: &DMatrix<f64>) -> f64 {
        0.5 * self.s.component_mul(&self.lowered(g)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.s.iter().all(|&v| v == 0.0)
    }
}

/// Sign of the permutation `p` of `0..p.len()`, or 0 if `p` repeats an entry.
pub fn permutation_sign(p: &[usize]) -> f64 {
    let mut sign = 1.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] == p[j] {
                return 0.0;
            }
            if p[i] > p[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Covariant Levi-Civita tensor `ε_{μ…}` with `ε_{01…} = +√|det g|`,
/// flattened row-major over `n` slots.
pub fn levi_civita_lower(g: &DMatrix<f64>) -> Vec<f64> {
    let n = g.nrows();
    let vol = g.determinant().abs().sqrt();
    let total = n.pow(n as u32);
    (0..total)
        .map(|mut k| {
            let mut idx = vec![0; n];
            for slot in (0..n).rev() {
                idx[slot] = k % n;
                k /= n;
            }
            vol * permutation_sign(&idx)
        })
        .collect()
}
