//! Geometry as Taylor series about the base point `(x, y)`.
//!
//! Every object is expanded in the `2n` variables `(x, y)`. Starting from `L` to
//! total degree `K`, the metric is exact to degree `K−2`, the spray to `K−2`,
//! and the nonlinear connection, Cartan tensor and Chern connection to `K−3`.
//! Curvatures then need one more derivative, so `K = 4` gives point values of
//! `R`, `𝒫` and `C_{|}` without any hand-expanded derivative formulas.

use nalgebra::DMatrix;

use crate::error::{FinslerError, Result};
use crate::jets::{expand_l, FinslerSpace, Layout, Scalar, Taylor};

/// Whether a tensor slot is contravariant or covariant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Up,
    Down,
}

#[derive(Clone, Debug)]
pub struct LocalExpansion {
    n: usize,
    order: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    pub l: Taylor,
    /// `g_{μν}`, row-major.
    pub g: Vec<Taylor>,
    /// `g^{μν}`, row-major.
    pub g_inv: Vec<Taylor>,
    /// `G^ν` (available for `K ≥ 2`).
    pub spray: Vec<Taylor>,
    /// `N^ν{}_μ` stored at `[ν][μ]` (`K ≥ 3`).
    pub nonlinear: Vec<Taylor>,
    /// `C_{μνλ}` (`K ≥ 3`).
    pub cartan: Vec<Taylor>,
    /// `Γ^μ{}_{νλ}` stored at `[μ][ν][λ]` (`K ≥ 3`).
    pub chern: Vec<Taylor>,
}

fn mat_mul(n: usize, a: &[Taylor], b: &[Taylor]) -> Vec<Taylor> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = Taylor::constant(0.0);
            for k in 0..n {
                acc = acc + &a[i * n + k] * &b[k * n + j];
            }
            out.push(acc);
        }
    }
    out
}

/// Inverse of a Taylor-valued matrix by the Neumann series about its value.
pub(crate) fn invert(n: usize, m: &[Taylor]) -> Result<Vec<Taylor>> {
    let m0 = DMatrix::from_fn(n, n, |i, j| m[i * n + j].value());
    let inv0 = m0
        .clone()
        .try_inverse()
        .ok_or(FinslerError::GeometryDegeneracy { cond: f64::INFINITY })?;
    let deg = m.iter().map(|t| t.degree()).min().unwrap_or(0);
    let c0: Vec<Taylor> = inv0.transpose().iter().map(|&v| Taylor::constant(v)).collect();
    // Row-major view of inv0: transpose of nalgebra's column-major iteration.
    let delta: Vec<Taylor> = m
        .iter()
        .map(|t| t.clone() - t.value())
        .collect();
    let minus_inv_delta: Vec<Taylor> = mat_mul(n, &c0, &delta).into_iter().map(|t| -t).collect();
    let mut term = c0.clone();
    let mut sum = c0;
    for _ in 0..deg.min(16) {
        term = mat_mul(n, &minus_inv_delta, &term);
        sum = sum.into_iter().zip(&term).map(|(a, b)| &a + b).collect();
    }
    Ok(sum)
}

impl LocalExpansion {
    pub fn new(space: &FinslerSpace, x: &[f64], y: &[f64], order: usize) -> Result<Self> {
        if order < 2 {
            return Err(FinslerError::RejectedInput(format!(
                "expansion order {order} < 2"
            )));
        }
        let n = space.dim();
        let l = expand_l(space, x, y, order)?;
        let yv = |j: usize| n + j;
        let xv = |j: usize| j;

        let ly: Vec<Taylor> = (0..n).map(|j| l.derivative(yv(j))).collect();
        let mut g = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                g.push(ly[i].derivative(yv(j)) * 0.5);
            }
        }
        let g_inv = invert(n, &g)?;

        // W_λ = ∂²L/∂y^λ∂x^σ y^σ − ∂L/∂x^λ and G = ½ g⁻¹ W.
        let layout = l.layout().cloned().unwrap_or_else(|| Layout::get(2 * n, order));
        let y_series: Vec<Taylor> = (0..n).map(|j| Taylor::variable(&layout, yv(j), y[j])).collect();
        let w: Vec<Taylor> = (0..n)
            .map(|lam| {
                let mut acc = -l.derivative(xv(lam));
                for s in 0..n {
                    acc = acc + &ly[lam].derivative(xv(s)) * &y_series[s];
                }
                acc
            })
            .collect();
        let spray: Vec<Taylor> = (0..n)
            .map(|nu| {
                let mut acc = Taylor::constant(0.0);
                for lam in 0..n {
                    acc = acc + &g_inv[nu * n + lam] * &w[lam];
                }
                acc * 0.5
            })
            .collect();

        let mut exp = LocalExpansion {
            n,
            order,
            x: x.to_vec(),
            y: y.to_vec(),
            l,
            g,
            g_inv,
            spray,
            nonlinear: Vec::new(),
            cartan: Vec::new(),
            chern: Vec::new(),
        };
        if order >= 3 {
            exp.build_connections();
        }
        Ok(exp)
    }

    fn build_connections(&mut self) {
        let n = self.n;
        self.nonlinear = (0..n * n)
            .map(|k| self.spray[k / n].derivative(n + k % n) * 0.5)
            .collect();
        self.cartan = (0..n * n * n)
            .map(|k| self.g[k / n].derivative(n + k % n) * 0.5)
            .collect();
        // δg_{ab}/δx^c
        let dg: Vec<Taylor> = (0..n * n * n)
            .map(|k| self.delta_x(&self.g[k / n], k % n))
            .collect();
        let dg_at = |a: usize, b: usize, c: usize| &dg[(a * n + b) * n + c];
        let mut chern = Vec::with_capacity(n * n * n);
        for mu in 0..n {
            for nu in 0..n {
                for lam in 0..n {
                    let mut acc = Taylor::constant(0.0);
                    for s in 0..n {
                        let bracket = &(dg_at(s, lam, nu) + dg_at(nu, s, lam)) - dg_at(nu, lam, s);
                        acc = acc + &self.g_inv[mu * n + s] * &bracket;
                    }
                    chern.push(acc * 0.5);
                }
            }
        }
        self.chern = chern;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn has_connections(&self) -> bool {
        !self.chern.is_empty()
    }

    /// `δT/δx^c = ∂T/∂x^c − N^d{}_c ∂T/∂y^d`.
    pub fn delta_x(&self, t: &Taylor, c: usize) -> Taylor {
        let n = self.n;
        let mut acc = t.derivative(c);
        for d in 0..n {
            acc = acc - &self.nonlinear[d * n + c] * &t.derivative(n + d);
        }
        acc
    }

    /// `∂T/∂y^c`.
    pub fn d_y(&self, t: &Taylor, c: usize) -> Taylor {
        t.derivative(self.n + c)
    }

    /// `y^c` as a series.
    pub fn y_series(&self, c: usize) -> Taylor {
        match self.l.layout() {
            Some(layout) => Taylor::variable(layout, self.n + c, self.y[c]),
            None => Taylor::constant(self.y[c]),
        }
    }

    pub fn chern_at(&self, mu: usize, nu: usize, lam: usize) -> &Taylor {
        &self.chern[(mu * self.n + nu) * self.n + lam]
    }
}

/// A tensor field on the slit tangent bundle with Taylor-valued components.
#[derive(Clone, Debug)]
pub struct TensorField {
    pub n: usize,
    pub slots: Vec<Slot>,
    pub comps: Vec<Taylor>,
}

impl TensorField {
    pub fn new(n: usize, slots: Vec<Slot>, comps: Vec<Taylor>) -> Self {
        assert_eq!(comps.len(), n.pow(slots.len() as u32));
        TensorField { n, slots, comps }
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    fn multi_index(&self, mut k: usize, rank: usize) -> Vec<usize> {
        let mut idx = vec![0; rank];
        for s in (0..rank).rev() {
            idx[s] = k % self.n;
            k /= self.n;
        }
        idx
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn at(&self, idx: &[usize]) -> &Taylor {
        &self.comps[self.flat(idx)]
    }

    /// Chern horizontal covariant derivative; appends one covariant slot.
    pub fn horizontal(&self, e: &LocalExpansion) -> TensorField {
        let n = self.n;
        let rank = self.rank();
        let mut comps = Vec::with_capacity(self.comps.len() * n);
        for k in 0..self.comps.len() {
            let idx = self.multi_index(k, rank);
            for sigma in 0..n {
                let mut acc = e.delta_x(&self.comps[k], sigma);
                for (s, slot) in self.slots.iter().enumerate() {
                    let mut j = idx.clone();
                    for kappa in 0..n {
                        j[s] = kappa;
                        let t = &self.comps[self.flat(&j)];
                        acc = match slot {
                            Slot::Up => acc + e.chern_at(idx[s], kappa, sigma) * t,
                            Slot::Down => acc - e.chern_at(kappa, idx[s], sigma) * t,
                        };
                    }
                }
                comps.push(acc);
            }
        }
        let mut slots = self.slots.clone();
        slots.push(Slot::Down);
        TensorField { n, slots, comps }
    }

    /// `∂T/∂y^σ`; appends one covariant slot. The Chern vertical derivative is
    /// `F` times this.
    pub fn vertical(&self, e: &LocalExpansion) -> TensorField {
        let n = self.n;
        let comps = self
            .comps
            .iter()
            .flat_map(|c| (0..n).map(move |s| e.d_y(c, s)))
            .collect();
        let mut slots = self.slots.clone();
        slots.push(Slot::Down);
        TensorField { n, slots, comps }
    }

    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.value()).collect()
    }

    pub fn scale(&self, k: &Taylor) -> TensorField {
        TensorField {
            n: self.n,
            slots: self.slots.clone(),
            comps: self.comps.iter().map(|c| c * k).collect(),
        }
    }
}
