//! Pointwise residuals of the identities every Finsler frame must satisfy.
//!
//! Metricity is checked against finite-difference stencils of `g` taken along
//! the horizontal lift `(x + h e_λ, y − h N_λ)` and along `y`, so it does not
//! reuse the Taylor path that built the frame.

use nalgebra::DMatrix;
use serde::Serialize;

use super::expansion::{LocalExpansion, Slot, TensorField};
use super::frame::{frame_at, GeometryFrame, Needs};
use crate::error::Result;
use crate::jets::{FinslerSpace, Scalar, Taylor};

/// Largest residual of each identity at one point.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `|g(y, y) − L|` relative to `Σ|g_{μν} y^μ y^ν|`.
    pub euler: f64,
    /// `max |A_{μνλ} l^λ|`, evaluated as `C_{μνλ} y^λ`.
    pub cartan_l: f64,
    /// `max |g_{μν|λ}|`.
    pub h_metricity: f64,
    /// `max |g_{μν;λ} − 2A_{μνλ}|`; with `F` absent, `max |∂g/∂y − 2C|`.
    pub v_metricity: f64,
    /// Cyclic sum of `R_ν{}^μ{}_{λσ}` over `(ν, λ, σ)`.
    pub bianchi: f64,
    /// `max |R_{μνλσ} + R_{νμλσ} + 2A_{μνκ} R_ρ{}^κ{}_{λσ} l^ρ|`.
    pub antisymmetry_defect: f64,
    /// Interchange formula for two horizontal derivatives of a test tensor.
    pub interchange_hh: f64,
    /// `max |l^μ{}_{|λ}|` when `F` exists.
    pub l_horizontal: Option<f64>,
    /// `max |l^μ{}_{;λ} − δ^μ_λ + l^μ l_λ|` when `F` exists.
    pub l_vertical: Option<f64>,
    /// Mixed interchange formula; evaluated on Riemannian spaces only.
    pub interchange_hv: Option<f64>,
}

impl IdentityResiduals {
    /// Componentwise maximum.
    pub fn merge(&self, o: &IdentityResiduals) -> IdentityResiduals {
        let opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, None) => a,
            (None, b) => b,
        };
        IdentityResiduals {
            euler: self.euler.max(o.euler),
            cartan_l: self.cartan_l.max(o.cartan_l),
            h_metricity: self.h_metricity.max(o.h_metricity),
            v_metricity: self.v_metricity.max(o.v_metricity),
            bianchi: self.bianchi.max(o.bianchi),
            antisymmetry_defect: self.antisymmetry_defect.max(o.antisymmetry_defect),
            interchange_hh: self.interchange_hh.max(o.interchange_hh),
            l_horizontal: opt(self.l_horizontal, o.l_horizontal),
            l_vertical: opt(self.l_vertical, o.l_vertical),
            interchange_hv: opt(self.interchange_hv, o.interchange_hv),
        }
    }
}

fn metric(space: &FinslerSpace, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    Ok(frame_at(space, x, y, Needs::METRIC)?.g().clone())
}

/// Five-point central derivative of `g` along `t ↦ (x + t dx, y + t dy)`.
fn stencil(space: &FinslerSpace, x: &[f64], y: &[f64], dx: &[f64], dy: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let at = |t: f64| {
        let xs: Vec<f64> = x.iter().zip(dx).map(|(a, d)| a + t * d).collect();
        let ys: Vec<f64> = y.iter().zip(dy).map(|(a, d)| a + t * d).collect();
        metric(space, &xs, &ys)
    };
    let (m2, m1, p1, p2) = (at(-2.0 * h)?, at(-h)?, at(h)?, at(2.0 * h)?);
    Ok((m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h))
}

/// `g_{μν|λ}` from stencils of `g` along the horizontal lift of `∂_λ`.
fn h_metricity(space: &FinslerSpace, frame: &GeometryFrame) -> Result<f64> {
    let n = frame.dim();
    let x = frame.x().as_slice();
    let y = frame.y().as_slice();
    let nl = frame.nonlinear()?;
    let gam = frame.chern()?;
    let g = frame.g();
    let mut worst = 0.0f64;
    for lam in 0..n {
        let mut dx = vec![0.0; n];
        dx[lam] = 1.0;
        let dy: Vec<f64> = (0..n).map(|k| -nl[(k, lam)]).collect();
        let h = 1e-3 * x[lam].abs().max(1.0);
        let dg = stencil(space, x, y, &dx, &dy, h)?;
        for mu in 0..n {
            for nu in 0..n {
                let mut v = dg[(mu, nu)];
                for k in 0..n {
                    v -= gam[(k, mu, lam)] * g[(k, nu)] + gam[(k, nu, lam)] * g[(mu, k)];
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// `g_{μν;λ} − 2A_{μνλ} = F (∂g_{μν}/∂y^λ − 2C_{μνλ})` from stencils along `y`.
fn v_metricity(space: &FinslerSpace, frame: &GeometryFrame) -> Result<f64> {
    let n = frame.dim();
    let x = frame.x().as_slice();
    let y = frame.y().as_slice();
    let c = frame.cartan()?;
    let f = if frame.has_f() { frame.f()? } else { 1.0 };
    let ynorm = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut worst = 0.0f64;
    for lam in 0..n {
        let mut dy = vec![0.0; n];
        dy[lam] = 1.0;
        let dg = stencil(space, x, y, &vec![0.0; n], &dy, 1e-3 * ynorm)?;
        for mu in 0..n {
            for nu in 0..n {
                worst = worst.max((f * (dg[(mu, nu)] - 2.0 * c[(mu, nu, lam)])).abs());
            }
        }
    }
    Ok(worst)
}

/// `R_{νμλσ} = g_{μa} R_ν{}^a{}_{λσ}`.
fn lowered_curvature(frame: &GeometryFrame) -> Result<Vec<f64>> {
    let n = frame.dim();
    let r = frame.curvature()?;
    let g = frame.g();
    let mut out = vec![0.0; n * n * n * n];
    for nu in 0..n {
        for mu in 0..n {
            for l in 0..n {
                for s in 0..n {
                    out[((nu * n + mu) * n + l) * n + s] = (0..n).map(|a| g[(mu, a)] * r[(nu, a, l, s)]).sum();
                }
            }
        }
    }
    Ok(out)
}

fn curvature_identities(frame: &GeometryFrame) -> Result<(f64, f64)> {
    let n = frame.dim();
    let r = frame.curvature()?;
    let c = frame.cartan()?;
    let y = frame.y();
    let low = lowered_curvature(frame)?;
    let at = |a: usize, b: usize, l: usize, s: usize| low[((a * n + b) * n + l) * n + s];
    let mut bianchi = 0.0f64;
    let mut defect = 0.0f64;
    for nu in 0..n {
        for mu in 0..n {
            for l in 0..n {
                for s in 0..n {
                    let cyc = r[(nu, mu, l, s)] + r[(l, mu, s, nu)] + r[(s, mu, nu, l)];
                    bianchi = bianchi.max(cyc.abs());
                    // A_{μνκ} l^ρ = C_{μνκ} y^ρ.
                    let mut d = at(mu, nu, l, s) + at(nu, mu, l, s);
                    for k in 0..n {
                        let rk: f64 = (0..n).map(|rho| r[(rho, k, l, s)] * y[rho]).sum();
                        d += 2.0 * c[(mu, nu, k)] * rk;
                    }
                    defect = defect.max(d.abs());
                }
            }
        }
    }
    Ok((bianchi, defect))
}

/// Smooth non-homogeneous `(1,1)` test field `T^μ{}_ν = a + b·x + c·y`.
fn test_tensor(e: &LocalExpansion) -> TensorField {
    let n = e.dim();
    let layout = e.l.layout().cloned();
    let var = |v: usize, value: f64| match &layout {
        Some(l) => Taylor::variable(l, v, value),
        None => Taylor::constant(value),
    };
    let comps = (0..n * n)
        .map(|k| {
            let (mu, nu) = ((k / n) as f64, (k % n) as f64);
            let mut t = Taylor::constant(0.3 + 0.1 * mu - 0.2 * nu);
            for r in 0..n {
                let rf = r as f64;
                t = t + var(r, e.x()[r]) * (0.2 * (1.0 + mu + 2.0 * rf).sin())
                    + var(n + r, e.y()[r]) * (0.3 * (1.0 + 2.0 * nu + rf).cos());
            }
            t
        })
        .collect();
    TensorField::new(n, vec![Slot::Up, Slot::Down], comps)
}

/// `T^μ{}_{ν|σ|λ} − T^μ{}_{ν|λ|σ} − (T^κ_ν R_κ{}^μ{}_{λσ} − T^μ_κ R_ν{}^κ{}_{λσ}
/// − T^μ{}_{ν;κ} R_γ{}^κ{}_{λσ} l^γ)`; the last term is `∂T/∂y^κ R_γ{}^κ{}_{λσ} y^γ`.
fn interchange_hh(frame: &GeometryFrame) -> Result<f64> {
    let e = frame.expansion();
    let n = frame.dim();
    let r = frame.curvature()?;
    let y = frame.y();
    let t = test_tensor(e);
    let tv = t.values();
    let dty = t.vertical(e).values();
    let hh = t.horizontal(e).horizontal(e).values();
    let idx4 = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
    let mut worst = 0.0f64;
    for mu in 0..n {
        for nu in 0..n {
            for s in 0..n {
                for l in 0..n {
                    let lhs = hh[idx4(mu, nu, s, l)] - hh[idx4(mu, nu, l, s)];
                    let mut rhs = 0.0;
                    for k in 0..n {
                        rhs += tv[k * n + nu] * r[(k, mu, l, s)] - tv[mu * n + k] * r[(nu, k, l, s)];
                        let rk: f64 = (0..n).map(|gm| r[(gm, k, l, s)] * y[gm]).sum();
                        rhs -= dty[(mu * n + nu) * n + k] * rk;
                    }
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// With `A = 0` and `𝒫 = 0` the mixed interchange reduces to
/// `∂_{y^σ}(T_{|λ}) = (∂_{y^σ} T)_{|λ}`; the common factor `F` drops out.
fn interchange_hv(frame: &GeometryFrame) -> f64 {
    let e = frame.expansion();
    let n = frame.dim();
    let t = test_tensor(e);
    let hv = t.horizontal(e).vertical(e).values();
    let vh = t.vertical(e).horizontal(e).values();
    let mut worst = 0.0f64;
    for base in 0..n * n {
        for l in 0..n {
            for s in 0..n {
                let a = hv[(base * n + l) * n + s];
                let b = vh[(base * n + s) * n + l];
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

fn l_derivatives(frame: &GeometryFrame) -> Result<(f64, f64)> {
    let e = frame.expansion();
    let n = frame.dim();
    let f = e.l.sqrt();
    let l_field = TensorField::new(n, vec![Slot::Up], (0..n).map(|k| e.y_series(k) / f.clone()).collect());
    let h = l_field.horizontal(e).values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let v = l_field.vertical(e).scale(&f).values();
    let l = frame.l_section()?;
    let l_low = frame.lower(&l);
    let mut worst = 0.0f64;
    for mu in 0..n {
        for lam in 0..n {
            let delta = if mu == lam { 1.0 } else { 0.0 };
            worst = worst.max((v[mu * n + lam] - delta + l[mu] * l_low[lam]).abs());
        }
    }
    Ok((h, worst))
}

/// Evaluates every identity at `(x, y)`.
pub fn identity_residuals(space: &FinslerSpace, x: &[f64], y: &[f64]) -> Result<IdentityResiduals> {
    let frame = frame_at(space, x, y, Needs::ALL_INHOMOGENEOUS)?;
    let n = frame.dim();
    let g = frame.g();
    let yv = frame.y();
    let gyy = frame.inner(yv, yv);
    let scale: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (g[(i, j)] * yv[i] * yv[j]).abs())
        .sum();
    let c = frame.cartan()?;
    let mut cartan_l = 0.0f64;
    for mu in 0..n {
        for nu in 0..n {
            let v: f64 = (0..n).map(|k| c[(mu, nu, k)] * yv[k]).sum();
            cartan_l = cartan_l.max(v.abs());
        }
    }
    let (bianchi, antisymmetry_defect) = curvature_identities(&frame)?;
    let (l_horizontal, l_vertical) = if frame.has_f() {
        let (h, v) = l_derivatives(&frame)?;
        (Some(h), Some(v))
    } else {
        (None, None)
    };
    Ok(IdentityResiduals {
        euler: (gyy - frame.l_value()).abs() / scale.max(f64::MIN_POSITIVE),
        cartan_l,
        h_metricity: h_metricity(space, &frame)?,
        v_metricity: v_metricity(space, &frame)?,
        bianchi,
        antisymmetry_defect,
        interchange_hh: interchange_hh(&frame)?,
        l_horizontal,
        l_vertical,
        interchange_hv: space.is_riemannian().then(|| interchange_hv(&frame)),
    })
}
