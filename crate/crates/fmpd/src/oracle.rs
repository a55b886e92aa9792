//! Independent Riemannian reference built from Christoffel symbols only.
//!
//! The metric `g̃_ij(x)` is recovered from `L` by polarization and
//! differentiated with hyper-dual numbers, so nothing here touches the Taylor
//! pipeline. Curvature uses the common index order
//! `R^a{}_{bcd} = ∂_cΓ^a_{db} − ∂_dΓ^a_{cb} + Γ^a_{ce}Γ^e_{db} − Γ^a_{de}Γ^e_{cb}`,
//! and the spinning-body equations are the classical ones written in it.

use nalgebra::{DMatrix, DVector};

use crate::error::{FinslerError, Result};
use crate::jets::{FinslerSpace, HyperDual};

pub struct RiemannianOracle {
    n: usize,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    gamma: Vec<f64>,
    riemann: Vec<f64>,
}

impl RiemannianOracle {
    pub fn at(space: &FinslerSpace, x: &[f64]) -> Result<Self> {
        if !space.is_riemannian() {
            return Err(FinslerError::RejectedInput(format!(
                "`{}` is not Riemannian",
                space.name()
            )));
        }
        let n = space.dim();
        let xs: Vec<HyperDual> = (0..n).map(|i| HyperDual::variable(x[i], i, n)).collect();
        let l = space.lagrangian();
        let eval = |v: &[f64]| {
            let ys: Vec<HyperDual> = v.iter().map(|&c| HyperDual::constant(c, n)).collect();
            l.eval_hyper(&xs, &ys)
        };
        // g̃_ij = ¼ (L(e_i + e_j) − L(e_i − e_j))
        let mut g = vec![HyperDual::constant(0.0, n); n * n];
        for i in 0..n {
            for j in i..n {
                let mut plus = vec![0.0; n];
                let mut minus = vec![0.0; n];
                plus[i] += 1.0;
                plus[j] += 1.0;
                minus[i] += 1.0;
                minus[j] -= 1.0;
                let a = eval(&plus);
                let b = eval(&minus);
                let gij = HyperDual {
                    v: 0.25 * (a.v - b.v),
                    g: a.g.iter().zip(&b.g).map(|(p, q)| 0.25 * (p - q)).collect(),
                    h: a.h.iter().zip(&b.h).map(|(p, q)| 0.25 * (p - q)).collect(),
                };
                g[i * n + j] = gij.clone();
                g[j * n + i] = gij;
            }
        }
        let g0 = DMatrix::from_fn(n, n, |i, j| g[i * n + j].v);
        let g_inv = g0.clone().try_inverse().ok_or(FinslerError::GeometryDegeneracy {
            cond: f64::INFINITY,
        })?;
        let dg = |i: usize, j: usize, k: usize| g[i * n + j].g[k];
        let ddg = |i: usize, j: usize, k: usize, m: usize| g[i * n + j].hess(k, m);

        // Γ_{dbc} = ½(∂_b g_dc + ∂_c g_db − ∂_d g_bc) and its derivatives.
        let idx3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
        let idx4 = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
        let mut low = vec![0.0; n * n * n];
        let mut dlow = vec![0.0; n * n * n * n];
        for d in 0..n {
            for b in 0..n {
                for c in 0..n {
                    low[idx3(d, b, c)] = 0.5 * (dg(d, c, b) + dg(d, b, c) - dg(b, c, d));
                    for e in 0..n {
                        dlow[idx4(d, b, c, e)] =
                            0.5 * (ddg(d, c, b, e) + ddg(d, b, c, e) - ddg(b, c, d, e));
                    }
                }
            }
        }
        let mut gamma = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    gamma[idx3(a, b, c)] = (0..n).map(|d| g_inv[(a, d)] * low[idx3(d, b, c)]).sum();
                }
            }
        }
        // ∂_e g^{ad} = −g^{ap} ∂_e g_pq g^{qd}
        let mut dginv = vec![0.0; n * n * n];
        for a in 0..n {
            for d in 0..n {
                for e in 0..n {
                    let mut acc = 0.0;
                    for p in 0..n {
                        for q in 0..n {
                            acc -= g_inv[(a, p)] * dg(p, q, e) * g_inv[(q, d)];
                        }
                    }
                    dginv[idx3(a, d, e)] = acc;
                }
            }
        }
        let dgamma = |a: usize, b: usize, c: usize, e: usize| -> f64 {
            (0..n)
                .map(|d| dginv[idx3(a, d, e)] * low[idx3(d, b, c)] + g_inv[(a, d)] * dlow[idx4(d, b, c, e)])
                .sum()
        };
        let gm = |a: usize, b: usize, c: usize| gamma[idx3(a, b, c)];
        let mut riemann = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut r = dgamma(a, d, b, c) - dgamma(a, c, b, d);
                        for e in 0..n {
                            r += gm(a, c, e) * gm(e, d, b) - gm(a, d, e) * gm(e, c, b);
                        }
                        riemann[idx4(a, b, c, d)] = r;
                    }
                }
            }
        }
        Ok(RiemannianOracle {
            n,
            g: g0,
            g_inv,
            gamma,
            riemann,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Γ^a_{bc}`.
    pub fn christoffel(&self, a: usize, b: usize, c: usize) -> f64 {
        self.gamma[(a * self.n + b) * self.n + c]
    }

    /// `R^a{}_{bcd}`.
    pub fn riemann(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.riemann[((a * self.n + b) * self.n + c) * self.n + d]
    }

    /// `R_{abcd} = g_{ae} R^e{}_{bcd}`.
    pub fn riemann_lower(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        (0..self.n).map(|e| self.g[(a, e)] * self.riemann(e, b, c, d)).sum()
    }

    /// `−Γ^a_{bc} ẋ^b ẋ^c`.
    pub fn geodesic_acceleration(&self, xdot: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |a, _| {
            let mut acc = 0.0;
            for b in 0..n {
                for c in 0..n {
                    acc -= self.christoffel(a, b, c) * xdot[b] * xdot[c];
                }
            }
            acc
        })
    }

    /// MPD: `DP^a = −½ R^a{}_{bcd} u^b S^{cd}`, `DS^{ab} = P^a u^b − P^b u^a`.
    pub fn mpd(&self, p: &DVector<f64>, s: &DMatrix<f64>, u: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let dp = DVector::from_fn(n, |a, _| {
            let mut acc = 0.0;
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        acc += self.riemann(a, b, c, d) * u[b] * s[(c, d)];
                    }
                }
            }
            -0.5 * acc
        });
        (dp, p * u.transpose() - u * p.transpose())
    }

    /// Small-spin Tulczyjew velocity `u = P − (1/2m²) S^{ab} R_{bcde} P^c S^{de}`
    /// for the `(+, −, −, −)` signature, momentum rate with `u → P`.
    pub fn massive(&self, p: &DVector<f64>, s: &DMatrix<f64>, m: f64) -> Spinning {
        let w = s * (self.curv_pair(s) * p);
        let xdot = p - w / (2.0 * m * m);
        let (dp, _) = self.mpd(p, s, p);
        let ds = p * xdot.transpose() - &xdot * p.transpose();
        Spinning { xdot, dp, ds }
    }

    /// `K_{bc} = R_{bcde} S^{de}`.
    fn curv_pair(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |b, c| {
            let mut acc = 0.0;
            for d in 0..n {
                for e in 0..n {
                    if s[(d, e)] != 0.0 {
                        acc += self.riemann_lower(b, c, d, e) * s[(d, e)];
                    }
                }
            }
            acc
        })
    }

    /// Souriau–Saturnini: `u = P + 2 S^{ab} R_{bcde} P^c S^{de} / (R_{abcd} S^{ab} S^{cd})`.
    pub fn souriau_saturnini(&self, p: &DVector<f64>, s: &DMatrix<f64>) -> Spinning {
        let k = self.curv_pair(s);
        let denom = k.component_mul(s).sum();
        let xdot = p + s * (&k * p) * (2.0 / denom);
        let (dp, ds) = self.mpd(p, s, &xdot);
        Spinning { xdot, dp, ds }
    }

    /// Observer form `u = P + S^a{}_b (Dt/dτ)^b / (P·t)` with
    /// `Dt/dτ = (∂_c t^b + Γ^b_{dc} t^d) u^c`, solved for `u`.
    pub fn observer(&self, p: &DVector<f64>, s: &DMatrix<f64>, t: &[f64], t_jac: &DMatrix<f64>) -> Result<Spinning> {
        let n = self.n;
        let tv = DVector::from_column_slice(t);
        let pt = p.dot(&(&self.g * &tv));
        let dt = DMatrix::from_fn(n, n, |b, c| {
            t_jac[(b, c)] + (0..n).map(|d| self.christoffel(b, d, c) * t[d]).sum::<f64>()
        });
        let k = s * &self.g * dt / pt;
        let xdot = (DMatrix::identity(n, n) - k)
            .lu()
            .solve(p)
            .ok_or(FinslerError::ClosureSingularity {
                scalar: "oracle observer system",
                value: 0.0,
                guard: 0.0,
            })?;
        let (dp, ds) = self.mpd(p, s, &xdot);
        Ok(Spinning { xdot, dp, ds })
    }

    /// Spinoptics with vanishing Cartan tensor: `Σ = p²/s − K(S)/(4s)` with
    /// `K(S) = R_{abcd} S^{ab} S^{cd}`, `u = l − S K l / (2sΣ)`, MPD momentum rate.
    pub fn spinoptics(&self, p: &DVector<f64>, s: &DMatrix<f64>, pnorm: f64, signed_s: f64) -> Spinning {
        let k = self.curv_pair(s);
        let kss = k.component_mul(s).sum();
        let sigma = pnorm * pnorm / signed_s - kss / (4.0 * signed_s);
        let l = p / pnorm;
        let xdot = &l - s * (&k * &l) / (2.0 * signed_s * sigma);
        let (dp, ds) = self.mpd(p, s, &xdot);
        Spinning { xdot, dp, ds }
    }
}

/// Velocity and covariant rates from the oracle.
#[derive(Clone, Debug)]
pub struct Spinning {
    pub xdot: DVector<f64>,
    pub dp: DVector<f64>,
    pub ds: DMatrix<f64>,
}
