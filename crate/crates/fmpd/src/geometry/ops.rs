use nalgebra::{DMatrix, DVector};

use super::frame::{frame_at, GeometryFrame, Needs};
use super::tensor::{SpinTensor, Tensor3};
use crate::error::{FinslerError, Result};
use crate::jets::{FinslerSpace, KillingField, Scalar};

/// Curvature contractions with a spin tensor, all as covariant matrices.
#[derive(Clone, Debug)]
pub struct Contractions {
    /// `R(S)_{λσ} = R_{νμλσ} S^{νμ}`.
    pub r_s: DMatrix<f64>,
    /// `𝒫(S)_{μν}`; absent on the null cone.
    pub p_s: Option<DMatrix<f64>>,
    /// `Q̂(S)_{μν}`; absent on the null cone.
    pub q_s: Option<DMatrix<f64>>,
    /// `𝒫_I(S)_{μν}`, with `C` and `y` in place of `A` and `l`.
    pub p_s_inh: DMatrix<f64>,
    /// `Q̂_I(S)_{μν}`.
    pub q_s_inh: DMatrix<f64>,
}

impl Contractions {
    pub fn p_s(&self) -> Result<&DMatrix<f64>> {
        self.p_s.as_ref().ok_or(FinslerError::NullDirection {
            field: "𝒫(S)",
            l: 0.0,
        })
    }

    pub fn q_s(&self) -> Result<&DMatrix<f64>> {
        self.q_s.as_ref().ok_or(FinslerError::NullDirection {
            field: "Q̂(S)",
            l: 0.0,
        })
    }
}

/// `2 (T_{μνλ|σ} − T_{λμκ} T^κ{}_{σν|ρ} v^ρ) S^{λσ}` for `T = A, v = l` or `T = C, v = y`.
fn p_contraction(
    g_inv: &DMatrix<f64>,
    t: &Tensor3,
    t_hder: &super::tensor::Tensor4,
    v: &DVector<f64>,
    s: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = t.dim();
    // T^κ_{σν|ρ} v^ρ
    let mut tv = Tensor3::zeros(n);
    for k in 0..n {
        for sg in 0..n {
            for nu in 0..n {
                let mut acc = 0.0;
                for a in 0..n {
                    let gi = g_inv[(k, a)];
                    if gi == 0.0 {
                        continue;
                    }
                    for r in 0..n {
                        acc += gi * t_hder[(a, sg, nu, r)] * v[r];
                    }
                }
                tv[(k, sg, nu)] = acc;
            }
        }
    }
    DMatrix::from_fn(n, n, |mu, nu| {
        let mut acc = 0.0;
        for lam in 0..n {
            for sg in 0..n {
                let slam = s[(lam, sg)];
                if slam == 0.0 {
                    continue;
                }
                let mut term = t_hder[(mu, nu, lam, sg)];
                for k in 0..n {
                    term -= t[(lam, mu, k)] * tv[(k, sg, nu)];
                }
                acc += term * slam;
            }
        }
        2.0 * acc
    })
}

/// `−2 T_{λκμ} T^κ{}_{σν} S^{λσ}`.
fn q_contraction(g_inv: &DMatrix<f64>, t: &Tensor3, s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = t.dim();
    let t_mixed = Tensor3::from_fn(n, |k, a, b| (0..n).map(|c| g_inv[(k, c)] * t[(c, a, b)]).sum());
    DMatrix::from_fn(n, n, |mu, nu| {
        let mut acc = 0.0;
        for lam in 0..n {
            for sg in 0..n {
                let slam = s[(lam, sg)];
                if slam == 0.0 {
                    continue;
                }
                for k in 0..n {
                    acc += t[(lam, k, mu)] * t_mixed[(k, sg, nu)] * slam;
                }
            }
        }
        -2.0 * acc
    })
}

pub fn curvature_contractions(frame: &GeometryFrame, spin: &SpinTensor) -> Result<Contractions> {
    let n = frame.dim();
    let r = frame.curvature()?;
    let g = frame.g();
    let s = spin.upper_matrix();
    let r_s = DMatrix::from_fn(n, n, |lam, sg| {
        let mut acc = 0.0;
        for nu in 0..n {
            for mu in 0..n {
                let snm = s[(nu, mu)];
                if snm == 0.0 {
                    continue;
                }
                let lowered: f64 = (0..n).map(|a| g[(mu, a)] * r[(nu, a, lam, sg)]).sum();
                acc += lowered * snm;
            }
        }
        acc
    });
    let c = frame.cartan()?;
    let c_hder = frame.cartan_hder()?;
    let p_s_inh = p_contraction(frame.g_inv(), c, c_hder, frame.y(), s);
    let q_s_inh = q_contraction(frame.g_inv(), c, s);
    let (p_s, q_s) = match (frame.l_section(), frame.cartan_homogeneous_hder()) {
        (Ok(l), Ok(a_hder)) => {
            let a = frame.cartan_homogeneous()?;
            (
                Some(p_contraction(frame.g_inv(), &a, a_hder, &l, s)),
                Some(q_contraction(frame.g_inv(), &a, s)),
            )
        }
        _ => (None, None),
    };
    Ok(Contractions {
        r_s,
        p_s,
        q_s,
        p_s_inh,
        q_s_inh,
    })
}

/// Which linear connection a curve derivative uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connection {
    Chern,
    Cartan,
}

/// Tensor types carried along worldlines.
#[derive(Clone, Debug, PartialEq)]
pub enum CurveTensor {
    Vector(DVector<f64>),
    /// Contravariant antisymmetric pair.
    Bivector(DMatrix<f64>),
}

/// Cartan connection `ω̂ = ω + A^μ{}_{νλ} δy^λ / F`, split into its Chern
/// horizontal coefficients and the vertical coefficient `A/F = C^μ{}_{νλ}`.
#[derive(Clone, Debug)]
pub struct CartanConnection {
    pub horizontal: Tensor3,
    pub vertical: Tensor3,
}

pub fn cartan_connection_at(frame: &GeometryFrame) -> Result<CartanConnection> {
    frame.f()?;
    Ok(CartanConnection {
        horizontal: frame.chern()?.clone(),
        vertical: frame.cartan_mixed()?,
    })
}

/// Covariant rate of a tensor along a curve.
///
/// `vdot` is the vertical rate `δy^μ(d/dτ) = dy^μ/dτ + N^μ{}_ν Ẋ^ν`, which equals
/// `F Ẏ^μ` off the null cone. With it the Cartan vertical term
/// `A^μ{}_{νλ} T^ν Ẏ^λ` reads `C^μ{}_{νλ} T^ν vdot^λ` and stays defined at `L = 0`.
pub fn covariant_rate_along(
    frame: &GeometryFrame,
    tensor: &CurveTensor,
    raw_rate: &CurveTensor,
    xdot: &DVector<f64>,
    vdot: &DVector<f64>,
    connection: Connection,
) -> Result<CurveTensor> {
    let n = frame.dim();
    let gam = frame.chern()?;
    // K^μ_ν = Γ^μ_{νρ} Ẋ^ρ (+ C^μ_{νλ} vdot^λ for Cartan)
    let mut k = DMatrix::from_fn(n, n, |m, nu| (0..n).map(|r| gam[(m, nu, r)] * xdot[r]).sum());
    if connection == Connection::Cartan {
        let cm = frame.cartan_mixed()?;
        k += DMatrix::from_fn(n, n, |m, nu| (0..n).map(|r| cm[(m, nu, r)] * vdot[r]).sum());
    }
    match (tensor, raw_rate) {
        (CurveTensor::Vector(t), CurveTensor::Vector(dt)) => Ok(CurveTensor::Vector(dt + &k * t)),
        (CurveTensor::Bivector(t), CurveTensor::Bivector(dt)) => {
            Ok(CurveTensor::Bivector(dt + &k * t + t * k.transpose()))
        }
        _ => Err(FinslerError::RejectedInput(
            "tensor and raw rate have different types".into(),
        )),
    }
}

/// `ξ_{λ|σ} = g_{λκ} (∂_σ ξ^κ + Γ^κ{}_{ασ} ξ^α)`, stored at `[λ][σ]`.
pub fn killing_covariant_derivative(
    frame: &GeometryFrame,
    value: &[f64],
    jac: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    Ok(frame.g() * frame.hder_of_field(value, jac)?)
}

/// `max |ξ_{μ|ν} + ξ_{ν|μ} + 2 A^λ{}_{μν} l^σ ξ_{λ|σ}|`, written with `C` and
/// `y` (`A l = C y`), so it is defined on the null cone as well.
pub fn killing_residual(space: &FinslerSpace, z: &KillingField, x: &[f64], y: &[f64]) -> Result<f64> {
    let frame = frame_at(space, x, y, Needs::CONNECTIONS)?;
    let (value, jac) = z.value_and_jacobian(x)?;
    Ok(killing_residual_in(&frame, &value, &jac)?.amax())
}

pub fn killing_residual_in(
    frame: &GeometryFrame,
    value: &[f64],
    jac: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = frame.dim();
    let xi = killing_covariant_derivative(frame, value, jac)?;
    let cm = frame.cartan_mixed()?;
    let y = frame.y();
    let xi_y: DVector<f64> = &xi * y;
    Ok(DMatrix::from_fn(n, n, |m, nu| {
        let extra: f64 = (0..n).map(|lam| cm[(lam, m, nu)] * xi_y[lam]).sum();
        xi[(m, nu)] + xi[(nu, m)] + 2.0 * extra
    }))
}

/// Lie derivative of `g` along the natural lift `ξ̄ = ξ^μ ∂_x + ∂_νξ^μ y^ν ∂_y`,
/// computed straight from coordinate derivatives of `g`.
pub fn lie_derivative_metric(
    frame: &GeometryFrame,
    value: &[f64],
    jac: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = frame.dim();
    let e = frame.expansion();
    let g = frame.g();
    let lift_y: DVector<f64> = jac * frame.y();
    DMatrix::from_fn(n, n, |m, nu| {
        let gmn = &e.g[m * n + nu];
        let mut acc = 0.0;
        for l in 0..n {
            acc += value[l] * gmn.derivative(l).value();
            acc += lift_y[l] * e.d_y(gmn, l).value();
            acc += g[(l, nu)] * jac[(l, m)] + g[(m, l)] * jac[(l, nu)];
        }
        acc
    })
}
