use std::sync::Arc;

use bitflags::bitflags;
use nalgebra::{DMatrix, DVector};

use super::expansion::{LocalExpansion, Slot, TensorField};
use super::tensor::{Tensor3, Tensor4};
use crate::error::{FinslerError, Result};
use crate::jets::{FinslerSpace, Scalar};

bitflags! {
    /// Fields requested from [`frame_at`].
    #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
    pub struct Needs: u16 {
        const METRIC = 1;
        const CARTAN = 1 << 1;
        const SPRAY = 1 << 2;
        const NONLINEAR = 1 << 3;
        const CHERN = 1 << 4;
        const CURVATURE = 1 << 5;
        const HV_CURVATURE = 1 << 6;
        const CARTAN_HDER = 1 << 7;
        /// `F`, `l`, `A` and the `F`-normalized curvatures; fails at `L ≤ 0`.
        const HOMOGENEOUS = 1 << 8;
        const CONNECTIONS = Self::METRIC.bits() | Self::CARTAN.bits() | Self::SPRAY.bits()
            | Self::NONLINEAR.bits() | Self::CHERN.bits();
        const ALL_INHOMOGENEOUS = Self::CONNECTIONS.bits() | Self::CURVATURE.bits()
            | Self::HV_CURVATURE.bits() | Self::CARTAN_HDER.bits();
        const ALL = Self::ALL_INHOMOGENEOUS.bits() | Self::HOMOGENEOUS.bits();
    }
}

impl Needs {
    fn expansion_order(self) -> usize {
        if self.intersects(Needs::CURVATURE | Needs::HV_CURVATURE | Needs::CARTAN_HDER) {
            4
        } else if self.intersects(Needs::CARTAN | Needs::NONLINEAR | Needs::CHERN) {
            3
        } else {
            2
        }
    }
}

pub const CONDITION_LIMIT: f64 = 1e12;

/// Pointwise geometry at `(x, y)`.
///
/// Tensors keep the slot order of their index expressions: `N^ν{}_μ` at
/// `[ν][μ]`, `Γ^μ{}_{νλ}` at `[μ][ν][λ]`, `R_ν{}^μ{}_{λσ}` and
/// `𝒫_ν{}^μ{}_{λσ}` at `[ν][μ][λ][σ]`, `C_{μνλ|σ}` at `[μ][ν][λ][σ]`.
#[derive(Clone, Debug)]
pub struct GeometryFrame {
    x: DVector<f64>,
    y: DVector<f64>,
    l: f64,
    f: Option<f64>,
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    cartan: Option<Tensor3>,
    spray: Option<DVector<f64>>,
    nonlinear: Option<DMatrix<f64>>,
    chern: Option<Tensor3>,
    curvature: Option<Tensor4>,
    hv_inhomogeneous: Option<Tensor4>,
    cartan_hder: Option<Tensor4>,
    cartan_h_hder: Option<Tensor4>,
    expansion: Arc<LocalExpansion>,
}

fn missing(field: &str) -> FinslerError {
    FinslerError::RejectedInput(format!("frame field `{field}` was not requested"))
}

/// Builds the frame, resolving dependencies `g → G → N → Γ → R/𝒫`.
pub fn frame_at(space: &FinslerSpace, x: &[f64], y: &[f64], needs: Needs) -> Result<GeometryFrame> {
    let n = space.dim();
    let order = needs.expansion_order();
    let e = LocalExpansion::new(space, x, y, order)?;
    let l = e.l.value();

    let g = DMatrix::from_fn(n, n, |i, j| e.g[i * n + j].value());
    let sv = g.clone().singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= CONDITION_LIMIT) {
        return Err(FinslerError::GeometryDegeneracy { cond });
    }
    let g_inv = DMatrix::from_fn(n, n, |i, j| e.g_inv[i * n + j].value());

    let f = if l > 0.0 { Some(l.sqrt()) } else { None };
    if needs.contains(Needs::HOMOGENEOUS) && f.is_none() {
        return Err(FinslerError::NullDirection { field: "F", l });
    }

    let spray = Some(DVector::from_fn(n, |i, _| e.spray[i].value()));
    let mut cartan = None;
    let mut nonlinear = None;
    let mut chern = None;
    if order >= 3 {
        cartan = Some(Tensor3::from_fn(n, |a, b, c| e.cartan[(a * n + b) * n + c].value()));
        nonlinear = Some(DMatrix::from_fn(n, n, |i, j| e.nonlinear[i * n + j].value()));
        chern = Some(Tensor3::from_fn(n, |a, b, c| e.chern_at(a, b, c).value()));
    }
    let mut curvature = None;
    let mut hv_inhomogeneous = None;
    let mut cartan_hder = None;
    let mut cartan_h_hder = None;
    if order >= 4 {
        curvature = Some(chern_curvature(&e));
        hv_inhomogeneous = Some(Tensor4::from_fn(n, |nu, mu, lam, sig| {
            -e.d_y(e.chern_at(mu, nu, lam), sig).value()
        }));
        let c_field = TensorField::new(n, vec![Slot::Down; 3], e.cartan.clone());
        let c_hder = c_field.horizontal(&e).values();
        cartan_hder = Some(Tensor4::from_fn(n, |a, b, c, d| c_hder[((a * n + b) * n + c) * n + d]));
        if needs.contains(Needs::HOMOGENEOUS) {
            let big_f = e.l.sqrt();
            let a_hder = c_field.scale(&big_f).horizontal(&e).values();
            cartan_h_hder = Some(Tensor4::from_fn(n, |a, b, c, d| {
                a_hder[((a * n + b) * n + c) * n + d]
            }));
        }
    }

    Ok(GeometryFrame {
        x: DVector::from_column_slice(x),
        y: DVector::from_column_slice(y),
        l,
        f,
        g,
        g_inv,
        cartan,
        spray,
        nonlinear,
        chern,
        curvature,
        hv_inhomogeneous,
        cartan_hder,
        cartan_h_hder,
        expansion: Arc::new(e),
    })
}

/// `R_ν{}^μ{}_{λσ} = δ_λΓ^μ_{νσ} − δ_σΓ^μ_{νλ} + Γ^μ_{κλ}Γ^κ_{σν} − Γ^μ_{κσ}Γ^κ_{λν}`.
fn chern_curvature(e: &LocalExpansion) -> Tensor4 {
    let n = e.dim();
    let gam = |a: usize, b: usize, c: usize| e.chern_at(a, b, c).value();
    let mut dgam = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    dgam[((a * n + b) * n + c) * n + d] = e.delta_x(e.chern_at(a, b, c), d).value();
                }
            }
        }
    }
    let dg = |a: usize, b: usize, c: usize, d: usize| dgam[((a * n + b) * n + c) * n + d];
    Tensor4::from_fn(n, |nu, mu, lam, sig| {
        let mut r = dg(mu, nu, sig, lam) - dg(mu, nu, lam, sig);
        for k in 0..n {
            r += gam(mu, k, lam) * gam(k, sig, nu) - gam(mu, k, sig) * gam(k, lam, nu);
        }
        r
    })
}

impl GeometryFrame {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// `L(x, y)`.
    pub fn l_value(&self) -> f64 {
        self.l
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn g_inv(&self) -> &DMatrix<f64> {
        &self.g_inv
    }

    pub fn f(&self) -> Result<f64> {
        self.f.ok_or(FinslerError::NullDirection {
            field: "F",
            l: self.l,
        })
    }

    pub fn has_f(&self) -> bool {
        self.f.is_some()
    }

    /// `l^μ = y^μ / F`.
    pub fn l_section(&self) -> Result<DVector<f64>> {
        let f = self.f.ok_or(FinslerError::NullDirection {
            field: "l",
            l: self.l,
        })?;
        Ok(&self.y / f)
    }

    /// `C_{μνλ} = ½ ∂g_{μν}/∂y^λ`.
    pub fn cartan(&self) -> Result<&Tensor3> {
        self.cartan.as_ref().ok_or_else(|| missing("C"))
    }

    /// `A_{μνλ} = F C_{μνλ}`.
    pub fn cartan_homogeneous(&self) -> Result<Tensor3> {
        let f = self.f.ok_or(FinslerError::NullDirection {
            field: "A",
            l: self.l,
        })?;
        Ok(self.cartan()?.scaled(f))
    }

    /// `C^μ{}_{νλ} = g^{μα} C_{ανλ}`.
    pub fn cartan_mixed(&self) -> Result<Tensor3> {
        let c = self.cartan()?;
        let n = self.dim();
        Ok(Tensor3::from_fn(n, |m, a, b| {
            (0..n).map(|k| self.g_inv[(m, k)] * c[(k, a, b)]).sum()
        }))
    }

    pub fn spray(&self) -> Result<&DVector<f64>> {
        self.spray.as_ref().ok_or_else(|| missing("G"))
    }

    pub fn nonlinear(&self) -> Result<&DMatrix<f64>> {
        self.nonlinear.as_ref().ok_or_else(|| missing("N"))
    }

    pub fn chern(&self) -> Result<&Tensor3> {
        self.chern.as_ref().ok_or_else(|| missing("Γ"))
    }

    pub fn curvature(&self) -> Result<&Tensor4> {
        self.curvature.as_ref().ok_or_else(|| missing("R"))
    }

    /// `−∂Γ^μ{}_{νλ}/∂y^σ` at `[ν][μ][λ][σ]`; equals `𝒫 / F` off the null cone.
    pub fn hv_curvature_inhomogeneous(&self) -> Result<&Tensor4> {
        self.hv_inhomogeneous.as_ref().ok_or_else(|| missing("𝒫_I"))
    }

    /// `𝒫_ν{}^μ{}_{λσ} = −F ∂Γ^μ{}_{νλ}/∂y^σ`.
    pub fn hv_curvature(&self) -> Result<Tensor4> {
        let f = self.f.ok_or(FinslerError::NullDirection {
            field: "𝒫",
            l: self.l,
        })?;
        Ok(self.hv_curvature_inhomogeneous()?.scaled(f))
    }

    /// `C_{μνλ|σ}`.
    pub fn cartan_hder(&self) -> Result<&Tensor4> {
        self.cartan_hder.as_ref().ok_or_else(|| missing("C_|"))
    }

    /// `A_{μνλ|σ}`, assembled from the expansion of `A = F C`.
    pub fn cartan_homogeneous_hder(&self) -> Result<&Tensor4> {
        if self.f.is_none() {
            return Err(FinslerError::NullDirection {
                field: "A_|",
                l: self.l,
            });
        }
        self.cartan_h_hder.as_ref().ok_or_else(|| missing("A_|"))
    }

    /// Taylor expansions behind this frame.
    pub fn expansion(&self) -> &LocalExpansion {
        &self.expansion
    }

    /// `g(u, v)`.
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.g * v))
    }

    /// `v_μ = g_{μν} v^ν`.
    pub fn lower(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.g * v
    }

    /// `T^μ{}_{|λ}` for a field of `x` only, from its value and Jacobian
    /// `J[κ][λ] = ∂_λ T^κ`: `∂_λ T^μ + Γ^μ{}_{κλ} T^κ`, stored at `[μ][λ]`.
    pub fn hder_of_field(&self, value: &[f64], jac: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let gam = self.chern()?;
        let n = self.dim();
        Ok(DMatrix::from_fn(n, n, |m, lam| {
            jac[(m, lam)] + (0..n).map(|k| gam[(m, k, lam)] * value[k]).sum::<f64>()
        }))
    }
}
