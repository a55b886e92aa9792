use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::algebra::{antisym, wedge};
use super::state::WorldlineState;
use crate::error::{FinslerError, Result};
use crate::geometry::{curvature_contractions, GeometryFrame, Tensor3};

/// Which of the equivalent forms of the momentum/spin equations to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FmpdForm {
    /// Chern connection, homogeneous objects, rates in `Ẏ`.
    Chern,
    /// Cartan connection, homogeneous objects, rates in `Ẏ`.
    Cartan,
    /// Cartan connection with `C`, `y` and the vertical rate `∇̂y/dτ`.
    Inhomogeneous,
}

/// Covariant rates `(∇P/dτ, ∇S/dτ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovariantRates {
    pub p: DVector<f64>,
    pub s: DMatrix<f64>,
}

/// `T^λ{}_{σν} u^σ v^ν` as a vector in `λ`.
fn contract3_mixed(t: &Tensor3, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let n = t.dim();
    DVector::from_fn(n, |l, _| {
        let mut acc = 0.0;
        for s in 0..n {
            for nu in 0..n {
                acc += t[(l, s, nu)] * u[s] * v[nu];
            }
        }
        acc
    })
}

/// `T^λ{}_{σν} w^ν` as a matrix `[λ][σ]`.
fn contract3_last(t: &Tensor3, w: &DVector<f64>) -> DMatrix<f64> {
    let n = t.dim();
    DMatrix::from_fn(n, n, |l, s| (0..n).map(|nu| t[(l, s, nu)] * w[nu]).sum())
}

fn mixed_tensor(g_inv: &DMatrix<f64>, t: &Tensor3) -> Tensor3 {
    let n = t.dim();
    Tensor3::from_fn(n, |m, a, b| (0..n).map(|k| g_inv[(m, k)] * t[(k, a, b)]).sum())
}

/// Right-hand sides of the momentum and spin equations.
///
/// `ydot` is `Ẏ` for the homogeneous forms and `∇̂y/dτ` for the inhomogeneous
/// one. The `A`-terms use `l` (or `y`) from the frame, so `P` need not be
/// parallel to the direction.
pub fn fmpd_rates(
    frame: &GeometryFrame,
    state: &WorldlineState,
    xdot: &DVector<f64>,
    ydot: &DVector<f64>,
    form: FmpdForm,
) -> Result<CovariantRates> {
    let n = frame.dim();
    if xdot.len() != n || ydot.len() != n || state.dim() != n {
        return Err(FinslerError::RejectedInput("rate vectors have the wrong length".into()));
    }
    let g_inv = frame.g_inv();
    let c = curvature_contractions(frame, &state.s)?;
    let (dir, cart, p_s, q_s) = match form {
        FmpdForm::Inhomogeneous => (
            frame.y().clone(),
            frame.cartan()?.clone(),
            c.p_s_inh.clone(),
            c.q_s_inh.clone(),
        ),
        _ => (
            frame.l_section()?,
            frame.cartan_homogeneous()?,
            c.p_s()?.clone(),
            c.q_s()?.clone(),
        ),
    };
    let a_mixed = mixed_tensor(g_inv, &cart);
    let p = &state.p;
    let s_up = state.s.upper_matrix();

    // ½ R(S)^λ_ν Ẋ^ν + ½ 𝒫(S)^λ_μ Ẏ^μ − k P^σ A^λ_{σμ} Ẏ^μ
    let a_factor = if form == FmpdForm::Chern { 2.0 } else { 1.0 };
    let cov_p = (g_inv * (&c.r_s * xdot) + g_inv * (&p_s * ydot)) * 0.5
        - contract3_mixed(&a_mixed, p, ydot) * a_factor;

    // Index raising on the second slot: 𝒫(S)_ν^μ = 𝒫_{νa} g^{aμ}.
    let p_xdot = g_inv * p_s.transpose() * xdot;
    let q_ydot = g_inv * q_s.transpose() * ydot;
    // a^λ = A^λ_{σν} P^σ Ẋ^ν
    let a_vec = contract3_mixed(&a_mixed, p, xdot);
    let mut cov_s = wedge(p, xdot) * 2.0
        + (&dir * a_vec.transpose() - &a_vec * dir.transpose())
        + wedge(&p_xdot, &dir)
        - wedge(&q_ydot, &dir);
    if form == FmpdForm::Chern {
        // −2 Ẏ^ν A^{[λ}_{σν} S^{μ]σ}, written for the (μ, λ) slot.
        let ay = contract3_last(&a_mixed, ydot);
        let t = &ay * s_up.transpose();
        cov_s -= antisym(&t.transpose()) * 2.0;
    }
    Ok(CovariantRates { p: cov_p, s: cov_s })
}

/// `Ẏ` or `∇̂y/dτ` implied by a momentum rate when `y = P`.
pub fn direction_rate(frame: &GeometryFrame, cov_p: &DVector<f64>, form: FmpdForm) -> Result<DVector<f64>> {
    match form {
        FmpdForm::Inhomogeneous => Ok(cov_p.clone()),
        _ => Ok(cov_p / frame.f()?),
    }
}
