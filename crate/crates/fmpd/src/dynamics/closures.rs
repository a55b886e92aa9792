use nalgebra::{DMatrix, DVector, Matrix3};

use super::algebra::{adjugate3, det_identity_minus_3, footnote_inverse, pfaffian4, wedge};
use super::state::WorldlineState;
use crate::error::{FinslerError, Result};
use crate::geometry::{curvature_contractions, Contractions, GeometryFrame};

/// Relative size of a closure denominator below which it counts as zero.
pub const SINGULARITY_GUARD: f64 = 1e-12;

fn guard(scalar: &'static str, value: f64, scale: f64) -> Result<()> {
    let g = SINGULARITY_GUARD * scale;
    if !value.is_finite() || !(scale > 0.0) || value.abs() <= g {
        return Err(FinslerError::ClosureSingularity {
            scalar,
            value,
            guard: g,
        });
    }
    Ok(())
}

/// Closed-form rates plus the scalars they divide by.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosureOutput {
    pub xdot: DVector<f64>,
    pub cov_p: DVector<f64>,
    pub cov_s: DMatrix<f64>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub sigma_tilde: Option<f64>,
    pub delta: Option<f64>,
    pub sigma: Option<f64>,
    pub r_s_s: Option<f64>,
    pub p_dot_t: Option<f64>,
    pub det_observer: Option<f64>,
}

impl Diagnostics {
    /// `(name, value)` for every populated scalar.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        [
            ("sigma_tilde", self.sigma_tilde),
            ("delta", self.delta),
            ("sigma", self.sigma),
            ("r_s_s", self.r_s_s),
            ("p_dot_t", self.p_dot_t),
            ("det_observer", self.det_observer),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}

/// `Σ_{ab} A_{ab} B^{ab}`.
fn full_contract(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

fn abs_contract(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.abs().component_mul(&b.abs()).sum()
}

fn to3(m: &DMatrix<f64>) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m[(i, j)])
}

/// Spinoptics pieces: the determinant, adjugate and scalar identities.
#[derive(Clone, Debug)]
pub struct SpinopticsScalars {
    /// `Σ̃ = p² − (p/2) Tr 𝒫(S) + (1/8s²) 𝒫_{μν} 𝒫_{λρ} S^{μλ} S^{νρ}`.
    pub sigma_tilde: f64,
    /// `Δ = s (1 + Q̂(S)(S) / 4s²)`.
    pub delta: f64,
    /// `Σ = Σ̃/Δ + R(S)(S) / 4s`.
    pub sigma: f64,
    /// Closed-form `adj(I − 𝒫(S)/2p)`.
    pub adjugate: Matrix3<f64>,
}

/// Σ̃, Δ, Σ and the adjugate from their closed forms.
pub fn spinoptics_scalars(
    frame: &GeometryFrame,
    c: &Contractions,
    state: &WorldlineState,
    p: f64,
    s: f64,
) -> Result<SpinopticsScalars> {
    let g = frame.g();
    let g_inv = frame.g_inv();
    let s_up = state.s.upper_matrix();
    let ps = c.p_s()?;
    let qs = c.q_s()?;
    let l = frame.l_section()?;
    let tr_p = (g_inv * ps).trace();
    let pp_ss = full_contract(s_up, &(ps * s_up * ps.transpose()));
    let sigma_tilde = p * p - 0.5 * p * tr_p + pp_ss / (8.0 * s * s);
    let delta = s * (1.0 + full_contract(qs, s_up) / (4.0 * s * s));
    let r_s_s = full_contract(&c.r_s, s_up);
    let adj = (1.0 - tr_p / (2.0 * p)) * DMatrix::identity(3, 3)
        + g_inv * ps / (2.0 * p)
        + &l * (g * &l).transpose() * (pp_ss / (8.0 * p * p * s * s));
    guard("Σ̃", sigma_tilde, p * p)?;
    guard("Δ", delta, s.abs())?;
    let sigma = sigma_tilde / delta + r_s_s / (4.0 * s);
    guard("Σ", sigma, p * p / s.abs())?;
    Ok(SpinopticsScalars {
        sigma_tilde,
        delta,
        sigma,
        adjugate: to3(&adj),
    })
}

/// Generic-linear-algebra values of `p² det(I − 𝒫(S)/2p)` and
/// `adj(I − 𝒫(S)/2p)`, plus the trace-formula versions of both.
pub fn spinoptics_linear_algebra(frame: &GeometryFrame, c: &Contractions, p: f64) -> Result<[(f64, Matrix3<f64>); 2]> {
    let m = to3(&(frame.g_inv() * c.p_s()? / (2.0 * p)));
    let a = Matrix3::identity() - m;
    let det = a.determinant();
    let inv = a.try_inverse().ok_or(FinslerError::ClosureSingularity {
        scalar: "det(I − 𝒫/2p)",
        value: det,
        guard: 0.0,
    })?;
    let by_trace = (1.0 - m.trace()) * Matrix3::identity() + m + adjugate3(&m);
    Ok([(p * p * det, inv * det), (p * p * det_identity_minus_3(&m), by_trace)])
}

/// 3D spinoptics: `Ẋ = l + S R(S) l / (2sΣ)` and
/// `∇̂P/dτ = −(p/sΔ) S [p I − ½ 𝒫(S)ᵀ] Ẋ`, with `s` signed.
///
/// The spin rate is the Cartan-form equation with `Ẏ = (∇̂P/dτ)/p`.
pub fn close_spinoptics3(frame: &GeometryFrame, state: &WorldlineState, p: f64, s: f64) -> Result<ClosureOutput> {
    if frame.dim() != 3 {
        return Err(FinslerError::RejectedInput("spinoptics needs n = 3".into()));
    }
    if s == 0.0 {
        return Err(FinslerError::DegenerateSpin);
    }
    let g = frame.g();
    let g_inv = frame.g_inv();
    let l = frame.l_section()?;
    let c = curvature_contractions(frame, &state.s)?;
    let sc = spinoptics_scalars(frame, &c, state, p, s)?;
    let s_up = state.s.upper_matrix();
    let s_mix = s_up * g;

    let xdot = &l + s_up * (&c.r_s * &l) / (2.0 * s * sc.sigma);
    let w = g_inv * c.p_s()?.transpose() * &xdot;
    let cov_p = &s_mix * (&xdot * p - &w * 0.5) * (-p / (s * sc.delta));

    let ydot = &cov_p / p;
    let p_xdot = g_inv * c.p_s()?.transpose() * &xdot;
    let q_ydot = g_inv * c.q_s()?.transpose() * &ydot;
    let cov_s = wedge(&state.p, &xdot) * 2.0 + wedge(&p_xdot, &l) - wedge(&q_ydot, &l);
    Ok(ClosureOutput {
        xdot,
        cov_p,
        cov_s,
        diagnostics: Diagnostics {
            sigma_tilde: Some(sc.sigma_tilde),
            delta: Some(sc.delta),
            sigma: Some(sc.sigma),
            r_s_s: Some(full_contract(&c.r_s, s_up)),
            ..Diagnostics::default()
        },
    })
}

/// Residuals of the implicit momentum equation and of the differentiated
/// Tulczyjew condition for given `(Ẋ, ∇̂P/dτ)`.
pub fn spinoptics_implicit_residuals(
    frame: &GeometryFrame,
    state: &WorldlineState,
    p: f64,
    xdot: &DVector<f64>,
    cov_p: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let g = frame.g();
    let g_inv = frame.g_inv();
    let l = frame.l_section()?;
    let c = curvature_contractions(frame, &state.s)?;
    let ps = c.p_s()?;
    let momentum = cov_p - g_inv * (&c.r_s * xdot) * 0.5 - g_inv * (ps * cov_p) / (2.0 * p);
    let n = frame.dim();
    let proj = &l * (g * &l).transpose() - DMatrix::identity(n, n);
    let constraint = (proj * xdot * p + g_inv * ps.transpose() * xdot * 0.5) * p
        + (state.s.mixed(g) + g_inv * c.q_s()? * 0.5) * cov_p;
    Ok((momentum, constraint))
}

fn timelike_mass2(frame: &GeometryFrame, p: &DVector<f64>) -> Result<f64> {
    let m2 = frame.inner(p, p);
    if !(m2 > 0.0) {
        return Err(FinslerError::Signature(format!("P·P = {m2:.3e} is not timelike")));
    }
    Ok(m2)
}

/// 4D massive closure, truncated after `O(s²)`.
pub fn close_massive4(frame: &GeometryFrame, state: &WorldlineState, m: f64) -> Result<ClosureOutput> {
    if frame.dim() != 4 {
        return Err(FinslerError::RejectedInput("massive closure needs n = 4".into()));
    }
    timelike_mass2(frame, &state.p)?;
    let g_inv = frame.g_inv();
    let c = curvature_contractions(frame, &state.s)?;
    let s_up = state.s.upper_matrix();
    let p = &state.p;
    // v^ν = R(S)^ν_λ P^λ, w = S R(S) P
    let v = g_inv * (&c.r_s * p);
    let w = s_up * (&c.r_s * p);
    let qv = g_inv * (c.q_s()? * &v);
    let xdot = p + (&w + &qv * 0.5) / (2.0 * m * m);
    let cov_p = &v * 0.5 + g_inv * (c.p_s()? * &v) / (4.0 * m);
    let cov_s = wedge(p, &w) / (m * m);
    Ok(ClosureOutput {
        xdot,
        cov_p,
        cov_s,
        diagnostics: Diagnostics {
            r_s_s: Some(full_contract(&c.r_s, s_up)),
            ..Diagnostics::default()
        },
    })
}

fn check_null(frame: &GeometryFrame, p: &DVector<f64>) -> Result<()> {
    let pp = frame.inner(p, p);
    let scale = abs_contract(frame.g(), &(p * p.transpose()));
    if pp.abs() > 1e-8 * scale {
        return Err(FinslerError::Constraint(format!("P is not null: L = {pp:.3e}")));
    }
    Ok(())
}

/// Massless closure without an observer.
pub fn close_massless4_exact(frame: &GeometryFrame, state: &WorldlineState, s: f64) -> Result<ClosureOutput> {
    if frame.dim() != 4 {
        return Err(FinslerError::RejectedInput("massless closure needs n = 4".into()));
    }
    let p = &state.p;
    check_null(frame, p)?;
    let c = curvature_contractions(frame, &state.s)?;
    let s_up = state.s.upper_matrix();
    let rss = full_contract(&c.r_s, s_up);
    guard("R(S)(S)", rss, abs_contract(&c.r_s, s_up)).map_err(|e| match e {
        FinslerError::ClosureSingularity { value, guard, .. } => FinslerError::ClosureSingularity {
            scalar: "R(S)(S) (use the observer form)",
            value,
            guard,
        },
        e => e,
    })?;
    let xdot = p + s_up * (&c.r_s * p) * (2.0 / rss);
    let pf = pfaffian4(&c.r_s, frame.g())?;
    let cov_p = p * (s * pf / rss);
    let cov_s = massless_cov_s(frame, &c, p, &xdot);
    Ok(ClosureOutput {
        xdot,
        cov_p,
        cov_s,
        diagnostics: Diagnostics {
            r_s_s: Some(rss),
            ..Diagnostics::default()
        },
    })
}

fn massless_cov_s(frame: &GeometryFrame, c: &Contractions, p: &DVector<f64>, xdot: &DVector<f64>) -> DMatrix<f64> {
    let q = frame.g_inv() * c.p_s_inh.transpose() * xdot;
    wedge(p, xdot) * 2.0 + wedge(&q, p)
}

/// Pieces of the observer closure that do not depend on `Ẋ`.
#[derive(Clone, Debug)]
pub struct ObserverOperators {
    /// `t` at the point.
    pub t: DVector<f64>,
    /// `P·t`.
    pub p_dot_t: f64,
    /// `M = ½ g⁻¹𝒫_I(S)`, the singular matrix inverted in `I − M`.
    pub m: DMatrix<f64>,
    /// `det(I − M)`.
    pub det: f64,
    /// `∇̂P/dτ = R Ẋ`.
    pub momentum_map: DMatrix<f64>,
    /// `∇̂t/dτ = B Ẋ`.
    pub observer_rate: DMatrix<f64>,
    /// `Ẋ = P + K Ẋ`.
    pub velocity_map: DMatrix<f64>,
}

pub fn observer_operators(
    frame: &GeometryFrame,
    c: &Contractions,
    state: &WorldlineState,
    t: &[f64],
    t_jac: &DMatrix<f64>,
) -> Result<ObserverOperators> {
    let n = frame.dim();
    let g = frame.g();
    let g_inv = frame.g_inv();
    let p = &state.p;
    let tv = DVector::from_column_slice(t);
    let pt = frame.inner(p, &tv);
    if !(pt.abs() > SINGULARITY_GUARD * p.norm() * tv.norm()) {
        return Err(FinslerError::ObserverDegeneracy { value: pt });
    }
    let id = DMatrix::<f64>::identity(n, n);
    let m = g_inv * &c.p_s_inh * 0.5;
    let lu = (&id - &m).lu();
    let det = lu.determinant();
    guard("det(I − ½𝒫_I(S))", det, 1.0)?;
    let momentum_map = lu
        .solve(&(g_inv * &c.r_s * 0.5))
        .ok_or(FinslerError::ClosureSingularity {
            scalar: "det(I − ½𝒫_I(S))",
            value: det,
            guard: SINGULARITY_GUARD,
        })?;
    // ∇̂t^ν/dτ = t^ν_{|λ} Ẋ^λ + C^ν_{κλ} t^κ (∇̂y^λ/dτ)
    let t_h = frame.hder_of_field(t, t_jac)?;
    let cm = frame.cartan_mixed()?;
    let c_t = DMatrix::from_fn(n, n, |nu, lam| (0..n).map(|k| cm[(nu, k, lam)] * t[k]).sum());
    let observer_rate = t_h + c_t * &momentum_map;

    let s_mix = state.s.mixed(g);
    let m1 = &id - g_inv * c.p_s_inh.transpose() * 0.5;
    let m1_inv_s = m1.lu().solve(&s_mix).ok_or(FinslerError::ClosureSingularity {
        scalar: "det(I − ½𝒫_I(S)ᵀ)",
        value: 0.0,
        guard: SINGULARITY_GUARD,
    })?;
    // u_ν = 𝒫_I(S)_ν^λ t_λ = 𝒫_{νa} t^a
    let u = &c.p_s_inh * &tv;
    let sb = &s_mix * &observer_rate;
    let velocity_map =
        p * (u.transpose() * &sb) * (-1.0 / (2.0 * pt * pt)) + m1_inv_s * &observer_rate / pt;
    Ok(ObserverOperators {
        t: tv,
        p_dot_t: pt,
        m,
        det,
        momentum_map,
        observer_rate,
        velocity_map,
    })
}

/// Massless closure relative to the observer field `t`.
pub fn close_massless4_observer(
    frame: &GeometryFrame,
    state: &WorldlineState,
    t: &[f64],
    t_jac: &DMatrix<f64>,
) -> Result<ClosureOutput> {
    if frame.dim() != 4 {
        return Err(FinslerError::RejectedInput("massless closure needs n = 4".into()));
    }
    let p = &state.p;
    check_null(frame, p)?;
    let c = curvature_contractions(frame, &state.s)?;
    let ops = observer_operators(frame, &c, state, t, t_jac)?;
    let n = frame.dim();
    let a = DMatrix::<f64>::identity(n, n) - &ops.velocity_map;
    let xdot = a.lu().solve(p).ok_or(FinslerError::ClosureSingularity {
        scalar: "det(I − K)",
        value: 0.0,
        guard: SINGULARITY_GUARD,
    })?;
    let cov_p = &ops.momentum_map * &xdot;
    let cov_s = massless_cov_s(frame, &c, p, &xdot);
    Ok(ClosureOutput {
        xdot,
        cov_p,
        cov_s,
        diagnostics: Diagnostics {
            r_s_s: Some(full_contract(&c.r_s, state.s.upper_matrix())),
            p_dot_t: Some(ops.p_dot_t),
            det_observer: Some(ops.det),
            ..Diagnostics::default()
        },
    })
}

/// Largest entry of `(I − M)⁻¹` from the trace formula minus the LU inverse.
pub fn footnote_discrepancy(m: &DMatrix<f64>) -> Result<f64> {
    let closed = footnote_inverse(m)?;
    let n = m.nrows();
    let lu = (DMatrix::identity(n, n) - m)
        .try_inverse()
        .ok_or(FinslerError::ClosureSingularity {
            scalar: "det(I − M)",
            value: 0.0,
            guard: 0.0,
        })?;
    Ok((closed - lu).amax())
}
