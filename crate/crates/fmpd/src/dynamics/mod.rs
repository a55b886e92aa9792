//! Momentum and spin equations, their closed forms and the quantities
//! monitored along worldlines.

mod algebra;
mod closures;
mod fmpd;
mod state;

use nalgebra::{DMatrix, DVector};

pub use algebra::{
    adjugate3, antisym, det_identity_minus_3, footnote_inverse, hodge_dual, pfaffian4,
    pfaffian_identity_residual, wedge,
};
pub use closures::{
    close_massive4, close_massless4_exact, close_massless4_observer, close_spinoptics3,
    footnote_discrepancy, observer_operators, spinoptics_implicit_residuals,
    spinoptics_linear_algebra, spinoptics_scalars, ClosureOutput, Diagnostics, ObserverOperators,
    SpinopticsScalars, SINGULARITY_GUARD,
};
pub use fmpd::{direction_rate, fmpd_rates, CovariantRates, FmpdForm};
pub use state::{
    initial_massive4, initial_massless4, initial_spinoptics3, null_completion, spin_massive4,
    spin_massless4, spin_spinoptics3, state_len, ClosureKind,
    ClosureSpec, WorldlineState,
};

use crate::error::{FinslerError, Result};
use crate::geometry::{
    covariant_rate_along, frame_at, killing_covariant_derivative, killing_residual_in, Connection,
    CurveTensor, GeometryFrame, Needs,
};
use crate::jets::{FinslerSpace, NamedField};

/// `ẍ = −G(x, ẋ)`.
pub fn geodesic_rhs(space: &FinslerSpace, x: &[f64], xdot: &[f64]) -> Result<DVector<f64>> {
    if xdot.iter().all(|&v| v == 0.0) {
        return Err(FinslerError::RejectedInput("zero direction".into()));
    }
    let frame = frame_at(space, x, xdot, Needs::METRIC | Needs::SPRAY)?;
    Ok(-frame.spray()?.clone())
}

/// Frame fields a closure reads.
pub fn closure_needs(kind: ClosureKind) -> Needs {
    match kind {
        ClosureKind::Geodesic => Needs::CONNECTIONS,
        ClosureKind::Spinoptics3d | ClosureKind::Massive4d => Needs::ALL,
        ClosureKind::Massless4dExact | ClosureKind::Massless4dObserver => Needs::ALL_INHOMOGENEOUS,
    }
}

/// Evaluates the closure at `state`, returning the frame it used.
pub fn evaluate_closure(
    space: &FinslerSpace,
    spec: &ClosureSpec,
    state: &WorldlineState,
) -> Result<(GeometryFrame, ClosureOutput)> {
    let frame = frame_at(
        space,
        state.x.as_slice(),
        state.p.as_slice(),
        closure_needs(spec.kind),
    )?;
    let out = closure_at(&frame, spec, state)?;
    Ok((frame, out))
}

/// Closure output in a prepared frame.
pub fn closure_at(frame: &GeometryFrame, spec: &ClosureSpec, state: &WorldlineState) -> Result<ClosureOutput> {
    match spec.kind {
        ClosureKind::Geodesic => {
            let n = frame.dim();
            Ok(ClosureOutput {
                xdot: state.p.clone(),
                cov_p: DVector::zeros(n),
                cov_s: DMatrix::zeros(n, n),
                diagnostics: Diagnostics::default(),
            })
        }
        ClosureKind::Spinoptics3d => close_spinoptics3(frame, state, spec.scale, spec.signed_s()),
        ClosureKind::Massive4d => close_massive4(frame, state, spec.scale),
        ClosureKind::Massless4dExact => close_massless4_exact(frame, state, spec.signed_s()),
        ClosureKind::Massless4dObserver => {
            let field = spec
                .observer
                .as_ref()
                .ok_or_else(|| FinslerError::RejectedInput("observer field missing".into()))?;
            let (t, jac) = field.value_and_jacobian(state.x.as_slice())?;
            close_massless4_observer(frame, state, &t, &jac)
        }
    }
}

/// Coordinate rates `(dX/dτ, dP/dτ, dS/dτ)` from covariant ones.
///
/// With `y = P` the Cartan derivative of `P` is `dP/dτ + N Ẋ` (the vertical
/// term drops because `C(y, ·, ·) = 0`), so the vertical rate `δy/dτ` is the
/// covariant momentum rate itself.
pub fn raw_rates(
    frame: &GeometryFrame,
    state: &WorldlineState,
    out: &ClosureOutput,
) -> Result<(DVector<f64>, DVector<f64>, DMatrix<f64>)> {
    let n = frame.dim();
    let zero_v = CurveTensor::Vector(DVector::zeros(n));
    let zero_s = CurveTensor::Bivector(DMatrix::zeros(n, n));
    let vdot = &out.cov_p;
    // covariant_rate_along(T, 0) = K·T, the connection part alone.
    let kp = covariant_rate_along(
        frame,
        &CurveTensor::Vector(state.p.clone()),
        &zero_v,
        &out.xdot,
        vdot,
        Connection::Cartan,
    )?;
    let ks = covariant_rate_along(
        frame,
        &CurveTensor::Bivector(state.s.upper_matrix().clone()),
        &zero_s,
        &out.xdot,
        vdot,
        Connection::Cartan,
    )?;
    match (kp, ks) {
        (CurveTensor::Vector(kp), CurveTensor::Bivector(ks)) => {
            Ok((out.xdot.clone(), &out.cov_p - kp, &out.cov_s - ks))
        }
        _ => unreachable!("covariant_rate_along preserves tensor type"),
    }
}

/// `Ψ(Z) = P^λ Z_λ + ½ S^{μλ} Z_{λ|μ}` from the value and Jacobian of `Z`.
pub fn conserved_quantity_in(
    frame: &GeometryFrame,
    state: &WorldlineState,
    value: &[f64],
    jac: &DMatrix<f64>,
) -> Result<f64> {
    let z = DVector::from_column_slice(value);
    let zd = killing_covariant_derivative(frame, value, jac)?;
    // S^{μλ} Z_{λ|μ} = Σ S[μ][λ] zd[λ][μ]
    let spin = state.s.upper_matrix().component_mul(&zd.transpose()).sum();
    Ok(frame.inner(&state.p, &z) + 0.5 * spin)
}

/// `Ψ(Z)`, flagged when `Z` fails the Killing equation at the point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservedValue {
    pub value: f64,
    pub killing_residual: f64,
    pub is_killing: bool,
}

pub const KILLING_TOLERANCE: f64 = 1e-8;

pub fn conserved_quantity(frame: &GeometryFrame, state: &WorldlineState, z: &NamedField) -> Result<ConservedValue> {
    let (value, jac) = z.value_and_jacobian(state.x.as_slice())?;
    let residual = killing_residual_in(frame, &value, &jac)?.amax();
    Ok(ConservedValue {
        value: conserved_quantity_in(frame, state, &value, &jac)?,
        killing_residual: residual,
        is_killing: residual <= KILLING_TOLERANCE,
    })
}

/// Scalars watched along a worldline.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Monitors {
    /// `P·P` with `g` at `y = P`.
    pub pp: f64,
    /// `½ S^{μν} S_{μν}`.
    pub s2: f64,
    /// `max |S^μ_ν P^ν| / (max|S| max|P|)`.
    pub tulczyjew: f64,
    /// Same with `Ẋ` in place of `P`; reported only.
    pub pirani: Option<f64>,
    /// Same with the observer field `t`.
    pub corinaldesi: Option<f64>,
    /// `P·Ẋ`.
    pub p_dot_xdot: Option<f64>,
    /// `L(X, P)`.
    pub l_value: f64,
    pub diagnostics: Diagnostics,
}

fn kernel_residual(frame: &GeometryFrame, state: &WorldlineState, v: &DVector<f64>) -> f64 {
    let smax = state.s.upper_matrix().amax();
    let vmax = v.amax();
    if smax == 0.0 || vmax == 0.0 {
        return 0.0;
    }
    (state.s.mixed(frame.g()) * v).amax() / (smax * vmax)
}

/// Monitor record; `out` adds the rate-dependent channels.
pub fn constraint_monitors(
    frame: &GeometryFrame,
    state: &WorldlineState,
    spec: &ClosureSpec,
    out: Option<&ClosureOutput>,
) -> Monitors {
    let g = frame.g();
    let corinaldesi = spec.observer.as_ref().map(|t| {
        let tv = DVector::from_vec(t.value(state.x.as_slice()));
        kernel_residual(frame, state, &tv)
    });
    Monitors {
        pp: frame.inner(&state.p, &state.p),
        s2: state.s.s2(g),
        tulczyjew: kernel_residual(frame, state, &state.p),
        pirani: out.map(|o| kernel_residual(frame, state, &o.xdot)),
        corinaldesi,
        p_dot_xdot: out.map(|o| frame.inner(&state.p, &o.xdot)),
        l_value: frame.l_value(),
        diagnostics: out.map(|o| o.diagnostics.clone()).unwrap_or_default(),
    }
}
