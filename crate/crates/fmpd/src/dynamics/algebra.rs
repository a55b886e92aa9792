use nalgebra::{DMatrix, Matrix3};

use crate::error::{FinslerError, Result};
use crate::geometry::levi_civita_lower;

fn check_antisymmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if !m.is_square() || (m + m.transpose()).amax() > 1e-12 * scale {
        return Err(FinslerError::RejectedInput(format!("{what} is not antisymmetric")));
    }
    Ok(())
}

/// Pfaffian of a covariant antisymmetric 4×4 `Ω_{μν}`:
/// `Pf(Ω) = (Ω₀₁Ω₂₃ − Ω₀₂Ω₁₃ + Ω₀₃Ω₁₂) / √|det g|`.
///
/// This is `⅛ ε̃^{μνλσ} Ω_{μν} Ω_{λσ}` with the density `ε̃^{0123} = +1/√|det g|`
/// in every signature, which makes `ΩFΩ = Pf(Ω) ⋆F + ½ Tr(ΩF) Ω` hold with
/// `⋆` built from `ε_{0123} = +√|det g|`. `Pf² = det(Ω_{μν}) / |det g|`.
pub fn pfaffian4(omega: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<f64> {
    if omega.nrows() != 4 || g.nrows() != 4 {
        return Err(FinslerError::RejectedInput("pfaffian4 needs 4×4 input".into()));
    }
    check_antisymmetric(omega, "Ω")?;
    let det = g.determinant();
    let core = omega[(0, 1)] * omega[(2, 3)] - omega[(0, 2)] * omega[(1, 3)]
        + omega[(0, 3)] * omega[(1, 2)];
    Ok(core / det.abs().sqrt())
}

/// `(⋆F)_{μν} = ½ ε_{μνλσ} F^{λσ}` for a covariant antisymmetric `F_{μν}`.
pub fn hodge_dual(f: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if f.nrows() != 4 || g.nrows() != 4 {
        return Err(FinslerError::RejectedInput("hodge_dual needs 4×4 input".into()));
    }
    check_antisymmetric(f, "F")?;
    let g_inv = g.clone().try_inverse().ok_or(FinslerError::GeometryDegeneracy {
        cond: f64::INFINITY,
    })?;
    let f_up = &g_inv * f * &g_inv;
    let eps = levi_civita_lower(g);
    Ok(DMatrix::from_fn(4, 4, |m, n| {
        let mut acc = 0.0;
        for l in 0..4 {
            for s in 0..4 {
                acc += eps[((m * 4 + n) * 4 + l) * 4 + s] * f_up[(l, s)];
            }
        }
        0.5 * acc
    }))
}

/// `ΩFΩ − Pf(Ω)⋆F − ½Tr(ΩF)Ω`, all lowered, with `Ω`, `F` covariant.
pub fn pfaffian_identity_residual(
    omega: &DMatrix<f64>,
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let g_inv = g.clone().try_inverse().ok_or(FinslerError::GeometryDegeneracy {
        cond: f64::INFINITY,
    })?;
    let lhs = omega * &g_inv * f * &g_inv * omega;
    let trace = (&g_inv * omega * &g_inv * f).trace();
    Ok(lhs - hodge_dual(f, g)? * pfaffian4(omega, g)? - omega * (0.5 * trace))
}

/// `(I − M)⁻¹` for a singular 4×4 `M` from its trace invariants.
pub fn footnote_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != 4 || m.ncols() != 4 {
        return Err(FinslerError::RejectedInput("footnote_inverse needs a 4×4 matrix".into()));
    }
    let m2 = m * m;
    let m3 = &m2 * m;
    let t1 = m.trace();
    let t2 = m2.trace();
    let t3 = m3.trace();
    let e2 = 0.5 * (t1 * t1 - t2);
    let e3 = (t1 * t1 * t1 - 3.0 * t1 * t2 + 2.0 * t3) / 6.0;
    let denom = 1.0 - t1 + e2 - e3;
    if denom.abs() < 1e-14 {
        return Err(FinslerError::ClosureSingularity {
            scalar: "det(I − M)",
            value: denom,
            guard: 1e-14,
        });
    }
    let numer = m * (1.0 - t1 + e2) + &m2 * (1.0 - t1) + m3;
    Ok(DMatrix::identity(4, 4) + numer / denom)
}

/// `det(I − M) = 1 − Tr M − det M + ½(Tr(M)² − Tr(M²))` for 3×3 `M`.
pub fn det_identity_minus_3(m: &Matrix3<f64>) -> f64 {
    let t = m.trace();
    1.0 - t - m.determinant() + 0.5 * (t * t - (m * m).trace())
}

/// `adj(M) = ½(Tr(M)² − Tr(M²)) I − M Tr M + M²` for 3×3 `M`.
pub fn adjugate3(m: &Matrix3<f64>) -> Matrix3<f64> {
    let t = m.trace();
    Matrix3::identity() * (0.5 * (t * t - (m * m).trace())) - m * t + m * m
}

/// `T^{[ab]} = ½ (T^{ab} − T^{ba})`.
pub fn antisym(t: &DMatrix<f64>) -> DMatrix<f64> {
    (t - t.transpose()) * 0.5
}

/// `a^{[μ} b^{λ]}` as a matrix.
pub fn wedge(a: &nalgebra::DVector<f64>, b: &nalgebra::DVector<f64>) -> DMatrix<f64> {
    (a * b.transpose() - b * a.transpose()) * 0.5
}
