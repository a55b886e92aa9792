use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::geometry::{frame_at, levi_civita_lower, GeometryFrame, Needs, SpinTensor};
use crate::jets::{expand_l, FinslerSpace, NamedField, Scalar, Signature};

/// Position, momentum and spin on a worldline. The Finsler direction is
/// always `y = P`.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldlineState {
    pub tau: f64,
    pub x: DVector<f64>,
    pub p: DVector<f64>,
    pub s: SpinTensor,
}

impl WorldlineState {
    pub fn new(tau: f64, x: DVector<f64>, p: DVector<f64>, s: SpinTensor) -> Result<Self> {
        let n = x.len();
        if p.len() != n || s.dim() != n {
            return Err(FinslerError::RejectedInput(format!(
                "state components have lengths {}, {}, {}",
                n,
                p.len(),
                s.dim()
            )));
        }
        Ok(WorldlineState { tau, x, p, s })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.p
    }

    /// `[X, P, S^{01}, S^{02}, …]`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.x.iter().chain(self.p.iter()).copied().chain(self.s.upper()).collect()
    }

    pub fn from_slice(tau: f64, n: usize, v: &[f64]) -> Result<Self> {
        if v.len() != state_len(n) {
            return Err(FinslerError::RejectedInput(format!(
                "state vector of length {} for n = {n}",
                v.len()
            )));
        }
        Ok(WorldlineState {
            tau,
            x: DVector::from_column_slice(&v[..n]),
            p: DVector::from_column_slice(&v[n..2 * n]),
            s: SpinTensor::from_upper(n, &v[2 * n..])?,
        })
    }
}

/// Length of the packed state `(X, P, S)`.
pub fn state_len(n: usize) -> usize {
    2 * n + n * (n - 1) / 2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosureKind {
    Geodesic,
    Spinoptics3d,
    Massive4d,
    Massless4dExact,
    Massless4dObserver,
}

impl ClosureKind {
    pub fn required_dim(self) -> Option<usize> {
        match self {
            ClosureKind::Geodesic => None,
            ClosureKind::Spinoptics3d => Some(3),
            _ => Some(4),
        }
    }

    pub fn is_massless(self) -> bool {
        matches!(self, ClosureKind::Massless4dExact | ClosureKind::Massless4dObserver)
    }
}

/// Supplementary conditions plus the scalars that label the body.
#[derive(Clone)]
pub struct ClosureSpec {
    pub kind: ClosureKind,
    /// `p` for spinoptics, `m` for massive bodies; ignored otherwise.
    pub scale: f64,
    /// Scalar spin `s ≥ 0`.
    pub s: f64,
    /// Polarization sign, `±1`; multiplies `s` where the spin is built from a
    /// Levi-Civita contraction.
    pub helicity: f64,
    pub observer: Option<Arc<NamedField>>,
}

impl std::fmt::Debug for ClosureSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClosureSpec")
            .field("kind", &self.kind)
            .field("scale", &self.scale)
            .field("s", &self.s)
            .field("helicity", &self.helicity)
            .field("observer", &self.observer.as_ref().map(|o| o.name.clone()))
            .finish()
    }
}

impl ClosureSpec {
    pub fn geodesic() -> Self {
        ClosureSpec {
            kind: ClosureKind::Geodesic,
            scale: 1.0,
            s: 0.0,
            helicity: 1.0,
            observer: None,
        }
    }

    pub fn spinoptics3(p: f64, s: f64, helicity: f64) -> Result<Self> {
        ClosureSpec {
            kind: ClosureKind::Spinoptics3d,
            scale: p,
            s,
            helicity,
            observer: None,
        }
        .validated()
    }

    pub fn massive4(m: f64, s: f64) -> Result<Self> {
        ClosureSpec {
            kind: ClosureKind::Massive4d,
            scale: m,
            s,
            helicity: 1.0,
            observer: None,
        }
        .validated()
    }

    pub fn massless4_exact(s: f64, helicity: f64) -> Result<Self> {
        ClosureSpec {
            kind: ClosureKind::Massless4dExact,
            scale: 1.0,
            s,
            helicity,
            observer: None,
        }
        .validated()
    }

    pub fn massless4_observer(s: f64, helicity: f64, observer: Arc<NamedField>) -> Result<Self> {
        ClosureSpec {
            kind: ClosureKind::Massless4dObserver,
            scale: 1.0,
            s,
            helicity,
            observer: Some(observer),
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return Err(FinslerError::RejectedInput(format!("spin s = {} must be ≥ 0", self.s)));
        }
        if self.helicity != 1.0 && self.helicity != -1.0 {
            return Err(FinslerError::RejectedInput(format!(
                "helicity must be ±1, got {}",
                self.helicity
            )));
        }
        if matches!(self.kind, ClosureKind::Spinoptics3d | ClosureKind::Massive4d)
            && !(self.scale > 0.0 && self.scale.is_finite())
        {
            return Err(FinslerError::RejectedInput(format!(
                "p or m must be > 0, got {}",
                self.scale
            )));
        }
        if self.kind == ClosureKind::Massless4dObserver && self.observer.is_none() {
            return Err(FinslerError::RejectedInput("observer branch needs a field t".into()));
        }
        Ok(self)
    }

    /// Signed scalar spin entering the closed forms.
    pub fn signed_s(&self) -> f64 {
        self.helicity * self.s
    }

    pub fn check_space(&self, space: &FinslerSpace) -> Result<()> {
        if let Some(n) = self.kind.required_dim() {
            if space.dim() != n {
                return Err(FinslerError::RejectedInput(format!(
                    "{:?} needs dimension {n}, space `{}` has {}",
                    self.kind,
                    space.name(),
                    space.dim()
                )));
            }
        }
        let want = match self.kind {
            ClosureKind::Geodesic => None,
            ClosureKind::Spinoptics3d => Some(Signature::PositiveDefinite),
            _ => Some(Signature::Lorentzian),
        };
        if let Some(sig) = want {
            if space.signature() != sig {
                return Err(FinslerError::Signature(format!(
                    "{:?} needs a {sig:?} space",
                    self.kind
                )));
            }
        }
        Ok(())
    }
}

fn lower_eps_contract(eps: &[f64], n: usize, vecs: &[&DVector<f64>]) -> DMatrix<f64> {
    // ε_{μν a b …} v^a w^b …
    DMatrix::from_fn(n, n, |m, nu| {
        let mut acc = 0.0;
        let rest = vecs.len();
        let total = n.pow(rest as u32);
        for k in 0..total {
            let mut idx = m * n + nu;
            let mut weight = 1.0;
            let mut kk = k;
            let mut slots = vec![0; rest];
            for slot in (0..rest).rev() {
                slots[slot] = kk % n;
                kk /= n;
            }
            for (slot, &a) in slots.iter().enumerate() {
                idx = idx * n + a;
                weight *= vecs[slot][a];
            }
            if weight != 0.0 {
                acc += eps[idx] * weight;
            }
        }
        acc
    })
}

fn raise_pair(frame: &GeometryFrame, lower: DMatrix<f64>) -> Result<SpinTensor> {
    let gi = frame.g_inv();
    SpinTensor::from_matrix(gi * lower * gi)
}

/// `S_{μν} = s ε_{μνλ} l^λ` in three dimensions.
pub fn spin_spinoptics3(frame: &GeometryFrame, signed_s: f64) -> Result<SpinTensor> {
    if frame.dim() != 3 {
        return Err(FinslerError::RejectedInput("spinoptics spin needs n = 3".into()));
    }
    let l = frame.l_section()?;
    let eps = levi_civita_lower(frame.g());
    raise_pair(frame, lower_eps_contract(&eps, 3, &[&l]) * signed_s)
}

/// `S_{μν} = s / √|m² J²| ε_{μνλρ} J^λ P^ρ` with `J` the part of `j` orthogonal to `P`.
pub fn spin_massive4(frame: &GeometryFrame, p: &DVector<f64>, j: &DVector<f64>, s: f64) -> Result<SpinTensor> {
    if frame.dim() != 4 {
        return Err(FinslerError::RejectedInput("massive spin needs n = 4".into()));
    }
    let m2 = frame.inner(p, p);
    if !(m2 > 0.0) {
        return Err(FinslerError::Signature(format!("P·P = {m2:.3e} is not timelike")));
    }
    let jp = j - p * (frame.inner(j, p) / m2);
    let j2 = frame.inner(&jp, &jp);
    if !(j2 < 0.0) || (m2 * j2).abs() < 1e-24 {
        return Err(FinslerError::RejectedInput(
            "J must have a spacelike part orthogonal to P".into(),
        ));
    }
    let eps = levi_civita_lower(frame.g());
    let lower = lower_eps_contract(&eps, 4, &[&jp, p]) * (s / (m2 * j2).abs().sqrt());
    raise_pair(frame, lower)
}

/// `S_{μν} = s / (P·t) ε_{μνλσ} t^λ P^σ`.
pub fn spin_massless4(frame: &GeometryFrame, p: &DVector<f64>, t: &DVector<f64>, signed_s: f64) -> Result<SpinTensor> {
    if frame.dim() != 4 {
        return Err(FinslerError::RejectedInput("massless spin needs n = 4".into()));
    }
    let pt = frame.inner(p, t);
    let scale = p.norm() * t.norm();
    if !(pt.abs() > 1e-12 * scale) {
        return Err(FinslerError::ObserverDegeneracy { value: pt });
    }
    let eps = levi_civita_lower(frame.g());
    raise_pair(frame, lower_eps_contract(&eps, 4, &[t, p]) * (signed_s / pt))
}

/// Solves `L(x, P) = 0` for `P⁰` by Newton iteration from `guess`, keeping the
/// spatial components fixed.
pub fn null_completion(space: &FinslerSpace, x: &[f64], spatial: &[f64], guess: f64) -> Result<DVector<f64>> {
    let n = space.dim();
    if spatial.len() + 1 != n {
        return Err(FinslerError::RejectedInput(format!(
            "null completion needs {} spatial components",
            n - 1
        )));
    }
    let mut y: Vec<f64> = std::iter::once(guess).chain(spatial.iter().copied()).collect();
    let scale = y.iter().map(|v| v * v).sum::<f64>();
    let mut zero = vec![0u8; 2 * n];
    zero[n] = 1;
    for _ in 0..60 {
        let l = expand_l(space, x, &y, 1)?;
        let value = l.value();
        let slope = l.partial(&zero);
        if value.abs() <= 1e-15 * scale {
            return Ok(DVector::from_vec(y));
        }
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        y[0] -= value / slope;
    }
    let l = space.l(x, &y)?;
    if l.abs() <= 1e-12 * scale {
        return Ok(DVector::from_vec(y));
    }
    Err(FinslerError::Constraint(format!("null completion did not converge (L = {l:.3e})")))
}

/// Spinoptics state `P = p l(dir)`, `S = s ε l`.
pub fn initial_spinoptics3(space: &FinslerSpace, x: &[f64], dir: &[f64], p: f64, signed_s: f64) -> Result<WorldlineState> {
    let l = frame_at(space, x, dir, Needs::METRIC)?.l_section()?;
    let mom = l * p;
    let frame = frame_at(space, x, mom.as_slice(), Needs::METRIC)?;
    let s = spin_spinoptics3(&frame, signed_s)?;
    WorldlineState::new(0.0, DVector::from_column_slice(x), mom, s)
}

/// Massive state with `P·P = m²` along `dir` and spin orientation from `j`.
pub fn initial_massive4(space: &FinslerSpace, x: &[f64], dir: &[f64], m: f64, j: &[f64], s: f64) -> Result<WorldlineState> {
    let mom = frame_at(space, x, dir, Needs::METRIC)?.l_section()? * m;
    let frame = frame_at(space, x, mom.as_slice(), Needs::METRIC)?;
    let spin = spin_massive4(&frame, &mom, &DVector::from_column_slice(j), s)?;
    WorldlineState::new(0.0, DVector::from_column_slice(x), mom, spin)
}

/// Null momentum with the given spatial part and spin seen by observer `t`.
pub fn initial_massless4(space: &FinslerSpace, x: &[f64], spatial: &[f64], t: &[f64], signed_s: f64) -> Result<WorldlineState> {
    let guess = spatial.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mom = null_completion(space, x, spatial, guess)?;
    let frame = frame_at(space, x, mom.as_slice(), Needs::METRIC)?;
    let spin = spin_massless4(&frame, &mom, &DVector::from_column_slice(t), signed_s)?;
    WorldlineState::new(0.0, DVector::from_column_slice(x), mom, spin)
}
