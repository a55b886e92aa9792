use nalgebra::{DMatrix, DVector};

use super::ode::{solve, IntegratorConfig, Knot, OdeSolution, OdeSystem, Projection, StepLog, Termination};
use crate::dynamics::{
    closure_at, conserved_quantity, constraint_monitors, evaluate_closure, geodesic_rhs,
    null_completion, raw_rates, state_len, ClosureKind, ClosureSpec, ConservedValue, Monitors,
    WorldlineState,
};
use crate::error::{FinslerError, Result};
use crate::geometry::{frame_at, Needs, SpinTensor};
use crate::jets::FinslerSpace;

/// `(X, P, S)` evolved by a closure.
pub struct WorldlineSystem<'a> {
    pub space: &'a FinslerSpace,
    pub spec: &'a ClosureSpec,
}

impl OdeSystem for WorldlineSystem<'_> {
    fn dim(&self) -> usize {
        state_len(self.space.dim())
    }

    fn rhs(&self, tau: f64, y: &[f64]) -> Result<Vec<f64>> {
        let state = WorldlineState::from_slice(tau, self.space.dim(), y)?;
        let (frame, out) = evaluate_closure(self.space, self.spec, &state)?;
        let (dx, dp, ds) = raw_rates(&frame, &state, &out)?;
        let n = self.space.dim();
        let mut v: Vec<f64> = dx.iter().chain(dp.iter()).copied().collect();
        for i in 0..n {
            for j in i + 1..n {
                v.push(ds[(i, j)]);
            }
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(FinslerError::EvaluationFailure {
                what: "worldline rates".into(),
                x: state.x.as_slice().to_vec(),
                y: state.p.as_slice().to_vec(),
            });
        }
        Ok(v)
    }
}

/// Second-order geodesic equation `ẍ = −G(x, ẋ)` as `(x, ẋ)`.
pub struct GeodesicSystem<'a> {
    pub space: &'a FinslerSpace,
}

impl OdeSystem for GeodesicSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.space.dim()
    }

    fn rhs(&self, _tau: f64, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.space.dim();
        let acc = geodesic_rhs(self.space, &y[..n], &y[n..])?;
        Ok(y[n..].iter().copied().chain(acc.iter().copied()).collect())
    }
}

/// Monitors and conserved quantities at one recorded state.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub state: WorldlineState,
    pub monitors: Monitors,
    /// `Ψ(Z)` for every declared Killing field, in declaration order.
    pub conserved: Vec<(String, ConservedValue)>,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub kind: ClosureKind,
    pub samples: Vec<Sample>,
    pub steps: Vec<StepLog>,
    pub rejected: usize,
    pub evaluations: usize,
    pub termination: Termination,
    knots: Vec<Knot>,
    n: usize,
}

impl TrajectoryRecord {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn final_state(&self) -> &WorldlineState {
        &self.samples.last().expect("records hold the initial sample").state
    }

    pub fn killing_names(&self) -> Vec<String> {
        self.samples[0].conserved.iter().map(|(k, _)| k.clone()).collect()
    }

    /// Dense output at `tau` from the accepted steps.
    pub fn interpolate(&self, tau: f64) -> Option<WorldlineState> {
        let sol = OdeSolution {
            knots: self.knots.clone(),
            steps: vec![],
            rejected: 0,
            evaluations: 0,
            termination: Termination::Completed,
        };
        WorldlineState::from_slice(tau, self.n, &sol.at(tau)?).ok()
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }
}

/// Checks the closure's constraints on an initial state to `1e-10`.
pub fn check_initial(space: &FinslerSpace, spec: &ClosureSpec, state: &WorldlineState) -> Result<()> {
    spec.check_space(space)?;
    let n = space.dim();
    if state.dim() != n {
        return Err(FinslerError::RejectedInput(format!(
            "state dimension {} in a space of dimension {n}",
            state.dim()
        )));
    }
    let tol = 1e-10;
    let frame = frame_at(space, state.x.as_slice(), state.p.as_slice(), Needs::METRIC)?;
    let monitors = constraint_monitors(&frame, state, spec, None);
    let fail = |what: String| Err(FinslerError::Constraint(format!("initial state: {what}")));
    if spec.kind == ClosureKind::Geodesic {
        if !state.s.is_zero() {
            return fail("the geodesic closure carries no spin".into());
        }
        return Ok(());
    }
    let pp_scale = frame.g().abs().component_mul(&(state.p.abs() * state.p.abs().transpose())).sum();
    match spec.kind {
        ClosureKind::Spinoptics3d | ClosureKind::Massive4d => {
            let want = spec.scale * spec.scale;
            if (monitors.pp - want).abs() > tol * want {
                return fail(format!("P·P = {} but the closure expects {want}", monitors.pp));
            }
        }
        _ => {
            if monitors.pp.abs() > tol * pp_scale {
                return fail(format!("P is not null: L(X, P) = {:.3e}", monitors.pp));
            }
        }
    }
    let s2 = spec.s * spec.s;
    if (monitors.s2 - s2).abs() > tol * s2.max(f64::MIN_POSITIVE) {
        return fail(format!("s² = {} but the closure expects {s2}", monitors.s2));
    }
    if monitors.tulczyjew > tol {
        return fail(format!("S·P residual {:.3e}", monitors.tulczyjew));
    }
    if let Some(c) = monitors.corinaldesi {
        if c > tol {
            return fail(format!("S·t residual {c:.3e}"));
        }
    }
    Ok(())
}

/// Restores `P·P` (or `L = 0`) and `S·P = 0` after an accepted step.
pub fn project_constraints(space: &FinslerSpace, spec: &ClosureSpec, tau: f64, y: &[f64]) -> Result<Vec<f64>> {
    let n = space.dim();
    let mut state = WorldlineState::from_slice(tau, n, y)?;
    match spec.kind {
        ClosureKind::Geodesic => return Ok(y.to_vec()),
        ClosureKind::Spinoptics3d | ClosureKind::Massive4d => {
            let frame = frame_at(space, state.x.as_slice(), state.p.as_slice(), Needs::METRIC)?;
            let pp = frame.inner(&state.p, &state.p);
            if !(pp > 0.0) {
                return Err(FinslerError::Constraint(format!("P·P = {pp:.3e} during projection")));
            }
            // g is 0-homogeneous, so rescaling P leaves the frame unchanged.
            state.p *= spec.scale / pp.sqrt();
            let lowered = frame.lower(&state.p);
            let h = DMatrix::identity(n, n) - &state.p * lowered.transpose() / (spec.scale * spec.scale);
            state.s = SpinTensor::from_matrix(&h * state.s.upper_matrix() * h.transpose())?;
        }
        ClosureKind::Massless4dExact | ClosureKind::Massless4dObserver => {
            let spatial: Vec<f64> = state.p.iter().skip(1).copied().collect();
            state.p = null_completion(space, state.x.as_slice(), &spatial, state.p[0])?;
        }
    }
    Ok(state.to_vec())
}

fn sample_at(space: &FinslerSpace, spec: &ClosureSpec, state: WorldlineState) -> Sample {
    let (monitors, conserved) = match evaluate_closure(space, spec, &state) {
        Ok((frame, out)) => {
            let conserved = space
                .killing_fields()
                .iter()
                .filter_map(|z| conserved_quantity(&frame, &state, z).ok().map(|v| (z.name.clone(), v)))
                .collect();
            (constraint_monitors(&frame, &state, spec, Some(&out)), conserved)
        }
        Err(_) => {
            let frame = frame_at(space, state.x.as_slice(), state.p.as_slice(), Needs::CONNECTIONS);
            match frame {
                Ok(frame) => {
                    let conserved = space
                        .killing_fields()
                        .iter()
                        .filter_map(|z| conserved_quantity(&frame, &state, z).ok().map(|v| (z.name.clone(), v)))
                        .collect();
                    (constraint_monitors(&frame, &state, spec, None), conserved)
                }
                Err(_) => (Monitors::default(), vec![]),
            }
        }
    };
    Sample {
        state,
        monitors,
        conserved,
    }
}

/// Evolves `initial` under `spec` to `config.tau_end`.
///
/// Singularities and step underflow end the run early; the partial record and
/// its [`Termination`] are returned.
pub fn integrate(
    space: &FinslerSpace,
    spec: &ClosureSpec,
    initial: &WorldlineState,
    config: &IntegratorConfig,
) -> Result<TrajectoryRecord> {
    config.validate()?;
    check_initial(space, spec, initial)?;
    let n = space.dim();
    // Closure errors at the start are input errors, not integration events.
    let frame = frame_at(space, initial.x.as_slice(), initial.p.as_slice(), crate::dynamics::closure_needs(spec.kind))?;
    closure_at(&frame, spec, initial)?;

    let sys = WorldlineSystem { space, spec };
    let project = |tau: f64, y: &[f64]| project_constraints(space, spec, tau, y);
    let post: Option<&dyn Fn(f64, &[f64]) -> Result<Vec<f64>>> = match config.projection {
        Projection::Off => None,
        Projection::RenormalizeConstraints => Some(&project),
    };
    let sol = solve(&sys, initial.tau, initial.to_vec(), config, post)?;

    let last = sol.knots.len() - 1;
    let samples = sol
        .knots
        .iter()
        .enumerate()
        .filter(|(i, _)| i % config.monitor_stride == 0 || *i == last)
        .map(|(_, k)| {
            let state = WorldlineState::from_slice(k.tau, n, &k.y).expect("packed by the solver");
            sample_at(space, spec, state)
        })
        .collect();
    Ok(TrajectoryRecord {
        kind: spec.kind,
        samples,
        steps: sol.steps,
        rejected: sol.rejected,
        evaluations: sol.evaluations,
        termination: sol.termination,
        knots: sol.knots,
        n,
    })
}

/// Geodesic through `x0` with initial velocity `v0`.
pub fn integrate_geodesic(space: &FinslerSpace, x0: &[f64], v0: &[f64], config: &IntegratorConfig) -> Result<OdeSolution> {
    let y0: Vec<f64> = x0.iter().chain(v0).copied().collect();
    solve(&GeodesicSystem { space }, 0.0, y0, config, None)
}

/// Position part of a packed state.
pub fn position(y: &[f64], n: usize) -> DVector<f64> {
    DVector::from_column_slice(&y[..n])
}
