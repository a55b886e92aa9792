use serde::Serialize;

use super::ode::{IntegratorConfig, Method, OdeSolution, Termination};
use super::worldline::{integrate, integrate_geodesic, TrajectoryRecord};
use crate::dynamics::{ClosureSpec, WorldlineState};
use crate::error::{FinslerError, Result};
use crate::jets::FinslerSpace;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRun {
    /// `rel_tol` for adaptive runs, the step for fixed-step runs.
    pub control: f64,
    pub steps: usize,
    /// Max-norm distance of the final state from the reference run.
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub runs: Vec<ConvergenceRun>,
    /// Least-squares slope of `−log error` against `log steps`.
    pub order: f64,
    /// Errors failed to decrease strictly along the ladder.
    pub non_monotone: bool,
}

fn fit_order(runs: &[ConvergenceRun]) -> f64 {
    let pts: Vec<(f64, f64)> = runs
        .iter()
        .filter(|r| r.error > 0.0)
        .map(|r| ((r.steps as f64).ln(), r.error.ln()))
        .collect();
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -sxy / sxx
}

/// Self-convergence over a ladder of tolerances (adaptive) or steps (fixed).
///
/// `run` integrates with the given control value and returns the final state
/// and the number of accepted steps. The smallest control is the reference.
pub fn convergence_ladder(
    controls: &[f64],
    mut run: impl FnMut(f64) -> Result<(Vec<f64>, usize)>,
) -> Result<ConvergenceReport> {
    if controls.len() < 3 {
        return Err(FinslerError::RejectedInput("need at least three tolerances".into()));
    }
    let mut sorted = controls.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite controls"));
    let span = sorted[0] / sorted[sorted.len() - 1];
    if !(span >= 100.0 * (1.0 - 1e-12)) {
        return Err(FinslerError::RejectedInput(format!(
            "controls must span two decades, got a ratio of {span:.3}"
        )));
    }
    let results: Vec<(Vec<f64>, usize)> = sorted.iter().map(|&c| run(c)).collect::<Result<_>>()?;
    let (reference, _) = results.last().expect("non-empty");
    let runs: Vec<ConvergenceRun> = sorted
        .iter()
        .zip(&results)
        .take(sorted.len() - 1)
        .map(|(&control, (y, steps))| ConvergenceRun {
            control,
            steps: *steps,
            error: y.iter().zip(reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        })
        .collect();
    let non_monotone = runs.windows(2).any(|w| w[1].error >= w[0].error);
    Ok(ConvergenceReport {
        order: fit_order(&runs),
        runs,
        non_monotone,
    })
}

fn finished(termination: &Termination) -> Result<()> {
    match termination.clone().into_error() {
        None => Ok(()),
        Some(e) => Err(e),
    }
}

fn with_control(base: &IntegratorConfig, control: f64) -> IntegratorConfig {
    let mut cfg = base.clone();
    match cfg.method {
        Method::Rk45Adaptive => {
            cfg.rel_tol = control;
            cfg.abs_tol = control * 1e-3;
        }
        Method::Rk4Fixed => cfg.max_step = control,
    }
    cfg
}

/// Convergence order of a worldline integration. Aborts with the
/// singularity if any run fails to complete.
pub fn convergence_study(
    space: &FinslerSpace,
    spec: &ClosureSpec,
    initial: &WorldlineState,
    base: &IntegratorConfig,
    controls: &[f64],
) -> Result<ConvergenceReport> {
    convergence_ladder(controls, |c| {
        let rec = integrate(space, spec, initial, &with_control(base, c))?;
        finished(&rec.termination)?;
        Ok((rec.final_state().to_vec(), rec.steps.len()))
    })
}

/// Convergence order of a geodesic integration from `(x0, v0)`.
pub fn geodesic_convergence_study(
    space: &FinslerSpace,
    x0: &[f64],
    v0: &[f64],
    base: &IntegratorConfig,
    controls: &[f64],
) -> Result<ConvergenceReport> {
    convergence_ladder(controls, |c| {
        let sol: OdeSolution = integrate_geodesic(space, x0, v0, &with_control(base, c))?;
        finished(&sol.termination)?;
        Ok((sol.final_knot().y.clone(), sol.steps.len()))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelDrift {
    pub name: String,
    pub initial: f64,
    /// `max |v(τ) − v(0)| / max(|v(0)|, floor)`.
    pub drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConservationAudit {
    pub conserved: Vec<ChannelDrift>,
    pub pp: ChannelDrift,
    pub s2: ChannelDrift,
    /// Largest normalized `S·P` residual along the record.
    pub tulczyjew: f64,
    pub corinaldesi: Option<f64>,
}

impl ConservationAudit {
    pub fn worst_conserved(&self) -> f64 {
        self.conserved.iter().map(|c| c.drift).fold(0.0, f64::max)
    }
}

fn drift(name: &str, values: &[f64], floor: f64) -> ChannelDrift {
    let v0 = values[0];
    let denom = v0.abs().max(floor).max(f64::MIN_POSITIVE);
    ChannelDrift {
        name: name.to_string(),
        initial: v0,
        drift: values.iter().map(|v| (v - v0).abs()).fold(0.0, f64::max) / denom,
    }
}

/// Drift of every monitored invariant. `Ψ(Z)` is measured against
/// `max(|Ψ(0)|, 10⁻³ (|P|(1 + |X|) + |S|))`, the size of the terms it is built
/// from, so a vanishing initial value does not inflate the ratio.
pub fn conservation_audit(record: &TrajectoryRecord, killing_names: &[&str]) -> Result<ConservationAudit> {
    let first = &record.samples[0];
    let known = record.killing_names();
    let st = &first.state;
    let typical = st.p.amax() * (1.0 + st.x.amax()) + st.s.upper_matrix().amax();
    let mut conserved = Vec::new();
    for name in killing_names {
        let idx = known.iter().position(|k| k == name).ok_or_else(|| {
            FinslerError::RejectedInput(format!("no Killing field `{name}` (declared: {known:?})"))
        })?;
        let values: Vec<f64> = record.samples.iter().map(|s| s.conserved[idx].1.value).collect();
        conserved.push(drift(name, &values, 1e-3 * typical));
    }
    let pp: Vec<f64> = record.samples.iter().map(|s| s.monitors.pp).collect();
    let s2: Vec<f64> = record.samples.iter().map(|s| s.monitors.s2).collect();
    let p_scale = st.p.amax().powi(2);
    let s_scale = st.s.upper_matrix().amax().powi(2);
    let corinaldesi: Vec<f64> = record.samples.iter().filter_map(|s| s.monitors.corinaldesi).collect();
    Ok(ConservationAudit {
        conserved,
        pp: drift("pp", &pp, p_scale),
        s2: drift("s2", &s2, s_scale),
        tulczyjew: record.samples.iter().map(|s| s.monitors.tulczyjew).fold(0.0, f64::max),
        corinaldesi: (!corinaldesi.is_empty()).then(|| corinaldesi.iter().copied().fold(0.0, f64::max)),
    })
}
