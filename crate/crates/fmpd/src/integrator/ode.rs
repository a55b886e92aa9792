use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};

/// First-order system `dy/dτ = f(τ, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, tau: f64, y: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rk4Fixed,
    Rk45Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Projection {
    Off,
    RenormalizeConstraints,
}

/// What the embedded error estimate is compared against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorControl {
    /// Each step's local error within the tolerance.
    PerStep,
    /// Local error per unit of `h / |tau_end − tau0|`: the summed local error
    /// over the run stays within the tolerance, and the global error falls
    /// like `tol^(5/4)` rather than `tol`.
    PerUnitStep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    pub error_control: ErrorControl,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper step bound; the step itself for `rk4-fixed`.
    pub max_step: f64,
    pub min_step: f64,
    /// First trial step; chosen automatically when absent.
    pub initial_step: Option<f64>,
    /// Record monitors every `monitor_stride` accepted steps.
    pub monitor_stride: usize,
    pub projection: Projection,
    pub tau_end: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk45Adaptive,
            error_control: ErrorControl::PerUnitStep,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 1.0,
            min_step: 1e-12,
            initial_step: None,
            monitor_stride: 1,
            projection: Projection::Off,
            tau_end: 1.0,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FinslerError::RejectedInput(msg));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad(format!("tolerances must be > 0 (rel {}, abs {})", self.rel_tol, self.abs_tol));
        }
        if !(self.min_step > 0.0 && self.min_step < self.max_step) {
            return bad(format!("need 0 < min_step < max_step, got {} and {}", self.min_step, self.max_step));
        }
        if !self.tau_end.is_finite() || self.monitor_stride == 0 || self.max_steps == 0 {
            return bad("tau_end must be finite; monitor_stride and max_steps ≥ 1".into());
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0) {
                return bad(format!("initial_step must be > 0, got {h}"));
            }
        }
        Ok(())
    }
}

/// Accepted point with its derivative, for Hermite dense output.
#[derive(Clone, Debug, PartialEq)]
pub struct Knot {
    pub tau: f64,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepLog {
    pub tau: f64,
    pub h: f64,
    /// Normalized embedded error estimate; 0 for fixed steps.
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Completed,
    /// The right-hand side failed at `tau` and no smaller step avoided it.
    Singularity { tau: f64, error: FinslerError },
    Stiffness { tau: f64, step: f64 },
    MaxSteps { tau: f64 },
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }

    pub fn label(&self) -> String {
        match self {
            Termination::Completed => "completed".into(),
            Termination::Singularity { tau, error } => format!("singularity at tau = {tau}: {error}"),
            Termination::Stiffness { tau, step } => format!("step underflow at tau = {tau} (h = {step:.3e})"),
            Termination::MaxSteps { tau } => format!("step budget exhausted at tau = {tau}"),
        }
    }

    pub fn into_error(self) -> Option<FinslerError> {
        match self {
            Termination::Completed => None,
            Termination::Singularity { error, .. } => Some(error),
            Termination::Stiffness { tau, step } => Some(FinslerError::Stiffness { tau, step }),
            Termination::MaxSteps { tau } => Some(FinslerError::Stiffness { tau, step: f64::NAN }),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub knots: Vec<Knot>,
    pub steps: Vec<StepLog>,
    pub rejected: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

impl OdeSolution {
    pub fn final_knot(&self) -> &Knot {
        self.knots.last().expect("a solution holds its initial knot")
    }

    /// Cubic Hermite interpolant on the accepted step containing `tau`.
    pub fn at(&self, tau: f64) -> Option<Vec<f64>> {
        let first = self.knots.first()?;
        let last = self.final_knot();
        let (lo, hi) = if first.tau <= last.tau { (first.tau, last.tau) } else { (last.tau, first.tau) };
        if tau < lo || tau > hi {
            return None;
        }
        let forward = last.tau >= first.tau;
        let i = self
            .knots
            .partition_point(|k| if forward { k.tau < tau } else { k.tau > tau });
        if i == 0 {
            return Some(first.y.clone());
        }
        Some(hermite(&self.knots[i - 1], &self.knots[i], tau))
    }
}

pub fn hermite(a: &Knot, b: &Knot, tau: f64) -> Vec<f64> {
    let h = b.tau - a.tau;
    if h == 0.0 {
        return b.y.clone();
    }
    let s = (tau - a.tau) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..a.y.len())
        .map(|i| h00 * a.y[i] + h10 * h * a.f[i] + h01 * b.y[i] + h11 * h * b.f[i])
        .collect()
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    (0..y.len())
        .map(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
        .collect()
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Trial {
    y: Vec<f64>,
    f: Vec<f64>,
    error: f64,
    evaluations: usize,
}

fn dp45_step<S: OdeSystem + ?Sized>(sys: &S, cfg: &IntegratorConfig, k0: &Knot, h: f64, span: f64) -> Result<Trial> {
    let mut k: Vec<Vec<f64>> = vec![k0.f.clone()];
    for stage in 1..7 {
        let terms: Vec<(f64, &[f64])> = (0..stage).map(|j| (A[stage][j], k[j].as_slice())).collect();
        let yi = axpy(&k0.y, h, &terms);
        k.push(sys.rhs(k0.tau + C[stage] * h, &yi)?);
    }
    // The seventh stage is evaluated at the 5th-order solution (FSAL).
    let y = axpy(&k0.y, h, &(0..6).map(|j| (B5[j], k[j].as_slice())).collect::<Vec<_>>());
    let mut acc = 0.0;
    for i in 0..y.len() {
        let e: f64 = h * (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>();
        let sc = cfg.abs_tol + cfg.rel_tol * k0.y[i].abs().max(y[i].abs());
        acc += (e / sc).powi(2);
    }
    let mut error = (acc / y.len() as f64).sqrt();
    if cfg.error_control == ErrorControl::PerUnitStep {
        error *= span.abs() / h.abs();
    }
    Ok(Trial {
        y,
        f: k.pop().expect("seven stages"),
        error,
        evaluations: 6,
    })
}

fn rk4_step<S: OdeSystem + ?Sized>(sys: &S, k0: &Knot, h: f64) -> Result<Trial> {
    let k1 = &k0.f;
    let k2 = sys.rhs(k0.tau + 0.5 * h, &axpy(&k0.y, 0.5 * h, &[(1.0, k1)]))?;
    let k3 = sys.rhs(k0.tau + 0.5 * h, &axpy(&k0.y, 0.5 * h, &[(1.0, &k2)]))?;
    let k4 = sys.rhs(k0.tau + h, &axpy(&k0.y, h, &[(1.0, &k3)]))?;
    let y = axpy(&k0.y, h / 6.0, &[(1.0, k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)]);
    let f = sys.rhs(k0.tau + h, &y)?;
    Ok(Trial {
        y,
        f,
        error: 0.0,
        evaluations: 4,
    })
}

fn initial_step<S: OdeSystem + ?Sized>(sys: &S, cfg: &IntegratorConfig, k0: &Knot, dir: f64) -> Result<f64> {
    // Hairer–Nørsett–Wanner starting-step heuristic for order 5.
    let scale: Vec<f64> = k0.y.iter().map(|v| cfg.abs_tol + cfg.rel_tol * v.abs()).collect();
    let norm = |v: &[f64]| (v.iter().zip(&scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    let d0 = norm(&k0.y);
    let d1 = norm(&k0.f);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(cfg.max_step);
    let y1 = axpy(&k0.y, dir * h0, &[(1.0, &k0.f)]);
    let f1 = sys.rhs(k0.tau + dir * h0, &y1)?;
    let diff: Vec<f64> = f1.iter().zip(&k0.f).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(cfg.max_step).max(cfg.min_step))
}

/// Integrates from `(tau0, y0)` to `cfg.tau_end`.
///
/// `post_step` may replace each accepted state (constraint projection); the
/// derivative is then re-evaluated. A right-hand-side failure inside a trial
/// step shrinks the step; the run stops with [`Termination::Singularity`] once
/// the step cannot shrink further.
pub fn solve<S: OdeSystem + ?Sized>(
    sys: &S,
    tau0: f64,
    y0: Vec<f64>,
    cfg: &IntegratorConfig,
    post_step: Option<&dyn Fn(f64, &[f64]) -> Result<Vec<f64>>>,
) -> Result<OdeSolution> {
    cfg.validate()?;
    if y0.len() != sys.dim() {
        return Err(FinslerError::RejectedInput(format!(
            "initial state has length {}, system has {}",
            y0.len(),
            sys.dim()
        )));
    }
    let span = cfg.tau_end - tau0;
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };
    let f0 = sys.rhs(tau0, &y0)?;
    let mut sol = OdeSolution {
        knots: vec![Knot { tau: tau0, y: y0, f: f0 }],
        steps: Vec::new(),
        rejected: 0,
        evaluations: 1,
        termination: Termination::Completed,
    };
    if span == 0.0 {
        return Ok(sol);
    }
    let mut h = match (cfg.method, cfg.initial_step) {
        (Method::Rk4Fixed, _) => cfg.max_step,
        (_, Some(h)) => h.min(cfg.max_step),
        (_, None) => {
            sol.evaluations += 1;
            initial_step(sys, cfg, &sol.knots[0], dir)?
        }
    };
    // PI step-size controller with the Dormand–Prince stabilization β.
    let beta = 0.04;
    let exponent = match cfg.error_control {
        ErrorControl::PerStep => -(0.2 - 0.75 * beta),
        ErrorControl::PerUnitStep => -(0.25 - 0.75 * beta),
    };
    let mut previous_error: f64 = 1e-4;
    let mut last_failure: Option<FinslerError> = None;
    loop {
        let k0 = sol.final_knot().clone();
        let remaining = (cfg.tau_end - k0.tau) * dir;
        if remaining <= 1e-14 * span.abs().max(1.0) {
            break;
        }
        if sol.steps.len() >= cfg.max_steps {
            sol.termination = Termination::MaxSteps { tau: k0.tau };
            break;
        }
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        if step < cfg.min_step && !last {
            sol.termination = match last_failure.take() {
                Some(error) => Termination::Singularity { tau: k0.tau, error },
                None => Termination::Stiffness { tau: k0.tau, step },
            };
            break;
        }
        let trial = match cfg.method {
            Method::Rk45Adaptive => dp45_step(sys, cfg, &k0, dir * step, span),
            Method::Rk4Fixed => rk4_step(sys, &k0, dir * step),
        };
        let trial = match trial {
            Ok(t) => t,
            Err(e) => {
                if cfg.method == Method::Rk4Fixed {
                    sol.termination = Termination::Singularity { tau: k0.tau, error: e };
                    break;
                }
                sol.rejected += 1;
                last_failure = Some(e);
                h = step * 0.25;
                continue;
            }
        };
        sol.evaluations += trial.evaluations;
        if trial.error > 1.0 {
            sol.rejected += 1;
            h = step * (0.9 * trial.error.powf(exponent)).clamp(0.1, 0.9);
            continue;
        }
        last_failure = None;
        let tau = if last { cfg.tau_end } else { k0.tau + dir * step };
        let (y, f) = match post_step {
            Some(project) => match project(tau, &trial.y).and_then(|y| sys.rhs(tau, &y).map(|f| (y, f))) {
                Ok(v) => {
                    sol.evaluations += 1;
                    v
                }
                Err(error) => {
                    sol.termination = Termination::Singularity { tau, error };
                    break;
                }
            },
            None => (trial.y, trial.f),
        };
        sol.steps.push(StepLog {
            tau,
            h: step,
            error: trial.error,
        });
        sol.knots.push(Knot { tau, y, f });
        if cfg.method == Method::Rk45Adaptive && !last {
            let factor = if trial.error == 0.0 {
                5.0
            } else {
                (0.9 * trial.error.powf(exponent) * previous_error.powf(beta)).clamp(0.2, 5.0)
            };
            previous_error = trial.error.max(1e-4);
            h = (step * factor).min(cfg.max_step);
        }
    }
    Ok(sol)
}
