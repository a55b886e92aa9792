use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinslerError {
    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("non-finite evaluation of {what} at x = {x:?}, y = {y:?}")]
    EvaluationFailure {
        what: String,
        x: Vec<f64>,
        y: Vec<f64>,
    },

    #[error("degenerate metric: condition number {cond:.3e}")]
    GeometryDegeneracy { cond: f64 },

    #[error("null direction: `{field}` needs L > 0, got L = {l:.3e}")]
    NullDirection { field: &'static str, l: f64 },

    #[error("closure singularity: {scalar} = {value:.3e} (guard {guard:.3e})")]
    ClosureSingularity {
        scalar: &'static str,
        value: f64,
        guard: f64,
    },

    #[error("degenerate spin: s = 0, integrate a geodesic instead")]
    DegenerateSpin,

    #[error("signature error: {0}")]
    Signature(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("observer degeneracy: P·t = {value:.3e}")]
    ObserverDegeneracy { value: f64 },

    #[error("step size underflow at tau = {tau}: h = {step:.3e}")]
    Stiffness { tau: f64, step: f64 },

    #[error("construction error: {0}")]
    Construction(String),

    #[error("verification failure: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, FinslerError>;
