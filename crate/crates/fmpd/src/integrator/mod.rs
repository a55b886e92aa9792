//! Adaptive worldline integration with dense output, constraint monitors and
//! convergence/conservation studies.

mod ode;
mod study;
mod worldline;

pub use ode::{
    hermite, solve, ErrorControl, IntegratorConfig, Knot, Method, OdeSolution, OdeSystem,
    Projection, StepLog, Termination,
};
pub use study::{
    conservation_audit, convergence_ladder, convergence_study, geodesic_convergence_study,
    ChannelDrift, ConservationAudit, ConvergenceReport, ConvergenceRun,
};
pub use worldline::{
    check_initial, integrate, integrate_geodesic, position, project_constraints, GeodesicSystem,
    Sample, TrajectoryRecord, WorldlineSystem,
};
