//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature (on by default) items run on the rayon pool;
//! without it they run in order on the calling thread. Results keep input
//! order either way, so outputs are identical.

use crate::dynamics::{ClosureSpec, WorldlineState};
use crate::error::Result;
use crate::integrator::{integrate, IntegratorConfig, TrajectoryRecord};
use crate::jets::FinslerSpace;

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Sequential map, for comparison with [`map`].
pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Integrates independent initial states.
pub fn integrate_many(
    space: &FinslerSpace,
    spec: &ClosureSpec,
    initials: &[WorldlineState],
    config: &IntegratorConfig,
) -> Vec<Result<TrajectoryRecord>> {
    map(initials, |s| integrate(space, spec, s, config))
}
