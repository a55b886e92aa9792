//! Finsler geometry engine and worldline integrator for spinning test bodies.
//!
//! The stack is layered: [`jets`] expands `L` into Taylor jets, [`geometry`]
//! builds pointwise tensors from them, [`dynamics`] evaluates the equations of
//! motion and their closures, and [`integrator`] evolves worldlines.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod jets;
pub mod oracle;
pub mod parallel;
pub mod spaces;
pub mod verify;

pub use error::{FinslerError, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
