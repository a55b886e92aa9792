//! Pointwise Finsler geometry: metric, connections, curvatures and their
//! contractions with a spin tensor.

mod expansion;
mod frame;
mod identities;
mod ops;
mod tensor;

pub use expansion::{LocalExpansion, Slot, TensorField};
pub use frame::{frame_at, GeometryFrame, Needs, CONDITION_LIMIT};
pub use identities::{identity_residuals, IdentityResiduals};
pub use ops::{
    cartan_connection_at, covariant_rate_along, curvature_contractions,
    killing_covariant_derivative, killing_residual, killing_residual_in, lie_derivative_metric,
    CartanConnection, Connection, Contractions, CurveTensor,
};
pub use tensor::{levi_civita_lower, permutation_sign, SpinTensor, Tensor3, Tensor4};
