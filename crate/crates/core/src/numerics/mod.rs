//! Dense tensors, reverse-mode autodiff, Adam, seeded RNG, and the
//! finite-difference gradient checker.

pub mod adam;
pub mod gradcheck;
pub mod param;
pub mod rng;
pub mod scalar;
pub mod tape;
pub mod tensor;

pub use adam::AdamState;
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport, RunOutcome};
pub use param::{BufferId, ParamId, ParamSet};
pub use rng::Rng;
pub use scalar::Scalar;
pub use tape::{Mode, NodeId, Tape};
pub use tensor::Tensor;
