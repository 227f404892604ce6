//! Frame-level video summarization over precomputed per-frame features.
//!
//! The pieces, bottom to top:
//!
//! * [`numerics`] — dense tensors, a reverse-mode autodiff tape, Adam, and a
//!   finite-difference gradient checker. Everything downstream is built from
//!   these primitives, so layer gradients are correct by construction and the
//!   checker can audit any composed graph.
//! * [`layers`] — dilated temporal relation (DTR) convolutions with batch
//!   normalization, and LSTM / bidirectional LSTM encoders.
//! * [`generator`] / [`discriminator`] — the summarizer (per-frame importance
//!   scores plus an encoded feature stream) and the three-way summary critic.
//! * [`loss`], [`training`] — the adversarial objectives and the alternating
//!   update loop.
//! * [`eval`] — kernel temporal segmentation, knapsack keyshot selection, and
//!   precision/recall/F scoring of predicted summaries against annotations.
//! * [`io`] — binary feature files, annotation and manifest documents,
//!   checkpoints, and the synthetic corpus generator.
//! * [`audit`] — finite-difference verification of the full model under
//!   every training objective.
//!
//! All numeric code is generic over the scalar type via [`Scalar`]; `f64` is
//! the training default, `f32` exists for feature storage.

pub mod numerics;

pub mod layers;

pub mod generator;

pub mod discriminator;

pub mod loss;
pub mod io;
pub mod training;

pub mod audit;

pub mod eval;

mod error;

pub use error::{Error, ErrorKind, Result};
pub use numerics::scalar::Scalar;
pub use numerics::tensor::Tensor;

/// Scalar type used for training and checkpoints.
pub type Real = f64;

/// Storage-precision tensor (feature files hold 32-bit floats).
pub type Tensor32 = Tensor<f32>;

/// Training-precision tensor.
pub type Tensor64 = Tensor<f64>;
