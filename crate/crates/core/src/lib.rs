//! Training-dynamics laboratory for weight asymmetry in toy autoregressive
//! models trained with cross-entropy.
//!
//! The crate simulates two models at desk scale and checks them against
//! closed-form theory:
//!
//! - a **bilinear** next-token model `l(y|x) = xᵀΘy` over Gaussian token
//!   embeddings, trained by gradient flow ([`bilinear`]);
//! - a **reparameterized one-layer transformer** with effective weight
//!   matrices `Y` (decoder) and `Z` (attention), trained by batch-1 SGD
//!   ([`transformer`]).
//!
//! Both exhibit the same mechanism: updating the weight from token `a` to
//! token `b` does not update the weight from `b` to `a`, so a direction never
//! seen in training stays at chance. [`oracles`] holds the closed-form row
//! predictions and bound checkers, [`embeddings`] the Gaussian-concentration
//! verifiers, [`datasets`] the synthetic sequence families, and [`harness`]
//! the reproducible experiment runner and CLI surface.

pub mod bilinear;
pub mod datasets;
pub mod embeddings;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod oracles;
pub mod transformer;

pub use error::{Error, Result};
pub use numerics::{Mat64, Rng, Vec64};
