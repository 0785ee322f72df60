//! Rate-exponent regions and error-exponent bounds for distributed
//! hypothesis testing, plus a Monte Carlo simulator for the
//! quantize-bin-test codec.
//!
//! The crate is organized around:
//! - [`pmf`]: joint pmfs over named finite alphabets and the distribution
//!   algebra on them,
//! - [`measures`]: exact entropies, mutual informations, and divergences in
//!   bits,
//! - [`typicality`]: robust joint typicality,
//! - [`hypothesis`]: binary hypothesis pairs with role maps and the
//!   conditional-independence structure,
//! - [`discrete`]: inner/outer bounds and optimized exponents for
//!   finite-alphabet instances,
//! - [`gaussian`]: closed-form regions for the scalar Gaussian problems,
//! - [`sim`]: the finite-blocklength quantize-bin-test codec and its
//!   error-rate estimates.

mod channel_eval;
pub mod discrete;
pub mod gaussian;
pub mod hypothesis;
pub mod measures;
pub mod optimize;
pub mod pmf;
pub mod sim;
pub mod typicality;

pub use hypothesis::{HypothesisPair, Roles};
pub use pmf::{JointPMF, TestChannel, Variable};
