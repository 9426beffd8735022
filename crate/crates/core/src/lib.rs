//! Geometric-phase spin squeezing of a collective spin coupled to a cavity.
//!
//! The crate builds an effective Dicke model from cavity-assisted Raman
//! parameters, propagates the open-system dynamics (Lindblad master
//! equation, or the closed-form geometric-phase propagator in the ideal
//! case), evaluates Kitagawa–Ueda / Wineland squeezing at the cavity
//! decoupling time, and drives phase and atom-number sweeps with power-law
//! fits.
//!
//! Conventions: ħ = 1, all frequencies are angular internally, the joint
//! basis is `cavity ⊗ spin` with the cavity index varying slowest, and the
//! Dicke ladder is ordered by ascending `m` starting at `-J`.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod density;
pub mod dynamics;
pub mod elimination;
pub mod error;
pub mod hilbert;
pub mod metrics;
pub mod model;
pub mod operator;
pub mod output;
pub mod sweeps;

pub use density::{DensityMatrix, Ket};
pub use error::{Error, Result};
pub use hilbert::{BasisTag, HilbertSpace};
pub use operator::QOperator;

pub type C64 = num_complex::Complex64;

/// Library version recorded in run provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
