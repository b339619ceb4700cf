//! Joint beamforming and antenna-position optimization for IRS-aided
//! multi-user MISO links where both the base-station antennas and the IRS
//! reflecting elements can move.
//!
//! The crate is organised bottom-up:
//!
//! * [`manifold`]: the product manifold `(W, φ, o, p)`: power sphere for the
//!   precoder, complex circle for the phase vector, and two Euclidean factors
//!   for the unconstrained position pre-images.
//! * [`channel`]: field-response channel model, effective channels, SINR and
//!   rates.
//! * [`objective`]: constraint functions, the log-sum-exp smoothed exact
//!   penalty objective and its analytic gradients.
//! * [`solver`]: limited-memory Riemannian BFGS inner solver with Armijo
//!   backtracking, and the exact-penalty outer loop.
//! * [`harness`]: scenario generation, initialization, baseline schemes,
//!   imperfect-FRI perturbation, sweeps and emitted tables.

// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod harness;
pub mod manifold;
pub mod objective;
pub mod solver;
pub mod units;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dense real column vector.
pub type RVector = nalgebra::DVector<f64>;
