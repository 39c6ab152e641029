//! Numerical realization of sharp weak-differential-subordination
//! inequalities: Burkholder functions, discrete martingale transforms,
//! compound-Poisson parabolic martingales, Lévy-type Fourier multipliers on
//! periodic grids, and Brownian stochastic integrals.
//!
//! Every Monte Carlo routine takes an explicit seed and draws each path from
//! its own counter-based stream, so results are identical for any number of
//! worker threads.

pub mod burkholder;
pub mod error;
pub mod fourier;
pub mod jump;
pub mod mart;
pub mod rng;
pub mod space;
pub mod stats;
pub mod verify;
pub mod wiener;

pub use error::{Error, Result};
pub use space::{beta_hilbert, pairing, Exponent, NormedSpace};
pub use stats::Estimate;
