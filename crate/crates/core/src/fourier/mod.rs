//! Fourier multipliers on periodic grids: the symbol catalogue, DFT-based
//! application of `T_m`, and lower-bound search for `‖T_m‖_{p→p}`.

mod grid;
mod opnorm;
mod symbol;

pub use grid::{lp_norm, lp_norm_q, GridFunction, GridSpec, Spectrum};
pub use opnorm::{grid_sup, opnorm_lower_bound, OpnormResult, OpnormSearch};
pub use symbol::{admissibility_check, apply_multiplier, AdmissibilityReport, LevyAtom, MultiplierSymbol, SphereAtom};
