//! Periodic-box substrate: grids, fields, unitary FFTs, Fourier
//! multipliers, weights and norms.

mod fft;
mod field;
mod grid;
mod multiplier;
mod norms;
pub mod snapshot;

pub use field::{linear_combination, Field, Spectrum, REAL_TOLERANCE};
pub use grid::{make_grid, Grid, MAX_POINTS};
pub use multiplier::{apply_multiplier, divergence, dot, gradient, SpectralMultiplier};
pub use norms::{sobolev_norm, weighted_l2_norm, weighted_lp_norm, Weight};
pub(crate) use field::par_map_indexed;
pub(crate) use norms::lp_norm_with;
pub use snapshot::{read_snapshot, write_snapshot};
