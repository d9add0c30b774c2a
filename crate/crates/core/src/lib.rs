//! Numerical laboratory for the Schrödinger equation with multiplicative
//! spatial white noise on a large periodic box.
//!
//! The crate is layered bottom-up:
//!
//! * [`lattice`]: periodic grids, complex lattice fields, unitary FFTs,
//!   Fourier multipliers, weights and Sobolev norms.
//! * [`lpcalc`]: Littlewood–Paley blocks, weighted Besov norms, regularity
//!   estimation, the spatial localization split and paraproducts.
//! * [`noise`]: white noise, mollification, renormalization constants and
//!   the enhanced noise (exponential-transform fields `X`, `Y`).
//! * [`gamma`]: the paracontrolled ansatz `Φ`, its inverse `Γ` and the
//!   transformed Hamiltonian.
//! * [`dynamics`]: Crank–Nicolson / Strang integrators, conserved
//!   quantities, mild residuals and Strichartz quotients.
//! * [`harness`]: configuration, experiment drivers and result output.
//!
//! The substrate modules ([`lattice`], [`lpcalc`]) are generic over the
//! floating-point type through [`Scalar`]; the stochastic and dynamical
//! layers work in `f64`, where their tolerances live.

pub mod dynamics;
pub mod error;
pub mod gamma;
pub mod harness;
pub mod lattice;
pub mod lpcalc;
pub mod noise;
pub mod stats;

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub use error::{Error, Result};

/// Floating-point scalar usable by the lattice substrate: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + rustfft::FftNum
    + Sum
    + Default
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    /// Widening conversion to `f64`.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex scalar over `S`.
pub type Cx<S> = num_complex::Complex<S>;

/// Double-precision complex number.
pub type C64 = num_complex::Complex64;

/// Double-precision lattice field, the workhorse type of the crate.
pub type Field = lattice::Field<f64>;
/// Single-precision lattice field.
pub type Field32 = lattice::Field<f32>;
/// Double-precision Fourier multiplier.
pub type Multiplier = lattice::SpectralMultiplier<f64>;
/// Double-precision spatial weight.
pub type Weight = lattice::Weight<f64>;
/// Double-precision Littlewood–Paley decomposition.
pub type LpDecomposition = lpcalc::LpDecomposition<f64>;

pub use lattice::Grid;
