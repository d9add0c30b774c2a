//! White noise, mollification, renormalization constants and the enhanced
//! noise.

mod archive;
mod cauchy;
mod enhancement;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::lattice::{gradient, Grid, SpectralMultiplier};
use crate::Field;
use crate::stats::mean_stderr;
use crate::{Error, Result};

pub use archive::{read_archive, write_archive, Manifest};
pub use cauchy::{enhancement_cauchy_study, CauchyRow, CauchyStudy};
pub(crate) use cauchy::check_levels;
pub use enhancement::{build_enhancement, Enhancement, EnhancementBuilder};

/// Minimum ensemble size for the second renormalization constant.
pub const MIN_C2_ENSEMBLE: usize = 256;

/// Seed stream used for the ensemble estimate of `c²`; disjoint from the
/// small seeds used for individual realizations.
pub const C2_SEED_BASE: u64 = 0xC2C2_0000_0000_0000;

/// One discrete white-noise sample: i.i.d. `N(0, h^{-d})` cell values.
#[derive(Clone, Debug)]
pub struct NoiseRealization {
    pub seed: u64,
    pub xi: Field,
}

impl NoiseRealization {
    /// Wraps an arbitrary real field as the noise (used for `ξ ≡ 0` checks).
    pub fn from_field(seed: u64, xi: Field) -> Self {
        Self {
            seed,
            xi: xi.into_real(),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.xi.grid()
    }
}

/// Deterministic in `(grid, seed)`: ChaCha8 stream, row-major fill.
pub fn sample_white_noise(grid: Grid, seed: u64) -> NoiseRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = grid.cell_volume().powf(-0.5);
    let values: Vec<f64> = (0..grid.len())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect();
    NoiseRealization {
        seed,
        xi: Field::from_real(grid, values).expect("sizes match"),
    }
}

/// Gaussian mollifier with symbol `exp(-ε²|k|²/2)`; `ε = 0` is the identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mollifier {
    epsilon: f64,
}

impl Mollifier {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::param(
                "epsilon",
                format!("must be finite and >= 0, got {epsilon}"),
            ));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn symbol(&self, k2: f64) -> f64 {
        (-0.5 * self.epsilon * self.epsilon * k2).exp()
    }

    pub fn multiplier(&self, grid: Grid) -> SpectralMultiplier<f64> {
        SpectralMultiplier::gaussian(grid, self.epsilon)
    }
}

pub fn mollify(xi: &Field, m: &Mollifier) -> Field {
    if m.epsilon == 0.0 {
        return xi.clone();
    }
    m.multiplier(*xi.grid())
        .apply(xi)
        .expect("multiplier built on the field's grid")
}

/// `c¹_ε = L^{-d} Σ_k |k̃|² e^{-ε²|k|²} / (1 + |k|²)²` with `k̃` the
/// discrete gradient symbol; equals `E|∇X_{1,ε}(x)|²` for every `x`.
pub fn renorm_constant_1(grid: &Grid, m: &Mollifier) -> Result<f64> {
    if m.epsilon == 0.0 && grid.dim() >= 2 {
        return Err(Error::param(
            "epsilon",
            "c¹ diverges with the grid at ε = 0 in d >= 2",
        ));
    }
    let sum: f64 = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let kt = grid.derivative_wavevector(i);
            let kt2 = kt[0] * kt[0] + kt[1] * kt[1] + kt[2] * kt[2];
            let k2 = grid.k_squared(i);
            let s = m.symbol(k2);
            kt2 * s * s / ((1.0 + k2) * (1.0 + k2))
        })
        .sum();
    Ok(sum / grid.volume())
}

/// `X₁ = -(1-Δ)^{-1} ξ_ε` and its gradient.
pub(crate) fn first_order(xi_eps: &Field) -> (Field, Vec<Field>) {
    let grid = *xi_eps.grid();
    let x1 = SpectralMultiplier::resolvent(grid)
        .apply(xi_eps)
        .expect("same grid")
        .scale(-1.0);
    let g = gradient(&x1);
    (x1, g)
}

pub(crate) fn abs_sq_vec(g: &[Field]) -> Field {
    crate::lattice::dot(g, g)
}

/// Ensemble estimate of `c²_ε = E[mean_x |∇X_{2,ε}|²]` in `d = 3` with its
/// standard error.
///
/// `∇X₂` does not see the constant subtracted inside `X₂`, so `c¹` does
/// not enter the estimate.
pub fn renorm_constant_2(grid: &Grid, m: &Mollifier, ensemble: usize) -> Result<(f64, f64)> {
    if grid.dim() != 3 {
        return Err(Error::param("dim", "c² is defined in d = 3 only"));
    }
    if m.epsilon() <= 0.0 {
        return Err(Error::param("epsilon", "c² needs ε > 0"));
    }
    if ensemble < 2 {
        return Err(Error::param("ensemble", "need at least two samples"));
    }
    let samples: Vec<f64> = (0..ensemble as u64)
        .into_par_iter()
        .map(|s| {
            let noise = sample_white_noise(*grid, C2_SEED_BASE + s);
            let xi_eps = mollify(&noise.xi, m);
            let (_, g1) = first_order(&xi_eps);
            let x2 = SpectralMultiplier::resolvent(*grid)
                .apply(&abs_sq_vec(&g1))
                .expect("same grid");
            abs_sq_vec(&gradient(&x2)).mean().re
        })
        .collect();
    Ok(mean_stderr(&samples))
}
