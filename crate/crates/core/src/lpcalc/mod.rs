//! Littlewood–Paley calculus on the lattice.
//!
//! Blocks are indexed by the integer mode `|m|`: `χ₀ = ψ(|m|)`,
//! `χ_j = ψ(|m|/2^j) - ψ(|m|/2^{j-1})` and the top block `jmax` collects
//! everything above `2^{jmax-1}`. The symbols telescope, so the blocks sum
//! to the identity up to rounding.

mod besov;
mod localize;
mod paraproduct;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::lattice::{par_map_indexed, Field, Grid};
use crate::{Cx, Scalar};

pub use besov::{besov_norm, block_norms, regularity_estimate, BesovParams, RegularityFit};
pub use localize::{localize_split, LocalizationConfig};
pub use paraproduct::{
    corrector, paraproduct, paraproduct_from, resonant, resonant_from,
};

/// C² quintic smoothstep cutoff: 1 on `[0, 1]`, 0 on `[2, ∞)`.
#[inline]
pub fn smoothstep(t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let s = t - 1.0;
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// Symbol of block `j` at mode norm `r`.
#[inline]
pub fn block_symbol(j: usize, jmax: usize, r: f64) -> f64 {
    if j == 0 {
        smoothstep(r)
    } else if j < jmax {
        smoothstep(r / f64::powi(2.0, j as i32)) - smoothstep(r / f64::powi(2.0, j as i32 - 1))
    } else {
        1.0 - smoothstep(r / f64::powi(2.0, jmax as i32 - 1))
    }
}

/// Symbol of the low-pass `Δ_{≤J}`: `ψ(|m|/2^J)`, the identity once
/// `J ≥ jmax` and zero for `J < 0`.
#[inline]
pub fn low_pass_symbol(level: f64, jmax: usize, r: f64) -> f64 {
    if level >= jmax as f64 {
        1.0
    } else if level < 0.0 {
        0.0
    } else {
        smoothstep(r / level.exp2())
    }
}

/// Integer-mode norms `|m|` per flat index, cached per `(d, n)`.
pub(crate) fn mode_norms(grid: &Grid) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("mode cache poisoned");
    guard
        .entry((grid.dim(), grid.n()))
        .or_insert_with(|| Arc::new((0..grid.len()).map(|i| grid.mode_norm(i)).collect()))
        .clone()
}

/// Applies a real radial symbol `g(|m|)` to `f`.
pub(crate) fn apply_radial<S, F>(f: &Field<S>, g: F) -> Field<S>
where
    S: Scalar,
    F: Fn(f64) -> f64 + Sync + Send,
{
    let norms = mode_norms(f.grid());
    let spec = f.spectrum();
    let coeffs = par_map_indexed(spec.len(), |i| spec[i] * S::of(g(norms[i])));
    Field::from_coeffs(*f.grid(), coeffs, f.is_real())
}

/// `Δ_{≤J} f`.
pub fn low_pass<S: Scalar>(f: &Field<S>, level: f64) -> Field<S> {
    let jmax = f.grid().jmax();
    if level >= jmax as f64 {
        return f.clone();
    }
    if level < 0.0 {
        let z = Field::zeros(*f.grid());
        return if f.is_real() { z } else { z.into_complex() };
    }
    apply_radial(f, |r| low_pass_symbol(level, jmax, r))
}

/// `Δ_j f`.
pub fn block<S: Scalar>(f: &Field<S>, j: usize) -> Field<S> {
    let jmax = f.grid().jmax();
    assert!(j <= jmax, "block {j} above jmax {jmax}");
    apply_radial(f, |r| block_symbol(j, jmax, r))
}

/// The blocks `Δ₀f, …, Δ_{jmax}f` of one field.
#[derive(Clone, Debug)]
pub struct LpDecomposition<S: Scalar> {
    grid: Grid,
    blocks: Vec<Field<S>>,
}

impl<S: Scalar> LpDecomposition<S> {
    pub fn new(f: &Field<S>) -> Self {
        let grid = *f.grid();
        let jmax = grid.jmax();
        let norms = mode_norms(&grid);
        let spec = f.spectrum();
        let blocks = (0..=jmax)
            .map(|j| {
                let coeffs: Vec<Cx<S>> = par_map_indexed(spec.len(), |i| {
                    spec[i] * S::of(block_symbol(j, jmax, norms[i]))
                });
                Field::from_coeffs(grid, coeffs, f.is_real())
            })
            .collect();
        Self { grid, blocks }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn jmax(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn blocks(&self) -> &[Field<S>] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &Field<S> {
        &self.blocks[j]
    }

    /// `Σ_j Δ_j f`, which reproduces `f`.
    pub fn reconstruct(&self) -> Field<S> {
        let mut acc = self.blocks[0].clone();
        for b in &self.blocks[1..] {
            acc = &acc + b;
        }
        acc
    }
}

/// Decomposes `f` into Littlewood–Paley blocks.
pub fn lp_decompose<S: Scalar>(f: &Field<S>) -> LpDecomposition<S> {
    LpDecomposition::new(f)
}
