use serde::{Deserialize, Serialize};

use super::LpDecomposition;
use crate::lattice::{lp_norm_with, Field, Weight};
use crate::stats::fit_line;
use crate::{Error, Result, Scalar};

/// Indices of a weighted Besov norm; `f64::INFINITY` is the ∞ sentinel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub mu: f64,
}

impl BesovParams {
    pub fn new(alpha: f64, p: f64, q: f64, mu: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q)] {
            if !(v >= 1.0) {
                return Err(Error::param(
                    name,
                    format!("integrability index must be >= 1 or infinite, got {v}"),
                ));
            }
        }
        Ok(Self { alpha, p, q, mu })
    }

    /// Hölder–Zygmund scale `𝒞^α = B^α_{∞,∞}`.
    pub fn holder(alpha: f64) -> Self {
        Self {
            alpha,
            p: f64::INFINITY,
            q: f64::INFINITY,
            mu: 0.0,
        }
    }
}

/// `‖Δ_j f‖_{L^p_μ}` for every block.
pub fn block_norms<S: Scalar>(d: &LpDecomposition<S>, p: f64, mu: f64) -> Vec<f64> {
    let grid = *d.grid();
    let weight = Weight::<S>::new(grid, mu);
    d.blocks()
        .iter()
        .map(|b| lp_norm_with(b.values(), weight.values(), p, grid.cell_volume()).as_f64())
        .collect()
}

/// `(Σ_j 2^{αjq} ‖Δ_j f‖^q_{L^p_μ})^{1/q}`, with exact maxima for ∞.
pub fn besov_norm<S: Scalar>(f: &Field<S>, params: &BesovParams) -> f64 {
    besov_norm_of(&LpDecomposition::new(f), params)
}

pub(crate) fn besov_norm_of<S: Scalar>(d: &LpDecomposition<S>, params: &BesovParams) -> f64 {
    let scaled = block_norms(d, params.p, params.mu)
        .into_iter()
        .enumerate()
        .map(|(j, b)| (params.alpha * j as f64).exp2() * b);
    if params.q.is_infinite() {
        scaled.fold(0.0, f64::max)
    } else {
        scaled.map(|x| x.powf(params.q)).sum::<f64>().powf(1.0 / params.q)
    }
}

/// Result of a dyadic regularity fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityFit {
    /// `α̂` with `‖Δ_j f‖ ≈ c 2^{-α̂ j}`.
    pub alpha: f64,
    pub stderr: f64,
    /// `(j, ‖Δ_j f‖_{L^p})` over the whole decomposition.
    pub block_norms: Vec<(usize, f64)>,
}

/// Fits `log₂‖Δ_j f‖_{L^p}` against `j` over `fit_range` (inclusive).
///
/// Blocks with zero norm are unusable; at least four usable blocks are
/// required. `q` does not enter the slope and is only validated.
pub fn regularity_estimate<S: Scalar>(
    f: &Field<S>,
    p: f64,
    q: f64,
    fit_range: (usize, usize),
) -> Result<RegularityFit> {
    regularity_from(&LpDecomposition::new(f), p, q, fit_range)
}

pub(crate) fn regularity_from<S: Scalar>(
    d: &LpDecomposition<S>,
    p: f64,
    q: f64,
    fit_range: (usize, usize),
) -> Result<RegularityFit> {
    BesovParams::new(0.0, p, q, 0.0)?;
    let (lo, hi) = fit_range;
    if lo < 1 || hi > d.jmax() || lo > hi {
        return Err(Error::param(
            "fit_range",
            format!("[{lo}, {hi}] is not inside [1, {}]", d.jmax()),
        ));
    }
    let norms = block_norms(d, p, 0.0);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (lo..=hi)
        .filter(|&j| norms[j] > 0.0 && norms[j].is_finite())
        .map(|j| (j as f64, norms[j].log2()))
        .unzip();
    if xs.len() < 4 {
        return Err(Error::TooFewBlocks {
            needed: 4,
            found: xs.len(),
        });
    }
    let fit = fit_line(&xs, &ys);
    Ok(RegularityFit {
        alpha: -fit.slope,
        stderr: fit.slope_stderr,
        block_norms: norms.into_iter().enumerate().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Grid;

    #[test]
    fn zero_field_has_zero_norm() {
        let grid = Grid::new(2, 32, 4.0).unwrap();
        let z = Field::<f64>::zeros(grid);
        assert_eq!(besov_norm(&z, &BesovParams::holder(0.5)), 0.0);
        assert_eq!(besov_norm(&z, &BesovParams::new(1.0, 2.0, 2.0, 0.5).unwrap()), 0.0);
    }

    #[test]
    fn rejects_bad_indices() {
        assert!(BesovParams::new(0.0, 0.5, 2.0, 0.0).is_err());
        assert!(BesovParams::new(0.0, 2.0, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn too_few_blocks() {
        let grid = Grid::new(1, 64, 4.0).unwrap(); // jmax = 4
        let f = Field::<f64>::from_fn(grid, |x| x[0].sin());
        let err = regularity_estimate(&f, 2.0, 2.0, (1, 3)).unwrap_err();
        assert!(matches!(err, Error::TooFewBlocks { found: 3, .. }));
    }

    #[test]
    fn power_law_spectrum_slope() {
        // f̂(m) = |m|^{-a} has ‖Δ_j f‖_{L²} ~ 2^{j(d/2 - a)}.
        let grid = Grid::new(1, 1024, 1024.0).unwrap();
        let a = 1.25;
        let coeffs = (0..grid.len())
            .map(|i| {
                let r = grid.mode_norm(i);
                crate::Cx::new(if r > 0.0 { r.powf(-a) } else { 0.0 }, 0.0)
            })
            .collect();
        let f = Field::from_coeffs(grid, coeffs, true);
        let fit = regularity_estimate(&f, 2.0, 2.0, (2, 7)).unwrap();
        assert!((fit.alpha - (a - 0.5)).abs() < 0.05, "alpha {}", fit.alpha);
    }

    #[test]
    fn scalar_multiple_keeps_slope() {
        let grid = Grid::new(2, 64, 8.0).unwrap();
        let f = Field::<f64>::from_fn(grid, |x| (3.0 * x[0]).sin().abs() + x[1].cos().abs());
        let a = regularity_estimate(&f, f64::INFINITY, f64::INFINITY, (1, 4)).unwrap();
        let b = regularity_estimate(&f.scale(-7.5), f64::INFINITY, f64::INFINITY, (1, 4)).unwrap();
        assert!((a.alpha - b.alpha).abs() < 1e-10);
    }
}
