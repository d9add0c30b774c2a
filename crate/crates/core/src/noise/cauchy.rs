use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EnhancementBuilder, Mollifier, NoiseRealization};
use crate::lpcalc::{besov_norm, BesovParams, LocalizationConfig};
use crate::stats::fit_line;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CauchyRow {
    pub epsilon: f64,
    /// `‖Y_ε - Y_{ε/2}‖` in the study norm.
    pub difference: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CauchyStudy {
    pub rows: Vec<CauchyRow>,
    /// Slope of `log₂ difference` against `log₂ ε`; positive means the
    /// differences shrink with `ε`.
    pub rate: f64,
    /// Number of consecutive pairs where the difference grew.
    pub inversions: usize,
    pub renormalized: bool,
    pub regularity: f64,
}

impl CauchyStudy {
    pub(crate) fn from_rows(rows: Vec<CauchyRow>, renormalized: bool, regularity: f64) -> Self {
        let inversions = rows
            .windows(2)
            .filter(|w| w[1].difference > w[0].difference)
            .count();
        let usable: Vec<&CauchyRow> = rows.iter().filter(|r| r.difference > 0.0).collect();
        let rate = if usable.len() >= 2 {
            let x: Vec<f64> = usable.iter().map(|r| r.epsilon.log2()).collect();
            let y: Vec<f64> = usable.iter().map(|r| r.difference.log2()).collect();
            fit_line(&x, &y).slope
        } else {
            0.0
        };
        Self {
            rows,
            rate,
            inversions,
            renormalized,
            regularity,
        }
    }

    /// Decreasing up to one inversion with a positive rate.
    pub fn converges(&self) -> bool {
        self.inversions <= 1 && self.rate > 0.0
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.inversions == 0 && self.rows.windows(2).all(|w| w[1].difference < w[0].difference)
    }
}

pub(crate) fn check_levels(eps_list: &[f64]) -> Result<()> {
    if eps_list.len() < 3 {
        return Err(Error::TooFewLevels {
            needed: 3,
            found: eps_list.len(),
        });
    }
    for w in eps_list.windows(2) {
        if !(w[1] > 0.0 && ((w[0] / w[1]) - 2.0).abs() < 1e-9) {
            return Err(Error::param(
                "eps_list",
                format!("levels must halve: {} then {}", w[0], w[1]),
            ));
        }
    }
    Ok(())
}

/// Coupled-realization Cauchy study of `Y_ε`: every level mollifies the
/// same `ξ`. Differences are measured in `B^s_{∞,∞}` with `s = regularity`.
pub fn enhancement_cauchy_study(
    noise: &NoiseRealization,
    eps_list: &[f64],
    localization: &LocalizationConfig,
    renormalize: bool,
    regularity: f64,
) -> Result<CauchyStudy> {
    check_levels(eps_list)?;
    let grid = *noise.grid();
    let ys = eps_list
        .par_iter()
        .map(|&eps| {
            let b = EnhancementBuilder::new(grid, Mollifier::new(eps)?, localization.clone())?;
            let b = if renormalize {
                b
            } else {
                b.without_renormalization()
            };
            Ok(b.build(noise)?.y)
        })
        .collect::<Result<Vec<_>>>()?;
    let params = BesovParams::holder(regularity);
    let rows = ys
        .windows(2)
        .zip(eps_list)
        .map(|(pair, &eps)| CauchyRow {
            epsilon: eps,
            difference: besov_norm(&(&pair[0] - &pair[1]), &params),
        })
        .collect();
    Ok(CauchyStudy::from_rows(rows, renormalize, regularity))
}
