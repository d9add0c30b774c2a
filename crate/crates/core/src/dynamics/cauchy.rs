use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvolutionConfig, Propagator};
use crate::lpcalc::LocalizationConfig;
use crate::noise::{check_levels, CauchyRow, CauchyStudy, EnhancementBuilder, Mollifier, NoiseRealization};
use crate::{Field, Result};

pub type SolutionCauchyRow = CauchyRow;

/// Differences `sup_t ‖v_ε(t) - v_{ε/2}(t)‖_{L²}` for each `ε` in the list.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionCauchyStudy {
    pub rows: Vec<SolutionCauchyRow>,
    pub rate: f64,
    pub inversions: usize,
    pub renormalized: bool,
}

impl SolutionCauchyStudy {
    pub fn strictly_decreasing(&self) -> bool {
        self.inversions == 0 && self.rows.windows(2).all(|w| w[1].difference < w[0].difference)
    }

    pub fn converges(&self) -> bool {
        self.inversions <= 1 && self.rate > 0.0
    }
}

/// Coupled-realization Cauchy study of the transformed solution. Every
/// level evolves the same `v₀`: for well-prepared data
/// `u_ε(0) = e^{X_ε - X}u₀` the transformed datum `e^{-X_ε}u_ε(0)` does not
/// depend on `ε`. Each listed `ε` is compared with `ε/2`.
pub fn pairwise_cauchy_study(
    noise: &NoiseRealization,
    eps_list: &[f64],
    cfg: &EvolutionConfig,
    v0: &Field,
    localization: &LocalizationConfig,
    renormalize: bool,
) -> Result<SolutionCauchyStudy> {
    check_levels(eps_list)?;
    let grid = *noise.grid();
    grid.ensure_same(v0.grid())?;
    cfg.validate(grid.dim())?;
    let mut levels = eps_list.to_vec();
    levels.push(eps_list[eps_list.len() - 1] / 2.0);
    let steps = cfg.steps();
    let trajectories = levels
        .par_iter()
        .map(|&eps| {
            let b = EnhancementBuilder::new(grid, Mollifier::new(eps)?, localization.clone())?;
            let b = if renormalize { b } else { b.without_renormalization() };
            let e = b.build(noise)?;
            let p = Propagator::new(&e, cfg)?;
            let (_, states) = p.run(v0, cfg.dt, steps, steps.max(1), true)?;
            Ok(states)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = trajectories
        .windows(2)
        .zip(eps_list)
        .map(|(pair, &eps)| CauchyRow {
            epsilon: eps,
            difference: pair[0]
                .iter()
                .zip(&pair[1])
                .map(|(a, b)| (a - b).l2_norm())
                .fold(0.0, f64::max),
        })
        .collect();
    let s = CauchyStudy::from_rows(rows, renormalize, 0.0);
    Ok(SolutionCauchyStudy {
        rows: s.rows,
        rate: s.rate,
        inversions: s.inversions,
        renormalized: renormalize,
    })
}
