use super::{low_pass, smoothstep};
use crate::lattice::{linear_combination, Field, Grid};
use crate::{Error, Result, Scalar};

/// Spatially varying frequency cutoff: shell weights `w_k` around the box
/// center and the low-pass levels `L_k` used inside each shell.
#[derive(Clone, Debug)]
pub struct LocalizationConfig {
    grid: Grid,
    weights: Vec<Vec<f64>>,
    levels: Vec<f64>,
}

impl LocalizationConfig {
    /// Defaults `L₀ = 2`, `ρ = 1`, with every level clipped to
    /// [`level_cap`](Self::level_cap).
    pub fn default_for(grid: Grid) -> Self {
        let cap = Self::level_cap(grid);
        let shells = Self::shell_count(grid);
        let levels = (0..=shells).map(|k| (2.0 + k as f64).min(cap)).collect();
        Self::with_levels(grid, levels).expect("default levels are valid")
    }

    /// Highest level the defaults use, `max(jmax - 3, -1)`.
    ///
    /// On a finite grid a level at or above the blocks resolved by the
    /// mollifier puts the whole of `X₁` into the low part there, so `Y`
    /// picks up the roughness of `ξ_ε` and stops converging as `ε → h`.
    /// `jmax - 3` is the block of the `ε = 8h` scale.
    pub fn level_cap(grid: Grid) -> f64 {
        (grid.jmax() as f64 - 3.0).max(-1.0)
    }

    fn shell_count(grid: Grid) -> usize {
        grid.box_length().log2().floor().max(1.0) as usize
    }

    /// `K = ⌊log₂ L⌋` shells (at least one) with `L_k = l0 + rho·k`.
    pub fn new(grid: Grid, l0: f64, rho: f64) -> Result<Self> {
        let shells = Self::shell_count(grid);
        let levels = (0..=shells).map(|k| l0 + rho * k as f64).collect();
        Self::with_levels(grid, levels)
    }

    /// Explicit levels, one per shell; the shell count is `levels.len() - 1`.
    pub fn with_levels(grid: Grid, levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::param("levels", "need at least two shells"));
        }
        if levels.iter().any(|l| !l.is_finite() || *l < -1.0) {
            return Err(Error::param("levels", "levels must be finite and >= -1"));
        }
        if levels.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::param("levels", "levels must be nondecreasing"));
        }
        let shells = levels.len() - 1;
        let cut = |k: usize, r: f64| smoothstep(r / (k as f64).exp2());
        let weights = (0..=shells)
            .map(|k| {
                (0..grid.len())
                    .map(|i| {
                        let r = grid.radius(i);
                        match k {
                            0 => cut(0, r),
                            k if k == shells => 1.0 - cut(k - 1, r),
                            k => cut(k, r) - cut(k - 1, r),
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            grid,
            weights,
            levels,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn shell_weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn shells(&self) -> usize {
        self.levels.len() - 1
    }

    /// `𝒰_≤ f = Σ_k w_k Δ_{≤L_k} f`.
    pub fn low<S: Scalar>(&self, f: &Field<S>) -> Result<Field<S>> {
        self.grid.ensure_same(f.grid())?;
        let mut acc: Option<Field<S>> = None;
        let mut k = 0;
        while k < self.levels.len() {
            // Shells sharing a level share one low-pass.
            let level = self.levels[k];
            let mut end = k;
            while end + 1 < self.levels.len() && self.levels[end + 1] == level {
                end += 1;
            }
            let lp = low_pass(f, level);
            let w: Vec<S> = (0..self.grid.len())
                .map(|i| S::of((k..=end).map(|s| self.weights[s][i]).sum()))
                .collect();
            let wf = Field::from_real(self.grid, w)?;
            let term = &wf * &lp;
            acc = Some(match acc {
                None => term,
                Some(a) => linear_combination(&[(S::one(), &a), (S::one(), &term)]),
            });
            k = end + 1;
        }
        Ok(acc.expect("at least one shell"))
    }

    pub fn split<S: Scalar>(&self, f: &Field<S>) -> Result<(Field<S>, Field<S>)> {
        let low = self.low(f)?;
        let high = f - &low;
        Ok((low, high))
    }
}

/// `(𝒰_≤ f, 𝒰_> f)` with `𝒰_> = Id - 𝒰_≤`.
pub fn localize_split<S: Scalar>(
    f: &Field<S>,
    cfg: &LocalizationConfig,
) -> Result<(Field<S>, Field<S>)> {
    cfg.split(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shells_partition_unity() {
        let grid = Grid::new(2, 64, 16.0).unwrap();
        let cfg = LocalizationConfig::new(grid, 2.0, 1.0).unwrap();
        assert_eq!(cfg.shells(), 4);
        assert_eq!(cfg.levels(), &[2.0, 3.0, 4.0, 5.0, 6.0]);
        let capped = LocalizationConfig::default_for(grid);
        assert_eq!(capped.levels(), &[1.0; 5]);
        for i in 0..grid.len() {
            let s: f64 = cfg.shell_weights().iter().map(|w| w[i]).sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn full_levels_give_identity() {
        let grid = Grid::new(2, 64, 16.0).unwrap();
        let jmax = grid.jmax() as f64;
        let cfg = LocalizationConfig::with_levels(grid, vec![jmax; 5]).unwrap();
        let f = Field::<f64>::from_fn(grid, |x| (x[0] * 5.1).sin() * x[1]);
        let (low, high) = cfg.split(&f).unwrap();
        assert!(low.rel_max_diff(&f) < 1e-13);
        assert!(high.max_abs() < 1e-13 * f.max_abs());
    }

    #[test]
    fn rejects_decreasing_levels() {
        let grid = Grid::new(1, 32, 8.0).unwrap();
        assert!(LocalizationConfig::with_levels(grid, vec![3.0, 2.0]).is_err());
        assert!(LocalizationConfig::with_levels(grid, vec![-2.0, 2.0]).is_err());
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let cfg = LocalizationConfig::default_for(Grid::new(1, 32, 8.0).unwrap());
        let f = Field::<f64>::zeros(Grid::new(1, 64, 8.0).unwrap());
        assert!(matches!(cfg.split(&f), Err(Error::GridMismatch(_))));
    }
}
