use log::warn;

use super::{abs_sq_vec, first_order, mollify, renorm_constant_1, renorm_constant_2};
use super::{Mollifier, NoiseRealization, MIN_C2_ENSEMBLE};
use crate::lattice::{dot, gradient, linear_combination, Grid, SpectralMultiplier};
use crate::Field;
use crate::lpcalc::LocalizationConfig;
use crate::{Error, Result};

/// The enhanced noise for one realization and one `ε`.
///
/// Sign conventions: `(1-Δ)X₁ = -ξ_ε`, `(1-Δ)X₂ = :|∇X₁|²:` and
/// `(1-Δ)X₃ = 2:∇X₁·∇X₂:` (the last two in `d = 3` only), so that
/// `ξ_ε - ΔX_tot` loses the roughness of `ξ_ε`. `X = 𝒰_> X_tot`.
#[derive(Clone, Debug)]
pub struct Enhancement {
    pub seed: u64,
    pub epsilon: f64,
    pub xi_eps: Field,
    pub x1: Field,
    pub x2: Option<Field>,
    pub x3: Option<Field>,
    /// `𝒰_≤ X_tot`.
    pub x_low: Field,
    /// `X = 𝒰_> X_tot`, the field of the exponential transform.
    pub x: Field,
    /// Assembled `Y_ε`.
    pub y: Field,
    pub c1: f64,
    /// Zero outside `d = 3`.
    pub c2: f64,
    pub c2_stderr: f64,
    /// `|∇X₁|² - c¹`.
    pub wick11: Field,
    /// `∇X₁·∇X₂` (`d = 3`).
    pub wick12: Option<Field>,
    /// `|∇X₂|² - c²` (`d = 3`).
    pub wick22: Option<Field>,
    /// Max-norm gap between assembled and direct `Y_ε`, relative.
    pub self_consistency: f64,
    /// Set when `ε < h/2`.
    pub under_resolved: bool,
    pub renormalized: bool,
}

impl Enhancement {
    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    /// `c_ε = c¹ + c²`, the constant removed by the Wick square in `Y_ε`.
    pub fn constant(&self) -> f64 {
        self.c1 + self.c2
    }

    /// Enhancement with `X = Y = 0`: the transformed operator is `-Δ`.
    pub fn trivial(grid: Grid) -> Self {
        let z = Field::zeros(grid);
        Self {
            seed: 0,
            epsilon: 0.0,
            xi_eps: z.clone(),
            x1: z.clone(),
            x2: None,
            x3: None,
            x_low: z.clone(),
            x: z.clone(),
            y: z.clone(),
            c1: 0.0,
            c2: 0.0,
            c2_stderr: 0.0,
            wick11: z,
            wick12: None,
            wick22: None,
            self_consistency: 0.0,
            under_resolved: false,
            renormalized: true,
        }
    }

    /// Copy with `X` and `Y` replaced, for controlled experiments.
    pub fn with_potential(&self, x: Field, y: Field) -> Self {
        Self {
            x,
            y,
            ..self.clone()
        }
    }

    /// `Y_ε = ξ_ε - ΔX - :|∇X|²:` evaluated directly, where the Wick square
    /// is `|∇X|² - c_ε`.
    pub fn direct_y(&self) -> Field {
        direct_y(&self.xi_eps, &self.x, self.constant())
    }
}

fn direct_y(xi_eps: &Field, x: &Field, c: f64) -> Field {
    let grid = *x.grid();
    let lap = SpectralMultiplier::laplacian(grid).apply(x).expect("same grid");
    let grad_sq = abs_sq_vec(&gradient(x));
    linear_combination(&[(1.0, xi_eps), (-1.0, &lap), (-1.0, &grad_sq)]).add_constant(c)
}

/// Precomputes the constants shared by every realization at one `(grid, ε)`.
#[derive(Clone, Debug)]
pub struct EnhancementBuilder {
    grid: Grid,
    mollifier: Mollifier,
    localization: LocalizationConfig,
    c1: f64,
    c2: f64,
    c2_stderr: f64,
    renormalize: bool,
}

impl EnhancementBuilder {
    /// Computes `c¹` and, in `d = 3`, estimates `c²` over
    /// [`MIN_C2_ENSEMBLE`] samples.
    pub fn new(grid: Grid, mollifier: Mollifier, localization: LocalizationConfig) -> Result<Self> {
        localization.grid().ensure_same(&grid)?;
        if grid.dim() >= 2 && mollifier.epsilon() == 0.0 {
            return Err(Error::param("epsilon", "ε must be positive in d >= 2"));
        }
        let c1 = renorm_constant_1(&grid, &mollifier)?;
        let (c2, c2_stderr) = if grid.dim() == 3 {
            renorm_constant_2(&grid, &mollifier, MIN_C2_ENSEMBLE)?
        } else {
            (0.0, 0.0)
        };
        Ok(Self {
            grid,
            mollifier,
            localization,
            c1,
            c2,
            c2_stderr,
            renormalize: true,
        })
    }

    /// Like [`EnhancementBuilder::new`] with a caller-supplied `c²`
    /// (ignored outside `d = 3`).
    pub fn with_c2(
        grid: Grid,
        mollifier: Mollifier,
        localization: LocalizationConfig,
        c2: f64,
        c2_stderr: f64,
    ) -> Result<Self> {
        localization.grid().ensure_same(&grid)?;
        if grid.dim() >= 2 && mollifier.epsilon() == 0.0 {
            return Err(Error::param("epsilon", "ε must be positive in d >= 2"));
        }
        let c1 = renorm_constant_1(&grid, &mollifier)?;
        let three = grid.dim() == 3;
        Ok(Self {
            grid,
            mollifier,
            localization,
            c1,
            c2: if three { c2 } else { 0.0 },
            c2_stderr: if three { c2_stderr } else { 0.0 },
            renormalize: true,
        })
    }

    /// Drops every renormalization constant (negative control).
    pub fn without_renormalization(mut self) -> Self {
        self.renormalize = false;
        self
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> (f64, f64) {
        (self.c2, self.c2_stderr)
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    pub fn localization(&self) -> &LocalizationConfig {
        &self.localization
    }

    pub fn build(&self, noise: &NoiseRealization) -> Result<Enhancement> {
        self.grid.ensure_same(noise.grid())?;
        let grid = self.grid;
        let h = grid.spacing();
        let eps = self.mollifier.epsilon();
        let under_resolved = eps < 0.5 * h;
        if under_resolved {
            warn!("ε = {eps} is below h/2 = {}; the mollifier is under-resolved", 0.5 * h);
        }
        let (c1, c2) = if self.renormalize {
            (self.c1, self.c2)
        } else {
            (0.0, 0.0)
        };
        let resolvent = SpectralMultiplier::resolvent(grid);
        let loc = &self.localization;

        let xi_eps = mollify(&noise.xi, &self.mollifier);
        let (x1, g1) = first_order(&xi_eps);
        let wick11 = abs_sq_vec(&g1).add_constant(-c1);

        if grid.dim() < 3 {
            let (x_low, x) = loc.split(&x1)?;
            let g_low = gradient(&x_low);
            let g_x = gradient(&x);
            // ξ_ε - ΔX = -X₁ + Δ𝒰_≤X₁ and
            // :|∇X|²: = :|∇X₁|²: - 2∇𝒰_≤X₁·∇X - |∇𝒰_≤X₁|².
            let lap_low = SpectralMultiplier::laplacian(grid).apply(&x_low)?;
            let cross = dot(&g_low, &g_x);
            let low_sq = abs_sq_vec(&g_low);
            let wick_x = linear_combination(&[(1.0, &wick11), (-2.0, &cross), (-1.0, &low_sq)]);
            let y = linear_combination(&[(-1.0, &x1), (1.0, &lap_low), (-1.0, &wick_x)]);
            let direct = direct_y(&xi_eps, &x, c1);
            let self_consistency = y.rel_max_diff(&direct);
            return Ok(Enhancement {
                seed: noise.seed,
                epsilon: eps,
                xi_eps,
                x1,
                x2: None,
                x3: None,
                x_low,
                x,
                y,
                c1,
                c2: 0.0,
                c2_stderr: 0.0,
                wick11,
                wick12: None,
                wick22: None,
                self_consistency,
                under_resolved,
                renormalized: self.renormalize,
            });
        }

        let x2 = resolvent.apply(&wick11)?;
        let g2 = gradient(&x2);
        let wick12 = dot(&g1, &g2);
        let x3 = resolvent.apply(&wick12)?.scale(2.0);
        let wick22 = abs_sq_vec(&g2).add_constant(-c2);

        let x_total = linear_combination(&[(1.0, &x1), (1.0, &x2), (1.0, &x3)]);
        let (x_low, x) = loc.split(&x_total)?;
        let (x1l, x1h) = loc.split(&x1)?;
        let (x2l, x2h) = loc.split(&x2)?;
        let (_, x3h) = loc.split(&x3)?;
        let (g1l, g1h) = (gradient(&x1l), gradient(&x1h));
        let (g2l, g2h) = (gradient(&x2l), gradient(&x2h));
        let g3h = gradient(&x3h);

        // :|∇X_i^>|²: = :|∇X_i|²: - |∇X_i^≤|² - 2∇X_i^≤·∇X_i^>.
        let w1 = linear_combination(&[
            (1.0, &wick11),
            (-1.0, &abs_sq_vec(&g1l)),
            (-2.0, &dot(&g1l, &g1h)),
        ]);
        let w2 = linear_combination(&[
            (1.0, &wick22),
            (-1.0, &abs_sq_vec(&g2l)),
            (-2.0, &dot(&g2l, &g2h)),
        ]);
        let w12 = linear_combination(&[
            (1.0, &wick12),
            (-1.0, &dot(&g1l, &g2l)),
            (-1.0, &dot(&g1l, &g2h)),
            (-1.0, &dot(&g1h, &g2l)),
        ]);
        let wick_x = linear_combination(&[
            (1.0, &w1),
            (2.0, &w12),
            (2.0, &dot(&g1h, &g3h)),
            (1.0, &w2),
            (2.0, &dot(&g2h, &g3h)),
            (1.0, &abs_sq_vec(&g3h)),
        ]);
        // ξ_ε - ΔX = -X_tot + Δ𝒰_≤X_tot + :|∇X₁|²: + 2:∇X₁·∇X₂:.
        let lap_low = SpectralMultiplier::laplacian(grid).apply(&x_low)?;
        let y = linear_combination(&[
            (-1.0, &x_total),
            (1.0, &lap_low),
            (1.0, &wick11),
            (2.0, &wick12),
            (-1.0, &wick_x),
        ]);
        let direct = direct_y(&xi_eps, &x, c1 + c2);
        let self_consistency = y.rel_max_diff(&direct);
        Ok(Enhancement {
            seed: noise.seed,
            epsilon: eps,
            xi_eps,
            x1,
            x2: Some(x2),
            x3: Some(x3),
            x_low,
            x,
            y,
            c1,
            c2,
            c2_stderr: if self.renormalize { self.c2_stderr } else { 0.0 },
            wick11,
            wick12: Some(wick12),
            wick22: Some(wick22),
            self_consistency,
            under_resolved,
            renormalized: self.renormalize,
        })
    }
}

/// One-shot construction; in `d = 3` this estimates `c²` first, so reuse
/// an [`EnhancementBuilder`] when building many realizations.
pub fn build_enhancement(
    noise: &NoiseRealization,
    m: &Mollifier,
    cfg: &LocalizationConfig,
) -> Result<Enhancement> {
    EnhancementBuilder::new(*noise.grid(), *m, cfg.clone())?.build(noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::sample_white_noise;

    #[test]
    fn zero_noise_gives_constant_y() {
        let grid = Grid::new(2, 64, 8.0).unwrap();
        let noise = NoiseRealization::from_field(0, Field::zeros(grid));
        let m = Mollifier::new(2.0 * grid.spacing()).unwrap();
        let e = build_enhancement(&noise, &m, &LocalizationConfig::default_for(grid)).unwrap();
        assert_eq!(e.x.max_abs(), 0.0);
        let c = e.c1;
        assert!(e.y.values().iter().all(|z| (z.re - c).abs() < 1e-14));
        assert!(e.self_consistency < 1e-14);
    }

    #[test]
    fn self_consistency_2d() {
        let grid = Grid::new(2, 64, 8.0).unwrap();
        let m = Mollifier::new(grid.spacing()).unwrap();
        let b = EnhancementBuilder::new(grid, m, LocalizationConfig::default_for(grid)).unwrap();
        let e = b.build(&sample_white_noise(grid, 3)).unwrap();
        assert!(e.self_consistency < 1e-10, "{}", e.self_consistency);
        assert!(e.y.is_real() && e.x.is_real());
    }

    #[test]
    fn self_consistency_3d() {
        let grid = Grid::new(3, 16, 4.0).unwrap();
        let m = Mollifier::new(grid.spacing()).unwrap();
        let b = EnhancementBuilder::with_c2(grid, m, LocalizationConfig::default_for(grid), 0.3, 0.0)
            .unwrap();
        let e = b.build(&sample_white_noise(grid, 4)).unwrap();
        assert!(e.self_consistency < 1e-10, "{}", e.self_consistency);
    }

    #[test]
    fn defining_relations() {
        let grid = Grid::new(3, 16, 4.0).unwrap();
        let m = Mollifier::new(grid.spacing()).unwrap();
        let b = EnhancementBuilder::with_c2(grid, m, LocalizationConfig::default_for(grid), 0.0, 0.0)
            .unwrap();
        let e = b.build(&sample_white_noise(grid, 5)).unwrap();
        let one_minus_lap = |f: &Field| {
            let lap = SpectralMultiplier::laplacian(grid).apply(f).unwrap();
            f - &lap
        };
        assert!(one_minus_lap(&e.x1).rel_max_diff(&e.xi_eps.scale(-1.0)) < 1e-10);
        assert!(one_minus_lap(e.x2.as_ref().unwrap()).rel_max_diff(&e.wick11) < 1e-10);
        let rhs = e.wick12.as_ref().unwrap().scale(2.0);
        assert!(one_minus_lap(e.x3.as_ref().unwrap()).rel_max_diff(&rhs) < 1e-10);
    }

    #[test]
    fn tiny_epsilon_is_flagged() {
        let grid = Grid::new(2, 32, 4.0).unwrap();
        let m = Mollifier::new(0.2 * grid.spacing()).unwrap();
        let e = build_enhancement(&sample_white_noise(grid, 1), &m, &LocalizationConfig::default_for(grid))
            .unwrap();
        assert!(e.under_resolved);
    }
}
