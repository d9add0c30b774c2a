//! Paracontrolled ansatz `Φ`, its inverse `Γ`, the transformed Hamiltonian
//! and defect measurements.

mod defect;
mod hamiltonian;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::lattice::{gradient, sobolev_norm, Grid, SpectralMultiplier};
use crate::lpcalc::{low_pass, paraproduct_from, resonant_from, LocalizationConfig};
use crate::noise::Enhancement;
use crate::{Error, Field, LpDecomposition, Result};

pub use defect::{
    cor_c4_check, defect_spectrum, CorC4Report, DefectMode, DefectSpectrum, default_defect_range,
};
pub use hamiltonian::{apply_transformed_hamiltonian, TransformedHamiltonian};

/// Probes used for the contraction estimate.
pub const CONTRACTION_PROBES: usize = 16;

/// Seed stream for probe fields, disjoint from noise and `c²` seeds.
pub const PROBE_SEED_BASE: u64 = 0x9B0B_E000_0000_0000;

/// Smooth random test function: white noise filtered by `⟨k⟩^{-smoothness}`
/// and normalized to unit `L²` norm. Deterministic in `(grid, seed)`.
pub fn random_probe(grid: Grid, seed: u64, smoothness: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED_BASE ^ seed);
    let values: Vec<f64> = (0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let white = Field::from_real(grid, values).expect("sizes match");
    let f = SpectralMultiplier::bessel(grid, -smoothness)
        .apply(&white)
        .expect("same grid");
    let norm = f.l2_norm();
    f.scale(1.0 / norm)
}

/// Stochastic coefficients of `Φ(v) = v - P_{∇v}·Z_∇ - P_v Z_s` where
/// `Z_∇ = Z₁ (+ Z₃)` and `Z_s = Z₂ (+ Z₄)`.
#[derive(Clone, Debug)]
pub struct AnsatzData {
    grid: Grid,
    level: usize,
    /// `Z₁ = 2(1-Δ)⁻¹∇(X - X_N)`, one component per axis.
    pub z1: Vec<Field>,
    /// `Z₂ = -(1-Δ)⁻¹(Y^> - Y^>_N)`.
    pub z2: Field,
    /// `d = 3` only.
    pub z3: Option<Vec<Field>>,
    /// `d = 3` only.
    pub z4: Option<Field>,
    grad_blocks: Vec<LpDecomposition>,
    scalar_blocks: LpDecomposition,
    /// `max ‖Φ(v) - v‖_{H¹} / ‖v‖_{H¹}` over the probe set.
    pub contraction_estimate: f64,
}

impl AnsatzData {
    /// Builds the coefficients without rejecting a large contraction
    /// estimate; use [`build_ansatz`] for the checked version.
    pub fn assemble(e: &Enhancement, level: usize, loc: &LocalizationConfig) -> Result<Self> {
        let grid = *e.grid();
        loc.grid().ensure_same(&grid)?;
        let jmax = grid.jmax();
        if level > jmax {
            return Err(Error::param("N", format!("truncation {level} above jmax {jmax}")));
        }
        let resolvent = SpectralMultiplier::resolvent(grid);
        let x_rough = &e.x - &low_pass(&e.x, level as f64);
        let y_high = loc.split(&e.y)?.1;
        let y_rough = &y_high - &low_pass(&y_high, level as f64);

        let z1: Vec<Field> = gradient(&x_rough)
            .iter()
            .map(|g| resolvent.apply_unchecked(g).scale(2.0))
            .collect();
        let z2 = resolvent.apply_unchecked(&y_rough).scale(-1.0);

        let (z3, z4) = if grid.dim() == 3 {
            // Z₃_b = 2(1-Δ)⁻¹(Π(∇X, ∇Z₁_b) + P_{∇X}∇Z₁_b), Z₄ likewise with Z₂.
            let gx: Vec<LpDecomposition> = gradient(&e.x).iter().map(LpDecomposition::new).collect();
            let second = |z: &Field| {
                let gz = gradient(z);
                let mut acc = Field::zeros(grid);
                for (dx, g) in gx.iter().zip(&gz) {
                    let dg = LpDecomposition::new(g);
                    acc = &acc + &(&resonant_from(dx, &dg) + &paraproduct_from(dx, &dg));
                }
                resolvent.apply_unchecked(&acc).scale(2.0)
            };
            let z3: Vec<Field> = z1.iter().map(&second).collect();
            let z4 = second(&z2);
            (Some(z3), Some(z4))
        } else {
            (None, None)
        };

        let grad_coeffs: Vec<Field> = match &z3 {
            Some(z3) => z1.iter().zip(z3).map(|(a, b)| a + b).collect(),
            None => z1.clone(),
        };
        let scalar_coeff = match &z4 {
            Some(z4) => &z2 + z4,
            None => z2.clone(),
        };
        let mut out = Self {
            grid,
            level,
            grad_blocks: grad_coeffs.iter().map(LpDecomposition::new).collect(),
            scalar_blocks: LpDecomposition::new(&scalar_coeff),
            z1,
            z2,
            z3,
            z4,
            contraction_estimate: 0.0,
        };
        out.contraction_estimate = out.measure_contraction(CONTRACTION_PROBES, 0);
        Ok(out)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// The truncation level `N`.
    pub fn level(&self) -> usize {
        self.level
    }

    /// `max ‖Φ(v) - v‖_{H¹} / ‖v‖_{H¹}` over `probes` smooth random
    /// fields drawn from `first_seed` on.
    pub fn measure_contraction(&self, probes: usize, first_seed: u64) -> f64 {
        (0..probes as u64)
            .into_par_iter()
            .map(|s| {
                let v = random_probe(self.grid, first_seed + s, self.grid.dim() as f64 / 2.0 + 2.0);
                let diff = self.correction(&v);
                sobolev_norm(&diff, 1.0) / sobolev_norm(&v, 1.0)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `P_{∇v}·Z_∇ + P_v Z_s`, so that `Φ(v) = v - correction(v)`.
    fn correction(&self, v: &Field) -> Field {
        let mut acc = paraproduct_from(&LpDecomposition::new(v), &self.scalar_blocks);
        for (g, zb) in gradient(v).iter().zip(&self.grad_blocks) {
            acc = &acc + &paraproduct_from(&LpDecomposition::new(g), zb);
        }
        acc
    }
}

/// Builds the ansatz at truncation `N` with the default localization and
/// rejects it when the measured contraction is not below 1/2.
pub fn build_ansatz(e: &Enhancement, level: usize) -> Result<AnsatzData> {
    build_ansatz_with(e, level, &LocalizationConfig::default_for(*e.grid()))
}

pub fn build_ansatz_with(e: &Enhancement, level: usize, loc: &LocalizationConfig) -> Result<AnsatzData> {
    let a = AnsatzData::assemble(e, level, loc)?;
    if a.contraction_estimate >= 0.5 {
        return Err(Error::ContractionTooLarge {
            estimate: a.contraction_estimate,
        });
    }
    Ok(a)
}

pub fn phi_apply(a: &AnsatzData, v: &Field) -> Result<Field> {
    a.grid.ensure_same(v.grid())?;
    Ok(v - &a.correction(v))
}

pub const DEFAULT_GAMMA_TOL: f64 = 1e-9;
pub const DEFAULT_GAMMA_MAX_ITER: usize = 200;

/// `Γ = Φ⁻¹` by Picard iteration `v ← v♯ + P_{∇v}·Z_∇ + P_v Z_s`.
#[derive(Clone, Debug)]
pub struct GammaMap {
    pub ansatz: AnsatzData,
    pub tol: f64,
    pub max_iter: usize,
}

impl GammaMap {
    pub fn new(ansatz: AnsatzData) -> Result<Self> {
        if ansatz.contraction_estimate >= 0.5 {
            return Err(Error::ContractionTooLarge {
                estimate: ansatz.contraction_estimate,
            });
        }
        Ok(Self {
            ansatz,
            tol: DEFAULT_GAMMA_TOL,
            max_iter: DEFAULT_GAMMA_MAX_ITER,
        })
    }

    pub fn with_tolerance(mut self, tol: f64, max_iter: usize) -> Self {
        self.tol = tol;
        self.max_iter = max_iter;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.ansatz.grid()
    }

    /// `Φ = Γ⁻¹`.
    pub fn inverse(&self, v: &Field) -> Result<Field> {
        phi_apply(&self.ansatz, v)
    }

    pub fn apply(&self, vsharp: &Field) -> Result<Field> {
        gamma_apply(self, vsharp)
    }
}

pub fn gamma_apply(g: &GammaMap, vsharp: &Field) -> Result<Field> {
    g.grid().ensure_same(vsharp.grid())?;
    let scale = vsharp.l2_norm();
    if scale == 0.0 {
        return Ok(vsharp.clone());
    }
    let mut v = vsharp.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..g.max_iter {
        let corr = g.ansatz.correction(&v);
        // Φ(v) - v♯ = v - corr - v♯.
        residual = (&(&v - &corr) - vsharp).l2_norm() / scale;
        if residual <= g.tol {
            return Ok(v);
        }
        v = vsharp + &corr;
    }
    Err(Error::GammaNotConverged {
        iterations: g.max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::linear_combination;
    use crate::noise::{sample_white_noise, EnhancementBuilder, Mollifier};

    fn enhancement(grid: Grid, seed: u64) -> Enhancement {
        let m = Mollifier::new(grid.spacing()).unwrap();
        let b = if grid.dim() == 3 {
            EnhancementBuilder::with_c2(grid, m, LocalizationConfig::default_for(grid), 0.0, 0.0)
        } else {
            EnhancementBuilder::new(grid, m, LocalizationConfig::default_for(grid))
        };
        b.unwrap().build(&sample_white_noise(grid, seed)).unwrap()
    }

    #[test]
    fn full_truncation_is_identity() {
        let grid = Grid::new(2, 64, 8.0).unwrap();
        let e = enhancement(grid, 1);
        let a = build_ansatz(&e, grid.jmax()).unwrap();
        assert_eq!(a.contraction_estimate, 0.0);
        let v = random_probe(grid, 3, 1.0);
        assert!(phi_apply(&a, &v).unwrap().rel_max_diff(&v) < 1e-14);
        let g = GammaMap::new(a).unwrap();
        assert!(gamma_apply(&g, &v).unwrap().rel_max_diff(&v) < 1e-14);
    }

    #[test]
    fn elliptic_relations() {
        let grid = Grid::new(2, 64, 8.0).unwrap();
        let e = enhancement(grid, 2);
        let level = grid.jmax() - 1;
        let a = AnsatzData::assemble(&e, level, &LocalizationConfig::default_for(grid)).unwrap();
        let one_minus_lap = |f: &Field| {
            f - &SpectralMultiplier::laplacian(grid).apply(f).unwrap()
        };
        let x_rough = &e.x - &low_pass(&e.x, level as f64);
        for (z, g) in a.z1.iter().zip(gradient(&x_rough)) {
            assert!(one_minus_lap(z).rel_max_diff(&g.scale(2.0)) < 1e-10);
        }
        let yh = LocalizationConfig::default_for(grid).split(&e.y).unwrap().1;
        let rough = &yh - &low_pass(&yh, level as f64);
        assert!(one_minus_lap(&a.z2).rel_max_diff(&rough.scale(-1.0)) < 1e-10);
    }

    #[test]
    fn phi_is_linear() {
        let grid = Grid::new(2, 64, 8.0).unwrap();
        let e = enhancement(grid, 3);
        let a = AnsatzData::assemble(&e, 2, &LocalizationConfig::default_for(grid)).unwrap();
        let v = random_probe(grid, 1, 1.5);
        let w = random_probe(grid, 2, 1.5);
        let lhs = phi_apply(&a, &linear_combination(&[(2.0, &v), (-0.5, &w)])).unwrap();
        let rhs = linear_combination(&[
            (2.0, &phi_apply(&a, &v).unwrap()),
            (-0.5, &phi_apply(&a, &w).unwrap()),
        ]);
        assert!(lhs.rel_max_diff(&rhs) < 1e-12);
    }

    #[test]
    fn gamma_inverts_phi_both_ways() {
        let grid = Grid::new(2, 64, 8.0).unwrap();
        let e = enhancement(grid, 4);
        let a = build_ansatz(&e, 2).unwrap();
        let g = GammaMap::new(a).unwrap();
        for s in 0..4 {
            let vs = random_probe(grid, 100 + s, 1.5);
            let v = gamma_apply(&g, &vs).unwrap();
            assert!(phi_apply(&g.ansatz, &v).unwrap().rel_l2_diff(&vs) < 1e-8);
            let back = gamma_apply(&g, &phi_apply(&g.ansatz, &vs).unwrap()).unwrap();
            assert!(back.rel_l2_diff(&vs) < 1e-8);
        }
    }

    #[test]
    fn fresh_probes_respect_the_estimate() {
        let grid = Grid::new(2, 64, 8.0).unwrap();
        let e = enhancement(grid, 5);
        let a = AnsatzData::assemble(&e, 2, &LocalizationConfig::default_for(grid)).unwrap();
        // A disjoint probe set lands in the same range.
        let fresh = a.measure_contraction(16, 1_000);
        assert!(fresh <= 1.5 * a.contraction_estimate + 1e-12, "{fresh} vs {}", a.contraction_estimate);
    }

    #[test]
    fn three_dimensional_ansatz() {
        let grid = Grid::new(3, 16, 4.0).unwrap();
        let e = enhancement(grid, 6);
        let a = AnsatzData::assemble(&e, 1, &LocalizationConfig::default_for(grid)).unwrap();
        assert_eq!(a.z3.as_ref().unwrap().len(), 3);
        assert!(a.z4.is_some());
        assert!(a.contraction_estimate.is_finite());
    }

    #[test]
    fn contraction_shrinks_with_truncation() {
        let grid = Grid::new(2, 128, 8.0).unwrap();
        let e = enhancement(grid, 7);
        let loc = LocalizationConfig::default_for(grid);
        let est: Vec<f64> = (0..=grid.jmax())
            .map(|n| AnsatzData::assemble(&e, n, &loc).unwrap().contraction_estimate)
            .collect();
        eprintln!("contraction by N: {est:?}");
        assert!(est.windows(2).filter(|w| w[1] > w[0] * 1.05).count() <= 1);
        assert_eq!(*est.last().unwrap(), 0.0);
    }
}
