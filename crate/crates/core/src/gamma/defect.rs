use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gamma_apply, phi_apply, random_probe, GammaMap, TransformedHamiltonian};
use crate::lattice::{divergence, gradient, sobolev_norm, weighted_l2_norm};
use crate::lpcalc::block;
use crate::noise::Enhancement;
use crate::stats::fit_line;
use crate::{Error, Field, Result, Weight};

/// Default block range for defect fits: `1..=jmax-1`. The top block holds
/// the lattice corner modes, where products alias.
pub fn default_defect_range(grid: &crate::Grid) -> (usize, usize) {
    (1, grid.jmax().saturating_sub(1).max(2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefectMode {
    /// `Γ⁻¹(e^{-X}𝓗e^X)Γ + Δ`.
    Sharp,
    /// `e^{-X}𝓗e^X + Δ`.
    Naive,
}

impl std::str::FromStr for DefectMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharp" => Ok(Self::Sharp),
            "naive" => Ok(Self::Naive),
            other => Err(Error::param("mode", format!("expected sharp or naive, got {other}"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefectSpectrum {
    pub mode: DefectMode,
    /// `(j, ‖D v♯_j‖_{L²})` with `‖v♯_j‖_{L²} = 1`.
    pub rows: Vec<(usize, f64)>,
    /// Fitted growth exponent: slope of `log₂ norm` against `j`.
    pub slope: f64,
}

/// Lattice Laplacian `∇·∇`, the discretization `𝓗` uses.
fn lattice_laplacian(v: &Field) -> Field {
    divergence(&gradient(v))
}

fn unit_block(g: &Field, j: usize) -> Field {
    let b = block(g, j);
    let n = b.l2_norm();
    b.scale(1.0 / n)
}

fn resolve_range(range: (usize, usize), jmax: usize) -> Result<(usize, usize)> {
    let hi = range.1;
    if range.0 >= hi || hi > jmax {
        return Err(Error::param(
            "fit_range",
            format!("{range:?} is not a range of at least two blocks within [0, {jmax}]"),
        ));
    }
    Ok((range.0, hi))
}

/// Defect norms on unit-normalized blocks `v♯ = Δ_j g / ‖Δ_j g‖` of one
/// white-noise probe `g`, and the fitted growth exponent over the range.
pub fn defect_spectrum(
    e: &Enhancement,
    g: &GammaMap,
    mode: DefectMode,
    probe_seed: u64,
    fit_range: (usize, usize),
) -> Result<DefectSpectrum> {
    let grid = *e.grid();
    g.grid().ensure_same(&grid)?;
    let (lo, hi) = resolve_range(fit_range, grid.jmax())?;
    let h = TransformedHamiltonian::new(e);
    let probe = random_probe(grid, probe_seed, 0.0);
    let rows = (lo..=hi)
        .into_par_iter()
        .map(|j| {
            let vs = unit_block(&probe, j);
            let d = match mode {
                DefectMode::Naive => h.apply_conjugated(&vs)?,
                DefectMode::Sharp => {
                    let v = gamma_apply(g, &vs)?;
                    phi_apply(&g.ansatz, &h.apply_conjugated(&v)?)?
                }
            };
            Ok((j, (&d + &lattice_laplacian(&vs)).l2_norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.1.max(f64::MIN_POSITIVE).log2()).collect();
    let slope = fit_line(&x, &y).slope;
    Ok(DefectSpectrum { mode, rows, slope })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorC4Report {
    /// `(j, C_j)` with `C_j = ‖e^{-X}𝓗e^X v + ΔΓ⁻¹v‖ / (‖Γ⁻¹v‖_{H^{d/2+κ}} + ‖v‖_{L²_μ})`.
    pub rows: Vec<(usize, f64)>,
    /// `max C_j / min C_j`.
    pub spread: f64,
}

/// Domain-equivalence check on `v = ΓΔ_j g`, in the conjugated frame
/// (`e^{-2X}` applied to the transformed Hamiltonian).
pub fn cor_c4_check(
    e: &Enhancement,
    g: &GammaMap,
    probe_seed: u64,
    fit_range: (usize, usize),
    kappa: f64,
    mu: f64,
) -> Result<CorC4Report> {
    let grid = *e.grid();
    g.grid().ensure_same(&grid)?;
    let (lo, hi) = resolve_range(fit_range, grid.jmax())?;
    let h = TransformedHamiltonian::new(e);
    let weight = Weight::new(grid, mu);
    let probe = random_probe(grid, probe_seed, 0.0);
    let s = grid.dim() as f64 / 2.0 + kappa;
    let rows = (lo..=hi)
        .into_par_iter()
        .map(|j| {
            let v = gamma_apply(g, &unit_block(&probe, j))?;
            let vs = phi_apply(&g.ansatz, &v)?;
            let lhs = (&h.apply_conjugated(&v)? + &lattice_laplacian(&vs)).l2_norm();
            let rhs = sobolev_norm(&vs, s) + weighted_l2_norm(&v, &weight)?;
            Ok((j, lhs / rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    let max = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let min = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(CorC4Report { rows, spread: max / min })
}
