use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Nonlinearity, Propagator, DEFAULT_KRYLOV_MAX};
use crate::gamma::{phi_apply, random_probe, GammaMap};
use crate::lattice::{sobolev_norm, weighted_l2_norm, Spectrum};
use crate::lpcalc::{besov_norm, block, BesovParams};
use crate::noise::Enhancement;
use crate::{Error, Field, Result, Weight, C64};

/// Which flow the quotient measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    /// `S♯_t = Γ⁻¹ S_t Γ` by Crank–Nicolson.
    Conjugated,
    /// `S_t` by Crank–Nicolson.
    Plain,
    /// Exact phases `exp(-it|k̃|²)` of the free lattice flow; ignores the
    /// enhancement.
    ExactFree,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzParams {
    /// Time exponent; `f64::INFINITY` allowed.
    pub p: f64,
    /// Space exponent; `f64::INFINITY` allowed.
    pub q: f64,
    pub gamma: f64,
    pub mu: f64,
    pub kappa: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Inclusive block range `(lo, hi)`.
    pub fit_range: (usize, usize),
    /// Random data per block; quotients are averaged.
    pub probes: usize,
    pub probe_seed: u64,
    pub krylov_tol: f64,
}

impl StrichartzParams {
    pub fn new(p: f64, q: f64, gamma: f64, fit_range: (usize, usize)) -> Self {
        Self {
            p,
            q,
            gamma,
            mu: 0.25,
            kappa: 0.05,
            dt: 1e-2,
            t_end: 1.0,
            fit_range,
            probes: 1,
            probe_seed: 0,
            krylov_tol: 1e-10,
        }
    }

    /// Checks `2/p + d/q = d/2`, excludes the endpoint `(2, ∞)` in `d = 2`
    /// and requires `0 ≤ γ < 2 - d/(2p)`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let d = dim as f64;
        if !(self.p >= 2.0 && self.q >= 2.0) {
            return Err(Error::param("p", "Strichartz exponents must be >= 2"));
        }
        if (2.0 / self.p + d / self.q - d / 2.0).abs() > 1e-12 {
            return Err(Error::param(
                "q",
                format!("({}, {}) is not a Strichartz pair in d = {dim}", self.p, self.q),
            ));
        }
        if dim == 2 && self.p == 2.0 {
            return Err(Error::param("p", "the endpoint (2, ∞) is excluded in d = 2"));
        }
        if !(self.gamma >= 0.0 && self.gamma < 2.0 - d / (2.0 * self.p)) {
            return Err(Error::param("gamma", "γ must lie in [0, 2 - d/(2p))"));
        }
        if !(self.dt > 0.0 && self.t_end > 0.0) || self.probes == 0 {
            return Err(Error::param("dt", "dt, t_end and probes must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrichartzReport {
    /// `(j, quotient)`.
    pub rows: Vec<(usize, f64)>,
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub mu: f64,
    /// `max / min` of the quotients.
    pub spread: f64,
}

fn time_norm(samples: &[f64], p: f64, dt: f64) -> f64 {
    if p.is_infinite() {
        samples.iter().copied().fold(0.0, f64::max)
    } else {
        (samples.iter().map(|s| dt * s.powf(p)).sum::<f64>()).powf(1.0 / p)
    }
}

/// `‖S_t v₀‖_{L^p([0,T], B^γ_{q,q})} / ‖v₀‖_{L²_μ ∩ H^{d/(2p)+κ+γ}}` on
/// unit blocks `v₀ = Δ_j g / ‖Δ_j g‖` with `g` white, time integral by the
/// rectangle rule at the solver step.
pub fn strichartz_quotient(
    e: &Enhancement,
    g: Option<&GammaMap>,
    params: &StrichartzParams,
    kind: FlowKind,
) -> Result<StrichartzReport> {
    let grid = *e.grid();
    params.validate(grid.dim())?;
    let (lo, hi) = params.fit_range;
    if lo > hi || hi > grid.jmax() {
        return Err(Error::param("fit_range", "range must lie within [0, jmax]"));
    }
    if kind == FlowKind::Conjugated && g.is_none() {
        return Err(Error::param("gamma", "the conjugated flow needs a Γ map"));
    }
    let prop = Propagator::with_parts(e, Nonlinearity::None, params.krylov_tol, DEFAULT_KRYLOV_MAX, params.mu)?;
    let steps = (params.t_end / params.dt).round() as usize;
    let besov = BesovParams::new(params.gamma, params.q, params.q, 0.0)?;
    let weight = Weight::new(grid, params.mu);
    let s_data = grid.dim() as f64 / (2.0 * params.p) + params.kappa + params.gamma;
    let lattice_k2: Vec<f64> = (0..grid.len())
        .map(|i| {
            let k = grid.derivative_wavevector(i);
            k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
        })
        .collect();

    // W^{γ,2} = H^γ exactly; other q use the Besov scale B^γ_{q,q}.
    let space_norm = |f: &Field| {
        if params.q == 2.0 {
            sobolev_norm(f, params.gamma)
        } else {
            besov_norm(f, &besov)
        }
    };

    let quotient = |j: usize, seed: u64| -> Result<f64> {
        let b = block(&random_probe(grid, seed, 0.0), j);
        let v0 = b.scale(1.0 / b.l2_norm()).into_complex();
        let mut samples = Vec::with_capacity(steps);
        match kind {
            FlowKind::ExactFree => {
                let spec = v0.spectrum().to_vec();
                for k in 0..steps {
                    let t = k as f64 * params.dt;
                    let coeffs = spec
                        .iter()
                        .zip(&lattice_k2)
                        .map(|(c, k2)| c * C64::from_polar(1.0, -t * k2))
                        .collect();
                    let f = Field::from_spectrum(&Spectrum::new(grid, coeffs, false)?);
                    samples.push(space_norm(&f));
                }
            }
            FlowKind::Plain | FlowKind::Conjugated => {
                let mut w = match (kind, g) {
                    (FlowKind::Conjugated, Some(g)) => g.apply(&v0)?,
                    _ => v0.clone(),
                };
                for k in 0..steps {
                    if k > 0 {
                        w = prop.linear_step(&w, params.dt)?.0;
                    }
                    let sample = match (kind, g) {
                        (FlowKind::Conjugated, Some(g)) => phi_apply(&g.ansatz, &w)?,
                        _ => w.clone(),
                    };
                    samples.push(space_norm(&sample));
                }
            }
        }
        let data = weighted_l2_norm(&v0, &weight)? + sobolev_norm(&v0, s_data);
        Ok(time_norm(&samples, params.p, params.dt) / data)
    };

    let rows = (lo..=hi)
        .into_par_iter()
        .map(|j| {
            let mut acc = 0.0;
            for s in 0..params.probes as u64 {
                acc += quotient(j, params.probe_seed + s)?;
            }
            Ok((j, acc / params.probes as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let max = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let min = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(StrichartzReport {
        rows,
        p: params.p,
        q: params.q,
        gamma: params.gamma,
        mu: params.mu,
        spread: max / min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Grid;

    #[test]
    fn pair_validation() {
        assert!(StrichartzParams::new(4.0, 4.0, 0.0, (1, 2)).validate(2).is_ok());
        assert!(StrichartzParams::new(4.0, 3.0, 0.0, (1, 2)).validate(2).is_err());
        assert!(StrichartzParams::new(2.0, f64::INFINITY, 0.0, (1, 2)).validate(2).is_err());
        assert!(StrichartzParams::new(2.0, 6.0, 0.0, (1, 2)).validate(3).is_ok());
        assert!(StrichartzParams::new(4.0, 4.0, 1.9, (1, 2)).validate(2).is_err());
    }

    #[test]
    fn mass_endpoint_is_an_isometry() {
        // (p, q) = (∞, 2), γ = 0: the time sup of the L² norm over the data norm.
        let grid = Grid::new(2, 32, 6.0).unwrap();
        let e = Enhancement::trivial(grid);
        let mut params = StrichartzParams::new(f64::INFINITY, 2.0, 0.0, (1, 2));
        params.mu = 0.0;
        params.kappa = 0.0;
        params.t_end = 0.1;
        let r = strichartz_quotient(&e, None, &params, FlowKind::Plain).unwrap();
        // Data norm is ‖v₀‖ + ‖v₀‖_{H^0} = 2.
        for (_, q) in &r.rows {
            assert!((q - 0.5).abs() < 1e-8, "{q}");
        }
    }
}
