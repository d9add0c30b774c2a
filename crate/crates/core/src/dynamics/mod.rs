//! Time integration of the transformed equations, conserved quantities,
//! mild residuals, Strichartz quotients and solution Cauchy studies.
//!
//! The unknown is `v` with `u = e^X v`. With `M = e^{2X}` and the
//! symmetric transformed Hamiltonian `A`, the equations are
//! `i M ∂_t v = A v + M N(v) v` where `N(v) = ±e^{(m-1)X}|v|^{m-1}` (NLS)
//! or `V_β ∗ |e^X v|²` (Hartree).

mod cauchy;
mod integrator;
mod krylov;
mod mild;
mod quantities;
mod strichartz;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::{Error, Field, Result};

pub use cauchy::{pairwise_cauchy_study, SolutionCauchyRow, SolutionCauchyStudy};
pub use integrator::{linear_flow, linear_step, nonlinear_step, Propagator};
pub use krylov::{gmres, KrylovStats, GMRES_RESTART};
pub use mild::{mild_residual, MIN_MILD_STATES};
pub use quantities::{hartree_kernel, modified_energy, modified_mass, unweighted_mass};
pub use strichartz::{strichartz_quotient, FlowKind, StrichartzParams, StrichartzReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    CrankNicolsonLinear,
    StrangNls,
    StrangHartree,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crank_nicolson_linear" => Ok(Self::CrankNicolsonLinear),
            "strang_nls" => Ok(Self::StrangNls),
            "strang_hartree" => Ok(Self::StrangHartree),
            other => Err(Error::param("scheme", format!("unknown scheme {other}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::CrankNicolsonLinear => "crank_nicolson_linear",
            Self::StrangNls => "strang_nls",
            Self::StrangHartree => "strang_hartree",
        })
    }
}

/// The nonlinear term of the evolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Nonlinearity {
    None,
    /// `±|u|^{m-1}u`; defocusing unless `focusing`.
    Nls { m: f64, focusing: bool },
    /// `(V_β ∗ |u|²) u` with the Bessel kernel.
    Hartree { beta: f64 },
}

/// Low-regularity threshold `σ_m = 1 - 1/(m-1)` for NLS (`m > 1`).
pub fn sigma_m(m: f64) -> Option<f64> {
    (m > 1.0).then(|| 1.0 - 1.0 / (m - 1.0))
}

/// Low-regularity threshold `σ_β = 5/4 - β/2` for Hartree.
pub fn sigma_beta(beta: f64) -> f64 {
    1.25 - 0.5 * beta
}

pub const DEFAULT_KRYLOV_TOL: f64 = 1e-10;
pub const DEFAULT_KRYLOV_MAX: usize = 400;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub m: f64,
    pub beta: f64,
    pub focusing: bool,
    pub krylov_tol: f64,
    pub krylov_max: usize,
    /// Weight exponent of the `L²_μ` trace column.
    pub mu: f64,
    /// Trace row every `record_every` steps (the last step is always kept).
    pub record_every: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            t_end: 1.0,
            scheme: Scheme::CrankNicolsonLinear,
            m: 3.0,
            beta: 0.75,
            focusing: false,
            krylov_tol: DEFAULT_KRYLOV_TOL,
            krylov_max: DEFAULT_KRYLOV_MAX,
            mu: 0.25,
            record_every: 1,
        }
    }
}

impl EvolutionConfig {
    pub fn nonlinearity(&self) -> Nonlinearity {
        match self.scheme {
            Scheme::CrankNicolsonLinear => Nonlinearity::None,
            Scheme::StrangNls => Nonlinearity::Nls {
                m: self.m,
                focusing: self.focusing,
            },
            Scheme::StrangHartree => Nonlinearity::Hartree { beta: self.beta },
        }
    }

    /// Number of steps, rounding `t_end / dt` to the nearest integer.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Rejects invalid values and returns advisory warnings for parameters
    /// outside the proved existence/uniqueness ranges (also logged).
    pub fn validate(&self, dim: usize) -> Result<Vec<String>> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "dt must be positive"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::param("t_end", "t_end must be finite and >= 0"));
        }
        if !(self.krylov_tol > 0.0) || self.krylov_max == 0 {
            return Err(Error::param("krylov_tol", "need a positive tolerance and iteration cap"));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be >= 1"));
        }
        let mut warnings = Vec::new();
        match self.scheme {
            Scheme::StrangNls => {
                if self.m < 1.0 {
                    return Err(Error::param("m", "nonlinearity exponent must be >= 1"));
                }
                if dim == 3 && self.m >= 6.0 {
                    warnings.push(format!(
                        "d = 3 NLS with m = {} is outside the existence range 1 <= m < 6",
                        self.m
                    ));
                }
                if self.focusing {
                    warnings.push("focusing sign is exploratory only".to_string());
                }
            }
            Scheme::StrangHartree => {
                if !(self.beta > 0.0) {
                    return Err(Error::param("beta", "Hartree regularity must be positive"));
                }
                if dim != 3 {
                    return Err(Error::param("scheme", "the Hartree kernel is defined in d = 3"));
                }
                if self.beta <= 0.5 {
                    warnings.push(format!(
                        "Hartree with β = {} is outside the well-posedness range β > 1/2",
                        self.beta
                    ));
                }
            }
            Scheme::CrankNicolsonLinear => {}
        }
        for w in &warnings {
            warn!("{w}");
        }
        Ok(warnings)
    }
}

/// One row of the conserved-quantity trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub h1: f64,
    pub l2mu: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConservationTrace {
    pub rows: Vec<TraceRow>,
}

impl ConservationTrace {
    /// `max_t |q(t) - q(0)| / |q(0)|` for the column picked by `f`.
    pub fn relative_drift(&self, f: impl Fn(&TraceRow) -> f64) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        let q0 = f(first);
        let scale = q0.abs().max(f64::MIN_POSITIVE);
        self.rows.iter().map(|r| (f(r) - q0).abs() / scale).fold(0.0, f64::max)
    }

    pub fn mass_drift(&self) -> f64 {
        self.relative_drift(|r| r.mass)
    }

    pub fn energy_drift(&self) -> f64 {
        self.relative_drift(|r| r.energy)
    }

    /// Appends a row; timestamps must increase strictly.
    pub fn push(&mut self, row: TraceRow) {
        if let Some(last) = self.rows.last() {
            assert!(row.t > last.t, "trace time must increase");
        }
        self.rows.push(row);
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionState {
    pub t: f64,
    pub v: Field,
    pub trace: ConservationTrace,
}

impl EvolutionState {
    pub fn new(v: Field) -> Self {
        Self {
            t: 0.0,
            v: v.into_complex(),
            trace: ConservationTrace::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(sigma_m(3.0), Some(0.5));
        assert_eq!(sigma_m(1.0), None);
        assert!((sigma_beta(0.75) - 0.875).abs() < 1e-15);
    }

    #[test]
    fn guards_warn_without_rejecting() {
        let cfg = EvolutionConfig {
            scheme: Scheme::StrangNls,
            m: 7.0,
            ..Default::default()
        };
        assert_eq!(cfg.validate(3).unwrap().len(), 1);
        assert!(cfg.validate(2).unwrap().is_empty());
        let h = EvolutionConfig {
            scheme: Scheme::StrangHartree,
            beta: 0.4,
            ..Default::default()
        };
        assert_eq!(h.validate(3).unwrap().len(), 1);
        assert!(h.validate(2).is_err());
        let bad = EvolutionConfig {
            dt: -0.1,
            ..Default::default()
        };
        let err = bad.validate(2).unwrap_err().to_string();
        assert!(err.contains("dt must be positive"), "{err}");
    }

    #[test]
    fn scheme_roundtrips_through_text() {
        for s in [Scheme::CrankNicolsonLinear, Scheme::StrangNls, Scheme::StrangHartree] {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
    }
}
