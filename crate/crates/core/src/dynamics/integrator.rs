use super::krylov::{gmres, KrylovStats};
use super::quantities::{density, energy_with, hartree_kernel, weighted_mass};
use super::{EvolutionConfig, EvolutionState, Nonlinearity, TraceRow};
use crate::gamma::TransformedHamiltonian;
use crate::lattice::{sobolev_norm, weighted_l2_norm};
use crate::noise::Enhancement;
use crate::{Error, Field, Grid, Multiplier, Result, Weight, C64};

/// Cached operators for one enhancement: `A`, `M = e^{2X}`, the Hartree
/// kernel and the constant-coefficient preconditioner data.
#[derive(Clone, Debug)]
pub struct Propagator {
    hamiltonian: TransformedHamiltonian,
    x: Field,
    /// Symbol `|k̃|²` of the lattice `-∇·∇`.
    lattice_k2: Vec<f64>,
    /// `ȳ = mean(e^{2X}Y) e^{-2X̄}`.
    mean_potential: f64,
    kernel: Option<Multiplier>,
    nonlinearity: Nonlinearity,
    krylov_tol: f64,
    krylov_max: usize,
    mu_weight: Weight,
    exp_nl: Option<Field>,
}

impl Propagator {
    pub fn new(e: &Enhancement, cfg: &EvolutionConfig) -> Result<Self> {
        let grid = *e.grid();
        cfg.validate(grid.dim())?;
        Self::with_parts(e, cfg.nonlinearity(), cfg.krylov_tol, cfg.krylov_max, cfg.mu)
    }

    pub fn with_parts(
        e: &Enhancement,
        nonlinearity: Nonlinearity,
        krylov_tol: f64,
        krylov_max: usize,
        mu: f64,
    ) -> Result<Self> {
        let grid = *e.grid();
        let hamiltonian = TransformedHamiltonian::new(e);
        let lattice_k2 = (0..grid.len())
            .map(|i| {
                let k = grid.derivative_wavevector(i);
                k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
            })
            .collect();
        let x_mean = e.x.mean().re;
        let mean_potential = hamiltonian.weighted_potential().mean().re * (-2.0 * x_mean).exp();
        let kernel = match nonlinearity {
            Nonlinearity::Hartree { beta } => Some(hartree_kernel(grid, beta)?),
            _ => None,
        };
        let exp_nl = match nonlinearity {
            Nonlinearity::Nls { m, .. } => Some(e.x.exp_scaled(m - 1.0)),
            _ => None,
        };
        Ok(Self {
            hamiltonian,
            x: e.x.clone(),
            lattice_k2,
            mean_potential,
            kernel,
            nonlinearity,
            krylov_tol,
            krylov_max,
            mu_weight: Weight::new(grid, mu),
            exp_nl,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.hamiltonian.grid()
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        self.nonlinearity
    }

    pub fn hamiltonian(&self) -> &TransformedHamiltonian {
        &self.hamiltonian
    }

    pub fn mass(&self, v: &Field) -> f64 {
        weighted_mass(self.hamiltonian.weight(), v)
    }

    pub fn energy(&self, v: &Field) -> Result<f64> {
        energy_with(&self.hamiltonian, &self.x, v, self.nonlinearity, self.kernel.as_ref())
    }

    pub fn trace_row(&self, t: f64, v: &Field) -> Result<TraceRow> {
        Ok(TraceRow {
            t,
            mass: self.mass(v),
            energy: self.energy(v)?,
            h1: sobolev_norm(v, 1.0),
            l2mu: weighted_l2_norm(v, &self.mu_weight)?,
        })
    }

    /// `(I + iτ(|k̃|² + ȳ))⁻¹`.
    fn precondition(&self, tau: f64, r: &Field) -> Field {
        let spec = r.spectrum();
        let coeffs: Vec<C64> = spec
            .iter()
            .zip(&self.lattice_k2)
            .map(|(c, k2)| c / C64::new(1.0, tau * (k2 + self.mean_potential)))
            .collect();
        let s = crate::lattice::Spectrum::new(*self.grid(), coeffs, false).expect("sizes match");
        Field::from_spectrum(&s)
    }

    /// One Crank–Nicolson step `(I + iτM⁻¹A)v⁺ = (I - iτM⁻¹A)v`, `τ = dt/2`.
    /// Negative `dt` runs the step backwards.
    pub fn linear_step(&self, v: &Field, dt: f64) -> Result<(Field, KrylovStats)> {
        self.grid().ensure_same(v.grid())?;
        let tau = 0.5 * dt;
        let i_tau = C64::new(0.0, tau);
        let hv = self.hamiltonian.apply_conjugated(v)?;
        let rhs = v.zip_with(&hv, |a, b| a - i_tau * b);
        let op = |x: &Field| -> Result<Field> {
            let hx = self.hamiltonian.apply_conjugated(x)?;
            Ok(x.zip_with(&hx, |a, b| a + i_tau * b))
        };
        let x0 = self.precondition(tau, &rhs);
        gmres(op, |r| self.precondition(tau, r), &rhs, x0, self.krylov_tol, self.krylov_max)
    }

    /// Exact flow of `i∂_t v = N(v) v` over `dt`; preserves `|v|` pointwise.
    pub fn nonlinear_phase(&self, v: &Field, dt: f64) -> Result<Field> {
        match self.nonlinearity {
            Nonlinearity::None => Ok(v.clone()),
            Nonlinearity::Nls { m, focusing } => {
                let sign = if focusing { -1.0 } else { 1.0 };
                let w = self.exp_nl.as_ref().expect("NLS weight");
                Ok(v.zip_with(w, |z, w| {
                    let p = sign * w.re * z.norm().powf(m - 1.0);
                    z * C64::from_polar(1.0, -dt * p)
                }))
            }
            Nonlinearity::Hartree { .. } => {
                let rho = density(self.hamiltonian.weight(), v);
                let pot = self.kernel.as_ref().expect("Hartree kernel").apply(&rho)?;
                Ok(v.zip_with(&pot, |z, p| z * C64::from_polar(1.0, -dt * p.re)))
            }
        }
    }

    /// `N(v) v`, the right-hand side of the nonlinear substep.
    pub fn nonlinear_term(&self, v: &Field) -> Result<Field> {
        match self.nonlinearity {
            Nonlinearity::None => Ok(Field::zeros(*self.grid()).into_complex()),
            Nonlinearity::Nls { m, focusing } => {
                let sign = if focusing { -1.0 } else { 1.0 };
                let w = self.exp_nl.as_ref().expect("NLS weight");
                Ok(v.zip_with(w, |z, w| z * (sign * w.re * z.norm().powf(m - 1.0))))
            }
            Nonlinearity::Hartree { .. } => {
                let rho = density(self.hamiltonian.weight(), v);
                let pot = self.kernel.as_ref().expect("Hartree kernel").apply(&rho)?;
                Ok(v.zip_with(&pot, |z, p| z * p.re))
            }
        }
    }

    /// Strang step: half nonlinear phase, full linear step, half phase.
    pub fn strang_step(&self, v: &Field, dt: f64) -> Result<Field> {
        let a = self.nonlinear_phase(v, 0.5 * dt)?;
        let (b, _) = self.linear_step(&a, dt)?;
        self.nonlinear_phase(&b, 0.5 * dt)
    }

    /// The scheme's step: Crank–Nicolson alone when linear, else Strang.
    pub fn step(&self, v: &Field, dt: f64) -> Result<Field> {
        match self.nonlinearity {
            Nonlinearity::None => Ok(self.linear_step(v, dt)?.0),
            _ => self.strang_step(v, dt),
        }
    }

    /// Evolves `steps` steps of size `dt`, recording the trace every
    /// `record_every` steps; `keep` also returns every intermediate state
    /// (including the initial one).
    pub fn run(
        &self,
        v0: &Field,
        dt: f64,
        steps: usize,
        record_every: usize,
        keep: bool,
    ) -> Result<(EvolutionState, Vec<Field>)> {
        let mut state = EvolutionState::new(v0.clone());
        state.trace.push(self.trace_row(0.0, &state.v)?);
        let mut states = Vec::new();
        if keep {
            states.push(state.v.clone());
        }
        for k in 1..=steps {
            let next = self.step(&state.v, dt)?;
            let t = k as f64 * dt;
            if !next.is_finite() {
                return Err(Error::NonFinite { t });
            }
            state.v = next;
            state.t = t;
            if keep {
                states.push(state.v.clone());
            }
            if k % record_every == 0 || k == steps {
                state.trace.push(self.trace_row(t, &state.v)?);
            }
        }
        Ok((state, states))
    }

    /// `S_t v` by `steps` Crank–Nicolson steps of size `dt`, ignoring the
    /// nonlinearity.
    pub fn linear_propagate(&self, v: &Field, dt: f64, steps: usize) -> Result<Field> {
        let mut out = v.clone().into_complex();
        for _ in 0..steps {
            out = self.linear_step(&out, dt)?.0;
        }
        Ok(out)
    }
}

/// One Crank–Nicolson step of the linear transformed equation.
pub fn linear_step(e: &Enhancement, state: &EvolutionState, dt: f64, krylov_tol: f64) -> Result<EvolutionState> {
    let p = Propagator::with_parts(e, Nonlinearity::None, krylov_tol, super::DEFAULT_KRYLOV_MAX, 0.25)?;
    advance(&p, state, dt, |v| Ok(p.linear_step(v, dt)?.0))
}

/// One Strang step of the nonlinear transformed equation.
pub fn nonlinear_step(
    e: &Enhancement,
    state: &EvolutionState,
    dt: f64,
    nonlinearity: Nonlinearity,
) -> Result<EvolutionState> {
    let p = Propagator::with_parts(e, nonlinearity, super::DEFAULT_KRYLOV_TOL, super::DEFAULT_KRYLOV_MAX, 0.25)?;
    advance(&p, state, dt, |v| p.strang_step(v, dt))
}

fn advance(
    p: &Propagator,
    state: &EvolutionState,
    dt: f64,
    f: impl Fn(&Field) -> Result<Field>,
) -> Result<EvolutionState> {
    let v = f(&state.v)?;
    let t = state.t + dt;
    if !v.is_finite() {
        return Err(Error::NonFinite { t });
    }
    let mut trace = state.trace.clone();
    if trace.rows.is_empty() {
        trace.push(p.trace_row(state.t, &state.v)?);
    }
    if t > state.t {
        trace.push(p.trace_row(t, &v)?);
    }
    Ok(EvolutionState { t, v, trace })
}

/// `S_t v₀` on `[0, t_end]` with the trace recorded every step.
pub fn linear_flow(e: &Enhancement, v0: &Field, t_end: f64, dt: f64) -> Result<EvolutionState> {
    let cfg = EvolutionConfig {
        dt,
        t_end,
        ..Default::default()
    };
    let p = Propagator::new(e, &cfg)?;
    Ok(p.run(v0, dt, cfg.steps(), 1, false)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::random_probe;
    use crate::lpcalc::LocalizationConfig;
    use crate::noise::{build_enhancement, sample_white_noise, Mollifier};

    fn noisy(grid: Grid, seed: u64) -> Enhancement {
        let m = Mollifier::new(grid.spacing()).unwrap();
        build_enhancement(&sample_white_noise(grid, seed), &m, &LocalizationConfig::default_for(grid))
            .unwrap()
    }

    #[test]
    fn plane_wave_phase_is_cayley() {
        let grid = Grid::new(2, 32, 2.0 * std::f64::consts::PI).unwrap();
        let e = Enhancement::trivial(grid);
        let p = Propagator::with_parts(&e, Nonlinearity::None, 1e-12, 50, 0.25).unwrap();
        let v = Field::plane_wave(grid, [2, 1, 0]);
        let dt = 0.01;
        let (out, _) = p.linear_step(&v, dt).unwrap();
        let k2 = 5.0;
        let cayley = C64::new(1.0, -0.5 * dt * k2) / C64::new(1.0, 0.5 * dt * k2);
        assert!(out.rel_max_diff(&v.scale_complex(cayley)) < 1e-11);
        let exact = v.scale_complex(C64::from_polar(1.0, -k2 * dt));
        // Cayley phase error is (k²dt)³/12.
        assert!(out.rel_max_diff(&exact) < 2.0 * (k2 * dt).powi(3) / 12.0);
    }

    #[test]
    fn mass_and_reversibility() {
        let grid = Grid::new(2, 32, 6.0).unwrap();
        let e = noisy(grid, 1);
        let p = Propagator::with_parts(&e, Nonlinearity::None, 1e-10, 400, 0.25).unwrap();
        let v = random_probe(grid, 5, 2.0).into_complex();
        let (w, stats) = p.linear_step(&v, 0.01).unwrap();
        let drift = (p.mass(&w) - p.mass(&v)).abs() / p.mass(&v);
        assert!(drift < 1e-9, "{drift} after {} iterations", stats.iterations);
        let (back, _) = p.linear_step(&w, -0.01).unwrap();
        assert!(back.rel_l2_diff(&v) < 1e-9);
    }

    #[test]
    fn nonlinear_phase_keeps_modulus() {
        let grid = Grid::new(2, 32, 6.0).unwrap();
        let e = noisy(grid, 2);
        let p = Propagator::with_parts(&e, Nonlinearity::Nls { m: 3.0, focusing: false }, 1e-10, 400, 0.25)
            .unwrap();
        let v = random_probe(grid, 6, 1.0).scale(30.0).into_complex();
        let w = p.nonlinear_phase(&v, 0.3).unwrap();
        for (a, b) in v.values().iter().zip(w.values()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-14 * a.norm().max(1.0));
        }
    }

    #[test]
    fn cubic_with_m_one_is_a_global_phase_in_free_space() {
        // m = 1 makes N(v) = 1: the flow is e^{-it} times the linear flow.
        let grid = Grid::new(2, 32, 6.0).unwrap();
        let e = Enhancement::trivial(grid);
        let lin = Propagator::with_parts(&e, Nonlinearity::None, 1e-12, 100, 0.25).unwrap();
        let nl = Propagator::with_parts(&e, Nonlinearity::Nls { m: 1.0, focusing: false }, 1e-12, 100, 0.25)
            .unwrap();
        let v = random_probe(grid, 7, 2.0).into_complex();
        let a = nl.strang_step(&v, 0.02).unwrap();
        let b = lin.linear_step(&v, 0.02).unwrap().0.scale_complex(C64::from_polar(1.0, -0.02));
        assert!(a.rel_max_diff(&b) < 1e-10);
    }

    #[test]
    fn linear_flow_records_trace() {
        let grid = Grid::new(2, 32, 6.0).unwrap();
        let e = noisy(grid, 3);
        let v = random_probe(grid, 8, 2.0);
        let s = linear_flow(&e, &v, 0.1, 0.01).unwrap();
        assert_eq!(s.trace.rows.len(), 11);
        assert!(s.trace.mass_drift() < 1e-8);
        let single = linear_step(&e, &EvolutionState::new(v.clone()), 0.01, 1e-10).unwrap();
        assert_eq!(single.trace.rows.len(), 2);
    }
}
