use super::{Nonlinearity, Propagator, DEFAULT_KRYLOV_MAX};
use crate::noise::Enhancement;
use crate::{Error, Field, Result, C64};

/// Minimum stored states for [`mild_residual`].
pub const MIN_MILD_STATES: usize = 8;

/// `max_k ‖v_k - S_{t_k}v₀ + i∫₀^{t_k} S_{t_k-s} N(v_s)v_s ds‖ / ‖v₀‖` over a
/// trajectory stored at uniform `dt`. The Duhamel integral is the
/// trapezoid rule, carried by the recurrence
/// `W_{k+1} = S_dt(W_k + dt/2·N_k) + dt/2·N_{k+1}` so that every stored
/// state is propagated by the same Crank–Nicolson `S_dt`.
pub fn mild_residual(
    e: &Enhancement,
    trajectory: &[Field],
    dt: f64,
    nonlinearity: Nonlinearity,
    krylov_tol: f64,
) -> Result<f64> {
    if trajectory.len() < MIN_MILD_STATES {
        return Err(Error::TooFewLevels {
            needed: MIN_MILD_STATES,
            found: trajectory.len(),
        });
    }
    let p = Propagator::with_parts(e, nonlinearity, krylov_tol, DEFAULT_KRYLOV_MAX, 0.25)?;
    let v0 = &trajectory[0];
    let scale = v0.l2_norm();
    let half = C64::new(0.5 * dt, 0.0);
    let mut free = v0.clone().into_complex();
    let mut n_prev = p.nonlinear_term(v0)?;
    let mut duhamel = Field::zeros(*v0.grid()).into_complex();
    let mut worst: f64 = 0.0;
    for v in &trajectory[1..] {
        free = p.linear_step(&free, dt)?.0;
        let n_next = p.nonlinear_term(v)?;
        let pushed = duhamel.zip_with(&n_prev, |w, n| w + half * n);
        duhamel = p.linear_step(&pushed, dt)?.0.zip_with(&n_next, |w, n| w + half * n);
        let rhs = free.zip_with(&duhamel, |f, w| f - C64::i() * w);
        worst = worst.max((v - &rhs).l2_norm() / scale);
        n_prev = n_next;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::random_probe;
    use crate::Grid;

    #[test]
    fn linear_trajectory_is_its_own_mild_solution() {
        let grid = Grid::new(2, 32, 6.0).unwrap();
        let e = Enhancement::trivial(grid);
        let p = Propagator::with_parts(&e, Nonlinearity::None, 1e-12, 100, 0.25).unwrap();
        let v = random_probe(grid, 1, 2.0);
        let (_, states) = p.run(&v, 0.01, 10, 1, true).unwrap();
        let r = mild_residual(&e, &states, 0.01, Nonlinearity::None, 1e-12).unwrap();
        assert!(r < 1e-10, "{r}");
        assert!(mild_residual(&e, &states[..4], 0.01, Nonlinearity::None, 1e-12).is_err());
    }
}
