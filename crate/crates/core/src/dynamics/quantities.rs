use super::Nonlinearity;
use crate::gamma::TransformedHamiltonian;
use crate::noise::Enhancement;
use crate::{Error, Field, Grid, Multiplier, Result};

/// Bessel kernel `V̂_β = (1 + |k|²)^{-(3+β)/2}`: nonnegative, symmetric and in
/// `W^{β,1}`.
pub fn hartree_kernel(grid: Grid, beta: f64) -> Result<Multiplier> {
    if grid.dim() != 3 {
        return Err(Error::param("dim", "the Hartree kernel is defined in d = 3"));
    }
    if !(beta > 0.0) {
        return Err(Error::param("beta", "β must be positive"));
    }
    // Multiplying Fourier coefficients by V̂(k) is the continuum convolution
    // with the periodized kernel, whatever the transform normalization.
    Ok(Multiplier::bessel(grid, -(3.0 + beta)))
}

/// `∫ |v|² e^{2X}`, conserved by the linear flow.
pub fn modified_mass(e: &Enhancement, v: &Field) -> Result<f64> {
    e.grid().ensure_same(v.grid())?;
    Ok(weighted_mass(&e.x.exp_scaled(2.0), v))
}

/// `∫ |v|²`.
pub fn unweighted_mass(v: &Field) -> f64 {
    v.l2_norm().powi(2)
}

pub(crate) fn weighted_mass(weight: &Field, v: &Field) -> f64 {
    weight
        .values()
        .iter()
        .zip(v.values())
        .map(|(w, z)| w.re * z.norm_sqr())
        .sum::<f64>()
        * v.grid().cell_volume()
}

/// `½⟨Av, v⟩ + F(v)` where `F = ±(1/(m+1))∫ e^{(m+1)X}|v|^{m+1}` (NLS) or
/// `¼∫ ρ (V_β ∗ ρ)`, `ρ = e^{2X}|v|²` (Hartree). The `Y` term is a lattice
/// quadrature of a rough pairing and is only as accurate as `Y_ε` is
/// resolved.
pub fn modified_energy(e: &Enhancement, v: &Field, nl: Nonlinearity) -> Result<f64> {
    e.grid().ensure_same(v.grid())?;
    let h = TransformedHamiltonian::new(e);
    let kernel = match nl {
        Nonlinearity::Hartree { beta } => Some(hartree_kernel(*e.grid(), beta)?),
        _ => None,
    };
    energy_with(&h, &e.x, v, nl, kernel.as_ref())
}

pub(crate) fn energy_with(
    h: &TransformedHamiltonian,
    x: &Field,
    v: &Field,
    nl: Nonlinearity,
    kernel: Option<&Multiplier>,
) -> Result<f64> {
    let quad = 0.5 * h.quadratic_form(v)?;
    let cell = v.grid().cell_volume();
    let pot = match nl {
        Nonlinearity::None => 0.0,
        Nonlinearity::Nls { m, focusing } => {
            let s: f64 = x
                .values()
                .iter()
                .zip(v.values())
                .map(|(x, z)| ((m + 1.0) * x.re).exp() * z.norm().powf(m + 1.0))
                .sum();
            let sign = if focusing { -1.0 } else { 1.0 };
            sign * s * cell / (m + 1.0)
        }
        Nonlinearity::Hartree { .. } => {
            let rho = density(h.weight(), v);
            let conv = kernel.expect("kernel for Hartree").apply(&rho)?;
            0.25 * rho.inner(&conv).re
        }
    };
    Ok(quad + pot)
}

/// `ρ = e^{2X}|v|² = |u|²`.
pub(crate) fn density(weight: &Field, v: &Field) -> Field {
    weight * &v.abs_sq()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::random_probe;
    use crate::lattice::gradient;
    use crate::C64;

    #[test]
    fn trivial_mass_and_energy() {
        let grid = Grid::new(2, 32, 6.0).unwrap();
        let e = Enhancement::trivial(grid);
        let v = random_probe(grid, 1, 2.0).scale_complex(C64::new(0.6, 0.8));
        assert!((modified_mass(&e, &v).unwrap() - unweighted_mass(&v)).abs() < 1e-14);
        let scaled = v.scale(3.0);
        assert!((modified_mass(&e, &scaled).unwrap() - 9.0 * modified_mass(&e, &v).unwrap()).abs() < 1e-12);
        assert_eq!(modified_energy(&e, &Field::zeros(grid), Nonlinearity::Nls { m: 3.0, focusing: false }).unwrap(), 0.0);
        let energy = modified_energy(&e, &v, Nonlinearity::Nls { m: 3.0, focusing: false }).unwrap();
        let grad: f64 = gradient(&v).iter().map(|g| g.l2_norm().powi(2)).sum();
        let quartic: f64 = v.values().iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * grid.cell_volume();
        assert!((energy - (0.5 * grad + 0.25 * quartic)).abs() < 1e-12 * energy);
    }

    #[test]
    fn kernel_is_nonnegative() {
        let grid = Grid::new(3, 16, 8.0).unwrap();
        let k = hartree_kernel(grid, 0.75).unwrap();
        assert!(k.symbol().iter().all(|z| z.re > 0.0 && z.im == 0.0));
        let rho = random_probe(grid, 2, 1.0).abs_sq();
        let conv = k.apply(&rho).unwrap();
        assert!(conv.values().iter().all(|z| z.re >= -1e-12));
        assert!(hartree_kernel(Grid::new(2, 16, 8.0).unwrap(), 0.75).is_err());
    }
}
