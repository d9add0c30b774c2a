use crate::lattice::{divergence, gradient, Grid};
use crate::noise::Enhancement;
use crate::{Field, Result};

/// `A v = -∇·(e^{2X} ∇v) + e^{2X} Y v`, the Hamiltonian of the
/// exponential transform `u = e^X v`, with its pointwise weights cached.
///
/// `∇` is the spectral gradient and `∇·` its negative adjoint, so `A` is
/// symmetric for the plain lattice inner product and `M⁻¹A` (with
/// `M = e^{2X}`) is symmetric for the `M`-weighted one.
#[derive(Clone, Debug)]
pub struct TransformedHamiltonian {
    weight: Field,
    potential: Field,
}

impl TransformedHamiltonian {
    pub fn new(e: &Enhancement) -> Self {
        let weight = e.x.exp_scaled(2.0);
        let potential = &weight * &e.y;
        Self { weight, potential }
    }

    pub fn grid(&self) -> &Grid {
        self.weight.grid()
    }

    /// `M = e^{2X}`.
    pub fn weight(&self) -> &Field {
        &self.weight
    }

    /// `e^{2X} Y`.
    pub fn weighted_potential(&self) -> &Field {
        &self.potential
    }

    pub fn apply(&self, v: &Field) -> Result<Field> {
        self.grid().ensure_same(v.grid())?;
        let flux: Vec<Field> = gradient(v).iter().map(|g| &self.weight * g).collect();
        Ok(&(&self.potential * v) - &divergence(&flux))
    }

    /// `M⁻¹ A v = e^{-X} 𝓗 e^{X} v`.
    pub fn apply_conjugated(&self, v: &Field) -> Result<Field> {
        let av = self.apply(v)?;
        Ok(av.zip_with(&self.weight, |a, w| a / w.re))
    }

    /// `⟨A v, v⟩ = ∫ e^{2X} |∇v|² + ∫ e^{2X} Y |v|²`, assembled pointwise.
    pub fn quadratic_form(&self, v: &Field) -> Result<f64> {
        self.grid().ensure_same(v.grid())?;
        let grad: f64 = gradient(v)
            .iter()
            .map(|g| (&self.weight * &g.abs_sq()).integral().re)
            .sum();
        Ok(grad + (&self.potential * &v.abs_sq()).integral().re)
    }
}

/// One-shot form of [`TransformedHamiltonian::apply`].
pub fn apply_transformed_hamiltonian(e: &Enhancement, v: &Field) -> Result<Field> {
    TransformedHamiltonian::new(e).apply(v)
}
