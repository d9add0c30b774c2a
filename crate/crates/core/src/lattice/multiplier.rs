use num_traits::Zero;

use super::field::par_map_indexed;
use super::{Field, Grid};
use crate::{Cx, Error, Result, Scalar};

/// Fourier multiplier: a complex factor per lattice frequency.
///
/// Symbols satisfying `s(-m) = conj(s(m))` map real fields to real fields;
/// this is detected at construction and stored in `preserves_real`.
#[derive(Clone, Debug)]
pub struct SpectralMultiplier<S: Scalar> {
    grid: Grid,
    symbol: Vec<Cx<S>>,
    label: String,
    preserves_real: bool,
}

impl<S: Scalar> SpectralMultiplier<S> {
    /// Builds a multiplier from `f(k, m)` where `k` is the physical
    /// wavevector and `m` the integer mode.
    pub fn from_fn<F>(grid: Grid, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn([f64; 3], [i64; 3]) -> Cx<f64> + Sync + Send,
    {
        let symbol = par_map_indexed(grid.len(), |i| {
            let z = f(grid.wavevector(i), grid.modes(i));
            Cx::new(S::of(z.re), S::of(z.im))
        });
        Self::from_symbol(grid, label, symbol)
    }

    /// Real symbol depending only on the index; used for radial cutoffs.
    pub fn from_real_fn<F>(grid: Grid, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let symbol = par_map_indexed(grid.len(), |i| Cx::new(S::of(f(i)), S::zero()));
        Self::from_symbol(grid, label, symbol)
    }

    pub fn from_symbol(grid: Grid, label: impl Into<String>, symbol: Vec<Cx<S>>) -> Result<Self> {
        let label = label.into();
        if symbol.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "symbol `{label}` has {} entries for {} points",
                symbol.len(),
                grid.len()
            )));
        }
        if let Some(i) = symbol.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::param(
                "symbol",
                format!("`{label}` is not finite at mode {:?}", grid.modes(i)),
            ));
        }
        let preserves_real = (0..grid.len()).all(|i| {
            let a = symbol[i];
            let b = symbol[grid.negated_index(i)].conj();
            let scale = a.norm().max(S::one());
            (a - b).norm() <= S::of(1e-14) * scale
        });
        Ok(Self {
            grid,
            symbol,
            label,
            preserves_real,
        })
    }

    pub fn identity(grid: Grid) -> Self {
        Self::from_symbol(grid, "identity", vec![Cx::new(S::one(), S::zero()); grid.len()])
            .expect("finite symbol")
    }

    /// `(1 - Δ)^{-1}`, symbol `1 / (1 + |k|²)`.
    pub fn resolvent(grid: Grid) -> Self {
        Self::from_real_fn(grid, "(1-Δ)^-1", |i| 1.0 / (1.0 + grid.k_squared(i)))
            .expect("finite symbol")
    }

    /// `Δ`, symbol `-|k|²`.
    pub fn laplacian(grid: Grid) -> Self {
        Self::from_real_fn(grid, "Δ", |i| -grid.k_squared(i)).expect("finite symbol")
    }

    /// `∂_axis`, symbol `i k_axis` with the Nyquist component zeroed.
    pub fn derivative(grid: Grid, axis: usize) -> Self {
        assert!(axis < grid.dim(), "axis {axis} out of range");
        let symbol = par_map_indexed(grid.len(), |i| {
            Cx::new(S::zero(), S::of(grid.derivative_wavevector(i)[axis]))
        });
        Self::from_symbol(grid, format!("∂{axis}"), symbol).expect("finite symbol")
    }

    /// Bessel potential `⟨k⟩^s = (1 + |k|²)^{s/2}`.
    pub fn bessel(grid: Grid, s: f64) -> Self {
        Self::from_real_fn(grid, format!("<k>^{s}"), |i| (1.0 + grid.k_squared(i)).powf(0.5 * s))
            .expect("finite symbol")
    }

    /// Free Schrödinger group `e^{itΔ}`, symbol `exp(-i|k|² t)`.
    pub fn schrodinger(grid: Grid, t: f64) -> Self {
        Self::from_fn(grid, format!("exp(i{t}Δ)"), |k, _| {
            Cx::from_polar(1.0, -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * t)
        })
        .expect("finite symbol")
    }

    /// Gaussian smoothing `exp(-ε²|k|²/2)`.
    pub fn gaussian(grid: Grid, eps: f64) -> Self {
        Self::from_real_fn(grid, format!("gauss({eps})"), |i| {
            (-0.5 * eps * eps * grid.k_squared(i)).exp()
        })
        .expect("finite symbol")
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn symbol(&self) -> &[Cx<S>] {
        &self.symbol
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn preserves_real(&self) -> bool {
        self.preserves_real
    }

    /// Product of symbols, i.e. the composition of the two operators.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let symbol = self
            .symbol
            .iter()
            .zip(&other.symbol)
            .map(|(a, b)| a * b)
            .collect();
        Self::from_symbol(self.grid, format!("{}∘{}", self.label, other.label), symbol)
    }

    pub fn apply(&self, f: &Field<S>) -> Result<Field<S>> {
        self.grid.ensure_same(f.grid())?;
        Ok(self.apply_unchecked(f))
    }

    pub(crate) fn apply_unchecked(&self, f: &Field<S>) -> Field<S> {
        let spec = f.spectrum();
        let coeffs = par_map_indexed(spec.len(), |i| spec[i] * self.symbol[i]);
        Field::from_coeffs(self.grid, coeffs, f.is_real() && self.preserves_real)
    }
}

/// Applies `m` to `f`; errors on grid mismatch.
pub fn apply_multiplier<S: Scalar>(m: &SpectralMultiplier<S>, f: &Field<S>) -> Result<Field<S>> {
    m.apply(f)
}

/// Spectral gradient of `f`, one component per axis.
pub fn gradient<S: Scalar>(f: &Field<S>) -> Vec<Field<S>> {
    let grid = *f.grid();
    (0..grid.dim())
        .map(|axis| {
            let spec = f.spectrum();
            let coeffs = par_map_indexed(spec.len(), |i| {
                spec[i] * Cx::new(S::zero(), S::of(grid.derivative_wavevector(i)[axis]))
            });
            Field::from_coeffs(grid, coeffs, f.is_real())
        })
        .collect()
}

/// Adjoint-divergence `Σ_a ∂_a g_a` with the same Nyquist convention as
/// [`gradient`], so `-divergence ∘ gradient` is the discrete adjoint pair.
pub fn divergence<S: Scalar>(g: &[Field<S>]) -> Field<S> {
    let grid = *g[0].grid();
    let real = g.iter().all(|f| f.is_real());
    let mut coeffs = vec![Cx::<S>::zero(); grid.len()];
    for (axis, f) in g.iter().enumerate() {
        let spec = f.spectrum();
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c = *c + spec[i] * Cx::new(S::zero(), S::of(grid.derivative_wavevector(i)[axis]));
        }
    }
    Field::from_coeffs(grid, coeffs, real)
}

/// `Σ_a f_a g_a` for two vector fields.
pub fn dot<S: Scalar>(f: &[Field<S>], g: &[Field<S>]) -> Field<S> {
    let mut acc = &f[0] * &g[0];
    for (a, b) in f.iter().zip(g).skip(1) {
        acc = &acc + &(a * b);
    }
    acc
}
