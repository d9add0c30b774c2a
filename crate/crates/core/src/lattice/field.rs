use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_traits::Zero;
use rayon::prelude::*;

use super::{fft, Grid};
use crate::{Cx, Error, Result, Scalar};

/// Fields at or above this size use rayon for pointwise maps.
const PAR_POINTS: usize = 1 << 15;

/// Imaginary parts above this are flagged when a field claims to be real.
pub const REAL_TOLERANCE: f64 = 1e-12;

/// Complex lattice function with a lazily cached spectrum.
///
/// A field flagged `real` stores exact zeros in its imaginary parts. The
/// spectrum is computed on first use and shared by later spectral
/// operations; fields are never mutated after construction.
#[derive(Debug)]
pub struct Field<S: Scalar> {
    grid: Grid,
    values: Vec<Cx<S>>,
    real: bool,
    spectrum: OnceLock<Vec<Cx<S>>>,
}

impl<S: Scalar> Clone for Field<S> {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        Self {
            grid: self.grid,
            values: self.values.clone(),
            real: self.real,
            spectrum,
        }
    }
}

/// Discrete Fourier coefficients of a field, tagged with their grid.
#[derive(Clone, Debug)]
pub struct Spectrum<S: Scalar> {
    grid: Grid,
    coeffs: Vec<Cx<S>>,
    real: bool,
}

impl<S: Scalar> Spectrum<S> {
    /// Wraps raw coefficients; `real` asks the inverse to drop imaginary
    /// parts (the caller asserts Hermitian symmetry).
    pub fn new(grid: Grid, coeffs: Vec<Cx<S>>, real: bool) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid of {} points",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, coeffs, real })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Cx<S>] {
        &self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }
}

pub(crate) fn par_map_indexed<S, F>(len: usize, f: F) -> Vec<Cx<S>>
where
    S: Scalar,
    F: Fn(usize) -> Cx<S> + Sync + Send,
{
    if len >= PAR_POINTS {
        (0..len).into_par_iter().map(f).collect()
    } else {
        (0..len).map(f).collect()
    }
}

impl<S: Scalar> Field<S> {
    fn raw(grid: Grid, values: Vec<Cx<S>>, real: bool) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid,
            values,
            real,
            spectrum: OnceLock::new(),
        }
    }

    fn check_len(grid: &Grid, len: usize) -> Result<()> {
        if len == grid.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{len} values for a grid of {} points",
                grid.len()
            )))
        }
    }

    pub fn from_complex(grid: Grid, values: Vec<Cx<S>>) -> Result<Self> {
        Self::check_len(&grid, values.len())?;
        Ok(Self::raw(grid, values, false))
    }

    pub fn from_real(grid: Grid, values: Vec<S>) -> Result<Self> {
        Self::check_len(&grid, values.len())?;
        let values = values.into_iter().map(|x| Cx::new(x, S::zero())).collect();
        Ok(Self::raw(grid, values, true))
    }

    /// Complex values that are real up to [`REAL_TOLERANCE`] (relative to
    /// the largest modulus) are accepted as a real field.
    pub fn from_complex_checked_real(grid: Grid, values: Vec<Cx<S>>) -> Result<Self> {
        Self::check_len(&grid, values.len())?;
        let scale = values.iter().map(|z| z.norm()).fold(S::zero(), S::max);
        let worst = values.iter().map(|z| z.im.abs()).fold(S::zero(), S::max);
        if worst.as_f64() > REAL_TOLERANCE * scale.as_f64().max(1.0) {
            return Err(Error::param(
                "values",
                format!("imaginary residue {:e} exceeds real tolerance", worst.as_f64()),
            ));
        }
        Ok(Self::raw(grid, values, false).into_real())
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::raw(grid, vec![Cx::zero(); grid.len()], true)
    }

    pub fn constant(grid: Grid, c: S) -> Self {
        Self::raw(grid, vec![Cx::new(c, S::zero()); grid.len()], true)
    }

    /// Real field sampled from a function of the centered position.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync + Send,
    {
        let values = par_map_indexed(grid.len(), |i| Cx::new(S::of(f(grid.position(i))), S::zero()));
        Self::raw(grid, values, true)
    }

    pub fn from_fn_complex<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> Cx<f64> + Sync + Send,
    {
        let values = par_map_indexed(grid.len(), |i| {
            let z = f(grid.position(i));
            Cx::new(S::of(z.re), S::of(z.im))
        });
        Self::raw(grid, values, false)
    }

    /// Plane wave `exp(i k·x)` for the integer mode vector `m`.
    pub fn plane_wave(grid: Grid, m: [i64; 3]) -> Self {
        let dk = grid.dk();
        Self::from_fn_complex(grid, |x| {
            let phase = (m[0] as f64 * x[0] + m[1] as f64 * x[1] + m[2] as f64 * x[2]) * dk;
            Cx::from_polar(1.0, phase)
        })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Cx<S>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Cx<S>> {
        self.values
    }

    #[inline]
    pub fn is_real(&self) -> bool {
        self.real
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn real_parts(&self) -> Vec<S> {
        self.values.iter().map(|z| z.re).collect()
    }

    /// Drops imaginary parts and flags the field real.
    pub fn into_real(mut self) -> Self {
        if !self.real {
            self.values.iter_mut().for_each(|z| z.im = S::zero());
            self.real = true;
            self.spectrum = OnceLock::new();
        }
        self
    }

    /// Same values without the `real` flag.
    pub fn into_complex(mut self) -> Self {
        self.real = false;
        self
    }

    /// Unitary forward DFT, computed once and cached.
    pub fn spectrum(&self) -> &[Cx<S>] {
        self.spectrum.get_or_init(|| {
            let mut data = self.values.clone();
            fft::transform(&self.grid, &mut data, false);
            data
        })
    }

    pub fn to_spectrum(&self) -> Spectrum<S> {
        Spectrum {
            grid: self.grid,
            coeffs: self.spectrum().to_vec(),
            real: self.real,
        }
    }

    pub fn from_spectrum(spec: &Spectrum<S>) -> Self {
        Self::from_coeffs(spec.grid, spec.coeffs.clone(), spec.real)
    }

    /// Inverse transform onto `grid`; errors when the coefficient array was
    /// built for another grid.
    pub fn from_spectrum_on(grid: &Grid, spec: &Spectrum<S>) -> Result<Self> {
        grid.ensure_same(&spec.grid)?;
        Ok(Self::from_spectrum(spec))
    }

    /// Inverse transform of raw coefficients. The coefficients become the
    /// cached spectrum of the result.
    pub(crate) fn from_coeffs(grid: Grid, coeffs: Vec<Cx<S>>, real: bool) -> Self {
        let mut values = coeffs.clone();
        fft::transform(&grid, &mut values, true);
        if real {
            values.iter_mut().for_each(|z| z.im = S::zero());
        }
        let spectrum = OnceLock::new();
        let _ = spectrum.set(coeffs);
        Self {
            grid,
            values,
            real,
            spectrum,
        }
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(Cx<S>) -> Cx<S> + Sync + Send,
    {
        let values = par_map_indexed(self.len(), |i| f(self.values[i]));
        Self::raw(self.grid, values, false)
    }

    /// Pointwise map of a real field; the result stays real.
    pub fn map_real<F>(&self, f: F) -> Self
    where
        F: Fn(S) -> S + Sync + Send,
    {
        let values = par_map_indexed(self.len(), |i| Cx::new(f(self.values[i].re), S::zero()));
        Self::raw(self.grid, values, true)
    }

    pub fn zip_with<F>(&self, other: &Self, f: F) -> Self
    where
        F: Fn(Cx<S>, Cx<S>) -> Cx<S> + Sync + Send,
    {
        assert_eq!(self.grid, other.grid, "pointwise op on different grids");
        let values = par_map_indexed(self.len(), |i| f(self.values[i], other.values[i]));
        Self::raw(self.grid, values, false)
    }

    fn zip_keep_real<F>(&self, other: &Self, f: F) -> Self
    where
        F: Fn(Cx<S>, Cx<S>) -> Cx<S> + Sync + Send,
    {
        let real = self.real && other.real;
        let out = self.zip_with(other, f);
        if real {
            out.into_real()
        } else {
            out
        }
    }

    pub fn scale(&self, c: S) -> Self {
        let mut out = self.map(|z| z * c);
        out.real = self.real;
        out
    }

    pub fn scale_complex(&self, c: Cx<S>) -> Self {
        self.map(|z| z * c)
    }

    pub fn add_constant(&self, c: S) -> Self {
        let mut out = self.map(|z| z + c);
        out.real = self.real;
        out
    }

    pub fn conj(&self) -> Self {
        let mut out = self.map(|z| z.conj());
        out.real = self.real;
        out
    }

    /// `|f|²` as a real field.
    pub fn abs_sq(&self) -> Self {
        self.map(|z| Cx::new(z.norm_sqr(), S::zero())).into_real()
    }

    /// `exp(c·f)` for a real field.
    pub fn exp_scaled(&self, c: S) -> Self {
        self.map_real(|x| (c * x).exp())
    }

    /// Discrete inner product `h^d Σ conj(f) g`.
    pub fn inner(&self, other: &Self) -> Cx<S> {
        assert_eq!(self.grid, other.grid, "inner product on different grids");
        let acc: Cx<S> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .fold(Cx::zero(), |s, z| s + z);
        acc * S::of(self.grid.cell_volume())
    }

    /// Rectangle-rule integral `h^d Σ f`.
    pub fn integral(&self) -> Cx<S> {
        let acc = self.values.iter().fold(Cx::zero(), |s, z| s + z);
        acc * S::of(self.grid.cell_volume())
    }

    /// Spatial average `n^{-d} Σ f`.
    pub fn mean(&self) -> Cx<S> {
        let acc = self.values.iter().fold(Cx::zero(), |s, z| s + z);
        acc / S::of(self.len() as f64)
    }

    /// `(h^d Σ|f|²)^{1/2}`.
    pub fn l2_norm(&self) -> S {
        let sum: S = self.values.iter().map(|z| z.norm_sqr()).sum();
        (sum * S::of(self.grid.cell_volume())).sqrt()
    }

    /// L² norm computed from the spectrum (Parseval).
    pub fn spectral_l2_norm(&self) -> S {
        let sum: S = self.spectrum().iter().map(|z| z.norm_sqr()).sum();
        (sum * S::of(self.grid.cell_volume())).sqrt()
    }

    pub fn max_abs(&self) -> S {
        self.values.iter().map(|z| z.norm()).fold(S::zero(), S::max)
    }

    pub fn max_imag(&self) -> S {
        self.values.iter().map(|z| z.im.abs()).fold(S::zero(), S::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest pointwise difference, relative to the larger of the two
    /// maxima.
    pub fn rel_max_diff(&self, other: &Self) -> f64 {
        let diff = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(S::zero(), S::max)
            .as_f64();
        let scale = self.max_abs().max(other.max_abs()).as_f64();
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }

    /// `‖f - g‖_{L²} / ‖g‖_{L²}` (absolute when `g = 0`).
    pub fn rel_l2_diff(&self, reference: &Self) -> f64 {
        let diff = (self - reference).l2_norm().as_f64();
        let scale = reference.l2_norm().as_f64();
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }

    /// Converts to another scalar precision.
    pub fn cast<T: Scalar>(&self) -> Field<T> {
        let values = self
            .values
            .iter()
            .map(|z| Cx::new(T::of(z.re.as_f64()), T::of(z.im.as_f64())))
            .collect();
        Field::raw(self.grid, values, self.real)
    }
}

/// Sum of real fields `Σ c_i f_i` accumulated in one pass.
pub fn linear_combination<S: Scalar>(terms: &[(S, &Field<S>)]) -> Field<S> {
    let first = terms.first().expect("at least one term").1;
    let grid = *first.grid();
    for (_, f) in terms {
        assert_eq!(grid, *f.grid(), "linear combination on different grids");
    }
    let real = terms.iter().all(|(_, f)| f.is_real());
    let values = par_map_indexed(grid.len(), |i| {
        terms
            .iter()
            .fold(Cx::zero(), |acc, (c, f)| acc + f.values[i] * *c)
    });
    let out = Field::raw(grid, values, false);
    if real {
        out.into_real()
    } else {
        out
    }
}

impl<S: Scalar> Add for &Field<S> {
    type Output = Field<S>;
    fn add(self, rhs: Self) -> Field<S> {
        self.zip_keep_real(rhs, |a, b| a + b)
    }
}

impl<S: Scalar> Sub for &Field<S> {
    type Output = Field<S>;
    fn sub(self, rhs: Self) -> Field<S> {
        self.zip_keep_real(rhs, |a, b| a - b)
    }
}

impl<S: Scalar> Mul for &Field<S> {
    type Output = Field<S>;
    fn mul(self, rhs: Self) -> Field<S> {
        self.zip_keep_real(rhs, |a, b| a * b)
    }
}

impl<S: Scalar> Neg for &Field<S> {
    type Output = Field<S>;
    fn neg(self) -> Field<S> {
        self.scale(-S::one())
    }
}

impl<S: Scalar> Add for Field<S> {
    type Output = Field<S>;
    fn add(self, rhs: Self) -> Field<S> {
        &self + &rhs
    }
}

impl<S: Scalar> Sub for Field<S> {
    type Output = Field<S>;
    fn sub(self, rhs: Self) -> Field<S> {
        &self - &rhs
    }
}

impl<S: Scalar> Mul for Field<S> {
    type Output = Field<S>;
    fn mul(self, rhs: Self) -> Field<S> {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid, seed: u64) -> Field<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len())
            .map(|_| Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Field::from_complex(grid, values).unwrap()
    }

    #[test]
    fn spectrum_roundtrip() {
        let grid = Grid::new(2, 32, 5.0).unwrap();
        let f = random_field(grid, 3);
        let back = Field::from_spectrum(&f.to_spectrum());
        assert!(back.rel_max_diff(&f) < 1e-12);
    }

    #[test]
    fn constant_spectrum_sits_at_zero_mode() {
        let grid = Grid::new(2, 16, 3.0).unwrap();
        let f = Field::<f64>::constant(grid, 2.5);
        let spec = f.spectrum();
        assert!((spec[0].re - 2.5 * 16.0).abs() < 1e-12);
        assert!(spec[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn plane_wave_has_single_coefficient() {
        let grid = Grid::new(3, 8, 2.0).unwrap();
        let f = Field::<f64>::plane_wave(grid, [1, -2, 3]);
        let spec = f.spectrum();
        let big: Vec<usize> = (0..grid.len()).filter(|&i| spec[i].norm() > 1e-10).collect();
        assert_eq!(big.len(), 1);
        assert_eq!(grid.modes(big[0]), [1, -2, 3]);
    }

    #[test]
    fn mismatched_spectrum_is_rejected() {
        let g1 = Grid::new(1, 16, 1.0).unwrap();
        let g2 = Grid::new(1, 32, 1.0).unwrap();
        let spec = Field::<f64>::zeros(g1).to_spectrum();
        assert!(matches!(Field::from_spectrum_on(&g2, &spec), Err(Error::GridMismatch(_))));
        assert!(Spectrum::<f64>::new(g2, vec![Cx::zero(); 16], false).is_err());
    }

    #[test]
    fn parseval() {
        let grid = Grid::new(3, 16, 7.0).unwrap();
        let f = random_field(grid, 11);
        let a = f.l2_norm();
        let b = f.spectral_l2_norm();
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn single_precision_roundtrip() {
        let grid = Grid::new(2, 16, 1.0).unwrap();
        let f: Field<f32> = random_field(grid, 5).cast();
        let back = Field::from_spectrum(&f.to_spectrum());
        assert!(back.rel_max_diff(&f) < 1e-5);
    }
}
