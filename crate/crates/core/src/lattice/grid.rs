use std::f64::consts::PI;

use crate::{Error, Result};

/// Upper bound on `n^d`; keeps a single complex field under 256 MiB.
pub const MAX_POINTS: usize = 1 << 24;

/// Periodic lattice on the box `[-L/2, L/2)^d`.
///
/// Points are stored row-major with the last axis contiguous. Point `i`
/// along an axis sits at `x = -L/2 + i h`, so index `n/2` is the box
/// center. Fourier index `i` carries the signed mode `m` in
/// `{-n/2, ..., n/2 - 1}` and the wavenumber `k = 2π m / L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    box_length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, box_length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box length must be positive, got {box_length}"
            )));
        }
        match n.checked_pow(dim as u32) {
            Some(total) if total <= MAX_POINTS => {}
            _ => {
                return Err(Error::InvalidGrid(format!(
                    "{n}^{dim} points exceed the budget of {MAX_POINTS}"
                )))
            }
        }
        Ok(Self { dim, n, box_length })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Total number of lattice points `n^d`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^d`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Box volume `L^d`.
    #[inline]
    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dim as i32)
    }

    /// Fundamental wavenumber `2π / L`.
    #[inline]
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Stride of `axis` in the flat row-major layout.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Per-axis integer coordinates of a flat index (unused axes are 0).
    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let mut c = [0usize; 3];
        let mut rest = idx;
        for axis in (0..self.dim).rev() {
            c[axis] = rest % self.n;
            rest /= self.n;
        }
        c
    }

    #[inline]
    pub fn index(&self, coords: [usize; 3]) -> usize {
        (0..self.dim).fold(0, |acc, axis| acc * self.n + coords[axis])
    }

    /// Signed Fourier mode of FFT index `i` along one axis.
    #[inline]
    pub fn signed_mode(&self, i: usize) -> i64 {
        let half = self.n / 2;
        if i < half {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// `true` for the unpaired mode `-n/2` along one axis.
    #[inline]
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    #[inline]
    pub fn modes(&self, idx: usize) -> [i64; 3] {
        let c = self.coords(idx);
        let mut m = [0i64; 3];
        for axis in 0..self.dim {
            m[axis] = self.signed_mode(c[axis]);
        }
        m
    }

    /// Euclidean norm of the integer mode vector; the Littlewood–Paley
    /// variable.
    #[inline]
    pub fn mode_norm(&self, idx: usize) -> f64 {
        let m = self.modes(idx);
        ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64).sqrt()
    }

    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let m = self.modes(idx);
        let dk = self.dk();
        [m[0] as f64 * dk, m[1] as f64 * dk, m[2] as f64 * dk]
    }

    #[inline]
    pub fn k_squared(&self, idx: usize) -> f64 {
        let k = self.wavevector(idx);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// Wavevector of the spectral derivative: the Nyquist component of each
    /// axis is zeroed so derivatives of real fields stay real.
    #[inline]
    pub fn derivative_wavevector(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut k = self.wavevector(idx);
        for axis in 0..self.dim {
            if self.is_nyquist(c[axis]) {
                k[axis] = 0.0;
            }
        }
        k
    }

    /// Flat index of the mode `-m` for the mode stored at `idx`.
    #[inline]
    pub fn negated_index(&self, idx: usize) -> usize {
        let c = self.coords(idx);
        let mut neg = [0usize; 3];
        for axis in 0..self.dim {
            neg[axis] = (self.n - c[axis]) % self.n;
        }
        self.index(neg)
    }

    /// Position of a lattice point measured from the box center.
    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = -0.5 * self.box_length + c[axis] as f64 * h;
        }
        x
    }

    #[inline]
    pub fn radius(&self, idx: usize) -> f64 {
        let x = self.position(idx);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    /// Index of the box center `x = 0`.
    pub fn center_index(&self) -> usize {
        self.index([self.n / 2; 3])
    }

    /// Axis wavenumbers `(2π/L)·{-n/2, ..., n/2-1}` in increasing order.
    pub fn axis_frequencies(&self) -> Vec<f64> {
        let half = (self.n / 2) as i64;
        (-half..half).map(|m| m as f64 * self.dk()).collect()
    }

    /// Highest Littlewood–Paley index `log2(n/2) - 1`.
    pub fn jmax(&self) -> usize {
        self.n.trailing_zeros() as usize - 2
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Builds a [`Grid`]; `n` must be a power of two `>= 8` and `d` in `1..=3`.
pub fn make_grid(dim: usize, n: usize, box_length: f64) -> Result<Grid> {
    Grid::new(dim, n, box_length)
}
