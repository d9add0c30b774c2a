use super::{Field, Grid};
use crate::{Cx, Result, Scalar};

/// Spatial weight `⟨x⟩^μ = (1 + |x|²)^{μ/2}` with `x` from the box center.
#[derive(Clone, Debug)]
pub struct Weight<S: Scalar> {
    grid: Grid,
    exponent: f64,
    values: Vec<S>,
}

impl<S: Scalar> Weight<S> {
    pub fn new(grid: Grid, exponent: f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let r = grid.radius(i);
                S::of((1.0 + r * r).powf(0.5 * exponent))
            })
            .collect();
        Self {
            grid,
            exponent,
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }
}

/// `(h^d Σ ⟨x⟩^μ |f|²)^{1/2}`.
pub fn weighted_l2_norm<S: Scalar>(f: &Field<S>, w: &Weight<S>) -> Result<S> {
    weighted_lp_norm(f, w, 2.0)
}

/// `(h^d Σ ⟨x⟩^μ |f|^p)^{1/p}`; `p = ∞` gives `max ⟨x⟩^μ |f|`.
pub fn weighted_lp_norm<S: Scalar>(f: &Field<S>, w: &Weight<S>, p: f64) -> Result<S> {
    f.grid().ensure_same(&w.grid)?;
    Ok(lp_norm_with(f.values(), &w.values, p, f.grid().cell_volume()))
}

pub(crate) fn lp_norm_with<S: Scalar>(values: &[Cx<S>], weight: &[S], p: f64, cell: f64) -> S {
    if p.is_infinite() {
        return values
            .iter()
            .zip(weight)
            .map(|(z, w)| z.norm() * *w)
            .fold(S::zero(), S::max);
    }
    let sum: S = if p == 2.0 {
        values.iter().zip(weight).map(|(z, w)| z.norm_sqr() * *w).sum()
    } else {
        let pp = S::of(p);
        values.iter().zip(weight).map(|(z, w)| z.norm().powf(pp) * *w).sum()
    };
    (sum * S::of(cell)).powf(S::of(1.0 / p))
}

/// `‖f‖_{H^s} = (h^d Σ_k ⟨k⟩^{2s} |f̂(k)|²)^{1/2}`.
pub fn sobolev_norm<S: Scalar>(f: &Field<S>, s: f64) -> S {
    let grid = f.grid();
    let sum: S = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(i, z)| z.norm_sqr() * S::of((1.0 + grid.k_squared(i)).powf(s)))
        .sum();
    (sum * S::of(grid.cell_volume())).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::multiplier::gradient;
    use std::f64::consts::PI;

    #[test]
    fn weight_positive_and_even() {
        let grid = Grid::new(2, 16, 6.0).unwrap();
        let w = Weight::<f64>::new(grid, -1.5);
        assert!(w.values().iter().all(|&x| x > 0.0));
        for i in 0..grid.len() {
            let c = grid.coords(i);
            // x ↦ -x maps index c to (n - c) mod n around the center index n/2.
            let mirrored = grid.index([
                (grid.n() - c[0]) % grid.n(),
                (grid.n() - c[1]) % grid.n(),
                0,
            ]);
            assert!((w.values()[i] - w.values()[mirrored]).abs() < 1e-14);
        }
    }

    #[test]
    fn unweighted_is_plain_l2() {
        let grid = Grid::new(2, 16, 4.0).unwrap();
        let f = Field::<f64>::from_fn(grid, |x| x[0] - 0.3 * x[1]);
        let w = Weight::new(grid, 0.0);
        assert!((weighted_l2_norm(&f, &w).unwrap() - f.l2_norm()).abs() < 1e-14);
    }

    #[test]
    fn center_indicator() {
        let grid = Grid::new(2, 16, 4.0).unwrap();
        let c = grid.center_index();
        let mut v = vec![0.0; grid.len()];
        v[c] = 1.0;
        let f = Field::from_real(grid, v).unwrap();
        let w = Weight::new(grid, 2.0);
        let h = grid.spacing();
        assert!((weighted_l2_norm(&f, &w).unwrap() - h).abs() < 1e-15);
    }

    #[test]
    fn plane_wave_sobolev() {
        let l = 5.0;
        let grid = Grid::new(2, 16, l).unwrap();
        let f = Field::<f64>::plane_wave(grid, [2, 1, 0]);
        let k2 = (2.0 * PI / l).powi(2) * 5.0;
        let expected = (1.0 + k2) * l;
        assert!((sobolev_norm(&f, 2.0) - expected).abs() < 1e-12 * expected);
        assert!((sobolev_norm(&f, 0.0) - f.l2_norm()).abs() < 1e-12 * l);
    }

    #[test]
    fn h1_norm_splits() {
        let grid = Grid::new(2, 64, 12.0).unwrap();
        let f = Field::<f64>::from_fn(grid, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp());
        let grad: f64 = gradient(&f).iter().map(|g| g.l2_norm().powi(2)).sum();
        let lhs = sobolev_norm(&f, 1.0).powi(2);
        assert!((lhs - f.l2_norm().powi(2) - grad).abs() < 1e-10 * lhs);
    }
}
