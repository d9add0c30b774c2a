use num_traits::Zero;

use super::LpDecomposition;
use crate::lattice::{par_map_indexed, Field};
use crate::{Cx, Result, Scalar};

fn output<S: Scalar>(grid: crate::Grid, values: Vec<Cx<S>>, real: bool) -> Field<S> {
    let f = Field::from_complex(grid, values).expect("sizes match");
    if real {
        f.into_real()
    } else {
        f
    }
}

/// `P_u v = Σ_m S_{m-2}u · Δ_m v` with `S_{m-2} = Σ_{n ≤ m-2} Δ_n`,
/// from precomputed decompositions.
pub fn paraproduct_from<S: Scalar>(du: &LpDecomposition<S>, dv: &LpDecomposition<S>) -> Field<S> {
    let grid = *du.grid();
    let jmax = du.jmax();
    let ub = du.blocks();
    let vb = dv.blocks();
    let real = ub[0].is_real() && vb[0].is_real();
    let values = par_map_indexed(grid.len(), |i| {
        let mut low = Cx::<S>::zero();
        let mut acc = Cx::<S>::zero();
        for m in 2..=jmax {
            low = low + ub[m - 2].values()[i];
            acc = acc + low * vb[m].values()[i];
        }
        acc
    });
    output(grid, values, real)
}

/// `Π(u, v) = Σ_{|n-m| ≤ 1} Δ_n u · Δ_m v` from precomputed decompositions.
pub fn resonant_from<S: Scalar>(du: &LpDecomposition<S>, dv: &LpDecomposition<S>) -> Field<S> {
    let grid = *du.grid();
    let jmax = du.jmax();
    let ub = du.blocks();
    let vb = dv.blocks();
    let real = ub[0].is_real() && vb[0].is_real();
    let values = par_map_indexed(grid.len(), |i| {
        let mut acc = Cx::<S>::zero();
        for m in 0..=jmax {
            let lo = m.saturating_sub(1);
            let hi = (m + 1).min(jmax);
            let near = (lo..=hi).fold(Cx::<S>::zero(), |s, n| s + ub[n].values()[i]);
            acc = acc + near * vb[m].values()[i];
        }
        acc
    });
    output(grid, values, real)
}

pub fn paraproduct<S: Scalar>(u: &Field<S>, v: &Field<S>) -> Result<Field<S>> {
    u.grid().ensure_same(v.grid())?;
    Ok(paraproduct_from(&LpDecomposition::new(u), &LpDecomposition::new(v)))
}

pub fn resonant<S: Scalar>(u: &Field<S>, v: &Field<S>) -> Result<Field<S>> {
    u.grid().ensure_same(v.grid())?;
    Ok(resonant_from(&LpDecomposition::new(u), &LpDecomposition::new(v)))
}

/// `C(u, v, w) = Π(P_u v, w) - u Π(v, w)`.
pub fn corrector<S: Scalar>(u: &Field<S>, v: &Field<S>, w: &Field<S>) -> Result<Field<S>> {
    u.grid().ensure_same(v.grid())?;
    u.grid().ensure_same(w.grid())?;
    let dv = LpDecomposition::new(v);
    let dw = LpDecomposition::new(w);
    let puv = paraproduct_from(&LpDecomposition::new(u), &dv);
    let first = resonant_from(&LpDecomposition::new(&puv), &dw);
    let second = u * &resonant_from(&dv, &dw);
    Ok(&first - &second)
}
