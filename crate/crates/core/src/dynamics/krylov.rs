use crate::lattice::linear_combination;
use crate::{Error, Field, Result, C64};

/// Restart length of [`gmres`].
pub const GMRES_RESTART: usize = 40;

fn dot(a: &Field, b: &Field) -> C64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &Field) -> f64 {
    a.values().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &Field, a: C64, x: &Field) -> Field {
    y.zip_with(x, |p, q| p + a * q)
}

/// Outcome of a converged solve.
#[derive(Clone, Copy, Debug)]
pub struct KrylovStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Right-preconditioned restarted GMRES for `L x = b`, with `precond` an
/// approximate inverse of `L`. Stops at `‖b - Lx‖ ≤ tol‖b‖`.
pub fn gmres<A, P>(op: A, precond: P, b: &Field, x0: Field, tol: f64, max_iter: usize) -> Result<(Field, KrylovStats)>
where
    A: Fn(&Field) -> Result<Field>,
    P: Fn(&Field) -> Field,
{
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            b.clone(),
            KrylovStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let mut x = x0;
    let mut total = 0;
    let mut rel;
    loop {
        let r = b - &op(&x)?;
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= tol {
            return Ok((
                x,
                KrylovStats {
                    iterations: total,
                    residual: rel,
                },
            ));
        }
        if total >= max_iter {
            break;
        }
        let m = GMRES_RESTART.min(max_iter - total);
        let mut basis = vec![r.scale(1.0 / beta)];
        let mut zs: Vec<Field> = Vec::with_capacity(m);
        let mut hess = vec![vec![C64::new(0.0, 0.0); m]; m + 1];
        let (mut cs, mut sn) = (vec![C64::new(0.0, 0.0); m], vec![C64::new(0.0, 0.0); m]);
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k = 0;
        while k < m {
            let z = precond(&basis[k]);
            let mut w = op(&z)?;
            zs.push(z);
            // Modified Gram–Schmidt, two passes for stability.
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let hik = dot(q, &w);
                    hess[i][k] += hik;
                    w = axpy(&w, -hik, q);
                }
            }
            let hn = norm(&w);
            hess[k + 1][k] = C64::new(hn, 0.0);
            for i in 0..k {
                let t = cs[i].conj() * hess[i][k] + sn[i].conj() * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let (a, bb) = (hess[k][k], hess[k + 1][k]);
            let r = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if r == 0.0 {
                cs[k] = C64::new(1.0, 0.0);
                sn[k] = C64::new(0.0, 0.0);
            } else {
                cs[k] = a / r;
                sn[k] = bb / r;
            }
            hess[k][k] = cs[k].conj() * a + sn[k].conj() * bb;
            hess[k + 1][k] = C64::new(0.0, 0.0);
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            k += 1;
            total += 1;
            if g[k].norm() / bnorm <= 0.5 * tol || hn == 0.0 {
                break;
            }
            basis.push(w.scale(1.0 / hn));
        }
        // Back substitution on the k×k triangle.
        let mut y = vec![C64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        let terms: Vec<Field> = zs.iter().zip(&y).map(|(z, c)| z.scale_complex(*c)).collect();
        let refs: Vec<(f64, &Field)> = terms.iter().map(|t| (1.0, t)).collect();
        x = &x + &linear_combination(&refs);
    }
    Err(Error::KrylovNotConverged {
        iterations: total,
        residual: rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::random_probe;
    use crate::lattice::SpectralMultiplier;
    use crate::Grid;

    #[test]
    fn solves_a_variable_coefficient_system() {
        let grid = Grid::new(2, 32, 6.0).unwrap();
        let coeff = random_probe(grid, 1, 1.0).map_real(|c| 2.0 + c);
        let lap = SpectralMultiplier::laplacian(grid);
        let op = |x: &Field| -> Result<Field> {
            let l = lap.apply(x)?;
            Ok(&(&coeff * x) - &l.scale_complex(C64::new(0.0, 0.01)))
        };
        let b = random_probe(grid, 2, 0.0).into_complex();
        let (x, stats) = gmres(op, |r| r.clone(), &b, Field::zeros(grid).into_complex(), 1e-11, 400).unwrap();
        let res = (&b - &op(&x).unwrap()).l2_norm() / b.l2_norm();
        assert!(res <= 1e-11, "{res} after {}", stats.iterations);
    }

    #[test]
    fn reports_non_convergence() {
        let grid = Grid::new(1, 64, 6.0).unwrap();
        let lap = SpectralMultiplier::laplacian(grid);
        let op = |x: &Field| lap.apply(x).map(|l| x - &l);
        let b = random_probe(grid, 3, 0.0).into_complex();
        let err = gmres(op, |r| r.clone(), &b, Field::zeros(grid).into_complex(), 1e-14, 3);
        assert!(matches!(err, Err(Error::KrylovNotConverged { iterations: 3, .. })));
    }
}
