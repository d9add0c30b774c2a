//! Unitary multi-dimensional FFT on top of `rustfft`.
//!
//! Plans are cached process-wide per (scalar type, length, direction).
//! Large transforms fan out over lines with rayon; each task owns its own
//! scratch buffer, so no workspace is shared between threads.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::Grid;
use crate::{Cx, Scalar};

/// Below this many points a transform runs on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 14;

type PlanCache = Mutex<HashMap<(TypeId, usize, bool), Arc<dyn Any + Send + Sync>>>;

fn plan<S: Scalar>(len: usize, inverse: bool) -> Arc<dyn Fft<S>> {
    static PLANS: OnceLock<PlanCache> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (TypeId::of::<S>(), len, inverse);
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let entry = guard.entry(key).or_insert_with(|| {
        let mut planner = FftPlanner::<S>::new();
        let fft: Arc<dyn Fft<S>> = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        Arc::new(fft)
    });
    entry
        .downcast_ref::<Arc<dyn Fft<S>>>()
        .expect("plan cache entry has the keyed scalar type")
        .clone()
}

/// Transforms contiguous lines of length `fft.len()` in `data`.
fn run_lines<S: Scalar>(fft: &Arc<dyn Fft<S>>, data: &mut [Cx<S>], parallel: bool) {
    let n = fft.len();
    if parallel {
        let lines = data.len() / n;
        let per_task = (lines / (4 * rayon::current_num_threads())).max(1);
        data.par_chunks_mut(n * per_task).for_each(|chunk| {
            let mut scratch = vec![Cx::<S>::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(chunk, &mut scratch);
        });
    } else {
        let mut scratch = vec![Cx::<S>::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(data, &mut scratch);
    }
}

/// In-place unitary DFT over every axis of `grid`.
pub(crate) fn transform<S: Scalar>(grid: &Grid, data: &mut [Cx<S>], inverse: bool) {
    debug_assert_eq!(data.len(), grid.len());
    let n = grid.n();
    let fft = plan::<S>(n, inverse);
    let parallel = data.len() >= PARALLEL_THRESHOLD;
    let mut gathered: Vec<Cx<S>> = Vec::new();
    for axis in 0..grid.dim() {
        let stride = grid.stride(axis);
        if stride == 1 {
            run_lines(&fft, data, parallel);
            continue;
        }
        // Gather strided lines into contiguous rows, transform, scatter back.
        let block = n * stride;
        gathered.resize(data.len(), Cx::default());
        let src: &[Cx<S>] = data;
        let gather_line = |line: usize, row: &mut [Cx<S>]| {
            let b = line / stride;
            let r = line % stride;
            let base = b * block + r;
            for (i, slot) in row.iter_mut().enumerate() {
                *slot = src[base + i * stride];
            }
        };
        if parallel {
            gathered
                .par_chunks_mut(n)
                .enumerate()
                .for_each(|(line, row)| gather_line(line, row));
        } else {
            gathered
                .chunks_mut(n)
                .enumerate()
                .for_each(|(line, row)| gather_line(line, row));
        }
        run_lines(&fft, &mut gathered, parallel);
        let rows: &[Cx<S>] = &gathered;
        let scatter_block = |b: usize, out: &mut [Cx<S>]| {
            for r in 0..stride {
                let row = &rows[(b * stride + r) * n..(b * stride + r + 1) * n];
                for (i, value) in row.iter().enumerate() {
                    out[i * stride + r] = *value;
                }
            }
        };
        if parallel {
            data.par_chunks_mut(block)
                .enumerate()
                .for_each(|(b, out)| scatter_block(b, out));
        } else {
            data.chunks_mut(block)
                .enumerate()
                .for_each(|(b, out)| scatter_block(b, out));
        }
    }
    let scale = S::one() / S::of(data.len() as f64).sqrt();
    if parallel {
        data.par_iter_mut().for_each(|z| *z = *z * scale);
    } else {
        data.iter_mut().for_each(|z| *z = *z * scale);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Grid;

    fn naive_dft(grid: &Grid, data: &[Cx<f64>]) -> Vec<Cx<f64>> {
        let n = grid.n() as f64;
        let norm = (grid.len() as f64).sqrt();
        (0..grid.len())
            .map(|kidx| {
                let kc = grid.coords(kidx);
                let mut acc = Cx::new(0.0, 0.0);
                for (xidx, value) in data.iter().enumerate() {
                    let xc = grid.coords(xidx);
                    let phase: f64 = (0..grid.dim())
                        .map(|a| (kc[a] * xc[a]) as f64)
                        .sum::<f64>()
                        * -2.0
                        * std::f64::consts::PI
                        / n;
                    acc += value * Cx::from_polar(1.0, phase);
                }
                acc / norm
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_in_every_dimension() {
        for dim in 1..=3 {
            let grid = Grid::new(dim, 8, 1.0).unwrap();
            let data: Vec<Cx<f64>> = (0..grid.len())
                .map(|i| Cx::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
                .collect();
            let expected = naive_dft(&grid, &data);
            let mut got = data.clone();
            transform(&grid, &mut got, false);
            for (a, b) in got.iter().zip(&expected) {
                assert!((a - b).norm() < 1e-12, "dim {dim}: {a} vs {b}");
            }
            transform(&grid, &mut got, true);
            for (a, b) in got.iter().zip(&data) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn parallel_path_agrees_with_serial_dft() {
        let grid = Grid::new(2, 256, 1.0).unwrap();
        let data: Vec<Cx<f64>> = (0..grid.len())
            .map(|i| Cx::new(((i * 7919) % 101) as f64, ((i * 104729) % 37) as f64))
            .collect();
        let mut spec = data.clone();
        transform(&grid, &mut spec, false);
        // Spot-check a few coefficients against the definition.
        let n = 256.0;
        for &(k0, k1) in &[(0usize, 0usize), (3, 5), (128, 17), (255, 200)] {
            let mut acc = Cx::new(0.0, 0.0);
            for (idx, v) in data.iter().enumerate() {
                let c = grid.coords(idx);
                let phase = -2.0 * std::f64::consts::PI * ((k0 * c[0] + k1 * c[1]) as f64) / n;
                acc += v * Cx::from_polar(1.0, phase);
            }
            acc /= n;
            let got = spec[grid.index([k0, k1, 0])];
            assert!((got - acc).norm() < 1e-9 * acc.norm().max(1.0));
        }
    }
}
