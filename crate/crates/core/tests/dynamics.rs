//! Flow properties checked against independent oracles.

use anls::dynamics::{
    hartree_kernel, mild_residual, EvolutionConfig, Nonlinearity, Propagator, Scheme,
};
use anls::harness::gaussian_datum;
use anls::lattice::sobolev_norm;
use anls::lpcalc::LocalizationConfig;
use anls::noise::{sample_white_noise, Enhancement, EnhancementBuilder, Mollifier};
use anls::{Field, Grid};
use num_complex::Complex64;

fn noisy(grid: Grid) -> Enhancement {
    let m = Mollifier::new(2.0 * grid.spacing()).unwrap();
    EnhancementBuilder::new(grid, m, LocalizationConfig::default_for(grid))
        .unwrap()
        .build(&sample_white_noise(grid, 3))
        .unwrap()
}

fn propagator(e: &Enhancement, scheme: Scheme, dt: f64) -> Propagator {
    let cfg = EvolutionConfig {
        scheme,
        dt,
        ..Default::default()
    };
    Propagator::new(e, &cfg).unwrap()
}

#[test]
fn linear_flow_is_a_linear_group() {
    let grid = Grid::new(2, 32, 8.0).unwrap();
    let e = noisy(grid);
    let p = propagator(&e, Scheme::CrankNicolsonLinear, 0.02);
    let v = gaussian_datum(grid, 1.0, 1.0);
    let w = Field::from_fn(grid, |x| (x[0]).sin() * (-(x[1] * x[1]) / 4.0).exp());

    let whole = p.linear_propagate(&v, 0.02, 10).unwrap();
    let split = p
        .linear_propagate(&p.linear_propagate(&v, 0.02, 4).unwrap(), 0.02, 6)
        .unwrap();
    assert!(split.rel_l2_diff(&whole) < 1e-9, "{}", split.rel_l2_diff(&whole));

    let (a, b) = (Complex64::new(0.5, -1.0), Complex64::new(2.0, 0.25));
    let combo = &v.scale_complex(a) + &w.scale_complex(b);
    let lhs = p.linear_propagate(&combo, 0.02, 10).unwrap();
    let rhs = &p.linear_propagate(&v, 0.02, 10).unwrap().scale_complex(a)
        + &p.linear_propagate(&w, 0.02, 10).unwrap().scale_complex(b);
    assert!(lhs.rel_l2_diff(&rhs) < 1e-9, "{}", lhs.rel_l2_diff(&rhs));
}

/// Spectral multiplication against the O(N²) sum `h³ Σ K(x - y) f(y)`,
/// with `K` summed mode by mode from the Bessel symbol written out here.
#[test]
fn hartree_convolution_matches_direct_quadrature() {
    let grid = Grid::new(3, 8, 4.0).unwrap();
    let beta = 0.75;
    let f = gaussian_datum(grid, 1.0, 0.6);
    let fast = hartree_kernel(grid, beta).unwrap().apply(&f).unwrap();

    let n = grid.len();
    let kernel_at = |x: [f64; 3]| -> f64 {
        (0..n)
            .map(|i| {
                let k = grid.wavevector(i);
                let symbol = (1.0 + grid.k_squared(i)).powf(-(3.0 + beta) / 2.0);
                symbol * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).cos()
            })
            .sum::<f64>()
            / grid.volume()
    };
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let xi = grid.position(i);
        let direct: f64 = (0..n)
            .map(|j| {
                let xj = grid.position(j);
                kernel_at([xi[0] - xj[0], xi[1] - xj[1], xi[2] - xj[2]]) * f.values()[j].re
            })
            .sum::<f64>()
            * grid.cell_volume();
        worst = worst.max((direct - fast.values()[i].re).abs());
    }
    assert!(worst / fast.max_abs() < 1e-6, "{worst}");
    assert!(fast.values().iter().all(|z| z.re >= -1e-12));
}

/// Global error ratio under dt halving, measured against a dt/8 run.
#[test]
fn strang_splitting_is_second_order() {
    let grid = Grid::new(2, 32, 8.0).unwrap();
    let e = noisy(grid);
    let v0 = gaussian_datum(grid, 1.5, 1.0);
    let t = 0.4;
    let run = |dt: f64| {
        let p = propagator(&e, Scheme::StrangNls, dt);
        p.run(&v0, dt, (t / dt).round() as usize, usize::MAX, false).unwrap().0.v
    };
    let dt = 0.04;
    let reference = run(dt / 8.0);
    let coarse = run(dt).rel_l2_diff(&reference);
    let fine = run(dt / 2.0).rel_l2_diff(&reference);
    let ratio = coarse / fine;
    assert!((ratio - 4.0).abs() <= 1.0, "errors {coarse:.3e} {fine:.3e} ratio {ratio:.3}");
}

#[test]
fn small_data_without_noise_stays_bounded_in_h2() {
    let grid = Grid::new(1, 128, 32.0).unwrap();
    let e = Enhancement::trivial(grid);
    let p = propagator(&e, Scheme::StrangNls, 0.01);
    let v0 = gaussian_datum(grid, 0.1, 1.0);
    let initial = sobolev_norm(&v0, 2.0);
    let (_, states) = p.run(&v0, 0.01, 100, usize::MAX, true).unwrap();
    let sup = states.iter().map(|v| sobolev_norm(v, 2.0)).fold(0.0, f64::max);
    assert!(sup <= 2.0 * initial, "sup {sup} initial {initial}");
}

/// The mild form built from the true enhancement does not describe a
/// trajectory evolved with `Y` negated.
#[test]
fn flipped_potential_breaks_the_mild_form() {
    let grid = Grid::new(2, 32, 8.0).unwrap();
    let e = noisy(grid);
    let flipped = e.with_potential(e.x.clone(), e.y.scale(-1.0));
    let nl = Nonlinearity::Nls { m: 3.0, focusing: false };
    let v0 = gaussian_datum(grid, 1.0, 1.0);
    let dt = 0.01;
    let trajectory = |en: &Enhancement| {
        propagator(en, Scheme::StrangNls, dt).run(&v0, dt, 100, usize::MAX, true).unwrap().1
    };
    let honest = mild_residual(&e, &trajectory(&e), dt, nl, 1e-10).unwrap();
    let control = mild_residual(&e, &trajectory(&flipped), dt, nl, 1e-10).unwrap();
    assert!(honest < 1e-3, "{honest}");
    assert!(control > 0.1, "{control}");
}
