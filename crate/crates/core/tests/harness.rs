//! Config, record and CLI contracts, plus property tests.

use std::path::PathBuf;
use std::process::Command;

use anls::dynamics::Scheme;
use anls::harness::{csv_to_json, json_to_csv, parse_config, Experiment, ExperimentConfig, Length, RunRecord};
use anls::lpcalc::{paraproduct, resonant};
use anls::{Field, Grid};
use proptest::prelude::*;

fn anls(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_anls"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| -> PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path
    };

    let typo = write("typo.cfg", "experiment = evolve\nepsilonn = 2h\n");
    let (code, _, err) = anls(&["evolve", "--config", typo.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("epsilonn"), "{err}");

    let negative = write("neg.cfg", "experiment = evolve\ndt = -0.1\n");
    let (code, _, err) = anls(&["evolve", "--config", negative.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("dt must be positive"), "{err}");

    let other = write("other.cfg", "experiment = defect\n");
    assert_eq!(anls(&["evolve", "--config", other.to_str().unwrap()]).0, 2);
    assert_eq!(anls(&["evolve", "--bogus"]).0, 2);

    let out = dir.path().join("run");
    let ok = write(
        "ok.cfg",
        &format!(
            "experiment = evolve\nn = 32\nbox = 8\neps = 2h\nt_end = 0.1\nout = {}\n",
            out.display()
        ),
    );
    let (code, stdout, err) = anls(&["evolve", "--config", ok.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}{err}");
    let csv = std::fs::read_to_string(out.join("evolve.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash: "));
    assert_eq!(lines.next().unwrap(), "t,mass,energy,h1,l2mu");
}

#[test]
fn default_config_emits_canonically() {
    let cfg = parse_config("experiment = strichartz\n").unwrap();
    let text = cfg.emit();
    assert_eq!(parse_config(&text).unwrap().emit(), text);
    assert_eq!(cfg, ExperimentConfig::new(Experiment::Strichartz));
}

fn any_experiment() -> impl Strategy<Value = Experiment> {
    prop::sample::select(Experiment::ALL.to_vec())
}

fn any_length() -> impl Strategy<Value = Length> {
    prop_oneof![
        (1e-4f64..10.0).prop_map(Length::Absolute),
        (0.5f64..32.0).prop_map(Length::Cells),
    ]
}

prop_compose! {
    fn any_config()(
        experiment in any_experiment(),
        dim in 1usize..=3,
        log_n in 3u32..=8,
        box_length in 1.0f64..100.0,
        seeds in prop::collection::vec(0u64..1000, 1..5),
        eps in prop::collection::vec(any_length(), 1..4),
        renormalize in any::<bool>(),
        dt in 1e-5f64..0.1,
        scheme in prop::sample::select(vec![
            Scheme::CrankNicolsonLinear, Scheme::StrangNls, Scheme::StrangHartree,
        ]),
        m in 1.0f64..7.0,
        intervals in prop::collection::vec(0.1f64..4.0, 1..4),
        fit in prop::option::of((1usize..3, 3usize..6)),
    ) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(experiment);
        cfg.dim = dim;
        cfg.n = 1 << log_n;
        cfg.box_length = box_length;
        cfg.seeds = seeds;
        cfg.eps = eps;
        cfg.renormalize = renormalize;
        cfg.dt = dt;
        // Hartree is three-dimensional only; parsing validates.
        cfg.scheme = if dim != 3 && scheme == Scheme::StrangHartree { Scheme::StrangNls } else { scheme };
        cfg.m = m;
        cfg.intervals = intervals;
        cfg.fit_range = fit;
        cfg
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_roundtrips(cfg in any_config()) {
        let text = cfg.emit();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.emit(), text);
        prop_assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn csv_json_csv_is_byte_identical(
        rows in prop::collection::vec(
            prop::collection::vec(
                prop_oneof![
                    any::<f64>(),
                    Just(f64::NAN),
                    Just(f64::INFINITY),
                    Just(-0.0),
                ],
                3,
            ),
            0..12,
        )
    ) {
        let mut record = RunRecord::new("probe", "deadbeef", &["a", "b", "c"]);
        for row in rows {
            record.push_row(row);
        }
        let csv = record.table().to_csv();
        prop_assert_eq!(json_to_csv(&csv_to_json(&csv).unwrap()).unwrap(), csv.clone());
        prop_assert_eq!(json_to_csv(&record.to_json().unwrap()).unwrap(), csv);
    }

    #[test]
    fn paraproduct_pieces_sum_to_the_product(
        dim in 1usize..=3,
        coeffs in prop::collection::vec(-3.0f64..3.0, 8),
    ) {
        let n = if dim == 3 { 16 } else { 32 };
        let grid = Grid::new(dim, n, 2.0 * std::f64::consts::PI).unwrap();
        let c = coeffs.clone();
        let u = Field::from_fn(grid, move |x| {
            c[0] + c[1] * (3.0 * x[0]).sin() + c[2] * (x[0] + 2.0 * x[1]).cos() + c[3] * (7.0 * x[2]).cos()
        });
        let v = Field::from_fn(grid, move |x| {
            coeffs[4] * (5.0 * x[0]).cos() + coeffs[5] + coeffs[6] * (x[1] - x[2]).sin()
                + coeffs[7] * (-(x[0] * x[0])).exp()
        });
        let pieces = &(&paraproduct(&u, &v).unwrap() + &paraproduct(&v, &u).unwrap())
            + &resonant(&u, &v).unwrap();
        let product = &u * &v;
        let scale = product.max_abs().max(1.0);
        prop_assert!((&pieces - &product).max_abs() <= 1e-12 * scale);
    }
}
