use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use anls::gamma::{build_ansatz, default_defect_range, defect_spectrum, DefectMode, GammaMap};
use anls::harness::{
    emit_csv, parse_config, run_experiment, write_outputs, Experiment, ExperimentConfig, Length,
    RunRecord,
};
use anls::noise::read_archive;
use anls::Error;

/// Numerical experiments for Schrödinger equations with multiplicative
/// spatial white noise.
#[derive(Parser)]
#[command(name = "anls", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat `key = value` config file; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Single seed (overrides `seeds`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
#[command(rename_all = "snake_case")]
enum Command {
    /// Build and archive enhanced noise.
    Enhance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "box")]
        box_length: Option<f64>,
        /// Mollifier scale, absolute (`0.25`) or in spacings (`2h`).
        #[arg(long)]
        eps: Option<String>,
    },
    CauchyEnhancement(Common),
    /// Defect spectra; with `--enhancement` a single mode on an archive.
    Defect {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<String>,
        /// Enhancement archive directory written by `anls enhance`.
        #[arg(long)]
        enhancement: Option<PathBuf>,
        /// Ansatz truncation level.
        #[arg(long = "N")]
        level: Option<usize>,
    },
    Evolve(Common),
    Strichartz(Common),
    CauchySolution(Common),
    #[command(name = "propagation_1d")]
    Propagation1d(Common),
    EnergyBound(Common),
}

/// Usage or configuration problems exit with 2.
fn usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::InvalidGrid(_) | Error::Io { .. }
    )
}

fn load(experiment: Experiment, common: &Common) -> anls::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            parse_config(&text)?
        }
        None => ExperimentConfig::new(experiment),
    };
    if cfg.experiment != experiment {
        return Err(Error::Config {
            key: "experiment".into(),
            reason: format!("config is for {}, command is {experiment}", cfg.experiment),
        });
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seeds = vec![seed];
    }
    Ok(cfg)
}

fn report(record: &RunRecord) {
    for c in record.checks() {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {}: {}", c.name, c.detail);
    }
    for note in record.notes() {
        println!("note: {note}");
    }
}

/// Single-mode defect spectrum of an archived enhancement.
fn defect_from_archive(
    mut cfg: ExperimentConfig,
    dir: &PathBuf,
    mode: DefectMode,
    level: usize,
) -> anls::Result<RunRecord> {
    let (manifest, e) = read_archive(dir)?;
    let grid = *e.grid();
    cfg.dim = manifest.dim;
    cfg.n = manifest.n;
    cfg.box_length = manifest.box_length;
    cfg.ansatz_n = level;
    let g = GammaMap::new(build_ansatz(&e, level)?)?;
    let range = cfg.fit_range.unwrap_or_else(|| default_defect_range(&grid));
    let spectrum = defect_spectrum(&e, &g, mode, cfg.probe_seed, range)?;
    let mut record = RunRecord::new("defect", &cfg.hash(), &["j", "norm"]);
    for &(j, v) in &spectrum.rows {
        record.push_row(vec![j as f64, v]);
    }
    record.push_note(format!("{mode:?} growth exponent {:.4}", spectrum.slope));
    let path = cfg.out.join(format!("defect_{}.csv", format!("{mode:?}").to_lowercase()));
    emit_csv(&record, &path)?;
    println!("wrote {}", path.display());
    Ok(record)
}

fn execute(command: Command) -> anls::Result<bool> {
    let (experiment, common) = match &command {
        Command::Enhance { common, .. } => (Experiment::Enhance, common),
        Command::CauchyEnhancement(c) => (Experiment::CauchyEnhancement, c),
        Command::Defect { common, .. } => (Experiment::Defect, common),
        Command::Evolve(c) => (Experiment::Evolve, c),
        Command::Strichartz(c) => (Experiment::Strichartz, c),
        Command::CauchySolution(c) => (Experiment::CauchySolution, c),
        Command::Propagation1d(c) => (Experiment::Propagation1d, c),
        Command::EnergyBound(c) => (Experiment::EnergyBound, c),
    };
    let mut cfg = load(experiment, common)?;
    match &command {
        Command::Enhance {
            dim,
            n,
            box_length,
            eps,
            ..
        } => {
            cfg.dim = dim.unwrap_or(cfg.dim);
            cfg.n = n.unwrap_or(cfg.n);
            cfg.box_length = box_length.unwrap_or(cfg.box_length);
            if let Some(eps) = eps {
                let len: Length = eps.parse().map_err(|_| Error::Config {
                    key: "eps".into(),
                    reason: format!("expected a length such as 0.1 or 2h, got {eps:?}"),
                })?;
                cfg.eps = vec![len];
            }
        }
        Command::Defect {
            mode,
            enhancement,
            level,
            ..
        } => {
            let level = level.unwrap_or(cfg.ansatz_n);
            cfg.ansatz_n = level;
            if let Some(dir) = enhancement {
                let mode: DefectMode = mode.as_deref().unwrap_or("sharp").parse()?;
                let record = defect_from_archive(cfg, dir, mode, level)?;
                report(&record);
                return Ok(true);
            }
        }
        _ => {}
    }
    cfg.validate()?;
    let record = run_experiment(&cfg)?;
    let (csv, json) = write_outputs(&record, &cfg)?;
    report(&record);
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(record.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(threads) = std::env::var("ANLS_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: ANLS_THREADS: {e}");
                    return ExitCode::from(2);
                }
            }
            _ => {
                eprintln!("error: ANLS_THREADS must be a positive integer, got {threads:?}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if usage_error(&e) { 2 } else { 1 })
        }
    }
}
