//! Flat `key = value` experiment configuration with a canonical form.
//!
//! Every key has a default except `experiment`. The canonical text lists
//! all keys in a fixed order, one per line, so parsing it back and
//! re-emitting is byte-identical; the config hash is the SHA-256 of that
//! text.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{EvolutionConfig, Scheme};
use crate::{Error, Grid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Enhance,
    CauchyEnhancement,
    Defect,
    Evolve,
    Strichartz,
    CauchySolution,
    #[serde(rename = "propagation_1d")]
    Propagation1d,
    EnergyBound,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Self::Enhance,
        Self::CauchyEnhancement,
        Self::Defect,
        Self::Evolve,
        Self::Strichartz,
        Self::CauchySolution,
        Self::Propagation1d,
        Self::EnergyBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Enhance => "enhance",
            Self::CauchyEnhancement => "cauchy_enhancement",
            Self::Defect => "defect",
            Self::Evolve => "evolve",
            Self::Strichartz => "strichartz",
            Self::CauchySolution => "cauchy_solution",
            Self::Propagation1d => "propagation_1d",
            Self::EnergyBound => "energy_bound",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| config_err("experiment", format!("unknown experiment {s:?}")))
    }
}

/// A length given absolutely (`0.25`) or in grid spacings (`2h`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Length {
    Absolute(f64),
    Cells(f64),
}

impl Length {
    pub fn resolve(self, h: f64) -> f64 {
        match self {
            Self::Absolute(x) => x,
            Self::Cells(c) => c * h,
        }
    }

    fn value(self) -> f64 {
        match self {
            Self::Absolute(x) | Self::Cells(x) => x,
        }
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Absolute(x) => f.write_str(&fmt_f64(*x)),
            Self::Cells(c) => write!(f, "{}h", fmt_f64(*c)),
        }
    }
}

impl FromStr for Length {
    type Err = ();
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.strip_suffix('h') {
            Some(c) => c.parse().map(Self::Cells).map_err(|_| ()),
            None => s.parse().map(Self::Absolute).map_err(|_| ()),
        }
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:?}")
    }
}

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub n: usize,
    pub box_length: f64,
    pub seeds: Vec<u64>,
    /// Mollifier scales; every study compares `ε` with `ε/2`.
    pub eps: Vec<Length>,
    pub renormalize: bool,
    pub kappa: f64,
    pub mu: f64,
    /// Truncation level `N` of the ansatz.
    pub ansatz_n: usize,
    /// Inclusive block range; `None` picks the per-experiment default.
    pub fit_range: Option<(usize, usize)>,
    pub probes: usize,
    pub probe_seed: u64,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub m: f64,
    pub beta: f64,
    pub focusing: bool,
    pub krylov_tol: f64,
    pub krylov_max: usize,
    pub record_every: usize,
    /// Trajectory snapshot stride; 0 writes none.
    pub snapshot_every: usize,
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    /// Gaussian initial datum `amplitude · exp(-|x|²/(2 width²))`.
    pub amplitude: f64,
    pub width: f64,
    pub intervals: Vec<f64>,
    pub m_list: Vec<f64>,
    pub out: PathBuf,
}

/// Canonical key order.
pub const KEYS: [&str; 31] = [
    "experiment",
    "dim",
    "n",
    "box",
    "seeds",
    "eps",
    "renormalize",
    "kappa",
    "mu",
    "ansatz_n",
    "fit_range",
    "probes",
    "probe_seed",
    "scheme",
    "dt",
    "t_end",
    "m",
    "beta",
    "focusing",
    "krylov_tol",
    "krylov_max",
    "record_every",
    "snapshot_every",
    "p",
    "q",
    "gamma",
    "amplitude",
    "width",
    "intervals",
    "m_list",
    "out",
];

fn join<T>(xs: &[T], f: impl Fn(&T) -> String) -> String {
    xs.iter().map(f).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Defaults for every key but `experiment`.
    pub fn new(experiment: Experiment) -> Self {
        let evo = EvolutionConfig::default();
        Self {
            experiment,
            dim: 2,
            n: 128,
            box_length: 16.0,
            seeds: vec![1],
            eps: vec![Length::Cells(8.0), Length::Cells(4.0), Length::Cells(2.0)],
            renormalize: true,
            kappa: 0.05,
            mu: 0.25,
            ansatz_n: 0,
            fit_range: None,
            probes: 1,
            probe_seed: 0,
            scheme: evo.scheme,
            dt: evo.dt,
            t_end: evo.t_end,
            m: evo.m,
            beta: evo.beta,
            focusing: evo.focusing,
            krylov_tol: evo.krylov_tol,
            krylov_max: evo.krylov_max,
            record_every: evo.record_every,
            snapshot_every: 0,
            p: 4.0,
            q: 4.0,
            gamma: 0.0,
            amplitude: 1.0,
            width: 1.0,
            intervals: vec![0.5, 1.0, 2.0],
            m_list: vec![1.0, 3.0, 5.0],
            out: PathBuf::from("out"),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_err(line, format!("line {} is not `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            if key.is_empty() || !KEYS.contains(&key) {
                return Err(config_err(key, "unknown key"));
            }
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(config_err(key, "duplicate key"));
            }
        }
        let experiment = entries
            .get("experiment")
            .ok_or_else(|| config_err("experiment", "missing required key"))?
            .parse()?;
        let mut cfg = Self::new(experiment);
        for (key, value) in &entries {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn typed<T: FromStr>(key: &str, value: &str, ty: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| config_err(key, format!("expected {ty}, got {value:?}")))
        }
        fn list<T: FromStr>(key: &str, value: &str, ty: &str) -> Result<Vec<T>> {
            value
                .split(',')
                .map(|v| typed(key, v.trim(), ty))
                .collect()
        }
        let (k, v) = (key, value);
        match key {
            "experiment" => {}
            "dim" => self.dim = typed(k, v, "an integer")?,
            "n" => self.n = typed(k, v, "an integer")?,
            "box" => self.box_length = typed(k, v, "a number")?,
            "seeds" => self.seeds = list(k, v, "a list of integers")?,
            "eps" => self.eps = list(k, v, "a list of lengths such as 0.1 or 2h")?,
            "renormalize" => self.renormalize = typed(k, v, "true or false")?,
            "kappa" => self.kappa = typed(k, v, "a number")?,
            "mu" => self.mu = typed(k, v, "a number")?,
            "ansatz_n" => self.ansatz_n = typed(k, v, "an integer")?,
            "fit_range" => {
                self.fit_range = if v == "auto" {
                    None
                } else {
                    match list::<usize>(k, v, "auto or two integers")?[..] {
                        [lo, hi] => Some((lo, hi)),
                        _ => return Err(config_err(k, "expected auto or two integers")),
                    }
                }
            }
            "probes" => self.probes = typed(k, v, "an integer")?,
            "probe_seed" => self.probe_seed = typed(k, v, "an integer")?,
            "scheme" => {
                self.scheme = v
                    .parse()
                    .map_err(|_| config_err(k, format!("unknown scheme {v:?}")))?
            }
            "dt" => self.dt = typed(k, v, "a number")?,
            "t_end" => self.t_end = typed(k, v, "a number")?,
            "m" => self.m = typed(k, v, "a number")?,
            "beta" => self.beta = typed(k, v, "a number")?,
            "focusing" => self.focusing = typed(k, v, "true or false")?,
            "krylov_tol" => self.krylov_tol = typed(k, v, "a number")?,
            "krylov_max" => self.krylov_max = typed(k, v, "an integer")?,
            "record_every" => self.record_every = typed(k, v, "an integer")?,
            "snapshot_every" => self.snapshot_every = typed(k, v, "an integer")?,
            "p" => self.p = typed(k, v, "a number")?,
            "q" => self.q = typed(k, v, "a number")?,
            "gamma" => self.gamma = typed(k, v, "a number")?,
            "amplitude" => self.amplitude = typed(k, v, "a number")?,
            "width" => self.width = typed(k, v, "a number")?,
            "intervals" => self.intervals = list(k, v, "a list of numbers")?,
            "m_list" => self.m_list = list(k, v, "a list of numbers")?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(config_err(key, "unknown key")),
        }
        Ok(())
    }

    /// Range and consistency checks; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(config_err(key, format!("{key} must be positive")))
            }
        };
        if !(1..=3).contains(&self.dim) {
            return Err(config_err("dim", "dim must be 1, 2 or 3"));
        }
        positive("box", self.box_length)?;
        self.grid()?;
        if self.seeds.is_empty() {
            return Err(config_err("seeds", "need at least one seed"));
        }
        for e in &self.eps {
            let x = e.value();
            let ok = x.is_finite() && (x > 0.0 || (x == 0.0 && self.dim == 1));
            if !ok {
                return Err(config_err("eps", "eps must be positive (zero allowed in d = 1)"));
            }
        }
        positive("kappa", self.kappa)?;
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(config_err("mu", "mu must be finite and >= 0"));
        }
        if let Some((lo, hi)) = self.fit_range {
            if lo >= hi {
                return Err(config_err("fit_range", "need lo < hi"));
            }
        }
        if self.probes == 0 {
            return Err(config_err("probes", "probes must be positive"));
        }
        positive("dt", self.dt)?;
        positive("t_end", self.t_end)?;
        positive("krylov_tol", self.krylov_tol)?;
        positive("width", self.width)?;
        if !self.amplitude.is_finite() {
            return Err(config_err("amplitude", "amplitude must be finite"));
        }
        if self.krylov_max == 0 {
            return Err(config_err("krylov_max", "krylov_max must be positive"));
        }
        if self.record_every == 0 {
            return Err(config_err("record_every", "record_every must be positive"));
        }
        for &i in &self.intervals {
            positive("intervals", i)?;
        }
        for &m in &self.m_list {
            if !(m >= 1.0 && m.is_finite()) {
                return Err(config_err("m_list", "exponents must be >= 1"));
            }
        }
        self.evolution().validate(self.dim).map_err(|e| match e {
            Error::InvalidParameter { name, reason } => config_err(name, reason),
            other => other,
        })?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n, self.box_length).map_err(|e| config_err("n", e.to_string()))
    }

    /// Mollifier scales resolved against the grid spacing.
    pub fn eps_values(&self) -> Result<Vec<f64>> {
        let h = self.grid()?.spacing();
        Ok(self.eps.iter().map(|e| e.resolve(h)).collect())
    }

    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            dt: self.dt,
            t_end: self.t_end,
            scheme: self.scheme,
            m: self.m,
            beta: self.beta,
            focusing: self.focusing,
            krylov_tol: self.krylov_tol,
            krylov_max: self.krylov_max,
            mu: self.mu,
            record_every: self.record_every,
        }
    }

    /// Canonical text: every key, fixed order, `key = value` lines.
    pub fn emit(&self) -> String {
        let fit = match self.fit_range {
            None => "auto".to_string(),
            Some((lo, hi)) => format!("{lo},{hi}"),
        };
        let values = [
            self.experiment.to_string(),
            self.dim.to_string(),
            self.n.to_string(),
            fmt_f64(self.box_length),
            join(&self.seeds, |s| s.to_string()),
            join(&self.eps, |e| e.to_string()),
            self.renormalize.to_string(),
            fmt_f64(self.kappa),
            fmt_f64(self.mu),
            self.ansatz_n.to_string(),
            fit,
            self.probes.to_string(),
            self.probe_seed.to_string(),
            self.scheme.to_string(),
            fmt_f64(self.dt),
            fmt_f64(self.t_end),
            fmt_f64(self.m),
            fmt_f64(self.beta),
            self.focusing.to_string(),
            fmt_f64(self.krylov_tol),
            self.krylov_max.to_string(),
            self.record_every.to_string(),
            self.snapshot_every.to_string(),
            fmt_f64(self.p),
            fmt_f64(self.q),
            fmt_f64(self.gamma),
            fmt_f64(self.amplitude),
            fmt_f64(self.width),
            join(&self.intervals, |x| fmt_f64(*x)),
            join(&self.m_list, |x| fmt_f64(*x)),
            self.out.display().to_string(),
        ];
        KEYS.iter()
            .zip(values.iter())
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Hex SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.emit().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses config text; see [`ExperimentConfig::parse`].
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn minimal_config_fills_defaults_and_roundtrips() {
        let cfg = parse_config("experiment = evolve\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::new(Experiment::Evolve));
        let text = cfg.emit();
        assert_eq!(text.lines().count(), KEYS.len());
        let again = parse_config(&text).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.emit(), text);
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn lengths_in_cells_and_absolute() {
        let cfg = parse_config("experiment = enhance\neps = 2h, 0.25\n").unwrap();
        assert_eq!(cfg.eps, vec![Length::Cells(2.0), Length::Absolute(0.25)]);
        assert!(cfg.emit().contains("eps = 2.0h,0.25\n"));
        let h = cfg.grid().unwrap().spacing();
        assert_eq!(cfg.eps_values().unwrap(), vec![2.0 * h, 0.25]);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("experiment = enhance\nepsilonn = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("epsilonn"));
        assert_eq!(key_of(err), "epsilonn");
    }

    #[test]
    fn negative_dt_is_rejected() {
        let err = parse_config("experiment = evolve\ndt = -0.1\n").unwrap_err();
        assert!(err.to_string().contains("dt must be positive"));
        assert_eq!(key_of(err), "dt");
    }

    #[test]
    fn missing_and_mistyped_keys_are_named() {
        assert_eq!(key_of(parse_config("dim = 2\n").unwrap_err()), "experiment");
        assert_eq!(key_of(parse_config("experiment = evolve\nn = many\n").unwrap_err()), "n");
        assert_eq!(key_of(parse_config("experiment = evolve\nn = 100\n").unwrap_err()), "n");
        assert_eq!(key_of(parse_config("experiment = nope\n").unwrap_err()), "experiment");
        assert_eq!(
            key_of(parse_config("experiment = evolve\ndt = 0.1\ndt = 0.2\n").unwrap_err()),
            "dt"
        );
        let hartree_2d = "experiment = evolve\nscheme = strang_hartree\n";
        assert_eq!(key_of(parse_config(hartree_2d).unwrap_err()), "scheme");
    }

    #[test]
    fn comments_quotes_and_hash_sensitivity() {
        let a = parse_config("# run\nexperiment = evolve\nout = \"runs/a\"\n").unwrap();
        assert_eq!(a.out, PathBuf::from("runs/a"));
        let mut b = a.clone();
        b.dt = 5e-3;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(parse_config(&b.emit()).unwrap().dt, 5e-3);
    }
}
