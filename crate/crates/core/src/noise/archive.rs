//! Enhancement archives: one snapshot per field plus `manifest.json`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Enhancement;
use crate::lattice::{read_snapshot, write_snapshot};
use crate::Field;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub epsilon: f64,
    pub c1: f64,
    pub c2: f64,
    pub c2_stderr: f64,
    pub config_hash: String,
    pub dim: usize,
    pub n: usize,
    pub box_length: f64,
    pub self_consistency: f64,
    pub renormalized: bool,
    pub files: Vec<String>,
}

fn named_fields(e: &Enhancement) -> Vec<(&'static str, &Field)> {
    let mut out = vec![
        ("xi_eps", &e.xi_eps),
        ("x1", &e.x1),
        ("x_low", &e.x_low),
        ("x", &e.x),
        ("y", &e.y),
        ("wick11", &e.wick11),
    ];
    for (name, f) in [
        ("x2", &e.x2),
        ("x3", &e.x3),
        ("wick12", &e.wick12),
        ("wick22", &e.wick22),
    ] {
        if let Some(f) = f {
            out.push((name, f));
        }
    }
    out
}

pub fn write_archive(dir: impl AsRef<Path>, e: &Enhancement, config_hash: &str) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|err| Error::io(dir, err))?;
    let mut files = Vec::new();
    for (name, f) in named_fields(e) {
        let file = format!("{name}.anls");
        write_snapshot(dir.join(&file), f)?;
        files.push(file);
    }
    let g = e.grid();
    let manifest = Manifest {
        seed: e.seed,
        epsilon: e.epsilon,
        c1: e.c1,
        c2: e.c2,
        c2_stderr: e.c2_stderr,
        config_hash: config_hash.to_string(),
        dim: g.dim(),
        n: g.n(),
        box_length: g.box_length(),
        self_consistency: e.self_consistency,
        renormalized: e.renormalized,
        files,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").map_err(|err| Error::io(&path, err))?;
    Ok(manifest)
}

pub fn read_archive(dir: impl AsRef<Path>) -> Result<(Manifest, Enhancement)> {
    let dir = dir.as_ref();
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|err| Error::io(&path, err))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let load = |name: &str| read_snapshot(dir.join(format!("{name}.anls")));
    let optional = |name: &str| -> Result<Option<Field>> {
        if manifest.files.iter().any(|f| f == &format!("{name}.anls")) {
            load(name).map(Some)
        } else {
            Ok(None)
        }
    };
    let x = load("x")?;
    let g = *x.grid();
    if g.dim() != manifest.dim || g.n() != manifest.n || g.box_length() != manifest.box_length {
        return Err(Error::Format(format!(
            "snapshot grid {g:?} disagrees with the manifest"
        )));
    }
    let e = Enhancement {
        seed: manifest.seed,
        epsilon: manifest.epsilon,
        xi_eps: load("xi_eps")?,
        x1: load("x1")?,
        x2: optional("x2")?,
        x3: optional("x3")?,
        x_low: load("x_low")?,
        x,
        y: load("y")?,
        c1: manifest.c1,
        c2: manifest.c2,
        c2_stderr: manifest.c2_stderr,
        wick11: load("wick11")?,
        wick12: optional("wick12")?,
        wick22: optional("wick22")?,
        self_consistency: manifest.self_consistency,
        under_resolved: manifest.epsilon < 0.5 * g.spacing(),
        renormalized: manifest.renormalized,
    };
    Ok((manifest, e))
}
