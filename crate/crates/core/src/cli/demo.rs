//! Synthetic two-community graphs.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng as _;

use crate::cli::train::{write_matrix_file, RunConfig};
use crate::error::{Error, Result};
use crate::gcnn::{Activation, NormalizeMode};
use crate::lens::LossKind;
use crate::seed;
use crate::tensor::Tensor;

pub const INTRA_EDGE: f64 = 0.8;
pub const INTER_EDGE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Demo {
    /// Symmetric 0/1 with a zero diagonal.
    pub adjacency: Tensor,
    /// `n x 2`: the one-hot community indicator plus uniform noise.
    pub features: Tensor,
    /// `n x 1`: 1 for the second community.
    pub targets: Tensor,
}

/// Nodes `0..n/2` form the first community and the rest the second.
pub fn generate(seed: u64, n: usize, noise: f64) -> Result<Demo> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "n must be even and at least 4, got {n}"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Config(format!(
            "noise must be finite and non-negative, got {noise}"
        )));
    }
    let mut rng = seed::rng(seed, "demo", 0);
    let community = |i: usize| usize::from(i >= n / 2);
    let mut adjacency = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let p = if community(i) == community(j) {
                INTRA_EDGE
            } else {
                INTER_EDGE
            };
            if rng.gen_bool(p) {
                adjacency[i * n + j] = 1.0;
                adjacency[j * n + i] = 1.0;
            }
        }
    }
    let mut features = Vec::with_capacity(2 * n);
    for i in 0..n {
        for c in 0..2 {
            let indicator = if community(i) == c { 1.0 } else { 0.0 };
            let jitter = if noise > 0.0 {
                noise * rng.gen_range(-1.0..1.0)
            } else {
                0.0
            };
            features.push(indicator + jitter);
        }
    }
    let targets = (0..n).map(|i| community(i) as f64).collect();
    Ok(Demo {
        adjacency: Tensor::matrix(n, n, adjacency)?,
        features: Tensor::matrix(n, 2, features)?,
        targets: Tensor::matrix(n, 1, targets)?,
    })
}

/// The run config that goes with a generated demo.
pub fn demo_config(seed: u64, n: usize, dir: &Path) -> RunConfig {
    RunConfig {
        seed,
        n: Some(n),
        dims: vec![2, 4, 1],
        activations: vec![Activation::Relu, Activation::Sigmoid],
        adjacency: dir.join("adjacency.csv"),
        features: dir.join("features.csv"),
        targets: dir.join("targets.csv"),
        learning_rate: 0.5,
        epochs: 300,
        normalize: NormalizeMode::SymmetricSelfLoops,
        loss: LossKind::MeanSquaredError,
        out: Some(dir.join("run")),
    }
}

/// Writes `adjacency.csv`, `features.csv`, `targets.csv` and `demo.cfg`
/// into `dir`, returning the config path. Paths inside the config are
/// relative, so the directory can be moved.
pub fn run_demo_generate(seed: u64, n: usize, noise: f64, dir: &Path) -> Result<PathBuf> {
    let demo = generate(seed, n, noise)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_matrix_file(&dir.join("adjacency.csv"), &demo.adjacency)?;
    write_matrix_file(&dir.join("features.csv"), &demo.features)?;
    write_matrix_file(&dir.join("targets.csv"), &demo.targets)?;
    let cfg = dir.join("demo.cfg");
    let text = demo_config(seed, n, Path::new("")).to_text();
    fs::write(&cfg, text).map_err(|e| Error::io(&cfg, e))?;
    Ok(cfg)
}
