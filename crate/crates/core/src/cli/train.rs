//! Training runs driven by a flat `key = value` config file.
//!
//! ```text
//! # comments start with '#'
//! seed = 1
//! dims = 2,4,1
//! activations = relu,sigmoid
//! adjacency = adjacency.csv
//! features = features.csv
//! targets = targets.csv
//! learning_rate = 0.5
//! epochs = 300
//! normalize = symmetric
//! loss = mse
//! out = run
//! ```
//!
//! Relative paths resolve against the directory holding the config file.
//! `n` may be given and is then checked against the adjacency matrix.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::gcnn::{self, Activation, AdjacencyMatrix, GcnnNetworkSpec, NormalizeMode};
use crate::lens::{self, LossKind, LossSpec, OptimizerState};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub n: Option<usize>,
    pub dims: Vec<usize>,
    pub activations: Vec<Activation>,
    pub adjacency: PathBuf,
    pub features: PathBuf,
    pub targets: PathBuf,
    pub learning_rate: f64,
    pub epochs: usize,
    pub normalize: NormalizeMode,
    pub loss: LossKind,
    pub out: Option<PathBuf>,
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {:?}", v.trim())))
        })
        .collect()
}

fn scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl RunConfig {
    /// Parses config text. Relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut seed = None;
        let mut n = None;
        let mut dims = None;
        let mut activations = None;
        let mut adjacency = None;
        let mut features = None;
        let mut targets = None;
        let mut learning_rate = None;
        let mut epochs = None;
        let mut normalize = NormalizeMode::SymmetricSelfLoops;
        let mut loss = LossKind::MeanSquaredError;
        let mut out = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let path = || base.join(value);
            match key {
                "seed" => seed = Some(scalar(key, value)?),
                "n" => n = Some(scalar(key, value)?),
                "dims" => dims = Some(list(key, value)?),
                "activations" => activations = Some(list(key, value)?),
                "adjacency" => adjacency = Some(path()),
                "features" => features = Some(path()),
                "targets" => targets = Some(path()),
                "learning_rate" => learning_rate = Some(scalar(key, value)?),
                "epochs" => epochs = Some(scalar(key, value)?),
                "normalize" => normalize = value.parse()?,
                "loss" => loss = value.parse()?,
                "out" => out = Some(path()),
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key {other:?}",
                        i + 1
                    )))
                }
            }
        }
        let need = |what: &str| Error::Config(format!("missing key {what:?}"));
        let config = RunConfig {
            seed: seed.ok_or_else(|| need("seed"))?,
            n,
            dims: dims.ok_or_else(|| need("dims"))?,
            activations: activations.ok_or_else(|| need("activations"))?,
            adjacency: adjacency.ok_or_else(|| need("adjacency"))?,
            features: features.ok_or_else(|| need("features"))?,
            targets: targets.ok_or_else(|| need("targets"))?,
            learning_rate: learning_rate.ok_or_else(|| need("learning_rate"))?,
            epochs: epochs.ok_or_else(|| need("epochs"))?,
            normalize,
            loss,
            out,
        };
        if config.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        RunConfig::parse(&text, base)
    }

    pub fn to_text(&self) -> String {
        let join = |items: Vec<String>| items.join(",");
        let mut s = String::new();
        writeln!(s, "seed = {}", self.seed).unwrap();
        if let Some(n) = self.n {
            writeln!(s, "n = {n}").unwrap();
        }
        writeln!(
            s,
            "dims = {}",
            join(self.dims.iter().map(usize::to_string).collect())
        )
        .unwrap();
        writeln!(
            s,
            "activations = {}",
            join(self.activations.iter().map(Activation::to_string).collect())
        )
        .unwrap();
        writeln!(s, "adjacency = {}", self.adjacency.display()).unwrap();
        writeln!(s, "features = {}", self.features.display()).unwrap();
        writeln!(s, "targets = {}", self.targets.display()).unwrap();
        writeln!(s, "learning_rate = {}", self.learning_rate).unwrap();
        writeln!(s, "epochs = {}", self.epochs).unwrap();
        let normalize = match self.normalize {
            NormalizeMode::Raw => "raw",
            NormalizeMode::SymmetricSelfLoops => "symmetric",
        };
        writeln!(s, "normalize = {normalize}").unwrap();
        let loss = match self.loss {
            LossKind::MeanSquaredError => "mse",
            LossKind::CrossEntropy => "bce",
        };
        writeln!(s, "loss = {loss}").unwrap();
        if let Some(out) = &self.out {
            writeln!(s, "out = {}", out.display()).unwrap();
        }
        s
    }
}

/// Reads a matrix in the comma-separated text format.
pub fn parse_matrix_file(path: &Path) -> Result<Tensor> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Tensor::parse_text(&text).map_err(|e| match e {
        Error::Io { .. } => e,
        other => Error::Io {
            path: path.display().to_string(),
            message: other.to_string(),
        },
    })
}

pub fn write_matrix_file(path: &Path, t: &Tensor) -> Result<()> {
    fs::write(path, t.to_text()).map_err(|e| Error::io(path, e))
}

/// Everything a run needs, loaded and checked against each other.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub spec: GcnnNetworkSpec,
    /// The adjacency after normalization.
    pub adjacency: Tensor,
    pub features: Tensor,
    pub targets: Tensor,
}

impl TrainingData {
    pub fn load(config: &RunConfig) -> Result<Self> {
        let adjacency = parse_matrix_file(&config.adjacency)?;
        let features = parse_matrix_file(&config.features)?;
        let targets = parse_matrix_file(&config.targets)?;
        TrainingData::new(config, adjacency, features, targets)
    }

    /// Pre-flight: every shape is checked here, before any training.
    pub fn new(
        config: &RunConfig,
        adjacency: Tensor,
        features: Tensor,
        targets: Tensor,
    ) -> Result<Self> {
        let adjacency = AdjacencyMatrix::new(adjacency)?;
        let n = adjacency.n();
        if let Some(expected) = config.n {
            if expected != n {
                return Err(Error::Config(format!(
                    "n = {expected} but the adjacency matrix is {n} x {n}"
                )));
            }
        }
        let spec = GcnnNetworkSpec::new(n, config.dims.clone(), config.activations.clone())?;
        let want = |what: &'static str, t: &Tensor, obj: crate::Object| -> Result<()> {
            if crate::Object::single(t.shape().clone()) == obj {
                Ok(())
            } else {
                Err(Error::shape(
                    what,
                    format!("file holds {} but the network needs {}", t.shape(), obj),
                ))
            }
        };
        want("features", &features, spec.input_object())?;
        want("targets", &targets, spec.output_object())?;
        if config.loss == LossKind::CrossEntropy
            && spec.activations().last() != Some(&Activation::Sigmoid)
        {
            return Err(Error::Config(
                "bce loss needs a sigmoid output layer".into(),
            ));
        }
        let adjacency = gcnn::normalize_adjacency(&adjacency, config.normalize)?.into_matrix();
        Ok(TrainingData {
            spec,
            adjacency,
            features,
            targets,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Loss before each step, one entry per epoch.
    pub trace: Vec<f64>,
    /// Loss at the trained parameters.
    pub final_loss: f64,
    /// Trained weights, first layer first.
    pub weights: Vec<Tensor>,
    pub predictions: Tensor,
    /// Entries on the right side of 0.5, and the number of entries.
    pub correct: usize,
    pub total: usize,
}

impl TrainOutcome {
    pub fn initial_loss(&self) -> f64 {
        self.trace[0]
    }

    /// `step,loss` per epoch.
    pub fn trace_csv(&self) -> String {
        self.trace
            .iter()
            .enumerate()
            .map(|(i, l)| format!("{i},{l}\n"))
            .collect()
    }

    /// Writes `trace.csv`, `params_{i}.csv` per layer and `predictions.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let trace = dir.join("trace.csv");
        fs::write(&trace, self.trace_csv()).map_err(|e| Error::io(&trace, e))?;
        for (i, w) in self.weights.iter().enumerate() {
            write_matrix_file(&dir.join(format!("params_{i}.csv")), w)?;
        }
        write_matrix_file(&dir.join("predictions.csv"), &self.predictions)
    }
}

pub fn train(config: &RunConfig, data: &TrainingData) -> Result<TrainOutcome> {
    let net = gcnn::build_network(&data.spec);
    let lens = lens::attach_loss(
        &lens::para_reverse(&net)?,
        &LossSpec::new(config.loss, data.targets.clone()),
    )?;
    let context = [data.adjacency.clone()];
    let input = [data.features.clone()];
    let mut opt = OptimizerState::new(config.learning_rate, data.spec.init_params(config.seed))?;
    let mut trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let (next, loss) = lens::train_step(&lens, &opt, &context, &input)?;
        trace.push(loss);
        opt = next;
    }
    let final_loss = lens.run_forward(&context, &opt.params, &input)?[0].data()[0];
    if !final_loss.is_finite() {
        return Err(Error::Diverged {
            step: config.epochs,
            what: "loss",
        });
    }
    let predictions = net.evaluate(&context, &opt.params, &input)?.remove(0);
    let correct = predictions
        .data()
        .iter()
        .zip(data.targets.data())
        .filter(|(p, t)| (**p > 0.5) == (**t > 0.5))
        .count();
    let mut weights = opt.params;
    weights.reverse();
    Ok(TrainOutcome {
        trace,
        final_loss,
        weights,
        total: predictions.data().len(),
        predictions,
        correct,
    })
}

pub fn run_train(config: &RunConfig) -> Result<TrainOutcome> {
    let data = TrainingData::load(config)?;
    let outcome = train(config, &data)?;
    if let Some(dir) = &config.out {
        outcome.write(dir)?;
    }
    Ok(outcome)
}
