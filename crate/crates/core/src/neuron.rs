//! Single linear neuron trained on the empirical DC loss.
//!
//! The model is homogeneous, `ŷ = sign(θᵀx)`, and the objective is
//! `L(θ) = Σ_i per_sample_loss(y_i θᵀx_i)`. Updates are plain gradient steps
//! `θ ← θ − η ∇L` with no momentum or weight decay. Minibatch gradients are
//! sums over the batch, not means, so `η` scales with batch size.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dc_loss::{loss_derivative, per_sample_loss, DCParams};
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn zeros(n: usize) -> Self {
        WeightVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        WeightVector(self.0.iter().map(|v| alpha * v).collect())
    }

    fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("vector of floats serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

fn check_dim(theta: &WeightVector, data: &Dataset) -> Result<()> {
    if theta.len() != data.dim() {
        return Err(Error::Dimension {
            expected: data.dim(),
            got: theta.len(),
        });
    }
    Ok(())
}

/// `y_i θᵀx_i` for every sample.
pub fn margins(theta: &WeightVector, data: &Dataset) -> Result<Vec<f64>> {
    check_dim(theta, data)?;
    Ok(data.iter().map(|(x, y)| y as f64 * theta.dot(x)).collect())
}

/// Sum of per-sample losses in ascending index order.
pub fn empirical_loss(params: &DCParams, theta: &WeightVector, data: &Dataset) -> Result<f64> {
    Ok(margins(theta, data)?
        .into_iter()
        .map(|t| per_sample_loss(params, t))
        .sum())
}

pub fn loss_gradient(params: &DCParams, theta: &WeightVector, data: &Dataset) -> Result<Vec<f64>> {
    check_dim(theta, data)?;
    let mut grad = vec![0.0; data.dim()];
    accumulate_gradient(params, theta, data, 0..data.len(), &mut grad);
    Ok(grad)
}

fn accumulate_gradient(
    params: &DCParams,
    theta: &WeightVector,
    data: &Dataset,
    indices: impl IntoIterator<Item = usize>,
    grad: &mut [f64],
) {
    for i in indices {
        let x = data.row(i);
        let y = data.label(i) as f64;
        let scale = loss_derivative(params, y * theta.dot(x)) * y;
        for (g, xj) in grad.iter_mut().zip(x) {
            *g += scale * xj;
        }
    }
}

/// `θ − η·grad`.
pub fn gd_step(theta: &WeightVector, grad: &[f64], eta: f64) -> Result<WeightVector> {
    if !(eta > 0.0) {
        return Err(Error::validation(format!("eta must be > 0, got {eta}")));
    }
    if grad.len() != theta.len() {
        return Err(Error::Dimension {
            expected: theta.len(),
            got: grad.len(),
        });
    }
    Ok(WeightVector(
        theta.0.iter().zip(grad).map(|(t, g)| t - eta * g).collect(),
    ))
}

/// Fraction of samples with `sign(θᵀx) = y`, where `sign(0) = +1`.
pub fn accuracy(theta: &WeightVector, data: &Dataset) -> Result<f64> {
    check_dim(theta, data)?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let correct = data
        .iter()
        .filter(|(x, y)| {
            let pred = if theta.dot(x) >= 0.0 { 1 } else { -1 };
            pred == *y
        })
        .count();
    Ok(correct as f64 / data.len() as f64)
}

/// `min_i y_i θᵀx_i / ‖θ‖`, or 0 for `θ = 0` or an empty dataset.
pub fn min_normalized_margin(theta: &WeightVector, data: &Dataset) -> Result<f64> {
    let norm = theta.norm();
    let m = margins(theta, data)?;
    if norm == 0.0 || m.is_empty() {
        return Ok(0.0);
    }
    Ok(m.into_iter().fold(f64::INFINITY, f64::min) / norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    /// One full-batch step per epoch.
    Gd,
    /// Shuffled minibatches each epoch.
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    Zeros,
    /// Entries drawn from N(0, 1/n).
    GaussianScaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub eta: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub mode: TrainMode,
    pub init: InitScheme,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            eta: 0.01,
            batch_size: 75,
            epochs: 1500,
            seed: 0,
            mode: TrainMode::Sgd,
            init: InitScheme::Zeros,
        }
    }
}

impl TrainConfig {
    fn validate(&self, train_len: usize) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::validation(format!("eta must be > 0, got {}", self.eta)));
        }
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be >= 1"));
        }
        if self.mode == TrainMode::Sgd && (self.batch_size == 0 || self.batch_size > train_len) {
            return Err(Error::validation(format!(
                "batch_size must lie in [1, {train_len}], got {}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    /// 1-based epoch index.
    pub epoch: usize,
    pub train_loss: f64,
    pub test_accuracy: f64,
    pub theta_norm: f64,
    /// Minimum normalized margin over the training set.
    pub min_normalized_margin: f64,
}

pub const TRACE_CSV_HEADER: &str = "epoch,train_loss,test_accuracy,theta_norm,min_normalized_margin";

/// Result of a training run: the per-epoch trace and the final weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub trace: Vec<EpochTrace>,
    pub theta: WeightVector,
}

fn initial_weights(cfg: &TrainConfig, n: usize, rng: &mut impl Rng) -> WeightVector {
    match cfg.init {
        InitScheme::Zeros => WeightVector::zeros(n),
        InitScheme::GaussianScaled => {
            let sd = 1.0 / (n as f64).sqrt();
            WeightVector(
                (0..n)
                    .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            )
        }
    }
}

/// Trains from the configured initialisation and returns one trace entry per epoch.
pub fn train(
    params: &DCParams,
    train_set: &Dataset,
    test_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<EpochTrace>> {
    train_full(params, train_set, test_set, cfg).map(|o| o.trace)
}

pub fn train_full(
    params: &DCParams,
    train_set: &Dataset,
    test_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if train_set.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    if test_set.dim() != train_set.dim() {
        return Err(Error::Dimension {
            expected: train_set.dim(),
            got: test_set.dim(),
        });
    }
    if test_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.validate(train_set.len())?;

    let n = train_set.dim();
    let m = train_set.len();
    let mut rng = seeded(cfg.seed);
    let mut theta = initial_weights(cfg, n, &mut rng);
    let mut order: Vec<usize> = (0..m).collect();
    let mut grad = vec![0.0; n];
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let batches: Vec<&[usize]> = match cfg.mode {
            TrainMode::Gd => vec![&order[..]],
            TrainMode::Sgd => {
                order.shuffle(&mut rng);
                order.chunks(cfg.batch_size).collect()
            }
        };
        for (batch_idx, batch) in batches.into_iter().enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            accumulate_gradient(params, &theta, train_set, batch.iter().copied(), &mut grad);
            theta = gd_step(&theta, &grad, cfg.eta)?;
            if theta.0.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical {
                    epoch,
                    batch: batch_idx,
                });
            }
        }
        trace.push(EpochTrace {
            epoch,
            train_loss: empirical_loss(params, &theta, train_set)?,
            test_accuracy: accuracy(&theta, test_set)?,
            theta_norm: theta.norm(),
            min_normalized_margin: min_normalized_margin(&theta, train_set)?,
        });
    }
    Ok(TrainOutcome { trace, theta })
}

pub fn write_trace_csv<W: Write>(trace: &[EpochTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let fmt_err = |e: csv::Error| Error::Format {
        line: 0,
        message: e.to_string(),
    };
    w.write_record(TRACE_CSV_HEADER.split(',')).map_err(fmt_err)?;
    for t in trace {
        w.write_record([
            t.epoch.to_string(),
            t.train_loss.to_string(),
            t.test_accuracy.to_string(),
            t.theta_norm.to_string(),
            t.min_normalized_margin.to_string(),
        ])
        .map_err(fmt_err)?;
    }
    w.flush().map_err(|e| Error::io("<trace csv>", e))?;
    Ok(())
}

pub fn save_trace_csv(trace: &[EpochTrace], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace_csv(trace, std::io::BufWriter::new(file))
}
