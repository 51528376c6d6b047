//! The regularized cross-entropy objective, the Adam optimizer, and the
//! mini-batch training loop.
//!
//! The objective over a batch is
//!
//! ```text
//! J = sum_i -log( p_i[label_i] )  +  gamma * ||theta||^2
//! ```
//!
//! a SUM over the batch (not a mean — a mean variant is exposed in the
//! config for experimentation), where ||theta||^2 ranges over the
//! non-frozen weight matrices only: biases and frozen embeddings carry no
//! penalty. The log is clamped at log(1e-12) so a fully saturated softmax
//! cannot produce an infinite loss.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::data::batch::{make_batches, Batch};
use crate::data::dataset::Dataset;
use crate::error::{Error, Result};
use crate::layers::EmbeddingTable;
use crate::model::{Architecture, ModelGrads, ModelParams, ParamKind};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Floor for probabilities inside the log; far below anything a 64-bit
/// softmax emits for a reachable logit gap.
pub const LOG_CLAMP: f64 = 1e-12;

/// Where the embedding table comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingSource {
    /// Uniform random in [-0.05, 0.05], trainable unless frozen explicitly.
    Random,
    /// Text vector file; frozen by default.
    Pretrained(PathBuf),
}

/// Whether the batch cross-entropy term is summed or averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossReduction {
    Sum,
    Mean,
}

impl LossReduction {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossReduction::Sum => "sum",
            LossReduction::Mean => "mean",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(LossReduction::Sum),
            "mean" => Ok(LossReduction::Mean),
            other => Err(Error::Config(format!(
                "unknown loss_reduction '{other}' (expected 'sum' or 'mean')"
            ))),
        }
    }
}

/// Every knob of a training run. The defaults are the reference setup:
/// Adam at learning rate 0.001 with beta1 = 0.9, beta2 = 0.999,
/// epsilon = 1e-8, batch size 16, 25 epochs, L2 coefficient 0.01, and 64
/// hidden units per LSTM direction.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub l2_gamma: f64,
    pub hidden_units: usize,
    pub embedding_dim: usize,
    pub seed: u64,
    pub arch: Architecture,
    pub embedding_source: EmbeddingSource,
    /// None = default rule: frozen when pretrained, trainable when random.
    pub freeze_embeddings: Option<bool>,
    pub loss_reduction: LossReduction,
    pub lowercase: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 16,
            epochs: 25,
            l2_gamma: 0.01,
            hidden_units: 64,
            embedding_dim: 300,
            seed: 42,
            arch: Architecture::Bilstm,
            embedding_source: EmbeddingSource::Random,
            freeze_embeddings: None,
            loss_reduction: LossReduction::Sum,
            lowercase: true,
        }
    }
}

impl TrainConfig {
    /// Resolves the freeze rule: pretrained vectors stay fixed during
    /// training unless overridden, random-init tables train.
    pub fn embeddings_frozen(&self) -> bool {
        self.freeze_embeddings
            .unwrap_or(matches!(self.embedding_source, EmbeddingSource::Pretrained(_)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0,1), got {v}")));
            }
        }
        if self.epsilon <= 0.0 {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.l2_gamma < 0.0 || !self.l2_gamma.is_finite() {
            return Err(Error::Config(format!("l2_gamma must be non-negative, got {}", self.l2_gamma)));
        }
        if self.hidden_units < 1 {
            return Err(Error::Config("hidden_units must be at least 1".into()));
        }
        if self.embedding_dim < 1 {
            return Err(Error::Config("embedding_dim must be at least 1".into()));
        }
        Ok(())
    }

    /// The config keys, in the order [`Self::to_kv`] writes them. CLI
    /// flags mirror these 1:1 with dashes for underscores.
    pub const KEYS: [&'static str; 15] = [
        "arch",
        "batch_size",
        "beta1",
        "beta2",
        "embedding_dim",
        "embeddings",
        "epochs",
        "epsilon",
        "freeze_embeddings",
        "hidden_units",
        "l2_gamma",
        "learning_rate",
        "loss_reduction",
        "lowercase",
        "seed",
    ];

    /// Flat `key=value` text, one key per line, keys in [`Self::KEYS`]
    /// order. Reals use the shortest round-trip decimal form, so parsing
    /// the output reproduces bit-identical values.
    pub fn to_kv(&self) -> String {
        let embeddings = match &self.embedding_source {
            EmbeddingSource::Random => "random".to_string(),
            EmbeddingSource::Pretrained(p) => p.display().to_string(),
        };
        format!(
            "arch={}\nbatch_size={}\nbeta1={}\nbeta2={}\nembedding_dim={}\nembeddings={}\nepochs={}\nepsilon={}\nfreeze_embeddings={}\nhidden_units={}\nl2_gamma={}\nlearning_rate={}\nloss_reduction={}\nlowercase={}\nseed={}\n",
            self.arch,
            self.batch_size,
            self.beta1,
            self.beta2,
            self.embedding_dim,
            embeddings,
            self.epochs,
            self.epsilon,
            self.embeddings_frozen(),
            self.hidden_units,
            self.l2_gamma,
            self.learning_rate,
            self.loss_reduction.as_str(),
            self.lowercase,
            self.seed,
        )
    }

    /// Applies one `key = value` assignment. Unknown keys are rejected by
    /// name; bad values name both the key and the offending text.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| {
                Error::Config(format!("invalid value '{value}' for config key '{key}'"))
            })
        }
        match key {
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "beta1" => self.beta1 = parse(key, value)?,
            "beta2" => self.beta2 = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "l2_gamma" => self.l2_gamma = parse(key, value)?,
            "hidden_units" => self.hidden_units = parse(key, value)?,
            "embedding_dim" => self.embedding_dim = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "arch" => self.arch = Architecture::parse(value)?,
            "embeddings" => {
                self.embedding_source = if value == "random" {
                    EmbeddingSource::Random
                } else {
                    EmbeddingSource::Pretrained(PathBuf::from(value))
                }
            }
            "freeze_embeddings" => self.freeze_embeddings = Some(parse(key, value)?),
            "loss_reduction" => self.loss_reduction = LossReduction::parse(value)?,
            "lowercase" => self.lowercase = parse(key, value)?,
            other => {
                return Err(Error::Config(format!("unknown config key '{other}'")));
            }
        }
        Ok(())
    }

    /// Parses a full `key=value` text (as produced by [`Self::to_kv`]).
    /// Blank lines and `#` comments are allowed.
    pub fn from_kv(text: &str) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::default();
        cfg.merge_kv(text)?;
        Ok(cfg)
    }

    /// Applies every assignment in `text` on top of `self`.
    pub fn merge_kv(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config(format!(
                "config line {} is not a key=value assignment: '{raw}'",
                idx + 1
            )))?;
            self.apply_kv(key.trim(), value.trim())?;
        }
        self.validate()
    }
}

/// The batch objective J.
///
/// `probs` is [B x K] with rows summing to 1 within 1e-6 (a violated row
/// is an invalid-input error — it means the caller's forward pass is
/// broken); `labels[b] < K` or a data error results. The cross-entropy
/// part is summed or averaged per `reduction`; the L2 term
/// `gamma * ||theta||^2` is added once either way.
pub fn batch_loss(
    probs: &Tensor,
    labels: &[usize],
    params: &ModelParams,
    gamma: f64,
    reduction: LossReduction,
) -> Result<f64> {
    if probs.rank() != 2 || probs.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "probs shape {:?} does not match {} labels",
            probs.shape(),
            labels.len()
        )));
    }
    let k = probs.cols();
    let mut ce = 0.0;
    for (b, &label) in labels.iter().enumerate() {
        let row = probs.row(b);
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Invalid(format!(
                "probability row {b} sums to {sum}, not 1"
            )));
        }
        if label >= k {
            return Err(Error::Data(format!(
                "label id {label} out of range for {k} classes (example {b})"
            )));
        }
        ce -= row[label].max(LOG_CLAMP).ln();
    }
    if reduction == LossReduction::Mean {
        ce /= labels.len() as f64;
    }
    Ok(ce + gamma * params.weight_squared_norm())
}

/// Forward pass over a batch: returns the [B x K] probability tensor.
pub fn batch_forward(model: &ModelParams, batch: &Batch) -> Result<Tensor> {
    let k = model.classes();
    let mut data = Vec::with_capacity(batch.len() * k);
    for (ids, mask) in batch.ids.iter().zip(&batch.mask) {
        let fwd = model.forward_masked(ids, mask)?;
        data.extend_from_slice(&fwd.probs);
    }
    Tensor::matrix(batch.len(), k, data)
}

/// Objective value and its gradient for one batch, including the L2 term.
pub fn objective_grads(
    model: &ModelParams,
    batch: &Batch,
    gamma: f64,
    reduction: LossReduction,
) -> Result<(f64, ModelGrads)> {
    let k = model.classes();
    let mut grads = ModelGrads::zeros(model);
    let mut data = Vec::with_capacity(batch.len() * k);
    for ((ids, mask), &label) in batch.ids.iter().zip(&batch.mask).zip(&batch.labels) {
        let fwd = model.forward_masked(ids, mask)?;
        model.backward(&fwd, label, &mut grads)?;
        data.extend_from_slice(&fwd.probs);
    }
    let probs = Tensor::matrix(batch.len(), k, data)?;
    let loss = batch_loss(&probs, &batch.labels, model, gamma, reduction)?;

    if reduction == LossReduction::Mean {
        let scale = 1.0 / batch.len() as f64;
        for (_, g) in grads.entries_mut() {
            for v in g.data_mut() {
                *v *= scale;
            }
        }
    }
    // d/dtheta of gamma * ||theta||^2 = 2 gamma theta on penalized arrays.
    if gamma != 0.0 {
        let entries = model.entries();
        for ((_, g), p) in grads.entries_mut().into_iter().zip(entries) {
            if p.kind == ParamKind::Weight && !p.frozen {
                g.add_scaled(p.tensor, 2.0 * gamma);
            }
        }
    }
    Ok((loss, grads))
}

/// Objective value only (used by the finite-difference harness).
pub fn objective(
    model: &ModelParams,
    batch: &Batch,
    gamma: f64,
    reduction: LossReduction,
) -> Result<f64> {
    let probs = batch_forward(model, batch)?;
    batch_loss(&probs, &batch.labels, model, gamma, reduction)
}

/// Concatenates gradient arrays for the non-frozen parameters, in the same
/// order as [`ModelParams::flatten_trainable`].
pub fn flatten_trainable_grads(params: &ModelParams, grads: &ModelGrads) -> Vec<f64> {
    let mut out = Vec::new();
    for (p, (gname, g)) in params.entries().iter().zip(grads.entries()) {
        debug_assert_eq!(p.name, gname);
        if !p.frozen {
            out.extend_from_slice(g.data());
        }
    }
    out
}

/// Adam moments, one slot per registry entry (frozen slots stay zero).
#[derive(Debug, Clone)]
pub struct AdamState {
    t: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Tensor> = params
            .entries()
            .iter()
            .map(|e| Tensor::zeros(e.tensor.shape()))
            .collect();
        AdamState {
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Number of optimizer steps taken so far.
    pub fn steps(&self) -> u64 {
        self.t
    }
}

/// One Adam update with bias correction:
/// m <- b1 m + (1-b1) g; v <- b2 v + (1-b2) g^2;
/// theta <- theta - lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps).
///
/// Frozen arrays are untouched. A non-finite gradient aborts the whole
/// step — no array is modified — with an error naming the parameter.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &ModelGrads,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    // Validate every gradient before touching any state so a bad batch
    // cannot leave the optimizer half-updated.
    {
        let entries = params.entries();
        for (p, (name, g)) in entries.iter().zip(grads.entries()) {
            if p.frozen {
                continue;
            }
            if g.shape() != p.tensor.shape() {
                return Err(Error::Shape(format!(
                    "gradient shape {:?} does not match parameter '{}' {:?}",
                    g.shape(),
                    name,
                    p.tensor.shape()
                )));
            }
            if !g.all_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite gradient for parameter '{name}'; aborting optimizer step"
                )));
            }
        }
    }

    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);

    for (i, (entry, (_, g))) in params
        .entries_mut()
        .into_iter()
        .zip(grads.entries())
        .enumerate()
    {
        if entry.frozen {
            continue;
        }
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        let theta = entry.tensor.data_mut();
        for ((t, m), (v, &g)) in theta
            .iter_mut()
            .zip(m.iter_mut())
            .zip(v.iter_mut().zip(g.data()))
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *t -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

/// One epoch's history row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-batch objective J over the epoch.
    pub train_loss: f64,
    /// Accuracy on the validation set (0.0 when the set is empty).
    pub val_accuracy: f64,
}

/// A finished training run.
#[derive(Debug)]
pub struct TrainOutcome {
    pub model: ModelParams,
    pub history: Vec<EpochStats>,
    /// Total optimizer steps: epochs x ceil(N / batch_size).
    pub steps: u64,
}

/// Trains a fresh model on `train_set`, reporting validation accuracy per
/// epoch. Both datasets must already be encoded against the vocabulary
/// that produced `embedding`.
///
/// All randomness (parameter init, per-epoch shuffling) flows from the
/// single seeded generator, so identical config + data + seed reproduce
/// bit-identical parameters and history. No early stopping and no model
/// selection: the final-epoch parameters are returned.
pub fn train(
    cfg: &TrainConfig,
    embedding: EmbeddingTable,
    train_set: &Dataset,
    val_set: &Dataset,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    if train_set.labels.len() < 2 {
        return Err(Error::Data(format!(
            "training needs at least 2 intents, got {}",
            train_set.labels.len()
        )));
    }
    let vocab_size = embedding.vocab_size();
    for (set_name, set) in [("train", train_set), ("validation", val_set)] {
        for ex in &set.examples {
            if ex.token_ids.is_empty() {
                return Err(Error::Data(format!(
                    "{set_name} example '{}' was not encoded before training",
                    ex.text
                )));
            }
            if let Some(&bad) = ex.token_ids.iter().find(|&&id| id >= vocab_size) {
                return Err(Error::Data(format!(
                    "{set_name} example '{}' holds token id {bad} outside the vocabulary ({vocab_size} entries)",
                    ex.text
                )));
            }
            if ex.intent_id >= train_set.labels.len() {
                return Err(Error::Data(format!(
                    "{set_name} example '{}' has label id {} outside the {} training labels",
                    ex.text,
                    ex.intent_id,
                    train_set.labels.len()
                )));
            }
        }
    }

    let mut rng = Rng::new(cfg.seed);
    let mut model = ModelParams::init(
        cfg.arch,
        embedding,
        cfg.hidden_units,
        train_set.labels.len(),
        &mut rng,
    )?;
    let mut state = AdamState::new(&model);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let batches = make_batches(&train_set.examples, cfg.batch_size, &mut rng, true);
        let mut loss_sum = 0.0;
        for batch in &batches {
            let (loss, grads) = objective_grads(&model, batch, cfg.l2_gamma, cfg.loss_reduction)?;
            adam_step(&mut model, &grads, &mut state, cfg)?;
            loss_sum += loss;
        }
        let train_loss = loss_sum / batches.len() as f64;

        let val_accuracy = if val_set.is_empty() {
            0.0
        } else {
            let preds = crate::eval::predict_dataset(&model, &val_set.examples)?;
            let correct = preds
                .iter()
                .zip(&val_set.examples)
                .filter(|(p, e)| **p == e.intent_id)
                .count();
            correct as f64 / val_set.len() as f64
        };
        history.push(EpochStats {
            epoch,
            train_loss,
            val_accuracy,
        });
    }

    Ok(TrainOutcome {
        model,
        history,
        steps: state.steps(),
    })
}
