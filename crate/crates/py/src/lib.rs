//! Python bindings for the intent-detection toolkit.
//!
//! The module mirrors the command-line surface in-process:
//!
//! ```python
//! import sanintent_py as si
//!
//! si.synth("corpus.jsonl", intents=3, per_intent=40, seed=7)
//! model = si.train("corpus.jsonl", epochs=5, hidden_units=32, seed=1)
//! label, confidence = model.predict("turn on the kitchen lights")
//! model.save("model.bin")
//! again = si.IntentModel.load("model.bin")
//! ```
//!
//! `train` accepts the same keys as the config file and the CLI flags
//! (`epochs`, `arch`, `l2_gamma`, `test_fraction`, ...), so a value
//! that works in one place works in all three. Training releases the
//! GIL.
//!
//! Errors surface as `ValueError` (bad configuration or data), `IOError`
//! (filesystem), or `RuntimeError` (checkpoint, numeric, or internal).

// The #[pymethods]/#[pyfunction] macros wrap every PyResult return in a
// conversion that clippy flags when the types already match.
#![allow(clippy::useless_conversion)]

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyAny, PyDict};

use sanintent::checkpoint::{self, Checkpoint};
use sanintent::config::{self, RunConfig};
use sanintent::data::dataset::Dataset;
use sanintent::data::embeddings::load_embeddings;
use sanintent::data::split::split;
use sanintent::data::synthetic::generate_synthetic;
use sanintent::data::text::preprocess_with;
use sanintent::data::vocab::Vocab;
use sanintent::error::Error;
use sanintent::eval::{self, argmax_tie_low, ReportMeta};
use sanintent::layers::embedding::EmbeddingTable;
use sanintent::model::Forward;
use sanintent::rng::Rng;
use sanintent::training::{train as train_core, EmbeddingSource, EpochStats};

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Config(_) | Error::Data(_) | Error::Parse { .. } => PyValueError::new_err(msg),
        Error::Io(_) => PyIOError::new_err(msg),
        _ => PyRuntimeError::new_err(msg),
    }
}

/// Renders a Python override value as the config-file string the core
/// parsers expect: bools become `true`/`false`, everything else is `str()`.
fn kv_string(value: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(b) = value.extract::<bool>() {
        return Ok(if b { "true" } else { "false" }.to_string());
    }
    Ok(value.str()?.to_string())
}

/// A trained intent classifier: the model weights plus the vocabulary,
/// label set, and preprocessing configuration they were trained with.
#[pyclass(module = "sanintent_py")]
struct IntentModel {
    ckpt: Checkpoint,
    history: Vec<EpochStats>,
}

impl IntentModel {
    fn forward_text(&self, text: &str) -> PyResult<(Vec<String>, Forward)> {
        let tokens = preprocess_with(text, self.ckpt.config.lowercase);
        let ids = self.ckpt.vocab.encode(&tokens);
        let fwd = self.ckpt.model.forward(&ids).map_err(py_err)?;
        Ok((tokens, fwd))
    }
}

#[pymethods]
impl IntentModel {
    /// Loads a model saved by `save` or by the CLI `train` command.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let ckpt = checkpoint::load(&path).map_err(py_err)?;
        Ok(IntentModel { ckpt, history: Vec::new() })
    }

    /// Writes the model as a deterministic binary checkpoint.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        checkpoint::save(
            &path,
            &self.ckpt.model,
            &self.ckpt.config,
            &self.ckpt.labels,
            &self.ckpt.vocab,
        )
        .map_err(py_err)
    }

    /// Returns `(label, confidence)` for one utterance. Ties between
    /// equal probabilities go to the lower label index.
    fn predict(&self, text: &str) -> PyResult<(String, f64)> {
        let (_, fwd) = self.forward_text(text)?;
        let pred = argmax_tie_low(&fwd.probs);
        Ok((self.ckpt.labels[pred].clone(), fwd.probs[pred]))
    }

    /// Returns every label with its probability, in label order; the
    /// probabilities sum to 1.
    fn predict_proba(&self, text: &str) -> PyResult<Vec<(String, f64)>> {
        let (_, fwd) = self.forward_text(text)?;
        Ok(self
            .ckpt
            .labels
            .iter()
            .cloned()
            .zip(fwd.probs.iter().copied())
            .collect())
    }

    /// Returns `(token, attention_weight)` per preprocessed token; the
    /// weights sum to 1.
    fn attention(&self, text: &str) -> PyResult<Vec<(String, f64)>> {
        let (tokens, fwd) = self.forward_text(text)?;
        Ok(tokens.into_iter().zip(fwd.weights.iter().copied()).collect())
    }

    /// Evaluates the model on a dataset file and returns a dict with
    /// `accuracy`, `micro_f1`, `macro_f1`, `overall_f1`, and a
    /// `per_class` dict of precision/recall/f1/support per label. The
    /// dataset must use exactly the model's label set.
    #[pyo3(signature = (dataset, format = "jsonl"))]
    fn evaluate(&self, py: Python<'_>, dataset: PathBuf, format: &str) -> PyResult<Py<PyDict>> {
        let fmt = sanintent::data::dataset::Format::parse(format).map_err(py_err)?;
        let mut ds =
            Dataset::load(&dataset, fmt, self.ckpt.config.lowercase).map_err(py_err)?;
        ds.relabel(&self.ckpt.labels).map_err(py_err)?;
        ds.encode(&self.ckpt.vocab);

        let meta = ReportMeta {
            dataset: dataset.display().to_string(),
            model: "<memory>".to_string(),
            seed: self.ckpt.config.seed,
            config_hash: format!(
                "{:016x}",
                config::fnv1a(self.ckpt.config.to_kv().as_bytes())
            ),
        };
        let report = eval::evaluate(&self.ckpt.model, &ds, meta).map_err(py_err)?;

        let d = PyDict::new_bound(py);
        d.set_item("accuracy", report.accuracy)?;
        d.set_item("micro_f1", report.micro_f1)?;
        d.set_item("macro_f1", report.macro_f1)?;
        d.set_item("overall_f1", report.overall_f1)?;
        let per = PyDict::new_bound(py);
        for c in &report.per_class {
            let row = PyDict::new_bound(py);
            row.set_item("precision", c.precision)?;
            row.set_item("recall", c.recall)?;
            row.set_item("f1", c.f1)?;
            row.set_item("support", c.support)?;
            per.set_item(&c.label, row)?;
        }
        d.set_item("per_class", per)?;
        Ok(d.unbind())
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.ckpt.labels.clone()
    }

    #[getter]
    fn architecture(&self) -> &'static str {
        self.ckpt.model.arch.as_str()
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.ckpt.vocab.size()
    }

    #[getter]
    fn embedding_dim(&self) -> usize {
        self.ckpt.model.embedding_dim()
    }

    #[getter]
    fn hidden_units(&self) -> usize {
        self.ckpt.model.hidden_units()
    }

    /// Per-epoch `{epoch, train_loss, val_accuracy}` dicts for a model
    /// returned by `train`; empty for a model loaded from disk.
    #[getter]
    fn history(&self, py: Python<'_>) -> PyResult<Vec<Py<PyDict>>> {
        self.history
            .iter()
            .map(|row| {
                let d = PyDict::new_bound(py);
                d.set_item("epoch", row.epoch)?;
                d.set_item("train_loss", row.train_loss)?;
                d.set_item("val_accuracy", row.val_accuracy)?;
                Ok(d.unbind())
            })
            .collect()
    }

    /// The training configuration as the same `key=value` strings the
    /// config file uses.
    #[getter]
    fn config(&self, py: Python<'_>) -> PyResult<Py<PyDict>> {
        let d = PyDict::new_bound(py);
        for line in self.ckpt.config.to_kv().lines() {
            if let Some((k, v)) = line.split_once('=') {
                d.set_item(k.trim(), v.trim())?;
            }
        }
        Ok(d.unbind())
    }

    fn __repr__(&self) -> String {
        format!(
            "IntentModel(architecture='{}', labels={}, vocab_size={})",
            self.ckpt.model.arch.as_str(),
            self.ckpt.labels.len(),
            self.ckpt.vocab.size()
        )
    }
}

/// Trains a model on a dataset file and returns it with its history.
///
/// Keyword overrides take the config-file keys: training keys (`arch`,
/// `epochs`, `batch_size`, `learning_rate`, `l2_gamma`,
/// `hidden_units`, `embedding_dim`, `embeddings`, `freeze_embeddings`,
/// `seed`, `lowercase`, `loss_reduction`, ...) plus `format`,
/// `test_fraction`, and `val_fraction`. Values may be Python
/// bools/numbers/strings.
#[pyfunction]
#[pyo3(signature = (dataset, **overrides))]
fn train(
    py: Python<'_>,
    dataset: PathBuf,
    overrides: Option<&Bound<'_, PyDict>>,
) -> PyResult<IntentModel> {
    let mut cfg = RunConfig { dataset: Some(dataset.clone()), ..RunConfig::default() };
    if let Some(kw) = overrides {
        for (key, value) in kw.iter() {
            let key: String = key.extract()?;
            let value = kv_string(&value)?;
            cfg.apply_kv(&key, &value).map_err(py_err)?;
        }
    }
    cfg.validate().map_err(py_err)?;

    let full = Dataset::load(&dataset, cfg.format, cfg.train.lowercase).map_err(py_err)?;
    let (train_ex, val_ex, _test_ex, _warnings) =
        split(&full.examples, cfg.split_ratios(), cfg.train.seed).map_err(py_err)?;

    // The vocabulary comes from the training split only, so held-out
    // words hit <unk> exactly as unseen production words would.
    let vocab = Vocab::build(
        train_ex
            .iter()
            .map(|e| e.tokens.iter().map(|t| t.as_str())),
    );
    let mut train_ds = Dataset { examples: train_ex, labels: full.labels.clone() };
    let mut val_ds = Dataset { examples: val_ex, labels: full.labels.clone() };
    train_ds.encode(&vocab);
    val_ds.encode(&vocab);

    // Embedding init draws from seed+1 so its stream never overlaps the
    // model-init stream inside the training loop (which uses the seed
    // itself). This matches the CLI exactly, so the same file and seed
    // give bit-identical models from Python and from the command line.
    let mut emb_rng = Rng::new(cfg.train.seed.wrapping_add(1));
    let frozen = cfg.train.embeddings_frozen();
    let table = match &cfg.train.embedding_source {
        EmbeddingSource::Random => {
            EmbeddingTable::random(vocab.size(), cfg.train.embedding_dim, frozen, &mut emb_rng)
        }
        EmbeddingSource::Pretrained(path) => {
            load_embeddings(path, &vocab, cfg.train.embedding_dim, frozen, &mut emb_rng)
                .map_err(py_err)?
                .table
        }
    };

    let train_cfg = cfg.train.clone();
    let outcome = py
        .allow_threads(move || train_core(&train_cfg, table, &train_ds, &val_ds))
        .map_err(py_err)?;

    Ok(IntentModel {
        ckpt: Checkpoint {
            version: checkpoint::FORMAT_VERSION,
            config: cfg.train,
            labels: full.labels,
            vocab,
            model: outcome.model,
        },
        history: outcome.history,
    })
}

/// Writes a synthetic smart-home corpus as jsonl and returns the number
/// of examples written.
#[pyfunction]
#[pyo3(signature = (path, intents = 6, per_intent = 100, seed = 11))]
fn synth(path: PathBuf, intents: usize, per_intent: usize, seed: u64) -> PyResult<usize> {
    let ds = generate_synthetic(intents, per_intent, seed).map_err(py_err)?;
    ds.write_jsonl(&path).map_err(py_err)?;
    Ok(ds.len())
}

/// Tokenizes one utterance exactly as training and prediction do:
/// lowercase (optional), punctuation to spaces, digit runs to English
/// words, whitespace split; empty input yields the `<unk>` sentinel.
#[pyfunction]
#[pyo3(signature = (text, lowercase = true))]
fn preprocess(text: &str, lowercase: bool) -> Vec<String> {
    preprocess_with(text, lowercase)
}

#[pymodule]
fn sanintent_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<IntentModel>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
