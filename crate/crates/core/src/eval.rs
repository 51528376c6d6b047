//! Confusion matrices and the metric suite: accuracy, per-class
//! precision/recall/F1, micro F1, macro F1, and their average as the
//! single reported "overall F1".

use serde::{Deserialize, Serialize};

use crate::data::dataset::{Dataset, Example};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Index of the largest value; ties break to the lowest index so
/// prediction is deterministic.
pub fn argmax_tie_low(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

/// K x K counts; rows are gold intents, columns are predicted intents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    /// Tallies gold/predicted id pairs.
    pub fn from_pairs(golds: &[usize], preds: &[usize], labels: &[String]) -> Result<ConfusionMatrix> {
        if golds.len() != preds.len() {
            return Err(Error::Invalid(format!(
                "confusion needs equal-length sequences, got {} golds and {} predictions",
                golds.len(),
                preds.len()
            )));
        }
        let k = labels.len();
        let mut counts = vec![vec![0u64; k]; k];
        for (&g, &p) in golds.iter().zip(preds) {
            if g >= k || p >= k {
                return Err(Error::Invalid(format!(
                    "class id out of range: gold {g}, predicted {p}, but only {k} classes"
                )));
            }
            counts[g][p] += 1;
        }
        Ok(ConfusionMatrix { labels: labels.to_vec(), counts })
    }

    pub fn classes(&self) -> usize {
        self.labels.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }
}

/// Per-class precision/recall/F1 plus gold-count support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Provenance carried inside every report.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub dataset: String,
    pub model: String,
    pub seed: u64,
    pub config_hash: String,
}

/// The full evaluation result. `overall_f1` is always the exact
/// arithmetic mean of `micro_f1` and `macro_f1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub overall_f1: f64,
    pub confusion: ConfusionMatrix,
    pub meta: ReportMeta,
}

/// 2pr/(p+r), with the zero-denominator case defined as 0 and the equal-
/// argument case returned directly (the harmonic mean of x and x is x;
/// the branch keeps that identity exact in floating point).
fn harmonic(p: f64, r: f64) -> f64 {
    if p == r {
        p
    } else if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Computes every metric from a confusion matrix.
///
/// Zero-denominator precision/recall are defined as 0 so macro averaging
/// stays total. Micro F1 is computed from globally pooled TP/FP/FN; for
/// single-label multiclass counts it necessarily equals accuracy.
pub fn metrics(cm: &ConfusionMatrix, meta: ReportMeta) -> Result<EvalReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Invalid("cannot compute metrics on an empty confusion matrix".into()));
    }
    let k = cm.classes();

    let mut per_class = Vec::with_capacity(k);
    let mut f1_sum = 0.0;
    let (mut tp_all, mut fp_all, mut fn_all) = (0u64, 0u64, 0u64);
    for c in 0..k {
        let tp = cm.counts[c][c];
        let fp = cm.col_sum(c) - tp;
        let fn_ = cm.row_sum(c) - tp;
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = harmonic(precision, recall);
        f1_sum += f1;
        per_class.push(ClassMetrics {
            label: cm.labels[c].clone(),
            precision,
            recall,
            f1,
            support: cm.row_sum(c),
        });
    }

    let accuracy = cm.trace() as f64 / total as f64;
    let micro_p = ratio(tp_all, tp_all + fp_all);
    let micro_r = ratio(tp_all, tp_all + fn_all);
    let micro_f1 = harmonic(micro_p, micro_r);
    let macro_f1 = f1_sum / k as f64;
    let overall_f1 = (micro_f1 + macro_f1) / 2.0;

    Ok(EvalReport {
        accuracy,
        per_class,
        micro_f1,
        macro_f1,
        overall_f1,
        confusion: cm.clone(),
        meta,
    })
}

/// Argmax predictions for every encoded example. Token ids must fit the
/// model's embedding table; a vocabulary mismatch is a configuration
/// error rather than a data error because it means the checkpoint and the
/// encoding step disagree.
pub fn predict_dataset(model: &ModelParams, examples: &[Example]) -> Result<Vec<usize>> {
    let vocab_size = model.embedding.vocab_size();
    let mut preds = Vec::with_capacity(examples.len());
    for ex in examples {
        if let Some(&bad) = ex.token_ids.iter().find(|&&id| id >= vocab_size) {
            return Err(Error::Config(format!(
                "token id {bad} exceeds the model's vocabulary ({vocab_size} entries); \
                 the dataset was encoded against a different vocabulary"
            )));
        }
        let fwd = model.forward(&ex.token_ids)?;
        preds.push(argmax_tie_low(&fwd.probs));
    }
    Ok(preds)
}

/// Runs the model over an encoded, relabeled dataset and assembles the
/// full report.
pub fn evaluate(model: &ModelParams, dataset: &Dataset, meta: ReportMeta) -> Result<EvalReport> {
    if dataset.labels.len() != model.classes() {
        return Err(Error::Config(format!(
            "dataset has {} labels but the model classifies {} intents",
            dataset.labels.len(),
            model.classes()
        )));
    }
    let preds = predict_dataset(model, &dataset.examples)?;
    let golds: Vec<usize> = dataset.examples.iter().map(|e| e.intent_id).collect();
    let cm = ConfusionMatrix::from_pairs(&golds, &preds, &dataset.labels)?;
    metrics(&cm, meta)
}

impl EvalReport {
    /// One-line JSON form; numeric fields round-trip at full precision.
    pub fn to_json_line(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Data(format!("cannot serialize report: {e}")))
    }

    pub fn from_json_line(line: &str) -> Result<EvalReport> {
        serde_json::from_str(line).map_err(|e| Error::Data(format!("cannot parse report: {e}")))
    }

    /// Human-readable rendering: a summary row with accuracy as a
    /// one-decimal percentage and F1 scores to two decimals, the
    /// per-class table, and the labeled confusion grid.
    pub fn render_text(&self) -> String {
        use std::fmt::Write;

        let mut out = String::new();
        let _ = writeln!(
            out,
            "dataset: {}    model: {}    seed: {}    config: {}",
            self.meta.dataset, self.meta.model, self.meta.seed, self.meta.config_hash
        );
        let _ = writeln!(
            out,
            "accuracy: {:.1}%    overall F1: {:.2}    (micro {:.2}, macro {:.2})",
            self.accuracy * 100.0,
            self.overall_f1,
            self.micro_f1,
            self.macro_f1
        );
        out.push('\n');

        let label_w = self
            .per_class
            .iter()
            .map(|c| c.label.len())
            .max()
            .unwrap_or(6)
            .max("intent".len());
        let _ = writeln!(
            out,
            "{:label_w$}  precision  recall  f1      support",
            "intent"
        );
        for c in &self.per_class {
            let _ = writeln!(
                out,
                "{:label_w$}  {:<9.4}  {:<6.4}  {:<6.4}  {}",
                c.label, c.precision, c.recall, c.f1, c.support
            );
        }
        out.push('\n');

        let _ = writeln!(out, "confusion (rows = gold, columns = predicted):");
        let cell_w = self
            .confusion
            .counts
            .iter()
            .flatten()
            .map(|c| c.to_string().len())
            .max()
            .unwrap_or(1)
            .max(self.confusion.classes().to_string().len())
            + 2;
        let idx_w = (self.confusion.classes().saturating_sub(1)).to_string().len();
        let row_w = label_w + idx_w + 1;
        let _ = write!(out, "{:row_w$} ", "");
        for j in 0..self.confusion.classes() {
            let _ = write!(out, "{:>cell_w$}", j);
        }
        out.push('\n');
        for (i, row) in self.confusion.counts.iter().enumerate() {
            let header = format!("{i:>idx_w$} {}", self.confusion.labels[i]);
            let _ = write!(out, "{header:row_w$} ");
            for c in row {
                let _ = write!(out, "{:>cell_w$}", c);
            }
            out.push('\n');
        }
        out
    }
}
