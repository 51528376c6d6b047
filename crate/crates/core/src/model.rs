//! Full model assembly: embedding -> LSTM or Bi-LSTM -> self-attention ->
//! softmax classifier, with a named parameter registry and per-example
//! forward/backward passes.
//!
//! Sequences are processed at their true length: batching pads utterances
//! for storage, but the model slices each row back to its real tokens
//! before the encoder runs. Padded positions therefore cannot influence
//! either LSTM direction or the attention pool, which makes the
//! pad-append invariance exact rather than approximate.

use crate::error::{Error, Result};
use crate::layers::{
    attention_backward, bilstm_backward, bilstm_forward, classifier_backward, classify,
    lstm_backward, lstm_forward, self_attention, AttentionCache, AttentionGrads, AttentionParams,
    BilstmCache, ClassifierGrads, ClassifierParams, EmbeddingTable, LstmCache, LstmGrads,
    LstmParams,
};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Which encoder the model uses between embedding and attention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    /// Single forward LSTM; encoder width = hidden units.
    Lstm,
    /// Bidirectional LSTM; encoder width = 2 x hidden units.
    Bilstm,
}

impl Architecture {
    pub fn as_str(&self) -> &'static str {
        match self {
            Architecture::Lstm => "lstm",
            Architecture::Bilstm => "bilstm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lstm" => Ok(Architecture::Lstm),
            "bilstm" => Ok(Architecture::Bilstm),
            other => Err(Error::Config(format!(
                "unknown architecture '{other}' (expected 'lstm' or 'bilstm')"
            ))),
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Distinguishes weight matrices from bias vectors for the L2 penalty,
/// which applies to weights only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
}

/// All arrays of one model, addressable by name.
///
/// Registry order is fixed: embedding, lstm_fwd.{w,u,b},
/// lstm_bwd.{w,u,b} (Bi-LSTM only), attention.{w,b,v},
/// classifier.{w,b}. The optimizer, the checkpoint format, and the
/// flattened gradient-check vector all rely on this order.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub arch: Architecture,
    pub embedding: EmbeddingTable,
    pub lstm_fwd: LstmParams,
    pub lstm_bwd: Option<LstmParams>,
    pub attention: AttentionParams,
    pub classifier: ClassifierParams,
}

/// One named array view used by the optimizer and checkpointing.
pub struct ParamEntry<'a> {
    pub name: &'static str,
    pub tensor: &'a Tensor,
    pub kind: ParamKind,
    pub frozen: bool,
}

pub struct ParamEntryMut<'a> {
    pub name: &'static str,
    pub tensor: &'a mut Tensor,
    pub kind: ParamKind,
    pub frozen: bool,
}

impl ModelParams {
    /// Fresh model: Glorot weights, zero biases (forget gate 1.0), the
    /// given embedding table (pretrained or random).
    pub fn init(
        arch: Architecture,
        embedding: EmbeddingTable,
        hidden_units: usize,
        classes: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Config(format!(
                "classifier needs at least 2 intents, got {classes}"
            )));
        }
        if hidden_units == 0 {
            return Err(Error::Config("hidden_units must be positive".into()));
        }
        let dim = embedding.dim();
        let lstm_fwd = LstmParams::glorot(dim, hidden_units, rng);
        let lstm_bwd = match arch {
            Architecture::Lstm => None,
            Architecture::Bilstm => Some(LstmParams::glorot(dim, hidden_units, rng)),
        };
        let width = match arch {
            Architecture::Lstm => hidden_units,
            Architecture::Bilstm => 2 * hidden_units,
        };
        Ok(ModelParams {
            arch,
            embedding,
            lstm_fwd,
            lstm_bwd,
            attention: AttentionParams::glorot(width, width, rng),
            classifier: ClassifierParams::glorot(width, classes, rng),
        })
    }

    pub fn hidden_units(&self) -> usize {
        self.lstm_fwd.units
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding.dim()
    }

    pub fn classes(&self) -> usize {
        self.classifier.classes()
    }

    /// Encoder output width: u for LSTM, 2u for Bi-LSTM.
    pub fn encoder_width(&self) -> usize {
        match self.arch {
            Architecture::Lstm => self.hidden_units(),
            Architecture::Bilstm => 2 * self.hidden_units(),
        }
    }

    /// Named arrays in the documented registry order.
    pub fn entries(&self) -> Vec<ParamEntry<'_>> {
        let frozen = self.embedding.is_frozen();
        let mut out = vec![ParamEntry {
            name: "embedding",
            tensor: self.embedding.matrix(),
            kind: ParamKind::Weight,
            frozen,
        }];
        out.push(ParamEntry { name: "lstm_fwd.w", tensor: &self.lstm_fwd.w, kind: ParamKind::Weight, frozen: false });
        out.push(ParamEntry { name: "lstm_fwd.u", tensor: &self.lstm_fwd.u, kind: ParamKind::Weight, frozen: false });
        out.push(ParamEntry { name: "lstm_fwd.b", tensor: &self.lstm_fwd.b, kind: ParamKind::Bias, frozen: false });
        if let Some(bwd) = &self.lstm_bwd {
            out.push(ParamEntry { name: "lstm_bwd.w", tensor: &bwd.w, kind: ParamKind::Weight, frozen: false });
            out.push(ParamEntry { name: "lstm_bwd.u", tensor: &bwd.u, kind: ParamKind::Weight, frozen: false });
            out.push(ParamEntry { name: "lstm_bwd.b", tensor: &bwd.b, kind: ParamKind::Bias, frozen: false });
        }
        out.push(ParamEntry { name: "attention.w", tensor: &self.attention.w, kind: ParamKind::Weight, frozen: false });
        out.push(ParamEntry { name: "attention.b", tensor: &self.attention.b, kind: ParamKind::Bias, frozen: false });
        out.push(ParamEntry { name: "attention.v", tensor: &self.attention.v, kind: ParamKind::Weight, frozen: false });
        out.push(ParamEntry { name: "classifier.w", tensor: &self.classifier.w, kind: ParamKind::Weight, frozen: false });
        out.push(ParamEntry { name: "classifier.b", tensor: &self.classifier.b, kind: ParamKind::Bias, frozen: false });
        out
    }

    /// Mutable registry in the same order as [`Self::entries`].
    pub fn entries_mut(&mut self) -> Vec<ParamEntryMut<'_>> {
        let frozen = self.embedding.is_frozen();
        let mut out = vec![ParamEntryMut {
            name: "embedding",
            tensor: self.embedding.matrix_mut(),
            kind: ParamKind::Weight,
            frozen,
        }];
        out.push(ParamEntryMut { name: "lstm_fwd.w", tensor: &mut self.lstm_fwd.w, kind: ParamKind::Weight, frozen: false });
        out.push(ParamEntryMut { name: "lstm_fwd.u", tensor: &mut self.lstm_fwd.u, kind: ParamKind::Weight, frozen: false });
        out.push(ParamEntryMut { name: "lstm_fwd.b", tensor: &mut self.lstm_fwd.b, kind: ParamKind::Bias, frozen: false });
        if let Some(bwd) = &mut self.lstm_bwd {
            out.push(ParamEntryMut { name: "lstm_bwd.w", tensor: &mut bwd.w, kind: ParamKind::Weight, frozen: false });
            out.push(ParamEntryMut { name: "lstm_bwd.u", tensor: &mut bwd.u, kind: ParamKind::Weight, frozen: false });
            out.push(ParamEntryMut { name: "lstm_bwd.b", tensor: &mut bwd.b, kind: ParamKind::Bias, frozen: false });
        }
        out.push(ParamEntryMut { name: "attention.w", tensor: &mut self.attention.w, kind: ParamKind::Weight, frozen: false });
        out.push(ParamEntryMut { name: "attention.b", tensor: &mut self.attention.b, kind: ParamKind::Bias, frozen: false });
        out.push(ParamEntryMut { name: "attention.v", tensor: &mut self.attention.v, kind: ParamKind::Weight, frozen: false });
        out.push(ParamEntryMut { name: "classifier.w", tensor: &mut self.classifier.w, kind: ParamKind::Weight, frozen: false });
        out.push(ParamEntryMut { name: "classifier.b", tensor: &mut self.classifier.b, kind: ParamKind::Bias, frozen: false });
        out
    }

    /// Concatenates every non-frozen array in registry order. Used by the
    /// finite-difference harness.
    pub fn flatten_trainable(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for e in self.entries() {
            if !e.frozen {
                out.extend_from_slice(e.tensor.data());
            }
        }
        out
    }

    /// Inverse of [`Self::flatten_trainable`].
    pub fn load_trainable(&mut self, flat: &[f64]) -> Result<()> {
        let mut off = 0;
        for e in self.entries_mut() {
            if e.frozen {
                continue;
            }
            let n = e.tensor.len();
            if off + n > flat.len() {
                return Err(Error::Shape(format!(
                    "flat parameter vector too short at '{}'",
                    e.name
                )));
            }
            e.tensor.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        if off != flat.len() {
            return Err(Error::Shape(format!(
                "flat parameter vector has {} extra entries",
                flat.len() - off
            )));
        }
        Ok(())
    }

    /// Sum of squared entries over non-frozen weight arrays (the L2 scope:
    /// biases and frozen embeddings are excluded).
    pub fn weight_squared_norm(&self) -> f64 {
        self.entries()
            .iter()
            .filter(|e| e.kind == ParamKind::Weight && !e.frozen)
            .map(|e| e.tensor.squared_norm())
            .sum()
    }

    /// Runs the model on one utterance given at its true length (no PAD
    /// ids). Returns the cached forward pass.
    pub fn forward(&self, token_ids: &[usize]) -> Result<Forward> {
        if token_ids.is_empty() {
            return Err(Error::Invalid("cannot run the model on an empty utterance".into()));
        }
        let x = self.embedding.embed(token_ids)?;
        let (h, enc) = match (&self.arch, &self.lstm_bwd) {
            (Architecture::Lstm, _) => {
                let (h, c) = lstm_forward(&x, &self.lstm_fwd)?;
                (h, EncoderCache::Lstm(c))
            }
            (Architecture::Bilstm, Some(bwd)) => {
                let (h, c) = bilstm_forward(&x, &self.lstm_fwd, bwd)?;
                (h, EncoderCache::Bilstm(c))
            }
            (Architecture::Bilstm, None) => {
                return Err(Error::Config(
                    "bilstm architecture is missing its backward-direction parameters".into(),
                ))
            }
        };
        let mask = vec![true; token_ids.len()];
        let (context, weights, att) = self_attention(&h, &mask, &self.attention)?;
        let probs = classify(&context, &self.classifier)?;
        Ok(Forward {
            token_ids: token_ids.to_vec(),
            enc,
            h,
            att,
            context,
            weights,
            probs,
        })
    }

    /// Convenience for padded batch rows: trims `ids` to the true-length
    /// prefix marked by `mask`, then runs [`Self::forward`]. The mask must
    /// be a contiguous prefix of `true` values (the batching invariant).
    pub fn forward_masked(&self, ids: &[usize], mask: &[bool]) -> Result<Forward> {
        let len = mask.iter().take_while(|&&m| m).count();
        if mask[len..].iter().any(|&m| m) {
            return Err(Error::Invalid(
                "batch mask must be a contiguous true prefix".into(),
            ));
        }
        self.forward(&ids[..len])
    }

    /// Backpropagates the cross-entropy term for one example through the
    /// whole network, accumulating into `grads`. The caller owns the loss
    /// scaling; this uses the fused softmax identity
    /// d_logits = probs - onehot(label).
    pub fn backward(&self, fwd: &Forward, label: usize, grads: &mut ModelGrads) -> Result<()> {
        if label >= self.classes() {
            return Err(Error::Data(format!(
                "label id {label} out of range for {} intents",
                self.classes()
            )));
        }
        let mut d_logits = fwd.probs.clone();
        d_logits[label] -= 1.0;

        let d_context =
            classifier_backward(&self.classifier, &fwd.context, &d_logits, &mut grads.classifier);
        let (att_grads, d_h) = attention_backward(&self.attention, &fwd.att, &d_context);
        grads.attention.w.add_scaled(&att_grads.w, 1.0);
        grads.attention.b.add_scaled(&att_grads.b, 1.0);
        grads.attention.v.add_scaled(&att_grads.v, 1.0);

        let d_x = match (&fwd.enc, &self.lstm_bwd) {
            (EncoderCache::Lstm(cache), _) => {
                let (g, d_x) = lstm_backward(&self.lstm_fwd, cache, &d_h);
                grads.lstm_fwd.w.add_scaled(&g.w, 1.0);
                grads.lstm_fwd.u.add_scaled(&g.u, 1.0);
                grads.lstm_fwd.b.add_scaled(&g.b, 1.0);
                d_x
            }
            (EncoderCache::Bilstm(cache), Some(bwd)) => {
                let (gf, gb, d_x) = bilstm_backward(&self.lstm_fwd, bwd, cache, &d_h);
                grads.lstm_fwd.w.add_scaled(&gf.w, 1.0);
                grads.lstm_fwd.u.add_scaled(&gf.u, 1.0);
                grads.lstm_fwd.b.add_scaled(&gf.b, 1.0);
                let gb_acc = grads.lstm_bwd.as_mut().expect("bilstm grads present");
                gb_acc.w.add_scaled(&gb.w, 1.0);
                gb_acc.u.add_scaled(&gb.u, 1.0);
                gb_acc.b.add_scaled(&gb.b, 1.0);
                d_x
            }
            (EncoderCache::Bilstm(_), None) => {
                return Err(Error::Config(
                    "bilstm architecture is missing its backward-direction parameters".into(),
                ))
            }
        };

        if !self.embedding.is_frozen() {
            crate::layers::embed_backward(&fwd.token_ids, &d_x, &mut grads.embedding);
        }
        Ok(())
    }
}

/// Encoder cache, depending on the architecture.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)] // both variants are heap-backed caches
enum EncoderCache {
    Lstm(LstmCache),
    Bilstm(BilstmCache),
}

/// Cached forward pass of one utterance.
#[derive(Debug, Clone)]
pub struct Forward {
    token_ids: Vec<usize>,
    enc: EncoderCache,
    /// Encoder hidden states [T x width]; kept for inspection.
    pub h: Tensor,
    att: AttentionCache,
    pub context: Vec<f64>,
    /// Attention weights per real token; sums to 1.
    pub weights: Vec<f64>,
    /// Class probabilities; sums to 1.
    pub probs: Vec<f64>,
}

/// Gradient accumulator mirroring [`ModelParams`].
#[derive(Debug, Clone)]
pub struct ModelGrads {
    pub embedding: Tensor,
    pub lstm_fwd: LstmGrads,
    pub lstm_bwd: Option<LstmGrads>,
    pub attention: AttentionGrads,
    pub classifier: ClassifierGrads,
}

impl ModelGrads {
    pub fn zeros(p: &ModelParams) -> Self {
        ModelGrads {
            embedding: Tensor::zeros(p.embedding.matrix().shape()),
            lstm_fwd: LstmGrads::zeros(&p.lstm_fwd),
            lstm_bwd: p.lstm_bwd.as_ref().map(LstmGrads::zeros),
            attention: AttentionGrads::zeros(&p.attention),
            classifier: ClassifierGrads::zeros(&p.classifier),
        }
    }

    /// Gradient arrays in the same registry order as
    /// [`ModelParams::entries`].
    pub fn entries(&self) -> Vec<(&'static str, &Tensor)> {
        let mut out = vec![("embedding", &self.embedding)];
        out.push(("lstm_fwd.w", &self.lstm_fwd.w));
        out.push(("lstm_fwd.u", &self.lstm_fwd.u));
        out.push(("lstm_fwd.b", &self.lstm_fwd.b));
        if let Some(bwd) = &self.lstm_bwd {
            out.push(("lstm_bwd.w", &bwd.w));
            out.push(("lstm_bwd.u", &bwd.u));
            out.push(("lstm_bwd.b", &bwd.b));
        }
        out.push(("attention.w", &self.attention.w));
        out.push(("attention.b", &self.attention.b));
        out.push(("attention.v", &self.attention.v));
        out.push(("classifier.w", &self.classifier.w));
        out.push(("classifier.b", &self.classifier.b));
        out
    }

    pub fn entries_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        let mut out = vec![("embedding", &mut self.embedding)];
        out.push(("lstm_fwd.w", &mut self.lstm_fwd.w));
        out.push(("lstm_fwd.u", &mut self.lstm_fwd.u));
        out.push(("lstm_fwd.b", &mut self.lstm_fwd.b));
        if let Some(bwd) = &mut self.lstm_bwd {
            out.push(("lstm_bwd.w", &mut bwd.w));
            out.push(("lstm_bwd.u", &mut bwd.u));
            out.push(("lstm_bwd.b", &mut bwd.b));
        }
        out.push(("attention.w", &mut self.attention.w));
        out.push(("attention.b", &mut self.attention.b));
        out.push(("attention.v", &mut self.attention.v));
        out.push(("classifier.w", &mut self.classifier.w));
        out.push(("classifier.b", &mut self.classifier.b));
        out
    }
}
