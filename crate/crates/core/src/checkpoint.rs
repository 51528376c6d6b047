//! Binary model checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        10 bytes   "SANINTENT\n"
//! version      u32        format version, currently 1
//! meta_len     u64        byte length of the metadata text
//! metadata     UTF-8      [config] key=value lines,
//!                         [labels] one intent name per line,
//!                         [vocab]  one token per line in id order
//! array_count  u32
//! per array:
//!   name_len   u16        then that many UTF-8 name bytes
//!   rank       u8         1 or 2
//!   dims       rank x u64
//!   data       product(dims) x f64, little-endian
//! ```
//!
//! Writes are fully deterministic — fixed key order, fixed array registry
//! order — so two identical models serialize to identical bytes. Corrupt
//! or truncated files produce checkpoint errors, never panics.

use std::fs;
use std::path::Path;

use crate::data::vocab::Vocab;
use crate::error::{Error, Result};
use crate::layers::{AttentionParams, ClassifierParams, EmbeddingTable, LstmParams};
use crate::model::{Architecture, ModelParams};
use crate::tensor::Tensor;
use crate::training::TrainConfig;

pub const MAGIC: &[u8; 10] = b"SANINTENT\n";
pub const FORMAT_VERSION: u32 = 1;

const SECTION_CONFIG: &str = "[config]";
const SECTION_LABELS: &str = "[labels]";
const SECTION_VOCAB: &str = "[vocab]";

/// Everything a checkpoint stores: enough to reload the model and run it
/// on raw text (config for the freeze/arch flags, labels for decoding
/// predictions, vocabulary for encoding input).
#[derive(Debug)]
pub struct Checkpoint {
    pub version: u32,
    pub config: TrainConfig,
    pub labels: Vec<String>,
    pub vocab: Vocab,
    pub model: ModelParams,
}

/// Serializes `model` plus its companion metadata to `path`.
pub fn save(
    path: &Path,
    model: &ModelParams,
    config: &TrainConfig,
    labels: &[String],
    vocab: &Vocab,
) -> Result<()> {
    if config.arch != model.arch {
        return Err(Error::Checkpoint(format!(
            "config says architecture '{}' but the model is '{}'",
            config.arch, model.arch
        )));
    }
    if labels.len() != model.classes() {
        return Err(Error::Checkpoint(format!(
            "{} labels for a {}-class model",
            labels.len(),
            model.classes()
        )));
    }
    if vocab.size() != model.embedding.vocab_size() {
        return Err(Error::Checkpoint(format!(
            "vocabulary holds {} tokens but the embedding table has {} rows",
            vocab.size(),
            model.embedding.vocab_size()
        )));
    }
    for label in labels {
        if label.contains('\n') || label.starts_with('[') {
            return Err(Error::Checkpoint(format!(
                "label '{label}' cannot be stored in the text metadata block"
            )));
        }
    }

    let mut meta = String::new();
    meta.push_str(SECTION_CONFIG);
    meta.push('\n');
    meta.push_str(&config.to_kv());
    meta.push_str(SECTION_LABELS);
    meta.push('\n');
    for label in labels {
        meta.push_str(label);
        meta.push('\n');
    }
    meta.push_str(SECTION_VOCAB);
    meta.push('\n');
    meta.push_str(&vocab.to_lines());

    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(meta.len() as u64).to_le_bytes());
    buf.extend_from_slice(meta.as_bytes());

    let entries = model.entries();
    buf.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for e in entries {
        buf.extend_from_slice(&(e.name.len() as u16).to_le_bytes());
        buf.extend_from_slice(e.name.as_bytes());
        buf.push(e.tensor.rank() as u8);
        for &d in e.tensor.shape() {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in e.tensor.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    fs::write(path, buf)?;
    Ok(())
}

/// Byte cursor with truncation-aware reads.
struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Checkpoint(format!(
                "checkpoint is truncated ({} bytes, wanted {} more at offset {})",
                self.buf.len(),
                n,
                self.pos
            ))),
        }
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

/// Loads a checkpoint, rebuilding the model from the named arrays and
/// cross-checking every shape against the metadata.
pub fn load(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path)?;
    let mut cur = Cursor { buf: &bytes, pos: 0 };

    if cur.take(MAGIC.len())? != MAGIC {
        return Err(Error::Checkpoint(format!(
            "'{}' is not a model checkpoint (bad magic)",
            path.display()
        )));
    }
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint format version {version} (this build reads version {FORMAT_VERSION})"
        )));
    }

    let meta_len = cur.u64()? as usize;
    let meta = std::str::from_utf8(cur.take(meta_len)?)
        .map_err(|_| Error::Checkpoint("metadata block is not valid UTF-8".into()))?;
    let (config, labels, vocab) = parse_metadata(meta)?;

    let array_count = cur.u32()? as usize;
    let mut arrays: Vec<(String, Tensor)> = Vec::with_capacity(array_count);
    for _ in 0..array_count {
        let name_len = cur.u16()? as usize;
        let name = std::str::from_utf8(cur.take(name_len)?)
            .map_err(|_| Error::Checkpoint("array name is not valid UTF-8".into()))?
            .to_string();
        let rank = cur.take(1)?[0];
        if rank == 0 || rank > 2 {
            return Err(Error::Checkpoint(format!(
                "array '{name}' has unsupported rank {rank}"
            )));
        }
        let mut dims = Vec::with_capacity(rank as usize);
        for _ in 0..rank {
            dims.push(cur.u64()? as usize);
        }
        let len: usize = dims.iter().product();
        let raw = cur.take(len.checked_mul(8).ok_or_else(|| {
            Error::Checkpoint(format!("array '{name}' has an implausible size"))
        })?)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let tensor = match dims.as_slice() {
            [n] => {
                debug_assert_eq!(*n, data.len());
                Tensor::vector(data)
            }
            [r, c] => Tensor::matrix(*r, *c, data)
                .map_err(|e| Error::Checkpoint(format!("array '{name}': {e}")))?,
            _ => unreachable!(),
        };
        if !tensor.all_finite() {
            return Err(Error::Checkpoint(format!(
                "array '{name}' holds non-finite values"
            )));
        }
        arrays.push((name, tensor));
    }
    if !cur.done() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes after the last array",
            bytes.len() - cur.pos
        )));
    }

    let model = rebuild_model(&config, &labels, &vocab, arrays)?;
    Ok(Checkpoint {
        version,
        config,
        labels,
        vocab,
        model,
    })
}

/// [`load`], then verify the architecture matches what the caller wants.
pub fn load_as(path: &Path, expected: Architecture) -> Result<Checkpoint> {
    let ckpt = load(path)?;
    if ckpt.model.arch != expected {
        return Err(Error::Checkpoint(format!(
            "checkpoint holds a {} model, not the requested {}",
            ckpt.model.arch, expected
        )));
    }
    Ok(ckpt)
}

fn parse_metadata(meta: &str) -> Result<(TrainConfig, Vec<String>, Vocab)> {
    let mut lines = meta.lines().peekable();
    if lines.next() != Some(SECTION_CONFIG) {
        return Err(Error::Checkpoint(format!(
            "metadata must open with {SECTION_CONFIG}"
        )));
    }
    let mut config_text = String::new();
    for line in lines.by_ref() {
        if line == SECTION_LABELS {
            break;
        }
        config_text.push_str(line);
        config_text.push('\n');
    }
    let config = TrainConfig::from_kv(&config_text)
        .map_err(|e| Error::Checkpoint(format!("bad {SECTION_CONFIG} block: {e}")))?;

    let mut labels = Vec::new();
    let mut saw_vocab = false;
    for line in lines.by_ref() {
        if line == SECTION_VOCAB {
            saw_vocab = true;
            break;
        }
        labels.push(line.to_string());
    }
    if !saw_vocab {
        return Err(Error::Checkpoint(format!(
            "metadata is missing the {SECTION_VOCAB} block"
        )));
    }
    if labels.len() < 2 {
        return Err(Error::Checkpoint(format!(
            "checkpoint stores {} labels; a classifier needs at least 2",
            labels.len()
        )));
    }

    let vocab_text: String = lines.map(|l| format!("{l}\n")).collect();
    let vocab = Vocab::from_lines(&vocab_text)?;
    Ok((config, labels, vocab))
}

fn rebuild_model(
    config: &TrainConfig,
    labels: &[String],
    vocab: &Vocab,
    arrays: Vec<(String, Tensor)>,
) -> Result<ModelParams> {
    let mut arrays = arrays;
    let mut take = |name: &str| -> Result<Tensor> {
        match arrays.iter().position(|(n, _)| n == name) {
            Some(i) => Ok(arrays.remove(i).1),
            None => Err(Error::Checkpoint(format!(
                "checkpoint is missing array '{name}'"
            ))),
        }
    };

    let u = config.hidden_units;
    let k = labels.len();

    let emb_matrix = take("embedding")?;
    expect_shape("embedding", &emb_matrix, &[vocab.size(), config.embedding_dim])?;
    let embedding = EmbeddingTable::new(emb_matrix, config.embeddings_frozen())?;
    let d = embedding.dim();

    let lstm = |w: Tensor, uu: Tensor, b: Tensor, tag: &str| -> Result<LstmParams> {
        expect_shape(&format!("{tag}.w"), &w, &[4 * u, d])?;
        expect_shape(&format!("{tag}.u"), &uu, &[4 * u, u])?;
        expect_shape(&format!("{tag}.b"), &b, &[4 * u])?;
        Ok(LstmParams { w, u: uu, b, units: u })
    };
    let lstm_fwd = lstm(take("lstm_fwd.w")?, take("lstm_fwd.u")?, take("lstm_fwd.b")?, "lstm_fwd")?;
    let lstm_bwd = match config.arch {
        Architecture::Lstm => None,
        Architecture::Bilstm => Some(lstm(
            take("lstm_bwd.w")?,
            take("lstm_bwd.u")?,
            take("lstm_bwd.b")?,
            "lstm_bwd",
        )?),
    };
    let width = match config.arch {
        Architecture::Lstm => u,
        Architecture::Bilstm => 2 * u,
    };

    let attention = AttentionParams {
        w: take("attention.w")?,
        b: take("attention.b")?,
        v: take("attention.v")?,
    };
    expect_shape("attention.w", &attention.w, &[width, width])?;
    expect_shape("attention.b", &attention.b, &[width])?;
    expect_shape("attention.v", &attention.v, &[width])?;

    let classifier = ClassifierParams {
        w: take("classifier.w")?,
        b: take("classifier.b")?,
    };
    expect_shape("classifier.w", &classifier.w, &[k, width])?;
    expect_shape("classifier.b", &classifier.b, &[k])?;

    if let Some((name, _)) = arrays.first() {
        return Err(Error::Checkpoint(format!(
            "checkpoint holds an unexpected array '{name}'"
        )));
    }

    Ok(ModelParams {
        arch: config.arch,
        embedding,
        lstm_fwd,
        lstm_bwd,
        attention,
        classifier,
    })
}

fn expect_shape(name: &str, t: &Tensor, shape: &[usize]) -> Result<()> {
    if t.shape() != shape {
        return Err(Error::Checkpoint(format!(
            "array '{name}' has shape {:?}, expected {:?}",
            t.shape(),
            shape
        )));
    }
    Ok(())
}
