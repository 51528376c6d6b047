//! Token embedding lookup.
//!
//! Row 0 of the table is the PAD embedding and is pinned to zero: it is
//! zeroed at construction and its gradient is dropped, so no training step
//! can ever move it. A frozen table additionally drops all gradients, which
//! keeps pretrained vectors bitwise intact across training.

use crate::data::vocab::PAD_ID;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Embedding matrix [V×d], optionally frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    matrix: Tensor,
    frozen: bool,
}

impl EmbeddingTable {
    /// Wraps an existing matrix. The PAD row (row 0) is forced to zero.
    pub fn new(mut matrix: Tensor, frozen: bool) -> Result<Self> {
        if matrix.rank() != 2 {
            return Err(Error::Shape(format!(
                "embedding table must be rank 2, got shape {:?}",
                matrix.shape()
            )));
        }
        if !matrix.all_finite() {
            return Err(Error::Numeric("embedding table contains non-finite entries".into()));
        }
        for x in matrix.row_mut(PAD_ID) {
            *x = 0.0;
        }
        Ok(EmbeddingTable { matrix, frozen })
    }

    /// Random table with rows uniform in [-0.05, 0.05] and a zero PAD row.
    pub fn random(vocab_size: usize, dim: usize, frozen: bool, rng: &mut Rng) -> Self {
        let mut matrix =
            Tensor::matrix(vocab_size, dim, rng.uniform_vec(vocab_size * dim, -0.05, 0.05))
                .expect("vocab_size and dim are positive");
        for x in matrix.row_mut(PAD_ID) {
            *x = 0.0;
        }
        EmbeddingTable { matrix, frozen }
    }

    pub fn vocab_size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn matrix(&self) -> &Tensor {
        &self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Tensor {
        &mut self.matrix
    }

    /// Looks up a sequence of token ids into a [T×d] tensor.
    ///
    /// Ids must be in range; the UNK id is an ordinary valid row, while an
    /// id at or beyond the vocabulary size is an error.
    pub fn embed(&self, token_ids: &[usize]) -> Result<Tensor> {
        if token_ids.is_empty() {
            return Err(Error::Invalid("cannot embed an empty sequence".into()));
        }
        let (v, d) = (self.vocab_size(), self.dim());
        let mut data = Vec::with_capacity(token_ids.len() * d);
        for &id in token_ids {
            if id >= v {
                return Err(Error::Data(format!(
                    "token id {id} is out of range for vocabulary of size {v}"
                )));
            }
            data.extend_from_slice(self.matrix.row(id));
        }
        Tensor::matrix(token_ids.len(), d, data)
    }
}

/// Accumulates embedding gradients: `grad[token_ids[t]] += d_x[t]`.
///
/// The PAD row's gradient is dropped so the PAD embedding stays zero.
pub fn embed_backward(token_ids: &[usize], d_x: &Tensor, grad: &mut Tensor) {
    debug_assert_eq!(d_x.rows(), token_ids.len());
    debug_assert_eq!(d_x.cols(), grad.cols());
    for (t, &id) in token_ids.iter().enumerate() {
        if id == PAD_ID {
            continue;
        }
        let src = d_x.row(t);
        let dst = grad.row_mut(id);
        for (g, s) in dst.iter_mut().zip(src) {
            *g += s;
        }
    }
}
