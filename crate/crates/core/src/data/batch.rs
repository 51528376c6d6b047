//! Mini-batch assembly: padding, masks, and optional seeded shuffling.

use crate::data::dataset::Example;
use crate::data::vocab::PAD_ID;
use crate::rng::Rng;

/// A padded mini-batch. Every row of `ids` is padded with PAD to the
/// batch's own maximum length; `mask[b][t]` is true exactly where position
/// t is a real token (a contiguous prefix, since padding only appends).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub ids: Vec<Vec<usize>>,
    pub mask: Vec<Vec<bool>>,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Cuts `examples` into batches of `batch_size` (the last one may be
/// short). With `shuffle`, example order is permuted first using `rng`;
/// passing the training loop's single seeded Rng keeps every epoch's
/// order deterministic. Examples must already be encoded.
pub fn make_batches(
    examples: &[Example],
    batch_size: usize,
    rng: &mut Rng,
    shuffle: bool,
) -> Vec<Batch> {
    assert!(batch_size >= 1, "batch_size must be at least 1");
    let mut order: Vec<usize> = (0..examples.len()).collect();
    if shuffle {
        rng.shuffle(&mut order);
    }

    let mut batches = Vec::with_capacity(examples.len().div_ceil(batch_size));
    for chunk in order.chunks(batch_size) {
        let t_max = chunk
            .iter()
            .map(|&i| examples[i].token_ids.len())
            .max()
            .unwrap_or(0);
        let mut ids = Vec::with_capacity(chunk.len());
        let mut mask = Vec::with_capacity(chunk.len());
        let mut labels = Vec::with_capacity(chunk.len());
        for &i in chunk {
            let ex = &examples[i];
            let mut row = ex.token_ids.clone();
            let mut m = vec![true; row.len()];
            row.resize(t_max, PAD_ID);
            m.resize(t_max, false);
            ids.push(row);
            mask.push(m);
            labels.push(ex.intent_id);
        }
        batches.push(Batch { ids, mask, labels });
    }
    batches
}
