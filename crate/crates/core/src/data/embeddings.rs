//! Loader for pretrained word vectors in the standard text format:
//! an optional first header line `count dim`, then one line per token —
//! the token followed by `dim` reals, all space-separated. Both the
//! common Word2Vec and FastText text exports follow this layout.

use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::data::vocab::{Vocab, PAD_ID, UNK_ID};
use crate::error::{Error, Result};
use crate::layers::EmbeddingTable;
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Result of matching an embedding file against a vocabulary.
#[derive(Debug)]
pub struct LoadedEmbeddings {
    pub table: EmbeddingTable,
    /// Fraction of non-reserved vocabulary tokens found in the file.
    pub coverage: f64,
    pub found: usize,
    pub missing: usize,
}

/// Builds an embedding table for `vocab` from the vector file at `path`.
///
/// Rows for tokens present in the file are copied exactly; missing tokens
/// (UNK included, unless the file carries it) are initialized uniformly
/// in [-0.05, 0.05] from `rng`; the PAD row is forced to zero. Every line
/// must carry exactly `dim` values — a mismatch is a parse error naming
/// the 1-based line number.
pub fn load_embeddings(
    path: &Path,
    vocab: &Vocab,
    dim: usize,
    frozen: bool,
    rng: &mut Rng,
) -> Result<LoadedEmbeddings> {
    if dim == 0 {
        return Err(Error::Config("embedding dim must be positive".into()));
    }
    let file = std::fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot open embedding file {}: {e}", path.display()),
        ))
    })?;
    let reader = BufReader::new(file);

    // Start from random rows; file rows overwrite the tokens we find.
    let mut matrix = Tensor::matrix(
        vocab.size(),
        dim,
        rng.uniform_vec(vocab.size() * dim, -0.05, 0.05),
    )?;
    let mut found = vec![false; vocab.size()];

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_ascii_whitespace();
        let token = fields.next().expect("non-empty line has a first field");
        let values: Vec<&str> = fields.collect();

        // Header detection: a first line of exactly two integer fields is
        // the `count dim` header, not a token row.
        if lineno == 1 && values.len() == 1 {
            if let (Ok(_), Ok(file_dim)) = (token.parse::<u64>(), values[0].parse::<u64>()) {
                if file_dim as usize != dim {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!(
                            "embedding file declares dim {file_dim}, expected {dim}"
                        ),
                    });
                }
                continue;
            }
        }

        if values.len() != dim {
            return Err(Error::Parse {
                line: lineno,
                msg: format!(
                    "expected {} values after token '{}', found {}",
                    dim,
                    token,
                    values.len()
                ),
            });
        }
        if !vocab.contains(token) {
            continue;
        }
        let id = vocab.id(token);
        if id == PAD_ID {
            continue; // PAD stays zero regardless of file contents.
        }
        let row = matrix.row_mut(id);
        for (j, v) in values.iter().enumerate() {
            row[j] = v.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("value {} ('{}') is not a number", j + 1, v),
            })?;
        }
        found[id] = true;
    }

    let real_tokens = vocab.size().saturating_sub(2);
    let found_count = found
        .iter()
        .enumerate()
        .filter(|&(id, &f)| f && id != PAD_ID && id != UNK_ID)
        .count();
    let coverage = if real_tokens == 0 {
        0.0
    } else {
        found_count as f64 / real_tokens as f64
    };

    Ok(LoadedEmbeddings {
        table: EmbeddingTable::new(matrix, frozen)?,
        coverage,
        found: found_count,
        missing: real_tokens - found_count,
    })
}
