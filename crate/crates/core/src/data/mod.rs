//! Text preprocessing, vocabulary, pretrained-embedding loading, dataset
//! adapters, stratified splitting, batching, and the synthetic corpus
//! generator.

pub mod batch;
pub mod dataset;
pub mod embeddings;
pub mod split;
pub mod synthetic;
pub mod text;
pub mod vocab;

pub use batch::{make_batches, Batch};
pub use dataset::{Dataset, Example, Format};
pub use embeddings::{load_embeddings, LoadedEmbeddings};
pub use split::split;
pub use synthetic::{generate_synthetic, keyword_match, MAX_INTENTS};
pub use text::{number_to_words, preprocess, preprocess_with};
pub use vocab::{Vocab, PAD_ID, PAD_TOKEN, UNK_ID, UNK_TOKEN};
