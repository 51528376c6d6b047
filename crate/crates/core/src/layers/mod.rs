//! Network building blocks: embedding lookup, LSTM / Bi-LSTM encoders,
//! additive self-attention, and the dense softmax classifier. Every
//! forward operation has a hand-derived backward counterpart validated
//! against finite differences.

pub mod attention;
pub mod classifier;
pub mod embedding;
pub mod lstm;

pub use attention::{attention_backward, self_attention, AttentionCache, AttentionGrads, AttentionParams};
pub use classifier::{classifier_backward, classify, ClassifierGrads, ClassifierParams};
pub use embedding::{embed_backward, EmbeddingTable};
pub use lstm::{
    bilstm_backward, bilstm_forward, lstm_backward, lstm_forward, BilstmCache, LstmCache,
    LstmGrads, LstmParams,
};
