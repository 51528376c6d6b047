//! Token <-> id bijection with reserved PAD and UNK slots.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Id of the padding token; embedding row 0 is pinned to zero.
pub const PAD_ID: usize = 0;
/// Id every unknown token maps to.
pub const UNK_ID: usize = 1;
/// Spelled form of the padding token.
pub const PAD_TOKEN: &str = "<pad>";
/// Spelled form of the unknown-token sentinel.
pub const UNK_TOKEN: &str = "<unk>";

/// Vocabulary built from a training corpus. Ids are dense in [0, V):
/// PAD = 0, UNK = 1, then real tokens in first-occurrence order, which
/// makes construction deterministic for a fixed corpus order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
}

impl Vocab {
    /// Builds a vocabulary from token streams in corpus order.
    pub fn build<'a, I, S>(streams: I) -> Vocab
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = &'a str>,
    {
        let mut v = Vocab::reserved();
        for stream in streams {
            for token in stream {
                v.intern(token);
            }
        }
        v
    }

    /// A vocabulary holding only the reserved PAD and UNK entries.
    pub fn reserved() -> Vocab {
        let mut token_to_id = HashMap::new();
        token_to_id.insert(PAD_TOKEN.to_string(), PAD_ID);
        token_to_id.insert(UNK_TOKEN.to_string(), UNK_ID);
        Vocab {
            token_to_id,
            id_to_token: vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()],
        }
    }

    /// Adds `token` if unseen; returns its id either way.
    pub fn intern(&mut self, token: &str) -> usize {
        if let Some(&id) = self.token_to_id.get(token) {
            return id;
        }
        let id = self.id_to_token.len();
        self.token_to_id.insert(token.to_string(), id);
        self.id_to_token.push(token.to_string());
        id
    }

    /// Id for a token; unknown tokens map to UNK rather than erroring so
    /// live utterances always classify.
    pub fn id(&self, token: &str) -> usize {
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(|s| s.as_str())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_id.contains_key(token)
    }

    /// Total number of ids, reserved slots included.
    pub fn size(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter()
            .map(|&i| self.token(i).unwrap_or(UNK_TOKEN).to_string())
            .collect()
    }

    /// One token per line, in id order. Tokens never contain whitespace
    /// (they come from whitespace splitting), so lines round-trip.
    pub fn to_lines(&self) -> String {
        let mut s = String::new();
        for t in &self.id_to_token {
            s.push_str(t);
            s.push('\n');
        }
        s
    }

    /// Inverse of [`Self::to_lines`].
    pub fn from_lines(text: &str) -> Result<Vocab> {
        let tokens: Vec<&str> = text.lines().collect();
        if tokens.len() < 2 || tokens[PAD_ID] != PAD_TOKEN || tokens[UNK_ID] != UNK_TOKEN {
            return Err(Error::Checkpoint(
                "vocabulary block must start with the reserved PAD and UNK tokens".into(),
            ));
        }
        let mut v = Vocab::reserved();
        for t in &tokens[2..] {
            if v.contains(t) {
                return Err(Error::Checkpoint(format!(
                    "vocabulary block repeats token '{t}'"
                )));
            }
            v.intern(t);
        }
        Ok(v)
    }
}
