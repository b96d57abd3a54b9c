//! Word vectors, utterance normalization and out-of-vocabulary accounting.

mod store;
mod tokenize;

use serde::Serialize;
use thiserror::Error;

pub use store::EmbeddingStore;
pub use tokenize::{
    normalize_text, tokenize, CommandSegmenter, DefaultSegmenter, FnSegmenter, Segmenter,
    TokenizedUtterance,
};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("failed to read vector file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("segmenter {segmenter} failed: {diagnostics}")]
    Segmenter {
        segmenter: String,
        diagnostics: String,
    },
}

/// In-vocabulary tokens with their vectors, plus the tokens that were dropped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddedUtterance {
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub oov: Vec<String>,
}

impl EmbeddedUtterance {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Builds an utterance directly from vectors. Zero-norm vectors go to `oov`.
    pub fn from_vectors<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut out = EmbeddedUtterance {
            tokens: Vec::new(),
            vectors: Vec::new(),
            oov: Vec::new(),
        };
        for (token, vector) in items {
            if norm(&vector) > 0.0 {
                out.tokens.push(token.into());
                out.vectors.push(vector);
            } else {
                out.oov.push(token.into());
            }
        }
        out
    }
}

/// Looks up every token. Missing and zero-norm tokens are routed to `oov`.
pub fn embed(store: &EmbeddingStore, utterance: &TokenizedUtterance) -> EmbeddedUtterance {
    let mut out = EmbeddedUtterance {
        tokens: Vec::with_capacity(utterance.tokens.len()),
        vectors: Vec::with_capacity(utterance.tokens.len()),
        oov: Vec::new(),
    };
    for token in &utterance.tokens {
        match store.get(token) {
            Some(v) if norm(v) > 0.0 => {
                out.tokens.push(token.clone());
                out.vectors.push(v.to_vec());
            }
            _ => out.oov.push(token.clone()),
        }
    }
    out
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
