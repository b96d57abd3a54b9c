//! Exemplar-based intent classification.
//!
//! Each category is defined by a handful of typical questions. An utterance
//! scores against a category as the best two-stage similarity over that
//! category's exemplars, and the best-scoring category wins if it clears the
//! acceptance threshold of whichever similarity route produced the score.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{
    embed, tokenize, EmbeddedUtterance, EmbeddingStore, Segmenter, TokenizedUtterance,
};
use crate::similarity::{two_stage_similarity, Method, Thresholds};

#[derive(Debug, Error)]
pub enum IntentError {
    #[error("failed to read category file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed category file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate category id {0}")]
    DuplicateId(String),
    #[error("category {0} has no exemplars")]
    NoExemplars(String),
    #[error("category {category}: exemplar unusable (no in-vocabulary tokens): {exemplar:?}")]
    UnusableExemplar { category: String, exemplar: String },
    #[error("category {category}: {source}")]
    Tokenize {
        category: String,
        #[source]
        source: crate::embeddings::EmbeddingError,
    },
}

/// Which attraction field answers a category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSlot {
    PriceYen,
    OpenHours,
    Parking,
    Access,
    Restaurants,
    Description,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Paper,
    #[default]
    Invented,
}

/// One entry of the category file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub id: String,
    pub answer_slot: AnswerSlot,
    pub exemplars: Vec<String>,
    #[serde(default)]
    pub source: Source,
}

#[derive(Debug, Clone)]
pub struct Exemplar {
    pub text: TokenizedUtterance,
    pub embedded: EmbeddedUtterance,
}

#[derive(Debug, Clone)]
pub struct IntentCategory {
    pub id: String,
    pub answer_slot: AnswerSlot,
    pub exemplars: Vec<Exemplar>,
    pub source: Source,
}

/// Order-stable set of categories with embedded exemplars.
#[derive(Debug, Clone, Default)]
pub struct CategoryRegistry {
    categories: Vec<IntentCategory>,
}

impl CategoryRegistry {
    pub fn load(
        path: impl AsRef<Path>,
        store: &EmbeddingStore,
        segmenter: &dyn Segmenter,
    ) -> Result<Self, IntentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| IntentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let specs: Vec<CategorySpec> = serde_json::from_str(&text)?;
        Self::from_specs(specs, store, segmenter)
    }

    pub fn from_specs(
        specs: Vec<CategorySpec>,
        store: &EmbeddingStore,
        segmenter: &dyn Segmenter,
    ) -> Result<Self, IntentError> {
        let mut seen = HashSet::new();
        let mut categories = Vec::with_capacity(specs.len());
        for spec in specs {
            if !seen.insert(spec.id.clone()) {
                return Err(IntentError::DuplicateId(spec.id));
            }
            if spec.exemplars.is_empty() {
                return Err(IntentError::NoExemplars(spec.id));
            }
            let mut exemplars = Vec::with_capacity(spec.exemplars.len());
            for raw in &spec.exemplars {
                let text = tokenize(raw, segmenter).map_err(|source| IntentError::Tokenize {
                    category: spec.id.clone(),
                    source,
                })?;
                let embedded = embed(store, &text);
                if embedded.is_empty() {
                    return Err(IntentError::UnusableExemplar {
                        category: spec.id.clone(),
                        exemplar: raw.clone(),
                    });
                }
                exemplars.push(Exemplar { text, embedded });
            }
            categories.push(IntentCategory {
                id: spec.id,
                answer_slot: spec.answer_slot,
                exemplars,
                source: spec.source,
            });
        }
        Ok(CategoryRegistry { categories })
    }

    pub fn get(&self, id: &str) -> Option<&IntentCategory> {
        self.categories.iter().find(|c| c.id == id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &IntentCategory> {
        self.categories.iter()
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Classification {
    Matched {
        category: String,
        score: f64,
        method: Method,
    },
    NoMatch {
        best_score: Option<f64>,
    },
}

impl Classification {
    pub fn category(&self) -> Option<&str> {
        match self {
            Classification::Matched { category, .. } => Some(category),
            Classification::NoMatch { .. } => None,
        }
    }

    pub fn is_match(&self) -> bool {
        matches!(self, Classification::Matched { .. })
    }
}

/// Best score of one category against an utterance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryScore {
    pub category: String,
    pub score: f64,
    pub method: Method,
}

/// Per-category best scores in registry order. Categories whose similarity
/// could not be computed (e.g. degenerate means) are omitted.
pub fn score_categories(
    utterance: &EmbeddedUtterance,
    registry: &CategoryRegistry,
    thresholds: &Thresholds,
) -> Vec<CategoryScore> {
    if utterance.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(registry.len());
    for category in registry.iter() {
        let mut best: Option<CategoryScore> = None;
        for exemplar in &category.exemplars {
            let Ok(r) = two_stage_similarity(utterance, &exemplar.embedded, thresholds) else {
                continue;
            };
            if best.as_ref().is_none_or(|b| r.score > b.score) {
                best = Some(CategoryScore {
                    category: category.id.clone(),
                    score: r.score,
                    method: r.method,
                });
            }
        }
        out.extend(best);
    }
    out
}

pub fn classify_embedded(
    utterance: &EmbeddedUtterance,
    registry: &CategoryRegistry,
    thresholds: &Thresholds,
) -> Classification {
    let scores = score_categories(utterance, registry, thresholds);
    // First maximum wins ties.
    let winner = scores
        .into_iter()
        .fold(None::<CategoryScore>, |best, s| match best {
            Some(b) if b.score >= s.score => Some(b),
            _ => Some(s),
        });
    match winner {
        Some(w) if w.score >= thresholds.accept_for(w.method) => Classification::Matched {
            category: w.category,
            score: w.score,
            method: w.method,
        },
        Some(w) => Classification::NoMatch {
            best_score: Some(w.score),
        },
        None => Classification::NoMatch { best_score: None },
    }
}

/// Classifies raw utterance text. Segmenter failures and fully
/// out-of-vocabulary input yield `NoMatch`.
pub fn classify(
    text: &str,
    registry: &CategoryRegistry,
    store: &EmbeddingStore,
    segmenter: &dyn Segmenter,
    thresholds: &Thresholds,
) -> Classification {
    match tokenize(text, segmenter) {
        Ok(tokens) => classify_embedded(&embed(store, &tokens), registry, thresholds),
        Err(e) => {
            log::warn!("classification skipped: {e}");
            Classification::NoMatch { best_score: None }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::DefaultSegmenter;

    fn store() -> EmbeddingStore {
        EmbeddingStore::parse(
            "6 3\n\
             fee 3 0 0.1\n\
             price 2.8 0.3 0\n\
             hours 0 3 0.2\n\
             open 0.2 2.7 0\n\
             park 0.1 0 3\n\
             the 0.3 0.3 0.3",
        )
        .unwrap()
    }

    fn spec(id: &str, slot: AnswerSlot, exemplars: &[&str]) -> CategorySpec {
        CategorySpec {
            id: id.into(),
            answer_slot: slot,
            exemplars: exemplars.iter().map(|s| s.to_string()).collect(),
            source: Source::Paper,
        }
    }

    fn registry() -> CategoryRegistry {
        CategoryRegistry::from_specs(
            vec![
                spec("PriceRemark", AnswerSlot::PriceYen, &["the fee"]),
                spec("TimeRemark", AnswerSlot::OpenHours, &["the hours"]),
                spec("Parking", AnswerSlot::Parking, &["park"]),
            ],
            &store(),
            &DefaultSegmenter,
        )
        .unwrap()
    }

    #[test]
    fn exemplar_self_match() {
        let c = classify(
            "The fee?",
            &registry(),
            &store(),
            &DefaultSegmenter,
            &Thresholds::default(),
        );
        assert_eq!(
            c,
            Classification::Matched {
                category: "PriceRemark".into(),
                score: 1.0,
                method: Method::Wrd
            }
        );
    }

    #[test]
    fn nearby_word_matches() {
        let c = classify(
            "price",
            &registry(),
            &store(),
            &DefaultSegmenter,
            &Thresholds::default(),
        );
        assert_eq!(c.category(), Some("PriceRemark"));
        let c = classify(
            "open",
            &registry(),
            &store(),
            &DefaultSegmenter,
            &Thresholds::default(),
        );
        assert_eq!(c.category(), Some("TimeRemark"));
    }

    #[test]
    fn all_oov_is_no_match() {
        let c = classify(
            "zebra quokka",
            &registry(),
            &store(),
            &DefaultSegmenter,
            &Thresholds::default(),
        );
        assert_eq!(c, Classification::NoMatch { best_score: None });
    }

    #[test]
    fn below_threshold_reports_best_score() {
        let th = Thresholds {
            wrd_fallback: 1.0,
            wrd_accept: 1.0,
            cosine_accept: 1.0,
        };
        let c = classify("price", &registry(), &store(), &DefaultSegmenter, &th);
        match c {
            Classification::NoMatch {
                best_score: Some(s),
            } => assert!(s < 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ties_go_to_registry_order() {
        let reg = CategoryRegistry::from_specs(
            vec![
                spec("First", AnswerSlot::Parking, &["park"]),
                spec("Second", AnswerSlot::Parking, &["park"]),
            ],
            &store(),
            &DefaultSegmenter,
        )
        .unwrap();
        let c = classify(
            "park",
            &reg,
            &store(),
            &DefaultSegmenter,
            &Thresholds::default(),
        );
        assert_eq!(c.category(), Some("First"));
    }

    #[test]
    fn load_errors() {
        let s = store();
        let dup = CategoryRegistry::from_specs(
            vec![
                spec("Parking", AnswerSlot::Parking, &["park"]),
                spec("Parking", AnswerSlot::Parking, &["park"]),
            ],
            &s,
            &DefaultSegmenter,
        );
        assert!(matches!(dup, Err(IntentError::DuplicateId(id)) if id == "Parking"));
        let empty = CategoryRegistry::from_specs(
            vec![spec("Parking", AnswerSlot::Parking, &[])],
            &s,
            &DefaultSegmenter,
        );
        assert!(matches!(empty, Err(IntentError::NoExemplars(_))));
        let oov = CategoryRegistry::from_specs(
            vec![spec("Parking", AnswerSlot::Parking, &["zebra"])],
            &s,
            &DefaultSegmenter,
        );
        let err = oov.unwrap_err();
        assert!(err.to_string().contains("exemplar unusable"), "{err}");
        assert!(err.to_string().contains("Parking"), "{err}");
    }

    #[test]
    fn category_file_schema() {
        let json = r#"[
            {"id": "PriceRemark", "answer_slot": "price_yen", "exemplars": ["the fee"], "source": "paper"},
            {"id": "Parking", "answer_slot": "parking", "exemplars": ["park"], "source": "invented"}
        ]"#;
        let specs: Vec<CategorySpec> = serde_json::from_str(json).unwrap();
        assert_eq!(specs[0].source, Source::Paper);
        let reg = CategoryRegistry::from_specs(specs, &store(), &DefaultSegmenter).unwrap();
        assert_eq!(reg.len(), 2);
        assert_eq!(reg.get("Parking").unwrap().answer_slot, AnswerSlot::Parking);
    }
}
