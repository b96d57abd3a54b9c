//! Sentence similarity by Word Rotator's Distance with a mean-vector cosine
//! fallback.
//!
//! Each word carries mass proportional to its vector norm; moving word `i`
//! onto word `j` costs `1 - cos(x_i, y_j)`. The distance is the optimal
//! transport cost between the two mass distributions and the similarity
//! score is `1 - distance`. When that score does not clear the configured
//! fallback threshold, the cosine of the two unweighted mean vectors is used
//! instead.

mod transport;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{norm, EmbeddedUtterance};

pub use transport::{solve_transport, CostMatrix, TransportPlan};

/// Masses must sum to one within this tolerance.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Marginal and objective checks on transport plans.
pub const PLAN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("utterance has no in-vocabulary tokens")]
    EmptyUtterance,
    #[error("mean word vector is zero")]
    DegenerateMean,
    #[error("solver failure: {0}")]
    Solver(String),
}

/// Positive masses summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MassDistribution(Vec<f64>);

impl MassDistribution {
    pub fn new(masses: Vec<f64>) -> Result<Self, SimilarityError> {
        if masses.is_empty() {
            return Err(SimilarityError::InvalidInput(
                "empty mass distribution".into(),
            ));
        }
        if masses.iter().any(|&m| !m.is_finite() || m <= 0.0) {
            return Err(SimilarityError::InvalidInput(
                "masses must be positive".into(),
            ));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(SimilarityError::InvalidInput(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(MassDistribution(masses))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Word masses proportional to vector norms.
pub fn norm_masses(vectors: &[Vec<f64>]) -> Result<MassDistribution, SimilarityError> {
    if vectors.is_empty() {
        return Err(SimilarityError::InvalidInput("no vectors".into()));
    }
    let norms: Vec<f64> = vectors.iter().map(|v| norm(v)).collect();
    if norms.iter().any(|&n| !n.is_finite() || n <= 0.0) {
        return Err(SimilarityError::InvalidInput("zero-norm vector".into()));
    }
    let total: f64 = norms.iter().sum();
    MassDistribution::new(norms.into_iter().map(|n| n / total).collect())
}

/// Cosine similarity clamped to `[-1, 1]`; bit-identical vectors give exactly 1.
pub fn cosine(x: &[f64], y: &[f64]) -> f64 {
    if x == y {
        return 1.0;
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (dot / (norm(x) * norm(y))).clamp(-1.0, 1.0)
}

/// Angular cost `1 - cos(x_i, y_j)` for every pair.
pub fn cost_matrix(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<CostMatrix, SimilarityError> {
    let dim = xs
        .first()
        .or(ys.first())
        .map(Vec::len)
        .ok_or_else(|| SimilarityError::InvalidInput("no vectors".into()))?;
    for v in xs.iter().chain(ys) {
        if v.len() != dim {
            return Err(SimilarityError::InvalidInput(format!(
                "dimension mismatch: {} vs {dim}",
                v.len()
            )));
        }
        if norm(v).is_nan() || norm(v) <= 0.0 {
            return Err(SimilarityError::InvalidInput("zero-norm vector".into()));
        }
    }
    let mut data = Vec::with_capacity(xs.len() * ys.len());
    for x in xs {
        for y in ys {
            data.push(1.0 - cosine(x, y));
        }
    }
    CostMatrix::new(xs.len(), ys.len(), data)
}

/// Optimal transport between two mass distributions.
pub fn solve_ot(
    a: &MassDistribution,
    b: &MassDistribution,
    cost: &CostMatrix,
) -> Result<TransportPlan, SimilarityError> {
    solve_transport(a.as_slice(), b.as_slice(), cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Wrd,
    CosineMean,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Wrd => "WRD",
            Method::CosineMean => "COSINE_MEAN",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResult {
    pub score: f64,
    pub method: Method,
    /// Transport distance; only set for [`Method::Wrd`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
}

/// Similarity thresholds shared by the two-stage rule and the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// WRD scores at or below this fall back to the cosine route.
    pub wrd_fallback: f64,
    pub wrd_accept: f64,
    pub cosine_accept: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            wrd_fallback: 0.55,
            wrd_accept: 0.55,
            cosine_accept: 0.80,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), SimilarityError> {
        for (name, v) in [
            ("wrd_fallback", self.wrd_fallback),
            ("wrd_accept", self.wrd_accept),
            ("cosine_accept", self.cosine_accept),
        ] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(SimilarityError::InvalidInput(format!(
                    "threshold {name} = {v} outside [-1, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn accept_for(&self, method: Method) -> f64 {
        match method {
            Method::Wrd => self.wrd_accept,
            Method::CosineMean => self.cosine_accept,
        }
    }
}

/// Word Rotator's Distance between two embedded utterances.
pub fn wrd_distance(a: &EmbeddedUtterance, b: &EmbeddedUtterance) -> Result<f64, SimilarityError> {
    if a.is_empty() || b.is_empty() {
        return Err(SimilarityError::EmptyUtterance);
    }
    let ma = norm_masses(&a.vectors)?;
    let mb = norm_masses(&b.vectors)?;
    let cost = cost_matrix(&a.vectors, &b.vectors)?;
    let plan = solve_ot(&ma, &mb, &cost)?;
    Ok(plan.value.clamp(0.0, 2.0))
}

pub fn wrd_similarity(
    a: &EmbeddedUtterance,
    b: &EmbeddedUtterance,
) -> Result<SimilarityResult, SimilarityError> {
    let distance = wrd_distance(a, b)?;
    Ok(SimilarityResult {
        score: 1.0 - distance,
        method: Method::Wrd,
        distance: Some(distance),
    })
}

/// Cosine of the unweighted mean word vectors.
pub fn cosine_mean_similarity(
    a: &EmbeddedUtterance,
    b: &EmbeddedUtterance,
) -> Result<SimilarityResult, SimilarityError> {
    if a.is_empty() || b.is_empty() {
        return Err(SimilarityError::EmptyUtterance);
    }
    let ma = mean_vector(&a.vectors)?;
    let mb = mean_vector(&b.vectors)?;
    Ok(SimilarityResult {
        score: cosine(&ma, &mb),
        method: Method::CosineMean,
        distance: None,
    })
}

fn mean_vector(vectors: &[Vec<f64>]) -> Result<Vec<f64>, SimilarityError> {
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(SimilarityError::InvalidInput("dimension mismatch".into()));
    }
    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    let n = vectors.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    if norm(&mean).is_nan() || norm(&mean) <= 0.0 {
        return Err(SimilarityError::DegenerateMean);
    }
    Ok(mean)
}

/// WRD first; the cosine route when the WRD score does not exceed
/// `thresholds.wrd_fallback`.
pub fn two_stage_similarity(
    a: &EmbeddedUtterance,
    b: &EmbeddedUtterance,
    thresholds: &Thresholds,
) -> Result<SimilarityResult, SimilarityError> {
    let wrd = wrd_similarity(a, b)?;
    if wrd.score > thresholds.wrd_fallback {
        return Ok(wrd);
    }
    cosine_mean_similarity(a, b)
}
