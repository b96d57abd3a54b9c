//! Robot face parameters and the per-session frame stream.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NEUTRAL: &str = "neutral";
pub const SMILE: &str = "smile";
pub const FAINT_SMILE: &str = "faint_smile";
pub const SURPRISE: &str = "surprise";

const REQUIRED: [&str; 4] = [NEUTRAL, SMILE, FAINT_SMILE, SURPRISE];

#[derive(Debug, Error)]
pub enum ExpressionError {
    #[error("failed to read expression config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed expression config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("expression table is missing required event {0}")]
    MissingEvent(&'static str),
    #[error("event {event}: component {value} outside [-1, 1]")]
    OutOfRange { event: String, value: f64 },
}

/// Four affect controls of the face, each in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct ExpressionParams {
    pub valence: f64,
    pub arousal: f64,
    pub dominance: f64,
    pub real_intention: f64,
}

impl ExpressionParams {
    pub const NEUTRAL: ExpressionParams = ExpressionParams::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(valence: f64, arousal: f64, dominance: f64, real_intention: f64) -> Self {
        ExpressionParams {
            valence,
            arousal,
            dominance,
            real_intention,
        }
    }

    pub fn components(&self) -> [f64; 4] {
        [
            self.valence,
            self.arousal,
            self.dominance,
            self.real_intention,
        ]
    }

    pub fn in_range(&self) -> bool {
        self.components().iter().all(|c| (-1.0..=1.0).contains(c))
    }
}

impl From<[f64; 4]> for ExpressionParams {
    fn from(c: [f64; 4]) -> Self {
        ExpressionParams::new(c[0], c[1], c[2], c[3])
    }
}

impl From<ExpressionParams> for [f64; 4] {
    fn from(p: ExpressionParams) -> Self {
        p.components()
    }
}

/// Event id → parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionTable {
    entries: BTreeMap<String, ExpressionParams>,
}

impl Default for ExpressionTable {
    /// The shipped table. `smile` and `faint_smile` carry the same values.
    fn default() -> Self {
        let entries = [
            (NEUTRAL, ExpressionParams::NEUTRAL),
            (SMILE, ExpressionParams::new(0.3, 0.2, 0.1, 0.0)),
            (FAINT_SMILE, ExpressionParams::new(0.3, 0.2, 0.1, 0.0)),
            (SURPRISE, ExpressionParams::new(0.1, 0.2, -0.8, 0.0)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        ExpressionTable { entries }
    }
}

impl ExpressionTable {
    /// Loads `{"event": [valence, arousal, dominance, realIntention], ...}`.
    /// Entries override the defaults.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExpressionError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ExpressionError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let entries: BTreeMap<String, ExpressionParams> = serde_json::from_str(&text)?;
        Self::new(entries)
    }

    pub fn new(entries: BTreeMap<String, ExpressionParams>) -> Result<Self, ExpressionError> {
        for required in REQUIRED {
            if !entries.contains_key(required) {
                return Err(ExpressionError::MissingEvent(required));
            }
        }
        for (event, p) in &entries {
            if let Some(&value) = p.components().iter().find(|c| !(-1.0..=1.0).contains(*c)) {
                return Err(ExpressionError::OutOfRange {
                    event: event.clone(),
                    value,
                });
            }
        }
        Ok(ExpressionTable { entries })
    }

    pub fn get(&self, event: &str) -> Option<ExpressionParams> {
        self.entries.get(event).copied()
    }

    pub fn events(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lookup {
    pub params: ExpressionParams,
    /// Set when the event was unknown and `neutral` was substituted.
    pub fell_back: bool,
}

pub fn params_for(table: &ExpressionTable, event: &str) -> Lookup {
    match table.get(event) {
        Some(params) => Lookup {
            params,
            fell_back: false,
        },
        None => {
            log::warn!("unknown expression event {event:?}, using neutral");
            Lookup {
                params: table.get(NEUTRAL).unwrap_or(ExpressionParams::NEUTRAL),
                fell_back: true,
            }
        }
    }
}

/// One expression update on the streaming channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    /// Milliseconds since the Unix epoch.
    pub t: u64,
    pub event: String,
    pub valence: f64,
    pub arousal: f64,
    pub dominance: f64,
    #[serde(rename = "realIntention")]
    pub real_intention: f64,
}

impl Frame {
    pub fn new(t: u64, event: &str, p: ExpressionParams) -> Self {
        Frame {
            t,
            event: event.to_string(),
            valence: p.valence,
            arousal: p.arousal,
            dominance: p.dominance,
            real_intention: p.real_intention,
        }
    }

    pub fn params(&self) -> ExpressionParams {
        ExpressionParams::new(
            self.valence,
            self.arousal,
            self.dominance,
            self.real_intention,
        )
    }
}

/// A timestamped expression event from the dialogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionEvent {
    pub t: u64,
    pub event: String,
}

/// One frame per event, in order, plus a closing `neutral` frame when
/// `closed_at` is given. The face holds the last frame between events.
pub fn frame_stream(
    table: &ExpressionTable,
    events: &[ExpressionEvent],
    closed_at: Option<u64>,
) -> Vec<Frame> {
    let mut frames: Vec<Frame> = Vec::with_capacity(events.len() + 1);
    let mut last_t = 0;
    for e in events {
        // Timestamps never go backwards even if the caller's clock did.
        let t = e.t.max(last_t);
        frames.push(Frame::new(t, &e.event, params_for(table, &e.event).params));
        last_t = t;
    }
    if let Some(t) = closed_at {
        frames.push(Frame::new(
            t.max(last_t),
            NEUTRAL,
            params_for(table, NEUTRAL).params,
        ));
    }
    frames
}
