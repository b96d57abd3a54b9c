//! Session hosting: configuration, resource loading, durable session logs,
//! the HTTP/WebSocket API and the terminal REPL.

mod config;
pub mod http;
mod hub;
pub mod journal;
pub mod repl;

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::attractions::AttractionSet;
use crate::attractions::{FixtureProvider, LiveProvider, PlacesProvider};
use crate::dialogue::{DialogueConfig, DialogueEngine, DialogueError};
use crate::embeddings::{CommandSegmenter, DefaultSegmenter, EmbeddingStore, Segmenter};
use crate::expression::ExpressionTable;
use crate::intent::CategoryRegistry;

pub use config::{PlacesSettings, ServiceConfig, SessionSettings};
pub use hub::{CreateSession, SessionHub, SessionSlot, StreamMessage};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0}")]
    Config(String),
    #[error("unknown attraction id: {0}")]
    UnknownSpot(String),
    #[error("unknown session id: {0}")]
    UnknownSession(String),
    #[error("session {0} is closed")]
    SessionClosed(String),
    #[error("{0}")]
    Validation(String),
    #[error("session log: {0}")]
    Storage(String),
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    /// Stable machine-readable code used in error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Config(_) => "config",
            ServiceError::UnknownSpot(_) => "unknown_spot",
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::SessionClosed(_) => "session_closed",
            ServiceError::Validation(_) => "validation",
            ServiceError::Storage(_) => "storage",
            ServiceError::Internal(_) => "internal",
        }
    }

    fn from_dialogue(session_id: &str, e: DialogueError) -> Self {
        match e {
            DialogueError::SessionClosed => ServiceError::SessionClosed(session_id.to_string()),
            DialogueError::Questionnaire(m) => ServiceError::Validation(m),
            DialogueError::InvalidSession(m) => ServiceError::Validation(m),
        }
    }
}

/// Source of wall-clock milliseconds; swapped out in tests.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64)
    }
}

/// A clock that only moves when told to.
#[derive(Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start_ms: u64) -> Self {
        ManualClock(AtomicU64::new(start_ms))
    }

    pub fn advance(&self, ms: u64) {
        self.0.fetch_add(ms, Ordering::SeqCst);
    }

    pub fn set(&self, ms: u64) {
        self.0.store(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

/// Everything loaded from disk at startup.
pub struct Resources {
    pub config: ServiceConfig,
    pub engine: DialogueEngine,
    pub attractions: AttractionSet,
    pub expressions: ExpressionTable,
}

impl Resources {
    pub fn load(config: ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        let load_err = |what: &str, path: &Path, e: &dyn std::fmt::Display| {
            ServiceError::Config(format!("{what} {}: {e}", path.display()))
        };

        let store = EmbeddingStore::load(&config.embeddings)
            .map_err(|e| load_err("embeddings", &config.embeddings, &e))?;
        let segmenter: Arc<dyn Segmenter> = match &config.segmenter {
            Some(argv) => Arc::new(
                CommandSegmenter::from_argv(argv)
                    .ok_or_else(|| ServiceError::Config("segmenter command is empty".into()))?,
            ),
            None => Arc::new(DefaultSegmenter),
        };
        let registry = CategoryRegistry::load(&config.categories, &store, segmenter.as_ref())
            .map_err(|e| load_err("categories", &config.categories, &e))?;
        let attractions = AttractionSet::load(&config.attractions)
            .map_err(|e| load_err("attractions", &config.attractions, &e))?;
        let expressions = match &config.expression {
            Some(p) => ExpressionTable::load(p).map_err(|e| load_err("expression", p, &e))?,
            None => ExpressionTable::default(),
        };
        let places: Option<Arc<dyn PlacesProvider>> = match &config.places {
            PlacesSettings::Off => None,
            PlacesSettings::Fixture { fixture } => Some(Arc::new(
                FixtureProvider::load(fixture).map_err(|e| ServiceError::Config(e.to_string()))?,
            )),
            PlacesSettings::Live {
                base_url,
                api_key,
                timeout_ms,
            } => Some(Arc::new(
                LiveProvider::from_env(
                    base_url.clone(),
                    api_key.clone(),
                    Duration::from_millis(*timeout_ms),
                )
                .map_err(|e| ServiceError::Config(e.to_string()))?,
            )),
        };
        let s = &config.session;
        let dialogue = DialogueConfig {
            name_period: s.name_period,
            restaurant_cap: s.restaurant_cap,
            restaurant_radius_m: s.restaurant_radius_m,
            deadline_secs: s.deadline_secs,
            expressions: s.expressions.clone(),
        };
        let engine = DialogueEngine {
            store: Arc::new(store),
            registry: Arc::new(registry),
            segmenter,
            thresholds: config.thresholds,
            places,
            config: dialogue,
        };
        Ok(Resources {
            config,
            engine,
            attractions,
            expressions,
        })
    }
}
