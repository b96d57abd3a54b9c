//! Recommendation-oriented dialogue flow.
//!
//! A session walks greeting → name → overview of both spots (recommended
//! spot second) → transport question → transport-justified recommendation
//! → question answering, and wraps up once the deadline passes.

mod engine;
mod questionnaire;
pub mod rules;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attractions::Attraction;
use crate::intent::Classification;
use crate::similarity::Method;

pub use engine::{new_session, DialogueConfig, DialogueEngine, ExpressionMap};
pub use questionnaire::{
    record_questionnaire, QuestionnaireAnswers, QuestionnaireRecord, QUESTIONNAIRE_ITEMS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DialogueError {
    #[error("invalid session: {0}")]
    InvalidSession(String),
    #[error("session is closed")]
    SessionClosed,
    #[error("questionnaire rejected: {0}")]
    Questionnaire(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DialogueState {
    Greeting,
    AskName,
    Overview,
    AskTransport,
    Recommend,
    QA,
    Closing,
    Closed,
}

impl DialogueState {
    pub const ALL: [DialogueState; 8] = [
        DialogueState::Greeting,
        DialogueState::AskName,
        DialogueState::Overview,
        DialogueState::AskTransport,
        DialogueState::Recommend,
        DialogueState::QA,
        DialogueState::Closing,
        DialogueState::Closed,
    ];

    /// Allowed moves: stay, step forward along the flow, or jump to
    /// `Closing` from any open state.
    pub fn can_move_to(self, next: DialogueState) -> bool {
        use DialogueState::*;
        if self == next {
            return self != Closed;
        }
        match (self, next) {
            (Closed, _) => false,
            (Closing, Closed) => true,
            (Closing, _) => false,
            (_, Closing) => true,
            (from, to) => to as u8 == from as u8 + 1 && to != Closed,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DialogueState::Greeting => "Greeting",
            DialogueState::AskName => "AskName",
            DialogueState::Overview => "Overview",
            DialogueState::AskTransport => "AskTransport",
            DialogueState::Recommend => "Recommend",
            DialogueState::QA => "QA",
            DialogueState::Closing => "Closing",
            DialogueState::Closed => "Closed",
        }
    }
}

impl std::fmt::Display for DialogueState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    Car,
    Train,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Visitor,
    Robot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub seq: u64,
    /// Milliseconds since the Unix epoch.
    pub t: u64,
    pub speaker: Speaker,
    pub text: String,
    pub state_at_emit: DialogueState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression_event: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classified: Option<Classification>,
}

/// How the robot's QA reply picked its category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Classifier,
    Affirmation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplyDebug {
    pub category: Option<String>,
    pub score: Option<f64>,
    pub method: Option<Method>,
    pub resolved_by: Resolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub text: String,
    pub expression_event: String,
    pub new_state: DialogueState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub debug: Option<ReplyDebug>,
}

/// Which of the two spots to steer the visitor toward.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RecommendPolicy {
    /// The spot with more populated data slots; ties go to the second spot.
    #[default]
    MoreData,
    Fixed(String),
}

/// A yes/no offer the robot is waiting on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Offer {
    pub category: String,
    pub spot_id: String,
}

/// Everything about a session except the spot records and transcript.
/// Serialized as the checkpoint written with every robot turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCore {
    pub id: String,
    pub spot_a_id: String,
    pub spot_b_id: String,
    pub recommended: String,
    pub visitor_name: Option<String>,
    pub transport: Transport,
    pub state: DialogueState,
    pub created_ms: u64,
    pub deadline_ms: u64,
    pub qa_turn_count: u32,
    pub name_reprompted: bool,
    pub transport_reprompted: bool,
    pub pending_offer: Option<Offer>,
    /// Categories already answered or offered about the recommended spot.
    pub covered: Vec<String>,
    pub chosen_spot: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub core: SessionCore,
    pub spot_a: Attraction,
    pub spot_b: Attraction,
    transcript: Vec<Turn>,
}

impl Session {
    /// Rebuilds a session from a checkpoint and its logged transcript.
    pub fn restore(
        core: SessionCore,
        spot_a: Attraction,
        spot_b: Attraction,
        transcript: Vec<Turn>,
    ) -> Result<Self, DialogueError> {
        if spot_a.id != core.spot_a_id || spot_b.id != core.spot_b_id {
            return Err(DialogueError::InvalidSession(
                "spot records do not match the checkpoint".into(),
            ));
        }
        Ok(Session {
            core,
            spot_a,
            spot_b,
            transcript,
        })
    }

    pub fn id(&self) -> &str {
        &self.core.id
    }

    pub fn state(&self) -> DialogueState {
        self.core.state
    }

    pub fn transcript(&self) -> &[Turn] {
        &self.transcript
    }

    pub fn recommended(&self) -> &Attraction {
        if self.core.recommended == self.spot_a.id {
            &self.spot_a
        } else {
            &self.spot_b
        }
    }

    pub fn other(&self) -> &Attraction {
        if self.core.recommended == self.spot_a.id {
            &self.spot_b
        } else {
            &self.spot_a
        }
    }

    pub fn spot(&self, id: &str) -> Option<&Attraction> {
        [&self.spot_a, &self.spot_b]
            .into_iter()
            .find(|s| s.id == id)
    }

    fn push_turn(
        &mut self,
        now: u64,
        speaker: Speaker,
        text: String,
        state_at_emit: DialogueState,
        expression_event: Option<String>,
        classified: Option<Classification>,
    ) {
        let t = self.transcript.last().map_or(now, |last| now.max(last.t));
        let seq = self.transcript.len() as u64;
        self.transcript.push(Turn {
            seq,
            t,
            speaker,
            text,
            state_at_emit,
            expression_event,
            classified,
        });
    }
}
