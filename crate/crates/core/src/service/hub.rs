use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, Mutex};

use super::journal::{LogRecord, SessionLog};
use super::{Clock, Resources, ServiceError};
use crate::dialogue::{
    record_questionnaire, DialogueState, QuestionnaireAnswers, QuestionnaireRecord,
    RecommendPolicy, Reply, Session, Speaker, Turn,
};
use crate::expression::{params_for, Frame, NEUTRAL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub spot_a_id: String,
    pub spot_b_id: String,
    #[serde(default)]
    pub recommended_id: Option<String>,
}

/// Messages pushed to stream subscribers.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StreamMessage {
    Reply {
        seq: u64,
        t: u64,
        text: String,
        state: DialogueState,
    },
    Frame(Frame),
    /// Last message of a session's stream.
    Closed {
        t: u64,
    },
}

pub struct SessionSlot {
    id: String,
    session: Arc<Mutex<Session>>,
    events: broadcast::Sender<StreamMessage>,
}

impl SessionSlot {
    fn new(session: Session) -> Self {
        SessionSlot {
            id: session.id().to_string(),
            session: Arc::new(Mutex::new(session)),
            events: broadcast::channel(256).0,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Per-session lock. Waiters are served in arrival order.
    pub fn session(&self) -> &Arc<Mutex<Session>> {
        &self.session
    }

    pub fn subscribe(&self) -> broadcast::Receiver<StreamMessage> {
        self.events.subscribe()
    }
}

/// Live sessions plus the resources and journal they share.
pub struct SessionHub {
    resources: Arc<Resources>,
    journal: Option<SessionLog>,
    clock: Arc<dyn Clock>,
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
}

impl SessionHub {
    pub fn new(
        resources: Arc<Resources>,
        journal: Option<SessionLog>,
        clock: Arc<dyn Clock>,
    ) -> Self {
        SessionHub {
            resources,
            journal,
            clock,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    pub fn resources(&self) -> &Resources {
        &self.resources
    }

    pub fn now_ms(&self) -> u64 {
        self.clock.now_ms()
    }

    /// Reloads every session found in the journal. Returns how many were
    /// restored; unreadable sessions are skipped with a warning.
    pub fn restore(&self) -> Result<usize, ServiceError> {
        let Some(journal) = &self.journal else {
            return Ok(0);
        };
        let ids = journal
            .session_ids()
            .map_err(|e| ServiceError::Storage(e.to_string()))?;
        let mut restored = 0;
        for id in ids {
            match self.restore_one(journal, &id) {
                Ok(session) => {
                    self.insert(session);
                    restored += 1;
                }
                Err(e) => log::warn!("not restoring session {id}: {e}"),
            }
        }
        Ok(restored)
    }

    fn restore_one(&self, journal: &SessionLog, id: &str) -> Result<Session, ServiceError> {
        let storage = |e: std::io::Error| ServiceError::Storage(e.to_string());
        let logged = journal.read(id).map_err(storage)?;
        journal.repair(id, &logged).map_err(storage)?;
        let core = logged
            .last_checkpoint()
            .cloned()
            .ok_or_else(|| ServiceError::Storage("no checkpoint in log".into()))?;
        let spot = |sid: &str| {
            self.resources
                .attractions
                .get(sid)
                .cloned()
                .ok_or_else(|| ServiceError::UnknownSpot(sid.to_string()))
        };
        let (a, b) = (spot(&core.spot_a_id)?, spot(&core.spot_b_id)?);
        Session::restore(core, a, b, logged.turns()).map_err(|e| ServiceError::from_dialogue(id, e))
    }

    fn insert(&self, session: Session) -> Arc<SessionSlot> {
        let slot = Arc::new(SessionSlot::new(session));
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(slot.id.clone(), slot.clone());
        slot
    }

    pub fn get(&self, id: &str) -> Result<Arc<SessionSlot>, ServiceError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .sessions
            .read()
            .expect("session map poisoned")
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }

    pub fn create(&self, req: &CreateSession) -> Result<(Arc<SessionSlot>, Reply), ServiceError> {
        let attractions = &self.resources.attractions;
        let lookup = |id: &str| {
            attractions
                .get(id)
                .cloned()
                .ok_or_else(|| ServiceError::UnknownSpot(id.to_string()))
        };
        let a = lookup(&req.spot_a_id)?;
        let b = lookup(&req.spot_b_id)?;
        if a.id == b.id {
            return Err(ServiceError::Validation(
                "spot_a_id and spot_b_id must differ".into(),
            ));
        }
        let policy = match &req.recommended_id {
            Some(r) if *r != a.id && *r != b.id => {
                return Err(ServiceError::Validation(format!(
                    "recommended_id {r} is not one of the two spots"
                )))
            }
            Some(r) => RecommendPolicy::Fixed(r.clone()),
            None => RecommendPolicy::MoreData,
        };
        let id = uuid::Uuid::new_v4().simple().to_string();
        let now = self.clock.now_ms();
        let (session, reply) = self
            .resources
            .engine
            .start(id.clone(), a, b, &policy, now)
            .map_err(|e| ServiceError::from_dialogue(&id, e))?;

        let mut records = vec![LogRecord::Session {
            session_id: id.clone(),
            spot_a_id: session.core.spot_a_id.clone(),
            spot_b_id: session.core.spot_b_id.clone(),
            t: now,
        }];
        records.extend(turn_records(&session, 0));
        self.write(&id, &records)?;
        Ok((self.insert(session), reply))
    }

    /// Runs one visitor utterance. The caller holds the slot's lock.
    pub fn advance(
        &self,
        slot: &SessionSlot,
        session: &mut Session,
        text: &str,
    ) -> Result<Reply, ServiceError> {
        let now = self.clock.now_ms();
        self.apply(slot, session, |engine, s| engine.advance(s, text, now))
    }

    /// Ends the session early with a farewell turn.
    pub fn close(&self, slot: &SessionSlot, session: &mut Session) -> Result<Reply, ServiceError> {
        let now = self.clock.now_ms();
        self.apply(slot, session, |engine, s| engine.close(s, now))
    }

    pub fn questionnaire(
        &self,
        session: &Session,
        answers: QuestionnaireAnswers,
    ) -> Result<QuestionnaireRecord, ServiceError> {
        let record = record_questionnaire(session, answers, self.clock.now_ms())
            .map_err(|e| ServiceError::from_dialogue(session.id(), e))?;
        self.write(session.id(), &[LogRecord::Questionnaire(record.clone())])?;
        Ok(record)
    }

    /// Stream messages describing everything the robot has said so far.
    pub fn replay(&self, session: &Session) -> Vec<StreamMessage> {
        let turns = session.transcript();
        let mut out = Vec::new();
        for (i, turn) in turns.iter().enumerate() {
            if turn.speaker == Speaker::Robot {
                let after = turns
                    .get(i + 1)
                    .map_or(session.state(), |next| next.state_at_emit);
                out.extend(self.messages_for(turn, after));
            }
        }
        if session.state() == DialogueState::Closed {
            let t = turns.last().map_or(0, |t| t.t);
            out.push(self.closing_frame(t));
            out.push(StreamMessage::Closed { t });
        }
        out
    }

    fn apply(
        &self,
        slot: &SessionSlot,
        session: &mut Session,
        step: impl FnOnce(
            &crate::dialogue::DialogueEngine,
            &mut Session,
        ) -> Result<Reply, crate::dialogue::DialogueError>,
    ) -> Result<Reply, ServiceError> {
        let before = session.transcript().len();
        let backup = session.clone();
        let reply = step(&self.resources.engine, session)
            .map_err(|e| ServiceError::from_dialogue(slot.id(), e))?;
        if let Err(e) = self.write(slot.id(), &turn_records(session, before)) {
            *session = backup;
            return Err(e);
        }
        let turns = &session.transcript()[before..];
        for turn in turns.iter().filter(|t| t.speaker == Speaker::Robot) {
            for m in self.messages_for(turn, session.state()) {
                // No subscribers is fine.
                let _ = slot.events.send(m);
            }
        }
        if session.state() == DialogueState::Closed {
            let t = turns.last().map_or(0, |t| t.t);
            let _ = slot.events.send(self.closing_frame(t));
            let _ = slot.events.send(StreamMessage::Closed { t });
        }
        Ok(reply)
    }

    fn messages_for(&self, turn: &Turn, state_after: DialogueState) -> Vec<StreamMessage> {
        let mut out = vec![StreamMessage::Reply {
            seq: turn.seq,
            t: turn.t,
            text: turn.text.clone(),
            state: state_after,
        }];
        if let Some(event) = &turn.expression_event {
            let params = params_for(&self.resources.expressions, event).params;
            out.push(StreamMessage::Frame(Frame::new(turn.t, event, params)));
        }
        out
    }

    fn closing_frame(&self, t: u64) -> StreamMessage {
        let params = params_for(&self.resources.expressions, NEUTRAL).params;
        StreamMessage::Frame(Frame::new(t, NEUTRAL, params))
    }

    fn write(&self, id: &str, records: &[LogRecord]) -> Result<(), ServiceError> {
        match &self.journal {
            Some(j) => j
                .append(id, records)
                .map_err(|e| ServiceError::Storage(e.to_string())),
            None => Ok(()),
        }
    }
}

/// Log records for turns from `from` on; the last turn carries the
/// checkpoint so the log always ends in a resumable state.
fn turn_records(session: &Session, from: usize) -> Vec<LogRecord> {
    let turns = &session.transcript()[from..];
    turns
        .iter()
        .enumerate()
        .map(|(i, turn)| LogRecord::Turn {
            session_id: session.id().to_string(),
            turn: turn.clone(),
            checkpoint: (i + 1 == turns.len()).then(|| session.core.clone()),
        })
        .collect()
}
