//! JSON API and per-session WebSocket stream.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::error::RecvError;
use tower_http::cors::CorsLayer;

use super::{CreateSession, ServiceError, SessionHub, StreamMessage};
use crate::attractions::Attraction;
use crate::dialogue::{
    DialogueState, QuestionnaireAnswers, QuestionnaireRecord, ReplyDebug, Session, Turn,
};
use crate::expression::{params_for, ExpressionParams};

#[derive(Debug, Serialize)]
struct ErrorBody {
    code: &'static str,
    message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownSpot(_) | ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::SessionClosed(_) => StatusCode::CONFLICT,
            ServiceError::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Config(_) | ServiceError::Storage(_) | ServiceError::Internal(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let body = ErrorBody {
            code: self.code(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

/// JSON body whose rejection is reported as a validation error.
struct Body<T>(T);

impl<T, S> axum::extract::FromRequest<S> for Body<T>
where
    Json<T>: axum::extract::FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ServiceError;

    async fn from_request(req: axum::extract::Request, state: &S) -> Result<Self, Self::Rejection> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| Body(v))
            .map_err(|e| ServiceError::Validation(e.body_text()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub greeting: String,
    pub state: DialogueState,
    pub recommended_id: String,
    pub expression_event: String,
}

#[derive(Debug, Deserialize)]
pub struct Utterance {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UtteranceReply {
    pub reply: String,
    pub state: DialogueState,
    pub expression_event: String,
    pub expression: ExpressionParams,
    #[serde(default)]
    pub debug: Option<ReplyDebug>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Transcript {
    pub session_id: String,
    pub state: DialogueState,
    pub spot_a_id: String,
    pub spot_b_id: String,
    pub recommended_id: String,
    pub visitor_name: Option<String>,
    pub turns: Vec<Turn>,
}

impl Transcript {
    fn of(s: &Session) -> Self {
        Transcript {
            session_id: s.id().to_string(),
            state: s.state(),
            spot_a_id: s.core.spot_a_id.clone(),
            spot_b_id: s.core.spot_b_id.clone(),
            recommended_id: s.core.recommended.clone(),
            visitor_name: s.core.visitor_name.clone(),
            turns: s.transcript().to_vec(),
        }
    }
}

type Hub = Arc<SessionHub>;

pub fn router(hub: Hub) -> Router {
    Router::new()
        .route(
            "/health",
            get(|| async { Json(serde_json::json!({"status": "ok"})) }),
        )
        .route("/attractions", get(list_attractions))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/utterance", post(utterance))
        .route("/sessions/{id}/close", post(close))
        .route("/sessions/{id}/questionnaire", post(questionnaire))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/sessions/{id}/stream", get(stream))
        .layer(CorsLayer::permissive())
        .with_state(hub)
}

/// Binds and serves until the process is stopped.
pub async fn serve(hub: Hub, listen: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(hub)).await?;
    Ok(())
}

async fn list_attractions(State(hub): State<Hub>) -> Json<Vec<Attraction>> {
    Json(hub.resources().attractions.iter().cloned().collect())
}

async fn create_session(
    State(hub): State<Hub>,
    Body(req): Body<CreateSession>,
) -> Result<(StatusCode, Json<CreatedSession>), ServiceError> {
    let (slot, reply) = tokio::task::spawn_blocking({
        let hub = hub.clone();
        move || hub.create(&req)
    })
    .await
    .map_err(|e| ServiceError::Internal(e.to_string()))??;
    let recommended_id = slot.session().lock().await.core.recommended.clone();
    Ok((
        StatusCode::CREATED,
        Json(CreatedSession {
            session_id: slot.id().to_string(),
            greeting: reply.text,
            state: reply.new_state,
            recommended_id,
            expression_event: reply.expression_event,
        }),
    ))
}

/// Runs `f` on the locked session off the async runtime. Concurrent calls
/// for the same session queue on the lock in arrival order.
async fn with_session<T: Send + 'static>(
    hub: &Hub,
    id: &str,
    f: impl FnOnce(&SessionHub, &super::SessionSlot, &mut Session) -> Result<T, ServiceError>
        + Send
        + 'static,
) -> Result<T, ServiceError> {
    let slot = hub.get(id)?;
    let mut guard = slot.session().clone().lock_owned().await;
    let hub = hub.clone();
    tokio::task::spawn_blocking(move || f(&hub, &slot, &mut guard))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
}

async fn utterance(
    State(hub): State<Hub>,
    Path(id): Path<String>,
    Body(req): Body<Utterance>,
) -> Result<Json<UtteranceReply>, ServiceError> {
    let reply = with_session(&hub, &id, move |hub, slot, s| {
        hub.advance(slot, s, &req.text)
    })
    .await?;
    let expression = params_for(&hub.resources().expressions, &reply.expression_event).params;
    Ok(Json(UtteranceReply {
        reply: reply.text,
        state: reply.new_state,
        expression_event: reply.expression_event,
        expression,
        debug: reply.debug,
    }))
}

async fn close(
    State(hub): State<Hub>,
    Path(id): Path<String>,
) -> Result<Json<UtteranceReply>, ServiceError> {
    let reply = with_session(&hub, &id, |hub, slot, s| hub.close(slot, s)).await?;
    let expression = params_for(&hub.resources().expressions, &reply.expression_event).params;
    Ok(Json(UtteranceReply {
        reply: reply.text,
        state: reply.new_state,
        expression_event: reply.expression_event,
        expression,
        debug: None,
    }))
}

async fn questionnaire(
    State(hub): State<Hub>,
    Path(id): Path<String>,
    Body(answers): Body<QuestionnaireAnswers>,
) -> Result<(StatusCode, Json<QuestionnaireRecord>), ServiceError> {
    let record = with_session(&hub, &id, move |hub, _, s| hub.questionnaire(s, answers)).await?;
    Ok((StatusCode::CREATED, Json(record)))
}

async fn transcript(
    State(hub): State<Hub>,
    Path(id): Path<String>,
) -> Result<Json<Transcript>, ServiceError> {
    let slot = hub.get(&id)?;
    let session = slot.session().lock().await;
    Ok(Json(Transcript::of(&session)))
}

async fn stream(
    State(hub): State<Hub>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, ServiceError> {
    let slot = hub.get(&id)?;
    // Snapshot and subscribe under the lock so no message is missed or doubled.
    let (history, rx, closed) = {
        let session = slot.session().lock().await;
        (
            hub.replay(&session),
            slot.subscribe(),
            session.state() == DialogueState::Closed,
        )
    };
    Ok(ws.on_upgrade(move |socket| pump(socket, history, rx, closed)))
}

async fn pump(
    mut socket: WebSocket,
    history: Vec<StreamMessage>,
    mut rx: tokio::sync::broadcast::Receiver<StreamMessage>,
    closed: bool,
) {
    for m in &history {
        if send(&mut socket, m).await.is_err() {
            return;
        }
    }
    if closed {
        let _ = socket.send(Message::Close(None)).await;
        return;
    }
    loop {
        tokio::select! {
            msg = rx.recv() => match msg {
                Ok(m) => {
                    let done = matches!(m, StreamMessage::Closed { .. });
                    if send(&mut socket, &m).await.is_err() {
                        return;
                    }
                    if done {
                        let _ = socket.send(Message::Close(None)).await;
                        return;
                    }
                }
                Err(RecvError::Lagged(n)) => log::warn!("stream subscriber lagged by {n} messages"),
                Err(RecvError::Closed) => return,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}

async fn send(socket: &mut WebSocket, m: &StreamMessage) -> Result<(), axum::Error> {
    let text = serde_json::to_string(m).expect("stream messages serialize");
    socket.send(Message::Text(text.into())).await
}
