//! C interface to the tourdesk engine.
//!
//! Every fallible function returns a [`TdStatus`]; on failure the message is
//! available from [`td_last_error_message`] on the same thread. Strings
//! returned through `char **` out-parameters are owned by the caller and must
//! be released with [`td_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use serde_json::json;
use tourdesk::dialogue::{DialogueError, RecommendPolicy, Reply, Session};
use tourdesk::embeddings::{embed, tokenize};
use tourdesk::expression::params_for;
use tourdesk::intent::{classify, score_categories};
use tourdesk::service::{Resources, ServiceConfig, ServiceError};
use tourdesk::similarity::{
    solve_ot, two_stage_similarity, CostMatrix, MassDistribution, Method, SimilarityError,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Config = 3,
    UnknownSpot = 4,
    SessionClosed = 5,
    InvalidInput = 6,
    Internal = 7,
}

/// Which similarity route produced a score.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdMethod {
    Wrd = 0,
    CosineMean = 1,
}

/// Loaded embeddings, categories, attractions and expression table.
pub struct TdEngine {
    resources: Arc<Resources>,
}

/// One visitor conversation. Keeps its engine's data alive on its own.
pub struct TdSession {
    resources: Arc<Resources>,
    session: Session,
}

struct Failure(TdStatus, String);

impl From<ServiceError> for Failure {
    fn from(e: ServiceError) -> Self {
        let status = match e {
            ServiceError::Config(_) => TdStatus::Config,
            ServiceError::UnknownSpot(_) => TdStatus::UnknownSpot,
            ServiceError::SessionClosed(_) => TdStatus::SessionClosed,
            ServiceError::Validation(_) => TdStatus::InvalidInput,
            _ => TdStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

impl From<DialogueError> for Failure {
    fn from(e: DialogueError) -> Self {
        let status = match e {
            DialogueError::SessionClosed => TdStatus::SessionClosed,
            _ => TdStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

impl From<SimilarityError> for Failure {
    fn from(e: SimilarityError) -> Self {
        let status = match e {
            SimilarityError::Solver(_) => TdStatus::Internal,
            _ => TdStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(TdStatus::InvalidInput, msg.into())
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, records any failure or panic, and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TdStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TdStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(TdStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(TdStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(TdStatus::NullArgument, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c =
        CString::new(s).map_err(|_| Failure(TdStatus::Internal, "string contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn reply_json(resources: &Resources, reply: &Reply, t: u64) -> String {
    let params = params_for(&resources.expressions, &reply.expression_event).params;
    json!({
        "reply": reply.text,
        "state": reply.new_state,
        "expression_event": reply.expression_event,
        "expression": params,
        "debug": reply.debug,
        "t": t,
    })
    .to_string()
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn td_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn td_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a service config file (relative paths resolve against its folder).
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn td_engine_open(
    config_path: *const c_char,
    out: *mut *mut TdEngine,
) -> TdStatus {
    guard(|| {
        out_arg(out, "out")?;
        let path = str_arg(config_path, "config_path")?;
        let resources = Resources::load(ServiceConfig::load(path)?)?;
        *out = Box::into_raw(Box::new(TdEngine {
            resources: Arc::new(resources),
        }));
        Ok(())
    })
}

/// # Safety
/// `engine` must come from [`td_engine_open`] or be null.
#[no_mangle]
pub unsafe extern "C" fn td_engine_free(engine: *mut TdEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Starts a session between two attractions. `recommended_id` may be null to
/// recommend the spot with more data. The greeting is written to
/// `greeting_json` when that pointer is non-null.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn td_session_new(
    engine: *const TdEngine,
    spot_a_id: *const c_char,
    spot_b_id: *const c_char,
    recommended_id: *const c_char,
    now_ms: u64,
    out: *mut *mut TdSession,
    greeting_json: *mut *mut c_char,
) -> TdStatus {
    guard(|| {
        out_arg(out, "out")?;
        let engine = engine
            .as_ref()
            .ok_or_else(|| Failure(TdStatus::NullArgument, "engine is null".into()))?;
        let res = &engine.resources;
        let a = str_arg(spot_a_id, "spot_a_id")?;
        let b = str_arg(spot_b_id, "spot_b_id")?;
        if a == b {
            return Err(invalid("the two attractions must differ"));
        }
        let spot = |id: &str| {
            res.attractions
                .get(id)
                .cloned()
                .ok_or_else(|| Failure::from(ServiceError::UnknownSpot(id.to_string())))
        };
        let (spot_a, spot_b) = (spot(a)?, spot(b)?);
        let policy = if recommended_id.is_null() {
            RecommendPolicy::MoreData
        } else {
            let r = str_arg(recommended_id, "recommended_id")?;
            if r != a && r != b {
                return Err(invalid(format!(
                    "recommended attraction {r} is not one of the pair"
                )));
            }
            RecommendPolicy::Fixed(r.to_string())
        };
        let id = format!("ffi-{now_ms}");
        let (session, greeting) = res.engine.start(id, spot_a, spot_b, &policy, now_ms)?;
        if !greeting_json.is_null() {
            write_string(greeting_json, reply_json(res, &greeting, now_ms))?;
        }
        *out = Box::into_raw(Box::new(TdSession {
            resources: res.clone(),
            session,
        }));
        Ok(())
    })
}

/// Feeds one visitor utterance and writes the reply as JSON.
///
/// # Safety
/// Pointers must be valid; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn td_session_advance(
    session: *mut TdSession,
    text: *const c_char,
    now_ms: u64,
    reply_out: *mut *mut c_char,
) -> TdStatus {
    guard(|| {
        out_arg(reply_out, "reply_out")?;
        let s = session
            .as_mut()
            .ok_or_else(|| Failure(TdStatus::NullArgument, "session is null".into()))?;
        let text = str_arg(text, "text")?;
        let reply = s.resources.engine.advance(&mut s.session, text, now_ms)?;
        write_string(reply_out, reply_json(&s.resources, &reply, now_ms))
    })
}

/// Writes the session's current state name, e.g. `"QA"`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn td_session_state(
    session: *const TdSession,
    out: *mut *mut c_char,
) -> TdStatus {
    guard(|| {
        out_arg(out, "out")?;
        let s = session
            .as_ref()
            .ok_or_else(|| Failure(TdStatus::NullArgument, "session is null".into()))?;
        write_string(out, s.session.state().name().to_string())
    })
}

/// # Safety
/// `session` must come from [`td_session_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn td_session_free(session: *mut TdSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Classifies one utterance; writes tokens, out-of-vocabulary words, the
/// decision and per-category scores as JSON.
///
/// # Safety
/// Pointers must be valid; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn td_classify(
    engine: *const TdEngine,
    text: *const c_char,
    out: *mut *mut c_char,
) -> TdStatus {
    guard(|| {
        out_arg(out, "out")?;
        let engine = engine
            .as_ref()
            .ok_or_else(|| Failure(TdStatus::NullArgument, "engine is null".into()))?;
        let text = str_arg(text, "text")?;
        let e = &engine.resources.engine;
        let tokens = tokenize(text, e.segmenter.as_ref()).map_err(|e| invalid(e.to_string()))?;
        let embedded = embed(&e.store, &tokens);
        let result = json!({
            "tokens": tokens.tokens,
            "oov": embedded.oov,
            "classification": classify(text, &e.registry, &e.store, e.segmenter.as_ref(), &e.thresholds),
            "scores": score_categories(&embedded, &e.registry, &e.thresholds),
        });
        write_string(out, result.to_string())
    })
}

/// Two-stage similarity of two sentences under the engine's thresholds.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn td_similarity(
    engine: *const TdEngine,
    a: *const c_char,
    b: *const c_char,
    score: *mut f64,
    method: *mut TdMethod,
) -> TdStatus {
    guard(|| {
        out_arg(score, "score")?;
        out_arg(method, "method")?;
        let engine = engine
            .as_ref()
            .ok_or_else(|| Failure(TdStatus::NullArgument, "engine is null".into()))?;
        let e = &engine.resources.engine;
        let mut embedded = Vec::with_capacity(2);
        for (p, name) in [(a, "a"), (b, "b")] {
            let tokens = tokenize(str_arg(p, name)?, e.segmenter.as_ref())
                .map_err(|e| invalid(e.to_string()))?;
            embedded.push(embed(&e.store, &tokens));
        }
        let r = two_stage_similarity(&embedded[0], &embedded[1], &e.thresholds)?;
        *score = r.score;
        *method = match r.method {
            Method::Wrd => TdMethod::Wrd,
            Method::CosineMean => TdMethod::CosineMean,
        };
        Ok(())
    })
}

fn normalized(p: *const f64, len: usize, name: &str) -> Result<MassDistribution, Failure> {
    if p.is_null() || len == 0 {
        return Err(invalid(format!("{name} is empty")));
    }
    let raw = unsafe { std::slice::from_raw_parts(p, len) };
    let total: f64 = raw.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(invalid(format!("{name} must have a positive finite total")));
    }
    Ok(MassDistribution::new(
        raw.iter().map(|m| m / total).collect(),
    )?)
}

/// Minimum transport cost between `supply` (n) and `demand` (m). Both sides
/// are rescaled to sum to one; `cost` is n×m in row-major order.
///
/// # Safety
/// The arrays must hold `n`, `m` and `n * m` values.
#[no_mangle]
pub unsafe extern "C" fn td_solve_ot(
    supply: *const f64,
    n: usize,
    demand: *const f64,
    m: usize,
    cost: *const f64,
    out_value: *mut f64,
) -> TdStatus {
    guard(|| {
        out_arg(out_value, "out_value")?;
        let a = normalized(supply, n, "supply")?;
        let b = normalized(demand, m, "demand")?;
        if cost.is_null() {
            return Err(Failure(TdStatus::NullArgument, "cost is null".into()));
        }
        let data = std::slice::from_raw_parts(cost, n * m).to_vec();
        let cost = CostMatrix::new(n, m, data)?;
        *out_value = solve_ot(&a, &b, &cost)?.value;
        Ok(())
    })
}

/// Face parameters (valence, arousal, dominance, real intention) for an
/// expression event. Unknown events yield the neutral face.
///
/// # Safety
/// `out` must have room for four doubles.
#[no_mangle]
pub unsafe extern "C" fn td_expression_params(
    engine: *const TdEngine,
    event: *const c_char,
    out: *mut f64,
) -> TdStatus {
    guard(|| {
        out_arg(out, "out")?;
        let engine = engine
            .as_ref()
            .ok_or_else(|| Failure(TdStatus::NullArgument, "engine is null".into()))?;
        let event = str_arg(event, "event")?;
        let c = params_for(&engine.resources.expressions, event)
            .params
            .components();
        ptr::copy_nonoverlapping(c.as_ptr(), out, 4);
        Ok(())
    })
}
