use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::rules::{capture_name, is_bare_affirmation, is_bare_negation, parse_transport};
use super::{
    DialogueError, DialogueState, Offer, RecommendPolicy, Reply, ReplyDebug, Resolution, Session,
    SessionCore, Speaker, Transport,
};
use crate::attractions::{
    answer_for_slot, nearby_restaurants, slot_for_category, Attraction, PlacesProvider,
};
use crate::embeddings::{
    embed, normalize_text, tokenize, EmbeddingStore, Segmenter, TokenizedUtterance,
};
use crate::expression;
use crate::intent::{classify_embedded, AnswerSlot, CategoryRegistry, Classification};
use crate::similarity::Thresholds;

/// Categories the robot offers proactively, in order.
const OFFER_ORDER: [&str; 5] = [
    "PriceRemark",
    "TimeRemark",
    "Parking",
    "Access",
    "Restaurants",
];

/// Words too generic to identify a spot on their own.
const GENERIC_NAME_WORDS: &[&str] = &[
    "the", "of", "and", "park", "garden", "gardens", "museum", "temple", "shrine", "street",
    "castle", "tower", "hall", "center", "centre", "station", "lake", "river", "art", "city",
    "old", "new", "national", "square", "market", "bay", "hill",
];

/// Dialogue event → expression event id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpressionMap {
    pub greeting: String,
    pub recommend: String,
    pub answer: String,
    pub clarify: String,
    pub default: String,
}

impl Default for ExpressionMap {
    fn default() -> Self {
        ExpressionMap {
            greeting: expression::SMILE.into(),
            recommend: expression::SMILE.into(),
            answer: expression::FAINT_SMILE.into(),
            clarify: expression::SURPRISE.into(),
            default: expression::NEUTRAL.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DialogueConfig {
    /// Every n-th QA reply starts with the visitor's name; 0 disables.
    pub name_period: u32,
    pub restaurant_cap: usize,
    pub restaurant_radius_m: f64,
    pub deadline_secs: u64,
    pub expressions: ExpressionMap,
}

impl Default for DialogueConfig {
    fn default() -> Self {
        DialogueConfig {
            name_period: 3,
            restaurant_cap: 2,
            restaurant_radius_m: 800.0,
            deadline_secs: 300,
            expressions: ExpressionMap::default(),
        }
    }
}

/// Opens a session and produces the greeting.
pub fn new_session(
    id: impl Into<String>,
    spot_a: Attraction,
    spot_b: Attraction,
    policy: &RecommendPolicy,
    now_ms: u64,
    deadline_ms: u64,
    config: &DialogueConfig,
) -> Result<(Session, Reply), DialogueError> {
    if spot_a.id == spot_b.id {
        return Err(DialogueError::InvalidSession(format!(
            "both spots are {}",
            spot_a.id
        )));
    }
    let recommended = match policy {
        RecommendPolicy::MoreData => {
            if spot_a.populated_slots() > spot_b.populated_slots() {
                spot_a.id.clone()
            } else {
                spot_b.id.clone()
            }
        }
        RecommendPolicy::Fixed(id) if *id == spot_a.id || *id == spot_b.id => id.clone(),
        RecommendPolicy::Fixed(id) => {
            return Err(DialogueError::InvalidSession(format!(
                "recommended spot {id} is not one of the two chosen spots"
            )))
        }
    };
    let core = SessionCore {
        id: id.into(),
        spot_a_id: spot_a.id.clone(),
        spot_b_id: spot_b.id.clone(),
        recommended,
        visitor_name: None,
        transport: Transport::Unknown,
        state: DialogueState::Greeting,
        created_ms: now_ms,
        deadline_ms,
        qa_turn_count: 0,
        name_reprompted: false,
        transport_reprompted: false,
        pending_offer: None,
        covered: Vec::new(),
        chosen_spot: None,
    };
    let mut session = Session {
        core,
        spot_a,
        spot_b,
        transcript: Vec::new(),
    };
    let text = "Hello, and welcome! I'm here to help you plan today's outing. \
                May I have your name?"
        .to_string();
    let event = config.expressions.greeting.clone();
    session.push_turn(
        now_ms,
        Speaker::Robot,
        text.clone(),
        DialogueState::Greeting,
        Some(event.clone()),
        None,
    );
    session.core.state = DialogueState::AskName;
    Ok((
        session,
        Reply {
            text,
            expression_event: event,
            new_state: DialogueState::AskName,
            debug: None,
        },
    ))
}

/// Shared, read-only resources for advancing sessions.
#[derive(Clone)]
pub struct DialogueEngine {
    pub store: Arc<EmbeddingStore>,
    pub registry: Arc<CategoryRegistry>,
    pub segmenter: Arc<dyn Segmenter>,
    pub thresholds: Thresholds,
    pub places: Option<Arc<dyn PlacesProvider>>,
    pub config: DialogueConfig,
}

/// Robot output before it is recorded.
struct Draft {
    text: String,
    event: String,
    emitted_in: DialogueState,
    next: DialogueState,
    classified: Option<Classification>,
    debug: Option<ReplyDebug>,
}

impl DialogueEngine {
    pub fn start(
        &self,
        id: impl Into<String>,
        spot_a: Attraction,
        spot_b: Attraction,
        policy: &RecommendPolicy,
        now_ms: u64,
    ) -> Result<(Session, Reply), DialogueError> {
        let deadline = now_ms.saturating_add(self.config.deadline_secs.saturating_mul(1000));
        new_session(id, spot_a, spot_b, policy, now_ms, deadline, &self.config)
    }

    /// Handles one visitor utterance. Appends exactly two turns.
    pub fn advance(
        &self,
        session: &mut Session,
        visitor_text: &str,
        now_ms: u64,
    ) -> Result<Reply, DialogueError> {
        let state = session.core.state;
        if state == DialogueState::Closed {
            return Err(DialogueError::SessionClosed);
        }
        session.push_turn(
            now_ms,
            Speaker::Visitor,
            visitor_text.to_string(),
            state,
            None,
            None,
        );
        let tokens = match tokenize(visitor_text, self.segmenter.as_ref()) {
            Ok(t) => t,
            Err(e) => {
                log::warn!("tokenization failed: {e}");
                TokenizedUtterance {
                    raw: visitor_text.to_string(),
                    tokens: Vec::new(),
                }
            }
        };

        let draft = if now_ms >= session.core.deadline_ms && state != DialogueState::Closing {
            self.wrap_up(session)
        } else {
            match state {
                DialogueState::Greeting | DialogueState::AskName => {
                    self.on_name(session, visitor_text, state)
                }
                DialogueState::Overview => self.ask_transport(),
                DialogueState::AskTransport => self.on_transport(session, &tokens.tokens),
                DialogueState::Recommend | DialogueState::QA => {
                    self.on_question(session, &tokens, state)
                }
                DialogueState::Closing => self.on_final_choice(session, &tokens.tokens),
                DialogueState::Closed => unreachable!("checked above"),
            }
        };
        Ok(self.commit(session, draft, now_ms))
    }

    /// Ends the session immediately, recording a farewell turn.
    pub fn close(&self, session: &mut Session, now_ms: u64) -> Result<Reply, DialogueError> {
        let state = session.core.state;
        if state == DialogueState::Closed {
            return Err(DialogueError::SessionClosed);
        }
        session.core.pending_offer = None;
        let draft = Draft {
            text: "Thank you for talking with me today. Have a wonderful trip!".into(),
            event: self.config.expressions.greeting.clone(),
            emitted_in: DialogueState::Closing,
            next: DialogueState::Closed,
            classified: None,
            debug: None,
        };
        Ok(self.commit(session, draft, now_ms))
    }

    fn commit(&self, session: &mut Session, draft: Draft, now_ms: u64) -> Reply {
        let from = session.core.state;
        debug_assert!(
            from == draft.emitted_in || from.can_move_to(draft.emitted_in),
            "{from} -> {}",
            draft.emitted_in
        );
        debug_assert!(
            draft.emitted_in == draft.next || draft.emitted_in.can_move_to(draft.next),
            "{} -> {}",
            draft.emitted_in,
            draft.next
        );
        session.push_turn(
            now_ms,
            Speaker::Robot,
            draft.text.clone(),
            draft.emitted_in,
            Some(draft.event.clone()),
            draft.classified,
        );
        session.core.state = draft.next;
        Reply {
            text: draft.text,
            expression_event: draft.event,
            new_state: draft.next,
            debug: draft.debug,
        }
    }

    fn plain(
        &self,
        text: String,
        event: &str,
        emitted_in: DialogueState,
        next: DialogueState,
    ) -> Draft {
        Draft {
            text,
            event: event.to_string(),
            emitted_in,
            next,
            classified: None,
            debug: None,
        }
    }

    fn on_name(&self, session: &mut Session, text: &str, state: DialogueState) -> Draft {
        let name = capture_name(text);
        if name.is_none() && !session.core.name_reprompted {
            session.core.name_reprompted = true;
            return self.plain(
                "Sorry, I didn't catch your name. Could you tell me again?".into(),
                &self.config.expressions.default,
                state,
                DialogueState::AskName,
            );
        }
        session.core.visitor_name = name;
        let other = session.other();
        let rec = session.recommended();
        let greeting = match &session.core.visitor_name {
            Some(n) => format!("Nice to meet you, {n}!"),
            None => "Nice to meet you!".to_string(),
        };
        let text = format!(
            "{greeting} Let me introduce the two places you picked. First, {}. {} \
             And then there is {}. {}",
            other.name,
            describe(other),
            rec.name,
            describe(rec),
        );
        self.plain(
            text,
            &self.config.expressions.default,
            DialogueState::Overview,
            DialogueState::Overview,
        )
    }

    fn ask_transport(&self) -> Draft {
        self.plain(
            "By the way, how are you planning to get there, by car or by train?".into(),
            &self.config.expressions.default,
            DialogueState::AskTransport,
            DialogueState::AskTransport,
        )
    }

    fn on_transport(&self, session: &mut Session, tokens: &[String]) -> Draft {
        let transport = match parse_transport(tokens) {
            Some(t) => t,
            None if !session.core.transport_reprompted => {
                session.core.transport_reprompted = true;
                return self.plain(
                    "Sorry, will you be coming by car or by train?".into(),
                    &self.config.expressions.default,
                    DialogueState::AskTransport,
                    DialogueState::AskTransport,
                );
            }
            None => Transport::Unknown,
        };
        session.core.transport = transport;
        let rec = session.recommended().clone();
        let mut text = match transport {
            Transport::Car => {
                session.core.covered.push("Parking".into());
                if rec.parking {
                    format!(
                        "Since you're coming by car, I recommend {}. It has a parking lot, \
                         so parking is easy.",
                        rec.name
                    )
                } else {
                    format!(
                        "Since you're coming by car, I recommend {}. It has no parking lot \
                         of its own, so please check parking before you go.",
                        rec.name
                    )
                }
            }
            Transport::Train => {
                session.core.covered.push("Access".into());
                match (rec.access.train, rec.access.nearest_station.as_deref()) {
                    (true, Some(station)) => format!(
                        "Since you're taking the train, I recommend {}. You can reach it by \
                         train from {station} Station.",
                        rec.name
                    ),
                    (true, None) => format!(
                        "Since you're taking the train, I recommend {}. It can be reached by train.",
                        rec.name
                    ),
                    (false, _) => format!(
                        "Since you're taking the train, I recommend {}, although it is not \
                         directly reachable by train.",
                        rec.name
                    ),
                }
            }
            Transport::Unknown => format!(
                "Then let me recommend {}. It's a wonderful place to spend the day.",
                rec.name
            ),
        };
        if let Some(offer) = self.next_offer(session) {
            text.push(' ');
            text.push_str(&offer_question(&offer.category));
            session.core.pending_offer = Some(offer);
        }
        Draft {
            text,
            event: self.config.expressions.recommend.clone(),
            emitted_in: DialogueState::Recommend,
            next: DialogueState::QA,
            classified: None,
            debug: None,
        }
    }

    fn on_question(
        &self,
        session: &mut Session,
        tokens: &TokenizedUtterance,
        state: DialogueState,
    ) -> Draft {
        let emitted_in = DialogueState::QA;
        debug_assert!(state == DialogueState::QA || state == DialogueState::Recommend);
        session.core.qa_turn_count += 1;
        let embedded = embed(&self.store, &without_spot_names(session, tokens));
        let classification = classify_embedded(&embedded, &self.registry, &self.thresholds);
        let pending = session.core.pending_offer.take();

        let (mut text, event, debug) = if is_bare_affirmation(&tokens.tokens) {
            match pending {
                Some(offer) => {
                    let spot = session
                        .spot(&offer.spot_id)
                        .cloned()
                        .expect("offer spot exists");
                    let mut text = self.answer(session, &offer.category, &spot);
                    self.append_offer(session, &mut text);
                    let debug = ReplyDebug {
                        category: Some(offer.category),
                        score: None,
                        method: None,
                        resolved_by: Resolution::Affirmation,
                    };
                    (text, self.config.expressions.answer.clone(), Some(debug))
                }
                None => (
                    format!(
                        "Sorry, I'm not sure what you mean. Would you like to hear more about \
                         {} or {}, or is there something specific you'd like to know?",
                        session.other().name,
                        session.recommended().name
                    ),
                    self.config.expressions.clarify.clone(),
                    None,
                ),
            }
        } else if is_bare_negation(&tokens.tokens) && pending.is_some() {
            (
                "All right. Is there anything else you'd like to know?".to_string(),
                self.config.expressions.default.clone(),
                None,
            )
        } else {
            match &classification {
                Classification::Matched {
                    category,
                    score,
                    method,
                } => {
                    let targets = self.named_spots(session, &tokens.tokens);
                    let targets = if targets.is_empty() {
                        vec![session.recommended().clone()]
                    } else {
                        targets
                    };
                    let mut text = targets
                        .iter()
                        .map(|spot| self.answer(session, category, spot))
                        .collect::<Vec<_>>()
                        .join(" ");
                    self.append_offer(session, &mut text);
                    let debug = ReplyDebug {
                        category: Some(category.clone()),
                        score: Some(*score),
                        method: Some(*method),
                        resolved_by: Resolution::Classifier,
                    };
                    (text, self.config.expressions.answer.clone(), Some(debug))
                }
                Classification::NoMatch { best_score } => (
                    "I'm sorry, I didn't quite catch that. You can ask me about entrance fees, \
                     opening hours, parking, access, or restaurants nearby."
                        .to_string(),
                    self.config.expressions.clarify.clone(),
                    Some(ReplyDebug {
                        category: None,
                        score: *best_score,
                        method: None,
                        resolved_by: Resolution::Classifier,
                    }),
                ),
            }
        };

        let period = self.config.name_period;
        if let Some(name) = &session.core.visitor_name {
            if period > 0 && session.core.qa_turn_count.is_multiple_of(period) {
                text = with_name_prefix(name, &text);
            }
        }
        Draft {
            text,
            event,
            emitted_in,
            next: DialogueState::QA,
            classified: Some(classification),
            debug,
        }
    }

    fn wrap_up(&self, session: &mut Session) -> Draft {
        session.core.pending_offer = None;
        let text = format!(
            "We're almost out of time. Which would you like to visit, {} or {}? \
             I think {} would be a great choice.",
            session.spot_a.name,
            session.spot_b.name,
            session.recommended().name
        );
        self.plain(
            text,
            &self.config.expressions.default,
            DialogueState::Closing,
            DialogueState::Closing,
        )
    }

    fn on_final_choice(&self, session: &mut Session, tokens: &[String]) -> Draft {
        let named = self.named_spots(session, tokens);
        let text = match named.as_slice() {
            [one] => {
                session.core.chosen_spot = Some(one.id.clone());
                format!(
                    "Great choice! I hope you enjoy {}. Thank you for talking with me today.",
                    one.name
                )
            }
            _ => format!(
                "Thank you for talking with me today. I hope you enjoy your trip, \
                 and don't forget {}!",
                session.recommended().name
            ),
        };
        self.plain(
            text,
            &self.config.expressions.greeting,
            DialogueState::Closing,
            DialogueState::Closed,
        )
    }

    fn answer(&self, session: &mut Session, category: &str, spot: &Attraction) -> String {
        let slot = self
            .registry
            .get(category)
            .map(|c| c.answer_slot)
            .or_else(|| slot_for_category(category))
            .unwrap_or(AnswerSlot::Description);
        let restaurants = if slot == AnswerSlot::Restaurants {
            self.places.as_ref().and_then(|p| {
                match nearby_restaurants(p.as_ref(), spot, self.config.restaurant_radius_m) {
                    Ok(mut list) => {
                        list.truncate(self.config.restaurant_cap);
                        Some(list)
                    }
                    Err(e) => {
                        log::warn!("restaurant lookup failed for {}: {e}", spot.id);
                        None
                    }
                }
            })
        } else {
            None
        };
        if spot.id == session.core.recommended
            && !session.core.covered.iter().any(|c| c == category)
        {
            session.core.covered.push(category.to_string());
        }
        answer_for_slot(spot, slot, restaurants.as_deref())
    }

    fn append_offer(&self, session: &mut Session, text: &mut String) {
        match self.next_offer(session) {
            Some(offer) => {
                text.push(' ');
                text.push_str(&offer_question(&offer.category));
                session.core.pending_offer = Some(offer);
            }
            None => text.push_str(" Is there anything else you'd like to know?"),
        }
    }

    /// Next useful yes/no offer about the recommended spot.
    fn next_offer(&self, session: &mut Session) -> Option<Offer> {
        let rec = session.recommended();
        let category = OFFER_ORDER.iter().copied().find(|&c| {
            if self.registry.get(c).is_none() || session.core.covered.iter().any(|x| x == c) {
                return false;
            }
            match c {
                "PriceRemark" => rec.price_yen.is_some(),
                "TimeRemark" => !rec.open_hours.trim().is_empty(),
                "Parking" => rec.parking,
                "Access" => rec.access.train || rec.access.car,
                "Restaurants" => self.places.is_some(),
                _ => false,
            }
        })?;
        let offer = Offer {
            category: category.to_string(),
            spot_id: rec.id.clone(),
        };
        session.core.covered.push(category.to_string());
        Some(offer)
    }

    /// Spots whose name the utterance mentions, in spot order.
    fn named_spots(&self, session: &Session, tokens: &[String]) -> Vec<Attraction> {
        let a_words = name_words(&session.spot_a.name);
        let b_words = name_words(&session.spot_b.name);
        let joined = format!(" {} ", tokens.join(" "));
        let mentions = |own: &[String], other: &[String], generic: bool| {
            let full = format!(" {} ", own.join(" "));
            if !own.is_empty() && joined.contains(&full) {
                return true;
            }
            own.iter().any(|w| {
                w.chars().count() >= 3
                    && !matches!(w.as_str(), "the" | "and")
                    && GENERIC_NAME_WORDS.contains(&w.as_str()) == generic
                    && !other.contains(w)
                    && tokens.contains(w)
            })
        };
        // Distinctive words first; "the garden" only counts when nothing
        // more specific was said.
        for generic in [false, true] {
            let mut out = Vec::new();
            if mentions(&a_words, &b_words, generic) {
                out.push(session.spot_a.clone());
            }
            if mentions(&b_words, &a_words, generic) {
                out.push(session.spot_b.clone());
            }
            if !out.is_empty() {
                return out;
            }
        }
        Vec::new()
    }
}

/// Drops words of either spot's name so that "When does Minato Harbor
/// Aquarium open?" is classified on "when does open". Kept as is when
/// nothing else would remain.
fn without_spot_names(session: &Session, tokens: &TokenizedUtterance) -> TokenizedUtterance {
    let mut names = name_words(&session.spot_a.name);
    names.extend(name_words(&session.spot_b.name));
    names.retain(|w| !matches!(w.as_str(), "the" | "and" | "of"));
    let kept: Vec<String> = tokens
        .tokens
        .iter()
        .filter(|t| !names.contains(t))
        .cloned()
        .collect();
    if kept.is_empty() {
        return tokens.clone();
    }
    TokenizedUtterance {
        raw: tokens.raw.clone(),
        tokens: kept,
    }
}

fn name_words(name: &str) -> Vec<String> {
    normalize_text(name)
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn describe(a: &Attraction) -> String {
    if a.description.trim().is_empty() {
        "I don't have many details about it yet.".to_string()
    } else {
        a.description.trim().to_string()
    }
}

fn offer_question(category: &str) -> String {
    match category {
        "PriceRemark" => "Shall I tell you the entrance fee?".into(),
        "TimeRemark" => "Shall I tell you the opening hours?".into(),
        "Parking" => "Would you like to hear about parking?".into(),
        "Access" => "Shall I tell you how to get there?".into(),
        "Restaurants" => "Would you like some restaurant suggestions nearby?".into(),
        other => format!("Would you like to hear about {other}?"),
    }
}

/// Sentence openers that are safe to lowercase after a name prefix.
const LOWERABLE: &[&str] = &[
    "The",
    "Yes",
    "Unfortunately",
    "You",
    "Near",
    "Admission",
    "All",
    "Sorry",
    "I'm",
    "I",
];

fn with_name_prefix(name: &str, text: &str) -> String {
    let first = text.split_whitespace().next().unwrap_or("");
    let first_bare = first.trim_end_matches(|c: char| !c.is_alphanumeric() && c != '\'');
    if LOWERABLE.contains(&first_bare) && first_bare != "I" && first_bare != "I'm" {
        let mut chars = text.chars();
        let head = chars
            .next()
            .map(|c| c.to_lowercase().collect::<String>())
            .unwrap_or_default();
        format!("{name}, {head}{}", chars.as_str())
    } else {
        format!("{name}, {text}")
    }
}
