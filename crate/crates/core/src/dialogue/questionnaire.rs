use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DialogueError, DialogueState, Session};

/// Post-dialogue rating items, each answered on a 1–5 scale.
pub const QUESTIONNAIRE_ITEMS: [&str; 9] = [
    "Choice Satisfaction",
    "Sufficiency of information",
    "Naturalness of dialogue",
    "Adequacy of response",
    "Likability of response",
    "Dialogue satisfaction",
    "Robot reliability",
    "referentiality",
    "Degree of desire to return",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireAnswers {
    pub ratings: BTreeMap<String, u8>,
    pub chosen_spot_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireRecord {
    pub session_id: String,
    pub t: u64,
    pub ratings: BTreeMap<String, u8>,
    pub chosen_spot_id: String,
    pub recommended_id: String,
    pub chose_recommended: bool,
}

/// Validates answers for a finished session and computes whether the visitor
/// chose the recommended spot.
pub fn record_questionnaire(
    session: &Session,
    answers: QuestionnaireAnswers,
    now_ms: u64,
) -> Result<QuestionnaireRecord, DialogueError> {
    if !matches!(
        session.state(),
        DialogueState::Closing | DialogueState::Closed
    ) {
        return Err(DialogueError::Questionnaire(format!(
            "session is still in {}",
            session.state()
        )));
    }
    for item in QUESTIONNAIRE_ITEMS {
        match answers.ratings.get(item) {
            None => {
                return Err(DialogueError::Questionnaire(format!(
                    "missing item {item:?}"
                )))
            }
            Some(r) if !(1..=5).contains(r) => {
                return Err(DialogueError::Questionnaire(format!(
                    "rating {r} for {item:?} outside 1-5"
                )))
            }
            Some(_) => {}
        }
    }
    if let Some(extra) = answers
        .ratings
        .keys()
        .find(|k| !QUESTIONNAIRE_ITEMS.contains(&k.as_str()))
    {
        return Err(DialogueError::Questionnaire(format!(
            "unknown item {extra:?}"
        )));
    }
    if session.spot(&answers.chosen_spot_id).is_none() {
        return Err(DialogueError::Questionnaire(format!(
            "chosen spot {} is not one of the session's spots",
            answers.chosen_spot_id
        )));
    }
    Ok(QuestionnaireRecord {
        session_id: session.id().to_string(),
        t: now_ms,
        chose_recommended: answers.chosen_spot_id == session.core.recommended,
        recommended_id: session.core.recommended.clone(),
        ratings: answers.ratings,
        chosen_spot_id: answers.chosen_spot_id,
    })
}

impl QuestionnaireAnswers {
    /// All items set to the same rating.
    pub fn uniform(rating: u8, chosen_spot_id: impl Into<String>) -> Self {
        QuestionnaireAnswers {
            ratings: QUESTIONNAIRE_ITEMS
                .iter()
                .map(|i| (i.to_string(), rating))
                .collect(),
            chosen_spot_id: chosen_spot_id.into(),
        }
    }
}
