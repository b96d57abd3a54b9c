//! Keyword heuristics over normalized tokens.

use super::Transport;

const NAME_STOPWORDS: &[&str] = &[
    "my",
    "name",
    "names",
    "is",
    "i",
    "im",
    "am",
    "call",
    "calls",
    "called",
    "me",
    "its",
    "it",
    "please",
    "hello",
    "hi",
    "hey",
    "thank",
    "thanks",
    "you",
    "mr",
    "mrs",
    "ms",
    "miss",
    "dr",
    "san",
    "this",
    "the",
    "yes",
    "ok",
    "okay",
    "well",
    "um",
    "uh",
    "so",
    "nice",
    "to",
    "meet",
    "and",
    "just",
    "everyone",
    "people",
    "good",
    "morning",
    "afternoon",
    "evening",
    "a",
    "be",
    "here",
    "sure",
    "of",
    "course",
];

const CAR_WORDS: &[&str] = &[
    "car",
    "cars",
    "drive",
    "driving",
    "drove",
    "vehicle",
    "automobile",
    "rentacar",
];
const TRAIN_WORDS: &[&str] = &[
    "train",
    "trains",
    "rail",
    "railway",
    "subway",
    "metro",
    "jr",
    "shinkansen",
];

const AFFIRMATIONS: &[&[&str]] = &[
    &["ok"],
    &["okay"],
    &["its", "ok"],
    &["its", "okay"],
    &["thats", "ok"],
    &["thats", "okay"],
    &["fine"],
    &["its", "fine"],
    &["thats", "fine"],
    &["sure"],
    &["yes"],
    &["yes", "please"],
    &["yeah"],
    &["alright"],
    &["all", "right"],
    &["daijoubu"],
    &["daijobu"],
    &["大丈夫"],
    &["大丈夫です"],
];

const NEGATIONS: &[&[&str]] = &[
    &["no"],
    &["nope"],
    &["no", "thanks"],
    &["no", "thank", "you"],
    &["not", "really"],
];

fn matches_phrase(tokens: &[String], phrases: &[&[&str]]) -> bool {
    phrases
        .iter()
        .any(|p| p.len() == tokens.len() && p.iter().zip(tokens).all(|(a, b)| *a == b))
}

/// A short reply like "it's okay" that carries no content of its own.
pub fn is_bare_affirmation(tokens: &[String]) -> bool {
    matches_phrase(tokens, AFFIRMATIONS)
}

pub fn is_bare_negation(tokens: &[String]) -> bool {
    matches_phrase(tokens, NEGATIONS)
}

/// `Car` or `Train` when exactly one mode is mentioned.
pub fn parse_transport(tokens: &[String]) -> Option<Transport> {
    let car = tokens.iter().any(|t| CAR_WORDS.contains(&t.as_str()));
    let train = tokens.iter().any(|t| TRAIN_WORDS.contains(&t.as_str()));
    match (car, train) {
        (true, false) => Some(Transport::Car),
        (false, true) => Some(Transport::Train),
        _ => None,
    }
}

/// Longest run of words left after dropping politeness and filler words.
/// Original casing is kept; all-lowercase words are capitalized.
pub fn capture_name(raw: &str) -> Option<String> {
    let words: Vec<String> = raw
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_string())
        .filter(|w| !w.is_empty())
        .collect();
    let mut best: &[String] = &[];
    let mut start = 0;
    for i in 0..=words.len() {
        let stop = i == words.len() || is_name_stopword(&words[i]);
        if stop {
            if i - start > best.len() {
                best = &words[start..i];
            }
            start = i + 1;
        }
    }
    if best.is_empty() {
        return None;
    }
    Some(
        best.iter()
            .map(|w| {
                if w.chars().all(|c| !c.is_uppercase()) {
                    capitalize(w)
                } else {
                    w.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" "),
    )
}

fn is_name_stopword(word: &str) -> bool {
    let folded: String = word
        .to_lowercase()
        .chars()
        .filter(|c| !matches!(c, '\'' | '\u{2019}'))
        .collect();
    NAME_STOPWORDS.contains(&folded.as_str())
}

fn capitalize(w: &str) -> String {
    let mut chars = w.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
