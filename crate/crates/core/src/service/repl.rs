//! Line-oriented terminal front end over a [`SessionHub`].

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use anyhow::{Context, Result};

use super::{CreateSession, SessionHub};
use crate::dialogue::{DialogueState, QuestionnaireAnswers, Reply, QUESTIONNAIRE_ITEMS};
use crate::similarity::Method;

#[derive(Debug, Clone)]
pub struct ReplOptions {
    pub spot_a_id: String,
    pub spot_b_id: String,
    pub recommended_id: Option<String>,
    /// Print the classifier's decision after each QA reply.
    pub debug: bool,
}

/// Runs one session until `:quit`, end of input or the dialogue closes,
/// then offers the questionnaire.
pub fn run(
    hub: &SessionHub,
    opts: &ReplOptions,
    mut input: impl BufRead,
    mut out: impl Write,
) -> Result<()> {
    let (slot, greeting) = hub.create(&CreateSession {
        spot_a_id: opts.spot_a_id.clone(),
        spot_b_id: opts.spot_b_id.clone(),
        recommended_id: opts.recommended_id.clone(),
    })?;
    let mut session = slot.session().blocking_lock();
    print_reply(&mut out, &greeting, opts.debug)?;

    let mut line = String::new();
    while session.state() != DialogueState::Closed {
        write!(out, "> ")?;
        out.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            writeln!(out)?;
            break;
        }
        let text = line.trim();
        match text {
            "" => continue,
            ":quit" | ":q" => break,
            ":help" => {
                writeln!(out, "Type to talk to the guide. :quit ends the session.")?;
                continue;
            }
            _ => {}
        }
        let reply = hub.advance(&slot, &mut session, text)?;
        print_reply(&mut out, &reply, opts.debug)?;
    }
    if session.state() != DialogueState::Closed {
        let reply = hub.close(&slot, &mut session)?;
        print_reply(&mut out, &reply, false)?;
    }

    writeln!(out)?;
    writeln!(
        out,
        "Questionnaire: rate each item from 1 (low) to 5 (high)."
    )?;
    for (i, item) in QUESTIONNAIRE_ITEMS.iter().enumerate() {
        writeln!(out, "  {}. {item}", i + 1)?;
    }
    let spots = format!("{} or {}", session.core.spot_a_id, session.core.spot_b_id);
    writeln!(
        out,
        "Enter {} ratings and the spot you chose ({spots}), or an empty line to skip.",
        QUESTIONNAIRE_ITEMS.len()
    )?;
    write!(out, "> ")?;
    out.flush()?;
    line.clear();
    input
        .read_line(&mut line)
        .context("reading questionnaire")?;
    let answer = line.trim();
    if answer.is_empty() {
        writeln!(out, "Questionnaire skipped.")?;
        return Ok(());
    }
    match parse_answers(answer).and_then(|a| Ok(hub.questionnaire(&session, a)?)) {
        Ok(_) => writeln!(out, "Thank you, your answers were saved.")?,
        Err(e) => writeln!(out, "Questionnaire not saved: {e}")?,
    }
    Ok(())
}

fn print_reply(out: &mut impl Write, reply: &Reply, debug: bool) -> Result<()> {
    writeln!(out, "guide: {}", reply.text)?;
    writeln!(
        out,
        "[state: {}] [expression: {}]",
        reply.new_state, reply.expression_event
    )?;
    if let (true, Some(d)) = (debug, &reply.debug) {
        let method = match d.method {
            Some(Method::Wrd) => "WRD",
            Some(Method::CosineMean) => "COSINE_MEAN",
            None => "-",
        };
        writeln!(
            out,
            "[intent: {} score: {} method: {method} via: {:?}]",
            d.category.as_deref().unwrap_or("none"),
            d.score.map_or("-".into(), |s| format!("{s:.3}")),
            d.resolved_by
        )?;
    }
    Ok(())
}

/// `"4 5 3 4 4 5 3 4 4 spot-id"` → answers in item order.
fn parse_answers(line: &str) -> Result<QuestionnaireAnswers> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    let n = QUESTIONNAIRE_ITEMS.len();
    if parts.len() != n + 1 {
        anyhow::bail!(
            "expected {n} ratings and a spot id, got {} fields",
            parts.len()
        );
    }
    let mut ratings = BTreeMap::new();
    for (item, raw) in QUESTIONNAIRE_ITEMS.iter().zip(&parts[..n]) {
        let r: u8 = raw
            .parse()
            .with_context(|| format!("rating {raw:?} is not a number"))?;
        ratings.insert(item.to_string(), r);
    }
    Ok(QuestionnaireAnswers {
        ratings,
        chosen_spot_id: parts[n].to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_answer_line() {
        let a = parse_answers("5 4 3 2 1 5 4 3 2 spot-x").unwrap();
        assert_eq!(a.chosen_spot_id, "spot-x");
        assert_eq!(a.ratings["Choice Satisfaction"], 5);
        assert_eq!(a.ratings["Degree of desire to return"], 2);
        assert!(parse_answers("5 4 3").is_err());
        assert!(parse_answers("5 4 3 2 1 5 4 3 x spot").is_err());
    }
}
