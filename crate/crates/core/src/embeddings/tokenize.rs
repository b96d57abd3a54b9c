use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::EmbeddingError;

/// Raw utterance text together with its normalized tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedUtterance {
    pub raw: String,
    pub tokens: Vec<String>,
}

impl TokenizedUtterance {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Splits raw text into word tokens.
///
/// Languages written without word boundaries need a morphological
/// analyzer; those plug in here. Implementations return raw tokens, which
/// [`tokenize`] then normalizes the same way for every segmenter.
pub trait Segmenter: Send + Sync {
    fn segment(&self, text: &str) -> Result<Vec<String>, String>;

    fn name(&self) -> &str {
        "segmenter"
    }
}

/// Lowercase, punctuation-stripping, whitespace-splitting segmenter.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultSegmenter;

impl Segmenter for DefaultSegmenter {
    fn segment(&self, text: &str) -> Result<Vec<String>, String> {
        Ok(normalize_text(text)
            .split_whitespace()
            .map(str::to_string)
            .collect())
    }

    fn name(&self) -> &str {
        "default"
    }
}

/// Runs an external analyzer (for example `mecab -Owakati`) per utterance.
///
/// The raw text is written to the child's stdin; stdout is read back as
/// whitespace-separated tokens.
#[derive(Debug, Clone)]
pub struct CommandSegmenter {
    program: String,
    args: Vec<String>,
}

impl CommandSegmenter {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        CommandSegmenter {
            program: program.into(),
            args,
        }
    }

    /// Builds a segmenter from an argv list; the first element is the program.
    pub fn from_argv(argv: &[String]) -> Option<Self> {
        let (program, args) = argv.split_first()?;
        Some(Self::new(program.clone(), args.to_vec()))
    }
}

impl Segmenter for CommandSegmenter {
    fn segment(&self, text: &str) -> Result<Vec<String>, String> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| format!("failed to start {}: {e}", self.program))?;
        {
            let mut stdin = child.stdin.take().expect("stdin is piped");
            stdin
                .write_all(text.as_bytes())
                .and_then(|_| stdin.write_all(b"\n"))
                .map_err(|e| format!("failed to write to {}: {e}", self.program))?;
        }
        let output = child
            .wait_with_output()
            .map_err(|e| format!("failed to wait for {}: {e}", self.program))?;
        if !output.status.success() {
            return Err(format!(
                "{} exited with {}: {}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            ));
        }
        let stdout = String::from_utf8(output.stdout)
            .map_err(|_| format!("{} produced non-UTF-8 output", self.program))?;
        Ok(stdout.split_whitespace().map(str::to_string).collect())
    }

    fn name(&self) -> &str {
        &self.program
    }
}

type SegmentFn = dyn Fn(&str) -> Result<Vec<String>, String> + Send + Sync;

/// In-process segmenter backed by a closure.
#[derive(Clone)]
pub struct FnSegmenter {
    name: String,
    func: Arc<SegmentFn>,
}

impl FnSegmenter {
    pub fn new<F>(name: impl Into<String>, func: F) -> Self
    where
        F: Fn(&str) -> Result<Vec<String>, String> + Send + Sync + 'static,
    {
        FnSegmenter {
            name: name.into(),
            func: Arc::new(func),
        }
    }
}

impl Segmenter for FnSegmenter {
    fn segment(&self, text: &str) -> Result<Vec<String>, String> {
        (self.func)(text)
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// Normalizes and segments `text`.
pub fn tokenize(
    text: &str,
    segmenter: &dyn Segmenter,
) -> Result<TokenizedUtterance, EmbeddingError> {
    let pieces = segmenter
        .segment(text)
        .map_err(|diagnostics| EmbeddingError::Segmenter {
            segmenter: segmenter.name().to_string(),
            diagnostics,
        })?;
    // Adapter output goes through the same normalization so lookups agree
    // regardless of which segmenter produced the pieces.
    let tokens = pieces
        .iter()
        .flat_map(|piece| {
            normalize_text(piece)
                .split_whitespace()
                .map(str::to_string)
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(TokenizedUtterance {
        raw: text.to_string(),
        tokens,
    })
}

/// NFKC, lowercase, drop apostrophes, turn other punctuation into spaces.
pub fn normalize_text(text: &str) -> String {
    let folded: String = text.nfkc().collect::<String>().to_lowercase();
    let folded: String = folded.nfkc().collect();
    folded
        .chars()
        .filter(|c| !is_apostrophe(*c))
        .map(|c| if is_separator(c) { ' ' } else { c })
        .collect()
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{2018}' | '\u{02BC}')
}

fn is_separator(c: char) -> bool {
    c.is_whitespace()
        || c.is_ascii_punctuation()
        || c.is_control()
        || matches!(c as u32,
            0x00A1..=0x00BF   // Latin-1 punctuation and symbols
            | 0x2000..=0x206F // general punctuation
            | 0x3000..=0x303F // CJK symbols and punctuation
            | 0xFF01..=0xFF0F // fullwidth ASCII punctuation that NFKC leaves alone
            | 0xFE30..=0xFE4F)
}
