use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::EmbeddingError;

/// Immutable token → vector map loaded from a text vector file.
///
/// The file format is the common word2vec text layout: a `<count> <dim>`
/// header followed by one `<token> <v1> ... <v_dim>` row per token.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    // Row-major, `tokens.len() * dim` values.
    data: Vec<f64>,
}

impl EmbeddingStore {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses the vector file format from an in-memory string.
    pub fn parse(text: &str) -> Result<Self, EmbeddingError> {
        let mut lines = text.lines().enumerate();
        let (count, dim) = match lines.next() {
            Some((_, header)) => parse_header(header)?,
            None => return Err(EmbeddingError::Header("file is empty".into())),
        };

        let mut store = EmbeddingStore {
            dim,
            index: HashMap::with_capacity(count),
            tokens: Vec::with_capacity(count),
            data: Vec::with_capacity(count * dim),
        };

        for (idx, line) in lines {
            let row = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().expect("non-empty line has a field");
            let start = store.data.len();
            for field in fields {
                let value: f64 = field.parse().map_err(|_| EmbeddingError::Row {
                    row,
                    message: format!("non-numeric component {field:?}"),
                })?;
                if !value.is_finite() {
                    return Err(EmbeddingError::Row {
                        row,
                        message: format!("non-finite component {field:?}"),
                    });
                }
                store.data.push(value);
            }
            let got = store.data.len() - start;
            if got != dim {
                return Err(EmbeddingError::Row {
                    row,
                    message: format!("expected {dim} components, found {got}"),
                });
            }
            if store.index.contains_key(token) {
                return Err(EmbeddingError::Row {
                    row,
                    message: format!("duplicate token {token}"),
                });
            }
            store.index.insert(token.to_string(), store.tokens.len());
            store.tokens.push(token.to_string());
        }

        if store.tokens.len() != count {
            return Err(EmbeddingError::Header(format!(
                "header declares {count} entries, file has {}",
                store.tokens.len()
            )));
        }
        Ok(store)
    }

    /// Builds a store from `(token, vector)` pairs.
    pub fn from_entries<I, S>(dim: usize, entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        if dim == 0 {
            return Err(EmbeddingError::Header("dimension must be positive".into()));
        }
        let mut store = EmbeddingStore {
            dim,
            index: HashMap::new(),
            tokens: Vec::new(),
            data: Vec::new(),
        };
        for (row, (token, vector)) in entries.into_iter().enumerate() {
            let token = token.into();
            if vector.len() != dim {
                return Err(EmbeddingError::Row {
                    row: row + 2,
                    message: format!("expected {dim} components, found {}", vector.len()),
                });
            }
            if store.index.contains_key(&token) {
                return Err(EmbeddingError::Row {
                    row: row + 2,
                    message: format!("duplicate token {token}"),
                });
            }
            store.index.insert(token.clone(), store.tokens.len());
            store.tokens.push(token);
            store.data.extend_from_slice(&vector);
        }
        Ok(store)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Tokens in file order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    /// Writes the store in the canonical single-space format.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dim);
        for (i, token) in self.tokens.iter().enumerate() {
            out.push_str(token);
            for v in &self.data[i * self.dim..(i + 1) * self.dim] {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn parse_header(line: &str) -> Result<(usize, usize), EmbeddingError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(EmbeddingError::Header(format!(
            "row 1: expected `<count> <dim>`, found {line:?}"
        )));
    }
    let count = fields[0]
        .parse::<usize>()
        .map_err(|_| EmbeddingError::Header(format!("row 1: bad count {:?}", fields[0])))?;
    let dim = fields[1]
        .parse::<usize>()
        .map_err(|_| EmbeddingError::Header(format!("row 1: bad dimension {:?}", fields[1])))?;
    if dim == 0 {
        return Err(EmbeddingError::Header(
            "row 1: dimension must be positive".into(),
        ));
    }
    Ok((count, dim))
}
