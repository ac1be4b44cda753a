//! Volatile store of finished reports with keyword search.
//!
//! Nothing is written to disk: a new process starts with an empty store.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::RwLock;
use std::time::Duration;

use thiserror::Error;

/// Characters kept by the normalizer besides alphanumerics.
const KEPT: char = '_';

/// Snippet width in characters.
pub const SNIPPET_CHARS: usize = 160;

fn normalize_word(word: &str) -> String {
    word.chars()
        .filter(|c| c.is_alphanumeric() || *c == KEPT)
        .flat_map(char::to_lowercase)
        .collect()
}

/// Lowercase, drop punctuation, split on whitespace.
pub fn normalize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(normalize_word)
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionRecord {
    pub session_id: String,
    pub source_descriptor: String,
    pub report_markdown: String,
    /// Time on the caller's clock when the session finished.
    pub created_at: Duration,
    /// Token multiset of `report_markdown`.
    pub token_index: BTreeMap<String, usize>,
}

impl SessionRecord {
    pub fn new(
        session_id: impl Into<String>,
        source_descriptor: impl Into<String>,
        report_markdown: impl Into<String>,
        created_at: Duration,
    ) -> Self {
        let report_markdown = report_markdown.into();
        let mut token_index = BTreeMap::new();
        for token in normalize(&report_markdown) {
            *token_index.entry(token).or_insert(0) += 1;
        }
        Self {
            session_id: session_id.into(),
            source_descriptor: source_descriptor.into(),
            report_markdown,
            created_at,
            token_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryHit {
    pub session_id: String,
    pub source_descriptor: String,
    /// In [0, 1].
    pub relevance: f64,
    pub snippet: String,
}

/// Relevance of a record to a set of normalized query tokens.
pub trait RelevanceScorer: Send + Sync {
    fn score(&self, query: &BTreeSet<String>, record: &SessionRecord) -> f64;
}

/// Share of distinct query tokens present in the record.
#[derive(Debug, Clone, Copy, Default)]
pub struct KeywordOverlap;

impl RelevanceScorer for KeywordOverlap {
    fn score(&self, query: &BTreeSet<String>, record: &SessionRecord) -> f64 {
        if query.is_empty() {
            return 0.0;
        }
        let hit = query
            .iter()
            .filter(|t| record.token_index.contains_key(*t))
            .count();
        hit as f64 / query.len() as f64
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MemoryError {
    #[error("session `{0}` is already stored")]
    DuplicateSession(String),
    #[error("query has no searchable words")]
    EmptyQuery,
    #[error("result count must be at least 1")]
    ZeroResults,
}

struct Stored {
    seq: u64,
    record: SessionRecord,
}

/// Reads run concurrently; writes are serialized by the lock.
pub struct MemoryStore {
    records: RwLock<Vec<Stored>>,
    scorer: Box<dyn RelevanceScorer>,
}

impl Default for MemoryStore {
    fn default() -> Self {
        Self::new()
    }
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::with_scorer(Box::new(KeywordOverlap))
    }

    pub fn with_scorer(scorer: Box<dyn RelevanceScorer>) -> Self {
        Self {
            records: RwLock::new(Vec::new()),
            scorer,
        }
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("memory lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn add_session_to_memory(&self, record: SessionRecord) -> Result<(), MemoryError> {
        let mut records = self.records.write().expect("memory lock poisoned");
        if records
            .iter()
            .any(|s| s.record.session_id == record.session_id)
        {
            return Err(MemoryError::DuplicateSession(record.session_id));
        }
        let seq = records.len() as u64;
        records.push(Stored { seq, record });
        Ok(())
    }

    pub fn get(&self, session_id: &str) -> Option<SessionRecord> {
        self.records
            .read()
            .expect("memory lock poisoned")
            .iter()
            .find(|s| s.record.session_id == session_id)
            .map(|s| s.record.clone())
    }

    /// Top `k` records by relevance, newest first among equals. Records
    /// sharing no token with the query are left out.
    pub fn search_memory(&self, query: &str, k: usize) -> Result<Vec<MemoryHit>, MemoryError> {
        if k == 0 {
            return Err(MemoryError::ZeroResults);
        }
        let tokens: BTreeSet<String> = normalize(query).into_iter().collect();
        if tokens.is_empty() {
            return Err(MemoryError::EmptyQuery);
        }
        let records = self.records.read().expect("memory lock poisoned");
        let mut scored: Vec<(f64, &Stored)> = records
            .iter()
            .map(|s| (self.scorer.score(&tokens, &s.record), s))
            .filter(|(r, _)| *r > 0.0)
            .collect();
        scored.sort_by(|(ra, a), (rb, b)| {
            rb.total_cmp(ra)
                .then(b.record.created_at.cmp(&a.record.created_at))
                .then(b.seq.cmp(&a.seq))
        });
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(relevance, s)| MemoryHit {
                session_id: s.record.session_id.clone(),
                source_descriptor: s.record.source_descriptor.clone(),
                relevance,
                snippet: snippet(&s.record.report_markdown, &tokens),
            })
            .collect())
    }
}

/// Up to [`SNIPPET_CHARS`] characters centred on the first word whose
/// normalized form is a query token, with whitespace runs collapsed.
pub fn snippet(text: &str, query: &BTreeSet<String>) -> String {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut centre = 0;
    let mut word_start: Option<usize> = None;
    for (pos, &(_, c)) in chars
        .iter()
        .enumerate()
        .chain(std::iter::once((chars.len(), &(text.len(), ' '))))
    {
        if c.is_whitespace() {
            if let Some(start) = word_start.take() {
                let word: String = chars[start..pos].iter().map(|(_, c)| *c).collect();
                if query.contains(&normalize_word(&word)) {
                    centre = (start + pos) / 2;
                    break;
                }
            }
        } else if word_start.is_none() {
            word_start = Some(pos);
        }
    }
    let start = centre.saturating_sub(SNIPPET_CHARS / 2);
    let end = (start + SNIPPET_CHARS).min(chars.len());
    let start = end.saturating_sub(SNIPPET_CHARS);
    let window: String = chars[start..end].iter().map(|(_, c)| *c).collect();
    window.split_whitespace().collect::<Vec<_>>().join(" ")
}
