//! Corpus pipeline utilities: data-science filtering, token-based clone
//! deduplication, and aggregate statistics over many notebooks.

mod dedup;
mod lexer;
mod stats;

pub use dedup::{dedup, DedupResult};
pub use lexer::tokenize;
pub use stats::{corpus_stats, CorpusStats, HistogramBin, StatsOptions};

use crate::notebook::Notebook;
use crate::python::import_roots;
use regex::Regex;
use std::collections::BTreeMap;
use std::sync::OnceLock;

/// Libraries whose use qualifies a notebook as data science; `torch` is the
/// importable package behind the name "pytorch", so both are accepted.
pub const DATA_SCIENCE_LIBRARIES: [&str; 6] =
    ["sklearn", "torch", "pytorch", "tensorflow", "spacy", "nltk"];

/// True iff any code cell imports one of the data-science libraries (root
/// package match). Detection uses parsed import statements, falling back to a
/// regex scan for cells whose Python fails to parse.
pub fn is_data_science(nb: &Notebook) -> bool {
    static FALLBACK: OnceLock<Regex> = OnceLock::new();
    let fallback = FALLBACK.get_or_init(|| {
        Regex::new(
            r"\b(?:from|import)\s+(?:[A-Za-z_][\w.]*\s*,\s*)*(?:sklearn|torch|pytorch|tensorflow|spacy|nltk)\b",
        )
        .expect("fallback import pattern compiles")
    });

    nb.cells.iter().filter(|c| c.is_code()).any(|cell| {
        match import_roots(&cell.source) {
            Some(roots) => DATA_SCIENCE_LIBRARIES
                .iter()
                .any(|lib| roots.contains(*lib)),
            None => fallback.is_match(&cell.source),
        }
    })
}

/// Multiset of lexical tokens drawn from all code cells of one notebook.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenBag {
    pub notebook_id: String,
    counts: BTreeMap<String, usize>,
    total: usize,
}

impl TokenBag {
    pub fn from_notebook(notebook_id: impl Into<String>, nb: &Notebook) -> Self {
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for cell in nb.cells.iter().filter(|c| c.is_code()) {
            for token in tokenize(&cell.source) {
                *counts.entry(token).or_insert(0) += 1;
                total += 1;
            }
        }
        TokenBag {
            notebook_id: notebook_id.into(),
            counts,
            total,
        }
    }

    /// Total token count (with multiplicity).
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn distinct_tokens(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(|s| s.as_str())
    }

    fn overlap(&self, other: &TokenBag) -> usize {
        let (small, large) = if self.counts.len() <= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .counts
            .iter()
            .map(|(token, &count)| count.min(large.counts.get(token).copied().unwrap_or(0)))
            .sum()
    }
}

/// Multiset overlap over the larger bag size; 1.0 when both bags are empty.
pub fn similarity(a: &TokenBag, b: &TokenBag) -> f64 {
    let max = a.len().max(b.len());
    if max == 0 {
        return 1.0;
    }
    a.overlap(b) as f64 / max as f64
}
