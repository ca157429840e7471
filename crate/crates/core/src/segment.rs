//! Dictionary-based word segmentation.
//!
//! Segmentation is greedy longest-match, left to right. Dictionary entries
//! may contain internal spaces (`strategy officer`) and match across them.
//! Whitespace between words acts as a separator and is not emitted as a
//! word of its own; on separator-free text the concatenation of the output
//! words reproduces the input exactly. Characters covered by no dictionary
//! word become single-character words.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::Path;

/// Segmentation lexicon: a word set plus the longest entry length in chars.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    entries: HashSet<String>,
    max_word_len: usize,
}

impl Dictionary {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut dict = Dictionary::default();
        for word in words {
            dict.insert(word.into());
        }
        dict
    }

    /// Load a dictionary file: UTF-8, one word per line, blanks ignored.
    pub fn load(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(Self::new(
            text.lines().map(str::trim).filter(|l| !l.is_empty()),
        ))
    }

    pub fn insert(&mut self, word: String) {
        let word = word.trim().to_string();
        if word.is_empty() {
            return;
        }
        self.max_word_len = self.max_word_len.max(word.chars().count());
        self.entries.insert(word);
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    pub fn max_word_len(&self) -> usize {
        self.max_word_len
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Span {
    start: usize,
    end: usize,
    matched: bool,
}

/// A segmented text: the original string plus the word spans found in it.
///
/// Spans keep byte offsets into the original text so that multi-word
/// constituents can be sliced back out verbatim, including any separator
/// whitespace between their words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmented {
    text: String,
    spans: Vec<Span>,
}

impl Segmented {
    /// Build a synthetic compound from words joined without separators.
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Self {
        let mut text = String::new();
        let mut spans = Vec::with_capacity(words.len());
        for word in words {
            let word = word.as_ref();
            assert!(!word.is_empty(), "synthetic words must be non-empty");
            let start = text.len();
            text.push_str(word);
            spans.push(Span {
                start,
                end: text.len(),
                matched: true,
            });
        }
        Segmented { text, spans }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn word(&self, i: usize) -> &str {
        let span = &self.spans[i];
        &self.text[span.start..span.end]
    }

    /// Whether word `i` came from a dictionary entry (vs. char fallback).
    pub fn is_dict_match(&self, i: usize) -> bool {
        self.spans[i].matched
    }

    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        (0..self.len()).map(|i| self.word(i))
    }

    /// Original text covering words `i..=j`, separators included.
    pub fn slice(&self, i: usize, j: usize) -> &str {
        assert!(i <= j && j < self.spans.len());
        &self.text[self.spans[i].start..self.spans[j].end]
    }

    /// Words with adjacent unmatched fallback characters coalesced into
    /// maximal runs. `educational` stays one token even when absent from the
    /// dictionary, which is what the syntax rules need.
    pub fn syntax_words(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        let mut run: Option<(usize, usize)> = None;
        for span in &self.spans {
            if span.matched {
                if let Some((s, e)) = run.take() {
                    out.push(&self.text[s..e]);
                }
                out.push(&self.text[span.start..span.end]);
            } else {
                run = match run {
                    Some((s, e)) if e == span.start => Some((s, span.end)),
                    Some((s, e)) => {
                        out.push(&self.text[s..e]);
                        Some((span.start, span.end))
                    }
                    None => Some((span.start, span.end)),
                };
            }
        }
        if let Some((s, e)) = run {
            out.push(&self.text[s..e]);
        }
        out
    }
}

/// Greedy longest-match segmentation of `text` against `dict`.
pub fn segment(text: &str, dict: &Dictionary) -> Segmented {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < n {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let byte_end = |k: usize| if k < n { chars[k].0 } else { text.len() };
        let longest = dict.max_word_len().min(n - i);
        let mut hit = None;
        for len in (1..=longest).rev() {
            let end = byte_end(i + len);
            if dict.contains(&text[start..end]) {
                hit = Some((len, end));
                break;
            }
        }
        match hit {
            Some((len, end)) => {
                spans.push(Span {
                    start,
                    end,
                    matched: true,
                });
                i += len;
            }
            None => {
                spans.push(Span {
                    start,
                    end: byte_end(i + 1),
                    matched: false,
                });
                i += 1;
            }
        }
    }
    Segmented {
        text: text.to_string(),
        spans,
    }
}
