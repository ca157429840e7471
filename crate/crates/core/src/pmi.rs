//! Unigram and adjacent-bigram statistics with smoothed pointwise mutual
//! information.
//!
//! PMI is total: unseen words and unseen pairs (including concatenated
//! constituents produced during separation) fall back to add-alpha smoothing,
//!
//! ```text
//! pmi(a, b) = ln P(a,b) - ln P(a) - ln P(b)
//! P(a,b)    = (C(a,b) + α) / (T + α·V²)
//! P(a)      = (C(a) + α) / (T + α·V)
//! ```
//!
//! with `T` the total adjacent-bigram count and `V` the unigram vocabulary
//! size. Natural log throughout; only comparisons matter downstream but the
//! base is fixed so regression values stay stable.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

pub const DEFAULT_ALPHA: f64 = 1.0;

#[derive(Debug, Error)]
pub enum PmiError {
    #[error("smoothing alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("pmi snapshot line {line}: {message}")]
    Snapshot { line: u64, message: String },
    #[error("cannot read pmi snapshot {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("cannot merge tables with different alphas ({0} vs {1})")]
    AlphaMismatch(f64, f64),
}

/// Co-occurrence counts over word sequences, plus the smoothing constant.
#[derive(Debug, Clone, PartialEq)]
pub struct PmiTable {
    unigram_counts: HashMap<String, u64>,
    bigram_counts: HashMap<(String, String), u64>,
    total_bigrams: u64,
    smoothing_alpha: f64,
}

impl PmiTable {
    pub fn new(alpha: f64) -> Result<Self, PmiError> {
        if !(alpha > 0.0) {
            return Err(PmiError::NonPositiveAlpha(alpha));
        }
        Ok(PmiTable {
            unigram_counts: HashMap::new(),
            bigram_counts: HashMap::new(),
            total_bigrams: 0,
            smoothing_alpha: alpha,
        })
    }

    /// Count one word sequence: every word as a unigram, every adjacent pair
    /// as a bigram. Length-1 sequences contribute only unigrams.
    pub fn observe<S: AsRef<str>>(&mut self, words: &[S]) {
        for word in words {
            *self
                .unigram_counts
                .entry(word.as_ref().to_string())
                .or_insert(0) += 1;
        }
        for pair in words.windows(2) {
            let key = (pair[0].as_ref().to_string(), pair[1].as_ref().to_string());
            *self.bigram_counts.entry(key).or_insert(0) += 1;
            self.total_bigrams += 1;
        }
    }

    pub fn from_sequences<I, S>(sequences: I, alpha: f64) -> Result<Self, PmiError>
    where
        I: IntoIterator<Item = Vec<S>>,
        S: AsRef<str>,
    {
        let mut table = PmiTable::new(alpha)?;
        for seq in sequences {
            table.observe(&seq);
        }
        Ok(table)
    }

    /// Fold another table into this one. Counts are a commutative monoid, so
    /// per-worker tables can be built independently and merged.
    pub fn merge(&mut self, other: PmiTable) -> Result<(), PmiError> {
        if self.smoothing_alpha != other.smoothing_alpha {
            return Err(PmiError::AlphaMismatch(
                self.smoothing_alpha,
                other.smoothing_alpha,
            ));
        }
        for (word, count) in other.unigram_counts {
            *self.unigram_counts.entry(word).or_insert(0) += count;
        }
        for (pair, count) in other.bigram_counts {
            *self.bigram_counts.entry(pair).or_insert(0) += count;
        }
        self.total_bigrams += other.total_bigrams;
        Ok(())
    }

    pub fn unigram(&self, word: &str) -> u64 {
        self.unigram_counts.get(word).copied().unwrap_or(0)
    }

    pub fn bigram(&self, a: &str, b: &str) -> u64 {
        self.bigram_counts
            .get(&(a.to_string(), b.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn total_bigrams(&self) -> u64 {
        self.total_bigrams
    }

    pub fn vocab_size(&self) -> usize {
        self.unigram_counts.len()
    }

    pub fn alpha(&self) -> f64 {
        self.smoothing_alpha
    }

    /// Smoothed PMI of the ordered adjacent pair `(a, b)`.
    ///
    /// Not symmetric: counts are over ordered adjacency. An empty table
    /// (no vocabulary) returns 0 for every pair.
    pub fn pmi(&self, a: &str, b: &str) -> f64 {
        let v = self.vocab_size() as f64;
        if v == 0.0 {
            return 0.0;
        }
        let alpha = self.smoothing_alpha;
        let t = self.total_bigrams as f64;
        let p_ab = (self.bigram(a, b) as f64 + alpha) / (t + alpha * v * v);
        let p_a = (self.unigram(a) as f64 + alpha) / (t + alpha * v);
        let p_b = (self.unigram(b) as f64 + alpha) / (t + alpha * v);
        p_ab.ln() - p_a.ln() - p_b.ln()
    }

    /// Build a table from explicit counts. `total_bigrams` is derived from
    /// the bigram map; every word mentioned in a bigram must have a unigram
    /// entry.
    pub fn from_counts<I, J>(unigrams: I, bigrams: J, alpha: f64) -> Result<Self, PmiError>
    where
        I: IntoIterator<Item = (String, u64)>,
        J: IntoIterator<Item = ((String, String), u64)>,
    {
        let mut table = PmiTable::new(alpha)?;
        table.unigram_counts = unigrams.into_iter().collect();
        for (pair, count) in bigrams {
            for word in [&pair.0, &pair.1] {
                if !table.unigram_counts.contains_key(word) {
                    return Err(PmiError::Snapshot {
                        line: 0,
                        message: format!("bigram word {word:?} missing from unigrams"),
                    });
                }
            }
            table.total_bigrams += count;
            table.bigram_counts.insert(pair, count);
        }
        Ok(table)
    }

    /// Write the table as sorted tab-separated sections.
    pub fn save<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "#META")?;
        writeln!(w, "alpha\t{}", self.smoothing_alpha)?;
        writeln!(w, "#UNIGRAMS")?;
        let mut unigrams: Vec<_> = self.unigram_counts.iter().collect();
        unigrams.sort();
        for (word, count) in unigrams {
            writeln!(w, "{word}\t{count}")?;
        }
        writeln!(w, "#BIGRAMS")?;
        let mut bigrams: Vec<_> = self.bigram_counts.iter().collect();
        bigrams.sort();
        for ((a, b), count) in bigrams {
            writeln!(w, "{a}\t{b}\t{count}")?;
        }
        Ok(())
    }

    pub fn save_to(&self, path: &Path) -> Result<(), PmiError> {
        let map_io = |source| PmiError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = File::create(path).map_err(map_io)?;
        let mut w = BufWriter::new(file);
        self.save(&mut w).map_err(map_io)?;
        w.flush().map_err(map_io)
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self, PmiError> {
        #[derive(PartialEq)]
        enum Section {
            Start,
            Meta,
            Unigrams,
            Bigrams,
        }
        let err = |line, message: String| PmiError::Snapshot { line, message };
        let mut section = Section::Start;
        let mut alpha = None;
        let mut table = PmiTable::new(DEFAULT_ALPHA)?;
        for (idx, line) in r.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let line = line.map_err(|e| err(line_no, e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            match line.as_str() {
                "#META" => section = Section::Meta,
                "#UNIGRAMS" => section = Section::Unigrams,
                "#BIGRAMS" => section = Section::Bigrams,
                _ => {
                    let fields: Vec<&str> = line.split('\t').collect();
                    match section {
                        Section::Start => {
                            return Err(err(line_no, "data before section header".into()))
                        }
                        Section::Meta => {
                            if fields.len() != 2 || fields[0] != "alpha" {
                                return Err(err(line_no, format!("bad meta line {line:?}")));
                            }
                            alpha = Some(fields[1].parse::<f64>().map_err(|e| {
                                err(line_no, format!("bad alpha {:?}: {e}", fields[1]))
                            })?);
                        }
                        Section::Unigrams => {
                            if fields.len() != 2 {
                                return Err(err(line_no, format!("bad unigram line {line:?}")));
                            }
                            let count = fields[1]
                                .parse::<u64>()
                                .map_err(|e| err(line_no, format!("bad count: {e}")))?;
                            table.unigram_counts.insert(fields[0].to_string(), count);
                        }
                        Section::Bigrams => {
                            if fields.len() != 3 {
                                return Err(err(line_no, format!("bad bigram line {line:?}")));
                            }
                            let count = fields[2]
                                .parse::<u64>()
                                .map_err(|e| err(line_no, format!("bad count: {e}")))?;
                            table
                                .bigram_counts
                                .insert((fields[0].to_string(), fields[1].to_string()), count);
                            table.total_bigrams += count;
                        }
                    }
                }
            }
        }
        let alpha = alpha.ok_or_else(|| err(0, "missing #META alpha".into()))?;
        if !(alpha > 0.0) {
            return Err(PmiError::NonPositiveAlpha(alpha));
        }
        table.smoothing_alpha = alpha;
        for (a, b) in table.bigram_counts.keys() {
            for word in [a, b] {
                if !table.unigram_counts.contains_key(word) {
                    return Err(err(0, format!("bigram word {word:?} missing from unigrams")));
                }
            }
        }
        Ok(table)
    }

    pub fn load_from(path: &Path) -> Result<Self, PmiError> {
        let file = File::open(path).map_err(|source| PmiError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::load(BufReader::new(file))
    }
}
