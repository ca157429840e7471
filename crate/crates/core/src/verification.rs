//! Candidate verification: a relation is filtered if any enabled strategy
//! judges it wrong.
//!
//! Strategies, in application order: thematic-word lexicon, head-stem syntax
//! rule, named-entity support (noisy-or of corpus and taxonomy signals), and
//! incompatible-concept resolution by KL divergence over infobox attribute
//! distributions. Cheap syntactic rules run first; KL resolution pools
//! concept attributes over the edge set the earlier stages left behind.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{EncyclopediaPage, TitleCensus};
use crate::generation::{CandidateRelation, FilterReason};
use crate::segment::{segment, Dictionary};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("smoothing alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("attribute vocabulary is empty; cannot form a distribution")]
    EmptyVocabulary,
    #[error("distributions are over different attribute vocabularies")]
    VocabMismatch,
    #[error("distribution weights must be positive and sum to 1, got sum {0}")]
    BadWeights(f64),
    #[error("{artifact} is required while {rule} is enabled")]
    MissingArtifact {
        artifact: &'static str,
        rule: &'static str,
    },
    #[error("threshold {name} = {value} outside [0, 1]")]
    BadThreshold { name: &'static str, value: f64 },
    #[error("ne counts line {line}: {message}")]
    NeCounts { line: u64, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
}

// ---------------------------------------------------------------------------
// Thematic lexicon (rule 1)
// ---------------------------------------------------------------------------

/// Topic labels that are never valid hypernyms (e.g. politics, military).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ThematicLexicon {
    words: BTreeSet<String>,
}

impl ThematicLexicon {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ThematicLexicon {
            words: words
                .into_iter()
                .map(|w| w.into().trim().to_string())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    /// One word per line.
    pub fn load(path: &Path) -> Result<Self, VerifyError> {
        let text = fs::read_to_string(path).map_err(|source| VerifyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::from_words(text.lines()))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }
}

/// Filter pending candidates whose hypernym is a thematic word.
pub fn thematic_filter(candidates: &mut [CandidateRelation], lexicon: &ThematicLexicon) {
    for candidate in candidates.iter_mut() {
        if candidate.is_pending() && lexicon.contains(&candidate.hypernym) {
            candidate.mark_filtered(FilterReason::ThematicWord);
        }
    }
}

// ---------------------------------------------------------------------------
// Head-stem rule (rule 2)
// ---------------------------------------------------------------------------

/// Decides whether two words share a stem.
pub trait StemMatcher {
    fn matches(&self, a: &str, b: &str) -> bool;
}

/// Exact match, or a lowercased common prefix of at least `min_prefix`
/// characters. The prefix clause fires on alphabetic inflection
/// (education/educational); short ideographic words fall back to equality.
#[derive(Debug, Clone, Copy)]
pub struct DefaultStemMatcher {
    pub min_prefix: usize,
}

impl Default for DefaultStemMatcher {
    fn default() -> Self {
        DefaultStemMatcher { min_prefix: 5 }
    }
}

impl StemMatcher for DefaultStemMatcher {
    fn matches(&self, a: &str, b: &str) -> bool {
        if a == b {
            return true;
        }
        let common = a
            .to_lowercase()
            .chars()
            .zip(b.to_lowercase().chars())
            .take_while(|(x, y)| x == y)
            .count();
        common >= self.min_prefix
    }
}

/// Strip a trailing disambiguation bracket before segmenting: node names
/// like `Apple (company)` match on their lexical part only.
fn lexical_part(name: &str) -> String {
    match crate::corpus::split_title(name) {
        Ok((bare, Some(_))) => bare,
        _ => name.to_string(),
    }
}

/// True when the stem of the hypernym's lexical head occurs in a non-head
/// position of the hyponym.
pub fn head_stem_decision(
    candidate: &CandidateRelation,
    dict: &Dictionary,
    stemmer: &dyn StemMatcher,
) -> bool {
    let hyper_seg = segment(&candidate.hypernym, dict);
    let hyper_words = hyper_seg.syntax_words();
    let Some(head) = hyper_words.last() else {
        return false;
    };
    let hypo_seg = segment(&lexical_part(&candidate.hyponym), dict);
    let hypo_words = hypo_seg.syntax_words();
    if hypo_words.len() < 2 {
        return false;
    }
    hypo_words[..hypo_words.len() - 1]
        .iter()
        .any(|word| stemmer.matches(head, word))
}

pub fn head_stem_filter(
    candidates: &mut [CandidateRelation],
    dict: &Dictionary,
    stemmer: &dyn StemMatcher,
) {
    for candidate in candidates.iter_mut() {
        if candidate.is_pending() && head_stem_decision(candidate, dict, stemmer) {
            candidate.mark_filtered(FilterReason::HeadStem);
        }
    }
}

// ---------------------------------------------------------------------------
// Named-entity support (noisy-or)
// ---------------------------------------------------------------------------

/// Per-term NE occurrence counts from an external tagger run:
/// `term<TAB>ne_count<TAB>total_count`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeCounts {
    counts: HashMap<String, (u64, u64)>,
}

impl NeCounts {
    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (String, u64, u64)>,
    {
        NeCounts {
            counts: entries
                .into_iter()
                .map(|(term, ne, total)| (term, (ne, total)))
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, VerifyError> {
        let text = fs::read_to_string(path).map_err(|source| VerifyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut counts = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx as u64 + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let err = |message: String| VerifyError::NeCounts {
                line: line_no,
                message,
            };
            if fields.len() != 3 {
                return Err(err(format!("expected 3 fields, got {}", fields.len())));
            }
            let ne: u64 = fields[1]
                .parse()
                .map_err(|e| err(format!("bad ne count: {e}")))?;
            let total: u64 = fields[2]
                .parse()
                .map_err(|e| err(format!("bad total count: {e}")))?;
            if ne > total {
                return Err(err(format!("ne count {ne} exceeds total {total}")));
            }
            counts.insert(fields[0].to_string(), (ne, total));
        }
        Ok(NeCounts { counts })
    }

    /// Fraction of corpus occurrences tagged as a named entity; 0 for terms
    /// absent from the counts.
    pub fn s1(&self, term: &str) -> f64 {
        match self.counts.get(term) {
            Some(&(_, 0)) | None => 0.0,
            Some(&(ne, total)) => ne as f64 / total as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// How often each term occurs in hyponym vs hypernym position among the
/// pending candidates.
#[derive(Debug, Clone, Default)]
pub struct PositionCounts {
    hyponym: HashMap<String, u64>,
    hypernym: HashMap<String, u64>,
}

impl PositionCounts {
    pub fn from_candidates(candidates: &[CandidateRelation]) -> Self {
        let mut positions = PositionCounts::default();
        for candidate in candidates.iter().filter(|c| c.is_pending()) {
            *positions
                .hyponym
                .entry(candidate.hyponym.clone())
                .or_insert(0) += 1;
            *positions
                .hypernym
                .entry(candidate.hypernym.clone())
                .or_insert(0) += 1;
        }
        positions
    }
}

/// Noisy-or combination of independent support signals.
pub fn noisy_or(s1: f64, s2: f64) -> f64 {
    1.0 - (1.0 - s1) * (1.0 - s2)
}

/// NE support of a term, combining corpus evidence (`s1`) with taxonomy
/// evidence (`s2`, the fraction of its candidate occurrences in hyponym
/// position).
#[derive(Debug, Clone, PartialEq)]
pub struct NeSupport {
    pub term: String,
    pub s1: f64,
    pub s2: f64,
    pub s: f64,
}

pub fn ne_support(term: &str, corpus_counts: &NeCounts, positions: &PositionCounts) -> NeSupport {
    let s1 = corpus_counts.s1(term);
    let as_hyponym = positions.hyponym.get(term).copied().unwrap_or(0);
    let as_hypernym = positions.hypernym.get(term).copied().unwrap_or(0);
    let s2 = if as_hyponym + as_hypernym == 0 {
        0.0
    } else {
        as_hyponym as f64 / (as_hyponym + as_hypernym) as f64
    };
    NeSupport {
        term: term.to_string(),
        s1,
        s2,
        s: noisy_or(s1, s2),
    }
}

/// Filter pending candidates whose hypernym has NE support strictly greater
/// than `theta`. Supports are computed against a frozen view of the pending
/// set before any of them is applied.
pub fn ner_filter(candidates: &mut [CandidateRelation], corpus_counts: &NeCounts, theta: f64) {
    let positions = PositionCounts::from_candidates(candidates);
    let mut supports: HashMap<&str, f64> = HashMap::new();
    for candidate in candidates.iter().filter(|c| c.is_pending()) {
        let term = candidate.hypernym.as_str();
        if !supports.contains_key(term) {
            supports.insert(term, ne_support(term, corpus_counts, &positions).s);
        }
    }
    let decisions: Vec<bool> = candidates
        .iter()
        .map(|c| c.is_pending() && supports.get(c.hypernym.as_str()).copied().unwrap_or(0.0) > theta)
        .collect();
    for (candidate, filter) in candidates.iter_mut().zip(decisions) {
        if filter {
            candidate.mark_filtered(FilterReason::NeSupport);
        }
    }
}

// ---------------------------------------------------------------------------
// Attribute distributions and KL divergence
// ---------------------------------------------------------------------------

/// Smoothed distribution over the global infobox-predicate vocabulary.
///
/// Attributes with observed counts carry explicit weights; every other
/// vocabulary attribute shares `zero_weight`, so all weights are strictly
/// positive and KL divergence is always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDistribution {
    weights: BTreeMap<String, f64>,
    zero_weight: f64,
    vocab_size: usize,
    support: u64,
}

impl AttributeDistribution {
    /// Build directly from explicit weights (no smoothing tail). Weights must
    /// be positive and sum to 1 within 1e-9.
    pub fn from_weights(
        weights: BTreeMap<String, f64>,
        support: u64,
    ) -> Result<Self, VerifyError> {
        if weights.is_empty() {
            return Err(VerifyError::EmptyVocabulary);
        }
        let sum: f64 = weights.values().sum();
        if weights.values().any(|&w| w <= 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(VerifyError::BadWeights(sum));
        }
        let vocab_size = weights.len();
        Ok(AttributeDistribution {
            weights,
            zero_weight: 0.0,
            vocab_size,
            support,
        })
    }

    pub fn weight(&self, attribute: &str) -> f64 {
        self.weights
            .get(attribute)
            .copied()
            .unwrap_or(self.zero_weight)
    }

    pub fn support(&self) -> u64 {
        self.support
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Total probability mass; 1 up to float error.
    pub fn total_mass(&self) -> f64 {
        let explicit: f64 = self.weights.values().sum();
        explicit + self.zero_weight * (self.vocab_size - self.weights.len()) as f64
    }
}

/// Builds add-alpha-smoothed attribute distributions over a fixed global
/// vocabulary.
#[derive(Debug, Clone)]
pub struct DistributionBuilder {
    vocab: BTreeSet<String>,
    alpha: f64,
}

impl DistributionBuilder {
    pub fn new(vocab: BTreeSet<String>, alpha: f64) -> Result<Self, VerifyError> {
        if !(alpha > 0.0) {
            return Err(VerifyError::NonPositiveAlpha(alpha));
        }
        if vocab.is_empty() {
            return Err(VerifyError::EmptyVocabulary);
        }
        Ok(DistributionBuilder { vocab, alpha })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    /// Distribution proportional to `count(attr) + alpha` over the whole
    /// vocabulary. Counts outside the vocabulary are ignored.
    pub fn from_counts(&self, counts: &BTreeMap<String, u64>) -> AttributeDistribution {
        let mut support = 0u64;
        let mut weights = BTreeMap::new();
        for (attribute, &count) in counts {
            if count == 0 || !self.vocab.contains(attribute) {
                continue;
            }
            support += count;
            weights.insert(attribute.clone(), count as f64);
        }
        let denom = support as f64 + self.alpha * self.vocab.len() as f64;
        for weight in weights.values_mut() {
            *weight = (*weight + self.alpha) / denom;
        }
        AttributeDistribution {
            weights,
            zero_weight: self.alpha / denom,
            vocab_size: self.vocab.len(),
            support,
        }
    }
}

/// KL divergence `D(p ‖ q) = -Σ p(x) ln(q(x)/p(x))`, non-negative, zero only
/// for equal distributions.
pub fn kl_divergence(
    p: &AttributeDistribution,
    q: &AttributeDistribution,
) -> Result<f64, VerifyError> {
    if p.vocab_size != q.vocab_size {
        return Err(VerifyError::VocabMismatch);
    }
    let mut kl = 0.0;
    let mut union = 0usize;
    let mut q_keys_not_in_p = 0usize;
    for (attribute, &pw) in &p.weights {
        let qw = q.weight(attribute);
        if qw <= 0.0 {
            return Err(VerifyError::VocabMismatch);
        }
        kl += pw * (pw / qw).ln();
        union += 1;
    }
    for (attribute, &qw) in &q.weights {
        if p.weights.contains_key(attribute) {
            continue;
        }
        q_keys_not_in_p += 1;
        let pw = p.zero_weight;
        if pw > 0.0 {
            kl += pw * (pw / qw).ln();
        }
    }
    union += q_keys_not_in_p;
    let both_zero = p.vocab_size - union;
    if both_zero > 0 && p.zero_weight > 0.0 {
        if q.zero_weight <= 0.0 {
            return Err(VerifyError::VocabMismatch);
        }
        kl += both_zero as f64 * p.zero_weight * (p.zero_weight / q.zero_weight).ln();
    }
    Ok(kl)
}

// ---------------------------------------------------------------------------
// Incompatible concepts
// ---------------------------------------------------------------------------

/// Predicate counts per taxonomy subject, plus the global vocabulary.
#[derive(Debug, Clone, Default)]
pub struct TripleIndex {
    by_subject: HashMap<String, BTreeMap<String, u64>>,
    vocab: BTreeSet<String>,
}

impl TripleIndex {
    /// Index pages by their taxonomy node name (census-resolved when given).
    pub fn from_pages<I>(pages: I, census: Option<&TitleCensus>) -> Self
    where
        I: IntoIterator<Item = EncyclopediaPage>,
    {
        let mut index = TripleIndex::default();
        for page in pages {
            let subject = match census {
                Some(census) => census.node_name(&page),
                None => page.entity_name.clone(),
            };
            let counts = index.by_subject.entry(subject).or_default();
            for triple in &page.triples {
                index.vocab.insert(triple.predicate.clone());
                *counts.entry(triple.predicate.clone()).or_insert(0) += 1;
            }
        }
        index
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn subject_counts(&self, subject: &str) -> Option<&BTreeMap<String, u64>> {
        self.by_subject.get(subject)
    }

    /// Pooled predicate counts over a set of subjects.
    pub fn pooled_counts<'a, I>(&self, subjects: I) -> BTreeMap<String, u64>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut pooled = BTreeMap::new();
        for subject in subjects {
            if let Some(counts) = self.by_subject.get(subject) {
                for (attribute, count) in counts {
                    *pooled.entry(attribute.clone()).or_insert(0) += count;
                }
            }
        }
        pooled
    }
}

/// A concept pair judged incompatible: low hyponym overlap and dissimilar
/// attribute profiles. `concept_a < concept_b` lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct IncompatiblePair {
    pub concept_a: String,
    pub concept_b: String,
    pub jaccard: f64,
    pub cosine: f64,
}

fn jaccard(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    let intersection = a.intersection(b).count();
    let union = a.len() + b.len() - intersection;
    if union == 0 {
        0.0
    } else {
        intersection as f64 / union as f64
    }
}

/// Cosine over raw (unsmoothed) attribute count vectors; 0 when either
/// vector is empty.
fn cosine(a: &BTreeMap<String, u64>, b: &BTreeMap<String, u64>) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(attr, &x)| b.get(attr).map(|&y| x as f64 * y as f64))
        .sum();
    let norm = |v: &BTreeMap<String, u64>| {
        v.values().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt()
    };
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        0.0
    } else {
        dot / denom
    }
}

/// Enumerate incompatible concept pairs among concepts that co-occur on at
/// least one hyponym and have at least `min_support` hyponyms each: the pair
/// is emitted iff Jaccard(hyponym sets) ≤ τ_j and cosine(attribute counts)
/// ≤ τ_c.
pub fn build_incompatible_pairs(
    candidates: &[CandidateRelation],
    triples: &TripleIndex,
    tau_j: f64,
    tau_c: f64,
    min_support: usize,
) -> Vec<IncompatiblePair> {
    let mut concept_hyponyms: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut entity_concepts: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for candidate in candidates.iter().filter(|c| c.is_pending()) {
        concept_hyponyms
            .entry(candidate.hypernym.as_str())
            .or_default()
            .insert(candidate.hyponym.as_str());
        entity_concepts
            .entry(candidate.hyponym.as_str())
            .or_default()
            .insert(candidate.hypernym.as_str());
    }
    let mut co_occurring: BTreeSet<(&str, &str)> = BTreeSet::new();
    for concepts in entity_concepts.values() {
        let list: Vec<&str> = concepts.iter().copied().collect();
        for (i, &a) in list.iter().enumerate() {
            for &b in &list[i + 1..] {
                co_occurring.insert((a, b));
            }
        }
    }
    let mut pairs = Vec::new();
    for (a, b) in co_occurring {
        let hypo_a = &concept_hyponyms[a];
        let hypo_b = &concept_hyponyms[b];
        if hypo_a.len() < min_support || hypo_b.len() < min_support {
            continue;
        }
        let jac = jaccard(hypo_a, hypo_b);
        if jac > tau_j {
            continue;
        }
        let cos = cosine(
            &triples.pooled_counts(hypo_a.iter().copied()),
            &triples.pooled_counts(hypo_b.iter().copied()),
        );
        if cos > tau_c {
            continue;
        }
        pairs.push(IncompatiblePair {
            concept_a: a.to_string(),
            concept_b: b.to_string(),
            jaccard: jac,
            cosine: cos,
        });
    }
    pairs
}

/// KL scores closer than this count as a tie; neither edge is filtered.
pub const KL_TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConflictOutcome {
    /// Filter the entity's edge to this concept.
    Filter(String),
    Tie,
}

/// Given an entity attached to both concepts of an incompatible pair, filter
/// the concept whose attribute distribution diverges more from the entity's.
pub fn resolve_conflict(
    entity_dist: &AttributeDistribution,
    concept_a: (&str, &AttributeDistribution),
    concept_b: (&str, &AttributeDistribution),
) -> Result<ConflictOutcome, VerifyError> {
    let kl_a = kl_divergence(entity_dist, concept_a.1)?;
    let kl_b = kl_divergence(entity_dist, concept_b.1)?;
    if (kl_a - kl_b).abs() < KL_TIE_EPSILON {
        return Ok(ConflictOutcome::Tie);
    }
    Ok(ConflictOutcome::Filter(if kl_a > kl_b {
        concept_a.0.to_string()
    } else {
        concept_b.0.to_string()
    }))
}

/// Build incompatible pairs, then resolve each conflicted entity by KL.
/// Distributions are pooled once over the pending set; resolution walks
/// entities and pairs in sorted order, skipping edges an earlier resolution
/// already filtered.
pub fn incompatible_filter(
    candidates: &mut [CandidateRelation],
    triples: &TripleIndex,
    tau_j: f64,
    tau_c: f64,
    min_support: usize,
    alpha: f64,
) -> Result<(), VerifyError> {
    let pairs = build_incompatible_pairs(candidates, triples, tau_j, tau_c, min_support);
    if pairs.is_empty() {
        return Ok(());
    }
    let builder = DistributionBuilder::new(triples.vocab().clone(), alpha)?;
    let mut concept_dists: BTreeMap<String, AttributeDistribution> = BTreeMap::new();
    {
        let mut concept_hyponyms: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for candidate in candidates.iter().filter(|c| c.is_pending()) {
            concept_hyponyms
                .entry(candidate.hypernym.as_str())
                .or_default()
                .insert(candidate.hyponym.as_str());
        }
        for pair in &pairs {
            for concept in [&pair.concept_a, &pair.concept_b] {
                if !concept_dists.contains_key(concept) {
                    let hyponyms = concept_hyponyms.get(concept.as_str());
                    let counts = triples.pooled_counts(
                        hyponyms.into_iter().flatten().copied(),
                    );
                    concept_dists.insert(concept.clone(), builder.from_counts(&counts));
                }
            }
        }
    }
    let empty = BTreeMap::new();
    let mut edge_index: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut entities: BTreeSet<String> = BTreeSet::new();
    for (idx, candidate) in candidates.iter().enumerate() {
        if candidate.is_pending() {
            edge_index.insert((candidate.hyponym.clone(), candidate.hypernym.clone()), idx);
            entities.insert(candidate.hyponym.clone());
        }
    }
    for entity in entities {
        let entity_dist = builder.from_counts(
            triples.subject_counts(&entity).unwrap_or(&empty),
        );
        for pair in &pairs {
            let edge_a = edge_index
                .get(&(entity.clone(), pair.concept_a.clone()))
                .copied();
            let edge_b = edge_index
                .get(&(entity.clone(), pair.concept_b.clone()))
                .copied();
            let (Some(edge_a), Some(edge_b)) = (edge_a, edge_b) else {
                continue;
            };
            if !candidates[edge_a].is_pending() || !candidates[edge_b].is_pending() {
                continue;
            }
            let outcome = resolve_conflict(
                &entity_dist,
                (&pair.concept_a, &concept_dists[&pair.concept_a]),
                (&pair.concept_b, &concept_dists[&pair.concept_b]),
            )?;
            match outcome {
                ConflictOutcome::Filter(concept) => {
                    let edge = if concept == pair.concept_a { edge_a } else { edge_b };
                    candidates[edge].mark_filtered(FilterReason::IncompatibleKl);
                }
                ConflictOutcome::Tie => {
                    log::info!(
                        "kl tie for {entity:?} between {:?} and {:?}; keeping both",
                        pair.concept_a,
                        pair.concept_b
                    );
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// The combined verifier
// ---------------------------------------------------------------------------

/// Thresholds and rule switches. Defaults are pinned for reproducibility;
/// every value is expected to come from run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub tau_j: f64,
    pub tau_c: f64,
    pub min_support: usize,
    pub alpha: f64,
    pub theta: f64,
    pub enable_thematic: bool,
    pub enable_head_stem: bool,
    pub enable_ne: bool,
    pub enable_incompatible: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            tau_j: 0.01,
            tau_c: 0.2,
            min_support: 5,
            alpha: 0.1,
            theta: 0.9,
            enable_thematic: true,
            enable_head_stem: true,
            enable_ne: true,
            enable_incompatible: true,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<(), VerifyError> {
        for (name, value) in [
            ("tau_j", self.tau_j),
            ("tau_c", self.tau_c),
            ("theta", self.theta),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(VerifyError::BadThreshold { name, value });
            }
        }
        if !(self.alpha > 0.0) {
            return Err(VerifyError::NonPositiveAlpha(self.alpha));
        }
        Ok(())
    }
}

/// Artifacts the enabled rules need.
pub struct VerifyInputs<'a> {
    pub dict: &'a Dictionary,
    pub lexicon: Option<&'a ThematicLexicon>,
    pub ne_counts: Option<&'a NeCounts>,
    pub triples: &'a TripleIndex,
    pub stemmer: &'a dyn StemMatcher,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOutcome {
    pub accepted: Vec<CandidateRelation>,
    pub filtered: Vec<CandidateRelation>,
    /// Histogram of filter reasons.
    pub reason_counts: BTreeMap<FilterReason, u64>,
}

/// Run the enabled strategies in order (thematic, head-stem, NE,
/// incompatible-KL); survivors are accepted. A candidate filtered by an
/// earlier stage is not re-examined.
pub fn verify(
    mut candidates: Vec<CandidateRelation>,
    config: &VerifyConfig,
    inputs: &VerifyInputs,
) -> Result<VerifyOutcome, VerifyError> {
    config.validate()?;
    if config.enable_thematic {
        let lexicon = inputs.lexicon.ok_or(VerifyError::MissingArtifact {
            artifact: "thematic lexicon",
            rule: "thematic-word rule",
        })?;
        if lexicon.is_empty() {
            return Err(VerifyError::MissingArtifact {
                artifact: "non-empty thematic lexicon",
                rule: "thematic-word rule",
            });
        }
        thematic_filter(&mut candidates, lexicon);
    }
    if config.enable_head_stem {
        head_stem_filter(&mut candidates, inputs.dict, inputs.stemmer);
    }
    if config.enable_ne {
        let ne_counts = inputs.ne_counts.ok_or(VerifyError::MissingArtifact {
            artifact: "ne counts",
            rule: "named-entity rule",
        })?;
        ner_filter(&mut candidates, ne_counts, config.theta);
    }
    if config.enable_incompatible {
        incompatible_filter(
            &mut candidates,
            inputs.triples,
            config.tau_j,
            config.tau_c,
            config.min_support,
            config.alpha,
        )?;
    }
    let mut outcome = VerifyOutcome::default();
    for mut candidate in candidates {
        match candidate.filter_reason() {
            Some(reason) => {
                *outcome.reason_counts.entry(reason).or_insert(0) += 1;
                outcome.filtered.push(candidate);
            }
            None => {
                candidate.mark_accepted();
                outcome.accepted.push(candidate);
            }
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_page, RawRecord};
    use crate::generation::Source;

    fn rel(hypo: &str, hyper: &str) -> CandidateRelation {
        CandidateRelation::new(hypo, hyper, [Source::Tag]).unwrap()
    }

    fn dist(weights: &[(&str, f64)]) -> AttributeDistribution {
        AttributeDistribution::from_weights(
            weights.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            1,
        )
        .unwrap()
    }

    fn page(json: &str) -> EncyclopediaPage {
        parse_page(&serde_json::from_str::<RawRecord>(json).unwrap()).unwrap()
    }

    #[test]
    fn smoothed_distribution_matches_hand_normalization() {
        let vocab: BTreeSet<String> = ["occupation", "nationality", "birthplace"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let builder = DistributionBuilder::new(vocab, 1.0).unwrap();
        let counts: BTreeMap<String, u64> =
            [("occupation".to_string(), 2), ("nationality".to_string(), 1)].into();
        let dist = builder.from_counts(&counts);
        assert!((dist.weight("occupation") - 3.0 / 6.0).abs() < 1e-12);
        assert!((dist.weight("nationality") - 2.0 / 6.0).abs() < 1e-12);
        assert!((dist.weight("birthplace") - 1.0 / 6.0).abs() < 1e-12);
        assert!((dist.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_triples_gives_uniform() {
        let vocab: BTreeSet<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let builder = DistributionBuilder::new(vocab, 0.5).unwrap();
        let dist = builder.from_counts(&BTreeMap::new());
        for attr in ["a", "b", "c", "d"] {
            assert!((dist.weight(attr) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        assert!(matches!(
            DistributionBuilder::new(BTreeSet::new(), 1.0),
            Err(VerifyError::EmptyVocabulary)
        ));
    }

    #[test]
    fn kl_of_identical_distributions_is_zero() {
        let p = dist(&[("x", 0.5), ("y", 0.5)]);
        assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn kl_hand_computed_value() {
        let p = dist(&[("x", 0.5), ("y", 0.5)]);
        let q = dist(&[("x", 0.9), ("y", 0.1)]);
        let kl = kl_divergence(&p, &q).unwrap();
        assert!((kl - 0.5108256237659907).abs() < 1e-12);
    }

    #[test]
    fn kl_is_asymmetric() {
        let p = dist(&[("x", 0.5), ("y", 0.5)]);
        let q = dist(&[("x", 0.9), ("y", 0.1)]);
        let forward = kl_divergence(&p, &q).unwrap();
        let backward = kl_divergence(&q, &p).unwrap();
        assert!((forward - backward).abs() > 1e-3);
    }

    #[test]
    fn kl_rejects_mismatched_vocabularies() {
        let p = dist(&[("x", 0.5), ("y", 0.5)]);
        let q = dist(&[("x", 0.5), ("z", 0.5)]);
        assert!(matches!(
            kl_divergence(&p, &q),
            Err(VerifyError::VocabMismatch)
        ));
        let wider = dist(&[("x", 0.4), ("y", 0.3), ("z", 0.3)]);
        assert!(matches!(
            kl_divergence(&p, &wider),
            Err(VerifyError::VocabMismatch)
        ));
    }

    #[test]
    fn noisy_or_fixed_points() {
        assert_eq!(noisy_or(0.0, 0.0), 0.0);
        assert_eq!(noisy_or(1.0, 0.3), 1.0);
        assert!((noisy_or(0.5, 0.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ne_support_combines_corpus_and_taxonomy() {
        let counts = NeCounts::from_entries([("America".to_string(), 95, 100)]);
        let candidates = vec![rel("iPhone", "America"), rel("America", "country")];
        let positions = PositionCounts::from_candidates(&candidates);
        let support = ne_support("America", &counts, &positions);
        assert!((support.s1 - 0.95).abs() < 1e-12);
        assert!((support.s2 - 0.5).abs() < 1e-12);
        assert!((support.s - 0.975).abs() < 1e-12);
    }

    #[test]
    fn ner_filter_drops_ne_hypernyms() {
        let counts = NeCounts::from_entries([("America".to_string(), 95, 100)]);
        let mut candidates = vec![rel("iPhone", "America"), rel("America", "country")];
        ner_filter(&mut candidates, &counts, 0.9);
        assert_eq!(candidates[0].filter_reason(), Some(FilterReason::NeSupport));
        assert!(candidates[1].is_pending());
    }

    #[test]
    fn absent_term_survives_ner() {
        let counts = NeCounts::default();
        let mut candidates = vec![rel("Dehua Liu", "singer")];
        ner_filter(&mut candidates, &counts, 0.9);
        assert!(candidates[0].is_pending());
    }

    #[test]
    fn theta_one_filters_nothing() {
        let counts = NeCounts::from_entries([("America".to_string(), 100, 100)]);
        let mut candidates = vec![rel("iPhone", "America")];
        ner_filter(&mut candidates, &counts, 1.0);
        assert!(candidates[0].is_pending());
    }

    #[test]
    fn thematic_filter_uses_lexicon() {
        let lexicon = ThematicLexicon::from_words(["politics", "military"]);
        let mut candidates = vec![rel("x", "politics"), rel("x", "singer")];
        thematic_filter(&mut candidates, &lexicon);
        assert_eq!(
            candidates[0].filter_reason(),
            Some(FilterReason::ThematicWord)
        );
        assert!(candidates[1].is_pending());
    }

    #[test]
    fn head_stem_filters_educational_institution() {
        let dict = Dictionary::new(["educational", "institution", "education"]);
        let matcher = DefaultStemMatcher::default();
        let candidate = rel("educational institution", "education");
        assert!(head_stem_decision(&candidate, &dict, &matcher));
        let kept = rel("Dehua Liu", "singer");
        assert!(!head_stem_decision(&kept, &dict, &matcher));
    }

    #[test]
    fn head_stem_ignores_head_position_overlap() {
        // the hypernym head appears only as the hyponym's own head word
        let dict = Dictionary::new(["river"]);
        let matcher = DefaultStemMatcher::default();
        let candidate = rel("Yellow River", "river");
        assert!(!head_stem_decision(&candidate, &dict, &matcher));
    }

    #[test]
    fn head_stem_skips_bracket_qualifier() {
        let dict = Dictionary::new(["company"]);
        let matcher = DefaultStemMatcher::default();
        let candidate = rel("Apple (company)", "company");
        assert!(!head_stem_decision(&candidate, &dict, &matcher));
    }

    #[test]
    fn incompatible_pairs_require_low_jaccard_and_cosine() {
        // person and book co-occur only on the one noisy entity; singer and
        // actor share entities heavily and must not be emitted.
        let mut candidates = Vec::new();
        for i in 0..6 {
            candidates.push(rel(&format!("p{i}"), "person"));
        }
        for i in 0..6 {
            candidates.push(rel(&format!("b{i}"), "book"));
        }
        candidates.push(rel("noisy", "person"));
        candidates.push(rel("noisy", "book"));
        for i in 0..5 {
            candidates.push(rel(&format!("s{i}"), "singer"));
            candidates.push(rel(&format!("s{i}"), "actor"));
        }
        let pages: Vec<EncyclopediaPage> = (0..6)
            .map(|i| page(&format!(r#"{{"title":"p{i}","infobox":{{"occupation":"x"}}}}"#)))
            .chain((0..6).map(|i| {
                page(&format!(r#"{{"title":"b{i}","infobox":{{"author":"y"}}}}"#))
            }))
            .collect();
        let triples = TripleIndex::from_pages(pages, None);
        let pairs = build_incompatible_pairs(&candidates, &triples, 0.2, 0.2, 5);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].concept_a, "book");
        assert_eq!(pairs[0].concept_b, "person");
        assert!(pairs[0].jaccard > 0.0 && pairs[0].jaccard <= 0.2);
    }

    #[test]
    fn disjoint_hyponym_sets_have_jaccard_zero() {
        let a: BTreeSet<&str> = ["x", "y"].into();
        let b: BTreeSet<&str> = ["u", "v"].into();
        assert_eq!(jaccard(&a, &b), 0.0);
    }

    #[test]
    fn resolve_conflict_filters_larger_kl() {
        let entity = dist(&[("occupation", 0.6), ("nationality", 0.3), ("genre", 0.1)]);
        let person = dist(&[("occupation", 0.55), ("nationality", 0.35), ("genre", 0.1)]);
        let music = dist(&[("occupation", 0.05), ("nationality", 0.05), ("genre", 0.9)]);
        let outcome =
            resolve_conflict(&entity, ("music", &music), ("person", &person)).unwrap();
        assert_eq!(outcome, ConflictOutcome::Filter("music".into()));
    }

    #[test]
    fn resolve_conflict_reports_ties() {
        let entity = dist(&[("a", 0.5), ("b", 0.5)]);
        let c = dist(&[("a", 0.7), ("b", 0.3)]);
        let outcome = resolve_conflict(&entity, ("c1", &c), ("c2", &c)).unwrap();
        assert_eq!(outcome, ConflictOutcome::Tie);
    }

    #[test]
    fn incompatible_filter_drops_dehua_music() {
        let mut candidates = Vec::new();
        // ten people with person-shaped attributes, five records with
        // music-shaped attributes, and Dehua Liu attached to both concepts
        for i in 0..10 {
            candidates.push(rel(&format!("person{i}"), "person"));
        }
        for i in 0..5 {
            candidates.push(rel(&format!("album{i}"), "music"));
        }
        candidates.push(rel("Dehua Liu", "person"));
        candidates.push(rel("Dehua Liu", "music"));
        let mut pages: Vec<EncyclopediaPage> = (0..10)
            .map(|i| {
                page(&format!(
                    r#"{{"title":"person{i}","infobox":{{"occupation":"x","nationality":"China"}}}}"#
                ))
            })
            .collect();
        for i in 0..5 {
            pages.push(page(&format!(
                r#"{{"title":"album{i}","infobox":{{"artist":"a","genre":"pop","release_year":"1999"}}}}"#
            )));
        }
        pages.push(page(
            r#"{"title":"Dehua Liu","infobox":{"occupation":"actor","nationality":"China","birthplace":"Hong Kong"}}"#,
        ));
        let triples = TripleIndex::from_pages(pages, None);
        incompatible_filter(&mut candidates, &triples, 0.1, 0.3, 5, 0.1).unwrap();
        let dehua_music = candidates
            .iter()
            .find(|c| c.hyponym == "Dehua Liu" && c.hypernym == "music")
            .unwrap();
        assert_eq!(
            dehua_music.filter_reason(),
            Some(FilterReason::IncompatibleKl)
        );
        let dehua_person = candidates
            .iter()
            .find(|c| c.hyponym == "Dehua Liu" && c.hypernym == "person")
            .unwrap();
        assert!(dehua_person.is_pending());
        let untouched = candidates
            .iter()
            .filter(|c| c.hyponym != "Dehua Liu")
            .all(|c| c.is_pending());
        assert!(untouched);
    }

    #[test]
    fn verify_all_rules_disabled_accepts_everything() {
        let config = VerifyConfig {
            enable_thematic: false,
            enable_head_stem: false,
            enable_ne: false,
            enable_incompatible: false,
            ..VerifyConfig::default()
        };
        let dict = Dictionary::default();
        let triples = TripleIndex::default();
        let inputs = VerifyInputs {
            dict: &dict,
            lexicon: None,
            ne_counts: None,
            triples: &triples,
            stemmer: &DefaultStemMatcher::default(),
        };
        let outcome = verify(vec![rel("a", "b"), rel("c", "d")], &config, &inputs).unwrap();
        assert_eq!(outcome.accepted.len(), 2);
        assert!(outcome.filtered.is_empty());
    }

    #[test]
    fn verify_missing_artifact_is_startup_error() {
        let config = VerifyConfig {
            enable_head_stem: false,
            enable_ne: false,
            enable_incompatible: false,
            ..VerifyConfig::default()
        };
        let dict = Dictionary::default();
        let triples = TripleIndex::default();
        let inputs = VerifyInputs {
            dict: &dict,
            lexicon: None,
            ne_counts: None,
            triples: &triples,
            stemmer: &DefaultStemMatcher::default(),
        };
        assert!(matches!(
            verify(vec![rel("a", "b")], &config, &inputs),
            Err(VerifyError::MissingArtifact { .. })
        ));
    }

    #[test]
    fn verify_partitions_candidates_exactly() {
        let config = VerifyConfig {
            enable_ne: false,
            enable_incompatible: false,
            ..VerifyConfig::default()
        };
        let dict = Dictionary::new(["educational", "institution", "education"]);
        let lexicon = ThematicLexicon::from_words(["politics"]);
        let triples = TripleIndex::default();
        let inputs = VerifyInputs {
            dict: &dict,
            lexicon: Some(&lexicon),
            ne_counts: None,
            triples: &triples,
            stemmer: &DefaultStemMatcher::default(),
        };
        let candidates = vec![
            rel("x", "politics"),
            rel("educational institution", "education"),
            rel("Dehua Liu", "singer"),
        ];
        let total = candidates.len();
        let outcome = verify(candidates, &config, &inputs).unwrap();
        assert_eq!(outcome.accepted.len() + outcome.filtered.len(), total);
        assert_eq!(outcome.reason_counts[&FilterReason::ThematicWord], 1);
        assert_eq!(outcome.reason_counts[&FilterReason::HeadStem], 1);
        assert_eq!(outcome.accepted[0].hypernym, "singer");
    }

    #[test]
    fn ne_counts_loader_validates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ne.tsv");
        std::fs::write(&path, "America\t95\t100\n").unwrap();
        let counts = NeCounts::load(&path).unwrap();
        assert!((counts.s1("America") - 0.95).abs() < 1e-12);
        std::fs::write(&path, "America\t101\t100\n").unwrap();
        assert!(matches!(
            NeCounts::load(&path),
            Err(VerifyError::NeCounts { line: 1, .. })
        ));
    }
}
