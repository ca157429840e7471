//! Candidate isA extraction from the four page sources and their merge.
//!
//! Extractors are pure per-page functions; `merge_candidates` is the single
//! synchronization point. Candidate dumps are tab-separated:
//!
//! ```text
//! hyponym<TAB>hypernym<TAB>sources(comma-joined)<TAB>status
//! ```
//!
//! where `status` is `candidate`, `accepted`, or `filtered:<reason>`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EncyclopediaPage;
use crate::pmi::PmiTable;
use crate::segment::{segment, Dictionary};
use crate::separation::{extract_hypernyms, separate};

#[derive(Debug, Error)]
pub enum RelationError {
    #[error("hyponym and hypernym must differ, got {0:?}")]
    SelfLoop(String),
    #[error("relation term must be non-empty")]
    EmptyTerm,
    #[error("relation must carry at least one source")]
    EmptySources,
    #[error("relation field must not contain tabs or newlines: {0:?}")]
    InvalidName(String),
    #[error("candidate dump line {line}: {message}")]
    Dump { line: u64, message: String },
}

/// Which page source produced a candidate.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Bracket,
    Abstract,
    Infobox,
    Tag,
}

impl Source {
    pub const ALL: [Source; 4] = [Source::Bracket, Source::Abstract, Source::Infobox, Source::Tag];

    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Bracket => "bracket",
            Source::Abstract => "abstract",
            Source::Infobox => "infobox",
            Source::Tag => "tag",
        }
    }

    pub fn parse(s: &str) -> Option<Source> {
        Source::ALL.into_iter().find(|src| src.as_str() == s)
    }
}

pub type SourceSet = BTreeSet<Source>;

pub fn sources_to_string(sources: &SourceSet) -> String {
    sources
        .iter()
        .map(Source::as_str)
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Candidate,
    Accepted,
    Filtered,
}

/// Why a candidate was filtered.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum FilterReason {
    IncompatibleKl,
    NeSupport,
    ThematicWord,
    HeadStem,
}

impl FilterReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            FilterReason::IncompatibleKl => "incompatible-kl",
            FilterReason::NeSupport => "ne-support",
            FilterReason::ThematicWord => "thematic-word",
            FilterReason::HeadStem => "head-stem",
        }
    }

    pub fn parse(s: &str) -> Option<FilterReason> {
        [
            FilterReason::IncompatibleKl,
            FilterReason::NeSupport,
            FilterReason::ThematicWord,
            FilterReason::HeadStem,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
    }
}

/// One (hyponym, hypernym) pair with provenance and verification status.
///
/// Status transitions only ever go candidate → accepted or
/// candidate → filtered, and a filter reason is present exactly when the
/// status is filtered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateRelation {
    pub hyponym: String,
    pub hypernym: String,
    pub sources: SourceSet,
    status: Status,
    filter_reason: Option<FilterReason>,
}

impl CandidateRelation {
    pub fn new(
        hyponym: impl Into<String>,
        hypernym: impl Into<String>,
        sources: impl IntoIterator<Item = Source>,
    ) -> Result<Self, RelationError> {
        let hyponym = hyponym.into();
        let hypernym = hypernym.into();
        if hyponym.is_empty() || hypernym.is_empty() {
            return Err(RelationError::EmptyTerm);
        }
        for term in [&hyponym, &hypernym] {
            if term.contains('\t') || term.contains('\n') {
                return Err(RelationError::InvalidName(term.clone()));
            }
        }
        if hyponym == hypernym {
            return Err(RelationError::SelfLoop(hyponym));
        }
        let sources: SourceSet = sources.into_iter().collect();
        if sources.is_empty() {
            return Err(RelationError::EmptySources);
        }
        Ok(CandidateRelation {
            hyponym,
            hypernym,
            sources,
            status: Status::Candidate,
            filter_reason: None,
        })
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn filter_reason(&self) -> Option<FilterReason> {
        self.filter_reason
    }

    /// Still a candidate: neither accepted nor filtered.
    pub fn is_pending(&self) -> bool {
        self.status == Status::Candidate
    }

    pub fn mark_filtered(&mut self, reason: FilterReason) {
        debug_assert!(self.is_pending(), "only pending candidates get filtered");
        self.status = Status::Filtered;
        self.filter_reason = Some(reason);
    }

    pub fn mark_accepted(&mut self) {
        debug_assert!(self.is_pending(), "only pending candidates get accepted");
        self.status = Status::Accepted;
    }

    pub fn to_tsv(&self) -> String {
        let status = match (self.status, self.filter_reason) {
            (Status::Filtered, Some(reason)) => format!("filtered:{}", reason.as_str()),
            (Status::Accepted, _) => "accepted".to_string(),
            _ => "candidate".to_string(),
        };
        format!(
            "{}\t{}\t{}\t{}",
            self.hyponym,
            self.hypernym,
            sources_to_string(&self.sources),
            status
        )
    }

    pub fn from_tsv(line: &str, line_no: u64) -> Result<Self, RelationError> {
        let dump_err = |message: String| RelationError::Dump {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(dump_err(format!("expected 4 fields, got {}", fields.len())));
        }
        let mut sources = SourceSet::new();
        for raw in fields[2].split(',').filter(|s| !s.is_empty()) {
            let source =
                Source::parse(raw).ok_or_else(|| dump_err(format!("unknown source {raw:?}")))?;
            sources.insert(source);
        }
        let mut relation = CandidateRelation::new(fields[0], fields[1], sources)
            .map_err(|e| dump_err(e.to_string()))?;
        match fields[3] {
            "candidate" => {}
            "accepted" => relation.mark_accepted(),
            other => match other.strip_prefix("filtered:").and_then(FilterReason::parse) {
                Some(reason) => relation.mark_filtered(reason),
                None => return Err(dump_err(format!("unknown status {other:?}"))),
            },
        }
        Ok(relation)
    }
}

/// Acquire hypernyms of the entity from its bracket compound:
/// segment, separate, read the rightmost path.
pub fn bracket_extract(
    page: &EncyclopediaPage,
    table: &PmiTable,
    dict: &Dictionary,
) -> Vec<CandidateRelation> {
    let Some(compound) = &page.bracket_compound else {
        return Vec::new();
    };
    let seg = segment(compound, dict);
    let tree = match separate(&seg, table) {
        Ok(tree) => tree,
        Err(e) => {
            log::warn!("cannot separate bracket of {:?}: {e}", page.entity_name);
            return Vec::new();
        }
    };
    extract_hypernyms(&tree)
        .into_iter()
        .filter_map(
            |hypernym| match CandidateRelation::new(&page.entity_name, hypernym, [Source::Bracket]) {
                Ok(rel) => Some(rel),
                Err(e) => {
                    log::debug!("dropping bracket candidate for {:?}: {e}", page.entity_name);
                    None
                }
            },
        )
        .collect()
}

/// Tags are taken as hypernyms verbatim; noise is the verifier's job.
pub fn tag_extract(page: &EncyclopediaPage) -> Vec<CandidateRelation> {
    page.tags
        .iter()
        .filter_map(
            |tag| match CandidateRelation::new(&page.entity_name, tag, [Source::Tag]) {
                Ok(rel) => Some(rel),
                Err(e) => {
                    log::debug!("dropping tag candidate for {:?}: {e}", page.entity_name);
                    None
                }
            },
        )
        .collect()
}

/// One candidate per triple whose predicate is whitelisted.
pub fn infobox_extract(
    page: &EncyclopediaPage,
    whitelist: &BTreeSet<String>,
) -> Vec<CandidateRelation> {
    page.triples
        .iter()
        .filter(|t| whitelist.contains(&t.predicate))
        .filter_map(
            |t| match CandidateRelation::new(&t.subject, &t.object, [Source::Infobox]) {
                Ok(rel) => Some(rel),
                Err(e) => {
                    log::debug!("dropping infobox candidate for {:?}: {e}", page.entity_name);
                    None
                }
            },
        )
        .collect()
}

/// Load a predicate whitelist file: one predicate per line.
pub fn load_whitelist(path: &Path) -> io::Result<BTreeSet<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

#[derive(Debug, Error)]
#[error("concept generator failed: {0}")]
pub struct GeneratorError(pub String);

/// Produces concept strings from an abstract. The neural model behind this
/// boundary is not part of the pipeline; the shipped default generates
/// nothing.
pub trait ConceptGenerator {
    fn concepts(&self, abstract_text: &str) -> Result<Vec<String>, GeneratorError>;
}

/// Default plugin: generates no concepts.
pub struct NoopGenerator;

impl ConceptGenerator for NoopGenerator {
    fn concepts(&self, _abstract_text: &str) -> Result<Vec<String>, GeneratorError> {
        Ok(Vec::new())
    }
}

/// Replays distant-supervision pairs: maps an abstract back to the concepts
/// it was paired with. Useful for tests and for echoing training labels.
pub struct LookupGenerator {
    by_abstract: HashMap<String, Vec<String>>,
}

impl LookupGenerator {
    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut by_abstract: HashMap<String, Vec<String>> = HashMap::new();
        for (abstract_text, concept) in pairs {
            let concepts = by_abstract.entry(abstract_text).or_default();
            if !concepts.contains(&concept) {
                concepts.push(concept);
            }
        }
        LookupGenerator { by_abstract }
    }
}

impl ConceptGenerator for LookupGenerator {
    fn concepts(&self, abstract_text: &str) -> Result<Vec<String>, GeneratorError> {
        Ok(self.by_abstract.get(abstract_text).cloned().unwrap_or_default())
    }
}

/// One candidate per concept the plugin generates from the page abstract.
/// Plugin failure skips the page and logs; it never aborts the run.
pub fn abstract_extract(
    page: &EncyclopediaPage,
    generator: &dyn ConceptGenerator,
) -> Vec<CandidateRelation> {
    let Some(text) = &page.abstract_text else {
        return Vec::new();
    };
    let concepts = match generator.concepts(text) {
        Ok(concepts) => concepts,
        Err(e) => {
            log::warn!("concept generator failed on {:?}: {e}", page.entity_name);
            return Vec::new();
        }
    };
    concepts
        .into_iter()
        .filter_map(
            |concept| match CandidateRelation::new(&page.entity_name, concept, [Source::Abstract]) {
                Ok(rel) => Some(rel),
                Err(e) => {
                    log::debug!("dropping abstract candidate for {:?}: {e}", page.entity_name);
                    None
                }
            },
        )
        .collect()
}

/// Distant-supervision pairs for training an abstract-to-concept generator:
/// the abstract of each bracket relation's hyponym labeled with its hypernym.
/// Pairs are deduplicated and sorted.
pub fn build_ds_dataset(
    bracket_relations: &[CandidateRelation],
    abstracts: &BTreeMap<String, String>,
) -> Vec<(String, String)> {
    let mut pairs = BTreeSet::new();
    for relation in bracket_relations {
        if !relation.sources.contains(&Source::Bracket) {
            continue;
        }
        if let Some(abstract_text) = abstracts.get(&relation.hyponym) {
            if !abstract_text.is_empty() {
                pairs.insert((abstract_text.clone(), relation.hypernym.clone()));
            }
        }
    }
    pairs.into_iter().collect()
}

/// An infobox predicate aligned with known isA relations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateCandidate {
    pub predicate: String,
    pub alignment_count: u64,
}

/// Align known isA relations against SPO triples: a predicate scores one per
/// (relation, triple) pair whose subject/object match the hyponym/hypernym
/// exactly. Ranked by count descending, ties broken lexicographically.
pub fn discover_predicates<I>(
    known_relations: &[CandidateRelation],
    pages: I,
) -> Vec<PredicateCandidate>
where
    I: IntoIterator<Item = EncyclopediaPage>,
{
    let mut pair_multiplicity: HashMap<(&str, &str), u64> = HashMap::new();
    for relation in known_relations {
        *pair_multiplicity
            .entry((relation.hyponym.as_str(), relation.hypernym.as_str()))
            .or_insert(0) += 1;
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for page in pages {
        for triple in &page.triples {
            if let Some(mult) =
                pair_multiplicity.get(&(triple.subject.as_str(), triple.object.as_str()))
            {
                *counts.entry(triple.predicate.clone()).or_insert(0) += mult;
            }
        }
    }
    let mut ranked: Vec<PredicateCandidate> = counts
        .into_iter()
        .map(|(predicate, alignment_count)| PredicateCandidate {
            predicate,
            alignment_count,
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.alignment_count
            .cmp(&a.alignment_count)
            .then_with(|| a.predicate.cmp(&b.predicate))
    });
    ranked
}

/// Collapse duplicate (hyponym, hypernym) pairs into one candidate carrying
/// the union of sources. Output is sorted by hyponym, then hypernym, and the
/// merge is idempotent and order-insensitive.
pub fn merge_candidates<I>(streams: I) -> Vec<CandidateRelation>
where
    I: IntoIterator<Item = Vec<CandidateRelation>>,
{
    let mut merged: BTreeMap<(String, String), SourceSet> = BTreeMap::new();
    for stream in streams {
        for relation in stream {
            merged
                .entry((relation.hyponym, relation.hypernym))
                .or_default()
                .extend(relation.sources);
        }
    }
    merged
        .into_iter()
        .map(|((hyponym, hypernym), sources)| {
            CandidateRelation::new(hyponym, hypernym, sources)
                .expect("merged pairs come from valid relations")
        })
        .collect()
}

/// Write a candidate dump, one TSV line per relation.
pub fn write_candidates<W: Write>(mut w: W, relations: &[CandidateRelation]) -> io::Result<()> {
    for relation in relations {
        writeln!(w, "{}", relation.to_tsv())?;
    }
    Ok(())
}

pub fn read_candidates<R: BufRead>(r: R) -> Result<Vec<CandidateRelation>, RelationError> {
    let mut relations = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(|e| RelationError::Dump {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        relations.push(CandidateRelation::from_tsv(&line, line_no)?);
    }
    Ok(relations)
}
