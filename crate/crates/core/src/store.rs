//! The frozen taxonomy graph: typed nodes, isA edges, mention index, and
//! text snapshots.
//!
//! Node kind is derived from the edges and page set, never stored
//! independently: a name is concept-ish iff it is a hypernym of some edge,
//! and entity-ish iff it originates a page or is a hyponym of some edge.
//! Snapshots are canonical sorted text, so identical graphs produce
//! byte-identical files:
//!
//! ```text
//! #META
//! config_hash<TAB>...          (optional)
//! #NODES
//! name<TAB>kind
//! #EDGES
//! hyponym<TAB>hypernym<TAB>sources
//! #MENTIONS
//! mention<TAB>entity
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{EncyclopediaPage, TitleCensus};
use crate::generation::{sources_to_string, CandidateRelation, Source, SourceSet, Status};

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("snapshot is inconsistent: {0}")]
    Inconsistent(String),
    #[error("name contains tab or newline and cannot be snapshotted: {0:?}")]
    InvalidName(String),
    #[error("cannot access snapshot {path}: {source}")]
    Io { path: String, source: io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Entity,
    Concept,
    Both,
}

impl NodeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeKind::Entity => "entity",
            NodeKind::Concept => "concept",
            NodeKind::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<NodeKind> {
        match s {
            "entity" => Some(NodeKind::Entity),
            "concept" => Some(NodeKind::Concept),
            "both" => Some(NodeKind::Both),
            _ => None,
        }
    }

    pub fn is_entity(&self) -> bool {
        matches!(self, NodeKind::Entity | NodeKind::Both)
    }

    pub fn is_concept(&self) -> bool {
        matches!(self, NodeKind::Concept | NodeKind::Both)
    }
}

/// Provenance carried in a snapshot header.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SnapshotMeta {
    pub config_hash: Option<String>,
}

/// An edge insertion the graph refused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeRejection {
    pub hyponym: String,
    pub hypernym: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InsertReport {
    pub inserted: u64,
    pub duplicates: u64,
    pub rejected: Vec<EdgeRejection>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub entities: u64,
    pub concepts: u64,
    pub entity_concept_edges: u64,
    pub subconcept_edges: u64,
}

/// Accepted isA edges plus the mention index. Built single-writer, then
/// frozen and shared by concurrent readers.
#[derive(Debug, Clone, Default)]
pub struct TaxonomyGraph {
    edges: BTreeMap<(String, String), SourceSet>,
    by_hypernym: BTreeMap<String, BTreeSet<String>>,
    mentions: BTreeMap<String, BTreeSet<String>>,
    page_entities: BTreeSet<String>,
    kinds: BTreeMap<String, NodeKind>,
}

impl PartialEq for TaxonomyGraph {
    /// Observable state only: nodes with kinds, edges, mentions. The page
    /// set is an input detail that load() reconstructs up to kind-equivalence.
    fn eq(&self, other: &Self) -> bool {
        self.kinds == other.kinds && self.edges == other.edges && self.mentions == other.mentions
    }
}

impl TaxonomyGraph {
    pub fn new() -> Self {
        TaxonomyGraph::default()
    }

    /// Mark a name as originating a page; isolated pages stay entity nodes.
    pub fn register_entity(&mut self, name: impl Into<String>) {
        self.page_entities.insert(name.into());
        self.rebuild_kinds();
    }

    /// Insert accepted relations. Duplicate (hyponym, hypernym) pairs union
    /// their sources; self-loops and non-accepted relations are rejected
    /// into the report.
    pub fn insert_edges(&mut self, relations: &[CandidateRelation]) -> InsertReport {
        let mut report = InsertReport::default();
        for relation in relations {
            let reject = |reason: &str| EdgeRejection {
                hyponym: relation.hyponym.clone(),
                hypernym: relation.hypernym.clone(),
                reason: reason.to_string(),
            };
            if relation.status() != Status::Accepted {
                report.rejected.push(reject("relation is not accepted"));
                continue;
            }
            if relation.hyponym == relation.hypernym {
                report.rejected.push(reject("self-loop"));
                continue;
            }
            let key = (relation.hyponym.clone(), relation.hypernym.clone());
            match self.edges.get_mut(&key) {
                Some(sources) => {
                    report.duplicates += 1;
                    sources.extend(relation.sources.iter().copied());
                }
                None => {
                    report.inserted += 1;
                    self.edges.insert(key, relation.sources.clone());
                }
            }
        }
        self.rebuild_derived();
        report
    }

    fn rebuild_derived(&mut self) {
        self.by_hypernym.clear();
        for (hyponym, hypernym) in self.edges.keys() {
            self.by_hypernym
                .entry(hypernym.clone())
                .or_default()
                .insert(hyponym.clone());
        }
        self.rebuild_kinds();
    }

    fn rebuild_kinds(&mut self) {
        let hyponyms: BTreeSet<&String> = self.edges.keys().map(|(hyponym, _)| hyponym).collect();
        let mut names: BTreeSet<&String> = self.page_entities.iter().collect();
        for (hyponym, hypernym) in self.edges.keys() {
            names.insert(hyponym);
            names.insert(hypernym);
        }
        let mut kinds = BTreeMap::new();
        for name in names {
            let is_concept = self.by_hypernym.contains_key(name);
            let is_entity = self.page_entities.contains(name) || hyponyms.contains(name);
            let kind = match (is_entity, is_concept) {
                (true, true) => NodeKind::Both,
                (false, true) => NodeKind::Concept,
                _ => NodeKind::Entity,
            };
            kinds.insert(name.clone(), kind);
        }
        self.kinds = kinds;
    }

    /// Index every page's entity under its bare title and, when a bracket
    /// exists, its full bracketed title.
    pub fn build_mention_index<I>(&mut self, pages: I, census: &TitleCensus)
    where
        I: IntoIterator<Item = EncyclopediaPage>,
    {
        for page in pages {
            let node = census.node_name(&page);
            self.page_entities.insert(node.clone());
            self.mentions
                .entry(page.entity_name.clone())
                .or_default()
                .insert(node.clone());
            if page.bracket_compound.is_some() {
                self.mentions
                    .entry(page.full_title())
                    .or_default()
                    .insert(node);
            }
        }
        self.rebuild_kinds();
    }

    pub fn node_kind(&self, name: &str) -> Option<NodeKind> {
        self.kinds.get(name).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&str, NodeKind)> {
        self.kinds.iter().map(|(name, kind)| (name.as_str(), *kind))
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, &SourceSet)> {
        self.edges
            .iter()
            .map(|((hyponym, hypernym), sources)| (hyponym.as_str(), hypernym.as_str(), sources))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn mentions(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.mentions.iter().map(|(m, e)| (m.as_str(), e))
    }

    /// Direct hypernyms of an entity, sorted. Unknown keys give an empty list.
    pub fn get_concepts(&self, entity: &str) -> Vec<String> {
        self.edges
            .range((entity.to_string(), String::new())..)
            .take_while(|((hyponym, _), _)| hyponym == entity)
            .map(|((_, hypernym), _)| hypernym.clone())
            .collect()
    }

    /// Direct hyponyms of a concept, sorted. Unknown keys give an empty list.
    pub fn get_entities(&self, concept: &str) -> Vec<String> {
        self.by_hypernym
            .get(concept)
            .map(|hyponyms| hyponyms.iter().cloned().collect())
            .unwrap_or_default()
    }

    /// Entities reachable from a mention, sorted. Unknown keys give an empty
    /// list.
    pub fn men2ent(&self, mention: &str) -> Vec<String> {
        self.mentions
            .get(mention)
            .map(|entities| entities.iter().cloned().collect())
            .unwrap_or_default()
    }

    /// Node and edge counts split by kind. An edge is subconcept-concept when
    /// its hyponym is itself a concept, entity-concept otherwise.
    pub fn stats(&self) -> GraphStats {
        let mut stats = GraphStats {
            entities: 0,
            concepts: 0,
            entity_concept_edges: 0,
            subconcept_edges: 0,
        };
        for kind in self.kinds.values() {
            if kind.is_entity() {
                stats.entities += 1;
            }
            if kind.is_concept() {
                stats.concepts += 1;
            }
        }
        for (hyponym, _) in self.edges.keys() {
            if self.kinds[hyponym].is_concept() {
                stats.subconcept_edges += 1;
            } else {
                stats.entity_concept_edges += 1;
            }
        }
        stats
    }

    pub fn save<W: Write>(&self, mut w: W, meta: &SnapshotMeta) -> Result<(), SnapshotError> {
        let check = |name: &str| {
            if name.contains('\t') || name.contains('\n') {
                Err(SnapshotError::InvalidName(name.to_string()))
            } else {
                Ok(())
            }
        };
        let io_err = |source| SnapshotError::Io {
            path: "<writer>".into(),
            source,
        };
        writeln!(w, "#META").map_err(io_err)?;
        if let Some(hash) = &meta.config_hash {
            check(hash)?;
            writeln!(w, "config_hash\t{hash}").map_err(io_err)?;
        }
        writeln!(w, "#NODES").map_err(io_err)?;
        for (name, kind) in &self.kinds {
            check(name)?;
            writeln!(w, "{name}\t{}", kind.as_str()).map_err(io_err)?;
        }
        writeln!(w, "#EDGES").map_err(io_err)?;
        for ((hyponym, hypernym), sources) in &self.edges {
            check(hyponym)?;
            check(hypernym)?;
            writeln!(
                w,
                "{hyponym}\t{hypernym}\t{}",
                sources_to_string(sources)
            )
            .map_err(io_err)?;
        }
        writeln!(w, "#MENTIONS").map_err(io_err)?;
        for (mention, entities) in &self.mentions {
            check(mention)?;
            for entity in entities {
                check(entity)?;
                writeln!(w, "{mention}\t{entity}").map_err(io_err)?;
            }
        }
        Ok(())
    }

    pub fn save_to(&self, path: &Path, meta: &SnapshotMeta) -> Result<(), SnapshotError> {
        let io_err = |source| SnapshotError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        self.save(&mut w, meta)?;
        w.flush().map_err(io_err)
    }

    pub fn load<R: BufRead>(r: R) -> Result<(Self, SnapshotMeta), SnapshotError> {
        #[derive(PartialEq, Clone, Copy)]
        enum Section {
            Start,
            Meta,
            Nodes,
            Edges,
            Mentions,
        }
        let err = |line: u64, message: String| SnapshotError::Parse { line, message };
        let mut section = Section::Start;
        let mut seen_nodes = false;
        let mut meta = SnapshotMeta::default();
        let mut stored_kinds: BTreeMap<String, NodeKind> = BTreeMap::new();
        let mut graph = TaxonomyGraph::new();
        for (idx, line) in r.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let line = line.map_err(|e| err(line_no, e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            match line.as_str() {
                "#META" => section = Section::Meta,
                "#NODES" => {
                    section = Section::Nodes;
                    seen_nodes = true;
                }
                "#EDGES" => section = Section::Edges,
                "#MENTIONS" => section = Section::Mentions,
                _ => {
                    let fields: Vec<&str> = line.split('\t').collect();
                    match section {
                        Section::Start => {
                            return Err(err(line_no, "data before section header".into()))
                        }
                        Section::Meta => {
                            if fields.len() != 2 {
                                return Err(err(line_no, format!("bad meta line {line:?}")));
                            }
                            if fields[0] == "config_hash" {
                                meta.config_hash = Some(fields[1].to_string());
                            }
                        }
                        Section::Nodes => {
                            if fields.len() != 2 {
                                return Err(err(line_no, format!("bad node line {line:?}")));
                            }
                            let kind = NodeKind::parse(fields[1]).ok_or_else(|| {
                                err(line_no, format!("unknown node kind {:?}", fields[1]))
                            })?;
                            stored_kinds.insert(fields[0].to_string(), kind);
                        }
                        Section::Edges => {
                            if fields.len() != 3 {
                                return Err(err(line_no, format!("bad edge line {line:?}")));
                            }
                            if fields[0] == fields[1] {
                                return Err(err(line_no, format!("self-loop edge {:?}", fields[0])));
                            }
                            let mut sources = SourceSet::new();
                            for raw in fields[2].split(',').filter(|s| !s.is_empty()) {
                                let source = Source::parse(raw).ok_or_else(|| {
                                    err(line_no, format!("unknown source {raw:?}"))
                                })?;
                                sources.insert(source);
                            }
                            for endpoint in [fields[0], fields[1]] {
                                if !stored_kinds.contains_key(endpoint) {
                                    return Err(err(
                                        line_no,
                                        format!("edge endpoint {endpoint:?} missing from #NODES"),
                                    ));
                                }
                            }
                            graph
                                .edges
                                .insert((fields[0].to_string(), fields[1].to_string()), sources);
                        }
                        Section::Mentions => {
                            if fields.len() != 2 {
                                return Err(err(line_no, format!("bad mention line {line:?}")));
                            }
                            graph
                                .mentions
                                .entry(fields[0].to_string())
                                .or_default()
                                .insert(fields[1].to_string());
                        }
                    }
                }
            }
        }
        if !seen_nodes {
            return Err(SnapshotError::Inconsistent("missing #NODES section".into()));
        }
        // Entity-marked nodes stand in for the original page set; kinds must
        // re-derive exactly as stored.
        graph.page_entities = stored_kinds
            .iter()
            .filter(|(_, kind)| kind.is_entity())
            .map(|(name, _)| name.clone())
            .collect();
        graph.rebuild_derived();
        if graph.kinds != stored_kinds {
            let diff = stored_kinds
                .iter()
                .find(|(name, kind)| graph.kinds.get(*name) != Some(kind))
                .map(|(name, _)| name.clone())
                .unwrap_or_default();
            return Err(SnapshotError::Inconsistent(format!(
                "stored kind of node {diff:?} does not match the edges"
            )));
        }
        Ok((graph, meta))
    }

    pub fn load_from(path: &Path) -> Result<(Self, SnapshotMeta), SnapshotError> {
        let file = File::open(path).map_err(|source| SnapshotError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::load(BufReader::new(file))
    }
}
