//! Page model and dump ingestion.
//!
//! A corpus is a UTF-8 file with one JSON record per line:
//!
//! ```text
//! {"title": "Dehua Liu (singer)", "abstract": "...", "infobox": {"occupation": "actor"}, "tags": ["person"]}
//! ```
//!
//! Records are normalized into [`EncyclopediaPage`]s. Malformed lines are
//! skipped and counted in the [`IngestReport`]; ingestion never aborts on a
//! bad record.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Lines};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("cannot read corpus {path}: {source}")]
    Io { path: String, source: io::Error },
}

/// One (subject, predicate, object) infobox fact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpoTriple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

/// A normalized encyclopedia page: the four isA sources plus the entity name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncyclopediaPage {
    /// Page title with any trailing disambiguation bracket removed.
    pub entity_name: String,
    /// Noun compound inside the title's disambiguation bracket, if present.
    pub bracket_compound: Option<String>,
    pub abstract_text: Option<String>,
    /// Infobox facts; every subject equals `entity_name`.
    pub triples: Vec<SpoTriple>,
    /// Deduplicated tags in first-occurrence order.
    pub tags: Vec<String>,
}

impl EncyclopediaPage {
    /// The disambiguated title: `entity_name (bracket_compound)` when a
    /// bracket exists, otherwise the bare entity name.
    pub fn full_title(&self) -> String {
        match &self.bracket_compound {
            Some(c) => format!("{} ({})", self.entity_name, c),
            None => self.entity_name.clone(),
        }
    }

    /// Serialize back to the raw dump record shape. Re-parsing the result
    /// reproduces this page exactly.
    pub fn to_record(&self) -> RawRecord {
        RawRecord {
            title: self.full_title(),
            abstract_text: self.abstract_text.clone(),
            infobox: self
                .triples
                .iter()
                .map(|t| (t.predicate.clone(), t.object.clone()))
                .collect(),
            tags: self.tags.clone(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("record serialization cannot fail")
    }
}

/// Wire shape of one dump record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub title: String,
    #[serde(rename = "abstract", default, skip_serializing_if = "Option::is_none")]
    pub abstract_text: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub infobox: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
}

/// Collapse whitespace runs to single spaces and trim.
fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_bracket_char(c: char) -> bool {
    matches!(c, '(' | ')' | '（' | '）')
}

/// Split a page title into the entity name and the optional disambiguation
/// compound.
///
/// Both ASCII and full-width parentheses are recognized. Only a single
/// balanced trailing bracket is split: nested or unbalanced brackets, an
/// empty compound, or an empty prefix all yield no compound.
pub fn split_title(raw_title: &str) -> Result<(String, Option<String>), CorpusError> {
    let title = raw_title.trim();
    if title.is_empty() {
        return Err(CorpusError::InvalidRecord("empty title".into()));
    }
    let chars: Vec<char> = title.chars().collect();
    let close = *chars.last().expect("non-empty");
    let open = match close {
        ')' => '(',
        '）' => '（',
        _ => return Ok((title.to_string(), None)),
    };
    let mut depth = 0usize;
    let mut open_idx = None;
    for (i, &ch) in chars.iter().enumerate().rev() {
        if ch == close {
            depth += 1;
        } else if ch == open {
            depth -= 1;
            if depth == 0 {
                open_idx = Some(i);
                break;
            }
        }
    }
    let Some(open_idx) = open_idx else {
        return Ok((title.to_string(), None)); // unbalanced trailing bracket
    };
    let compound: String = chars[open_idx + 1..chars.len() - 1].iter().collect();
    let compound = compound.trim();
    let prefix: String = chars[..open_idx].iter().collect();
    let prefix = prefix.trim();
    if compound.is_empty() || prefix.is_empty() || compound.chars().any(is_bracket_char) {
        return Ok((title.to_string(), None));
    }
    Ok((prefix.to_string(), Some(compound.to_string())))
}

/// Normalize one raw record into a page.
///
/// Whitespace is collapsed, duplicate tags dropped, and triple subjects
/// rewritten to the entity name. An empty title is the only fatal defect.
pub fn parse_page(record: &RawRecord) -> Result<EncyclopediaPage, CorpusError> {
    let title = normalize_ws(&record.title);
    let (entity_name, bracket_compound) = split_title(&title)?;
    let abstract_text = record
        .abstract_text
        .as_deref()
        .map(normalize_ws)
        .filter(|s| !s.is_empty());
    let mut tags = Vec::new();
    for tag in &record.tags {
        let tag = normalize_ws(tag);
        if !tag.is_empty() && !tags.contains(&tag) {
            tags.push(tag);
        }
    }
    let mut infobox: BTreeMap<String, String> = BTreeMap::new();
    for (predicate, object) in &record.infobox {
        let predicate = normalize_ws(predicate);
        let object = normalize_ws(object);
        if !predicate.is_empty() && !object.is_empty() {
            // keys can collide once normalized; the first one wins
            infobox.entry(predicate).or_insert(object);
        }
    }
    let triples = infobox
        .into_iter()
        .map(|(predicate, object)| SpoTriple {
            subject: entity_name.clone(),
            predicate,
            object,
        })
        .collect();
    Ok(EncyclopediaPage {
        entity_name,
        bracket_compound,
        abstract_text,
        triples,
        tags,
    })
}

/// Per-line failure recorded during ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestError {
    pub line: u64,
    pub message: String,
}

/// Outcome counters for one ingestion run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    /// Non-blank lines seen.
    pub records: u64,
    pub parsed: u64,
    pub skipped: u64,
    pub errors: Vec<IngestError>,
}

impl IngestReport {
    /// Fold another worker's report into this one.
    pub fn merge(&mut self, other: IngestReport) {
        self.records += other.records;
        self.parsed += other.parsed;
        self.skipped += other.skipped;
        self.errors.extend(other.errors);
        self.errors.sort_by_key(|e| e.line);
    }
}

/// Streaming reader over a line-delimited corpus.
///
/// Yields pages in file order with constant memory; malformed lines are
/// skipped and recorded in the report.
pub struct CorpusReader<R> {
    lines: Lines<R>,
    line_no: u64,
    report: IngestReport,
}

impl CorpusReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self, CorpusError> {
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::new(BufReader::new(file)))
    }
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R) -> Self {
        CorpusReader {
            lines: reader.lines(),
            line_no: 0,
            report: IngestReport::default(),
        }
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    pub fn into_report(self) -> IngestReport {
        self.report
    }

    fn record_error(&mut self, message: String) {
        log::warn!("corpus line {}: {}", self.line_no, message);
        self.report.skipped += 1;
        self.report.errors.push(IngestError {
            line: self.line_no,
            message,
        });
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = EncyclopediaPage;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    self.line_no += 1;
                    self.report.records += 1;
                    self.record_error(format!("read error: {e}"));
                    return None;
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            self.report.records += 1;
            let parsed = serde_json::from_str::<RawRecord>(&line)
                .map_err(|e| CorpusError::InvalidRecord(e.to_string()))
                .and_then(|record| parse_page(&record));
            match parsed {
                Ok(page) => {
                    self.report.parsed += 1;
                    return Some(page);
                }
                Err(e) => self.record_error(e.to_string()),
            }
        }
    }
}

/// Open a corpus file as a streaming page iterator.
pub fn load_corpus(path: &Path) -> Result<CorpusReader<BufReader<File>>, CorpusError> {
    CorpusReader::open(path)
}

/// Bare-title occurrence counts over a corpus.
///
/// Two pages may share a bare title (e.g. `Apple (company)` and
/// `Apple (fruit)` both parse to entity name `Apple`). Such entities keep
/// their full bracketed title as the taxonomy node name; unambiguous ones use
/// the bare name.
#[derive(Debug, Clone, Default)]
pub struct TitleCensus {
    counts: HashMap<String, u32>,
}

impl TitleCensus {
    pub fn observe(&mut self, page: &EncyclopediaPage) {
        *self.counts.entry(page.entity_name.clone()).or_insert(0) += 1;
    }

    pub fn from_pages<'a>(pages: impl IntoIterator<Item = &'a EncyclopediaPage>) -> Self {
        let mut census = TitleCensus::default();
        for page in pages {
            census.observe(page);
        }
        census
    }

    pub fn is_ambiguous(&self, bare_name: &str) -> bool {
        self.counts.get(bare_name).copied().unwrap_or(0) > 1
    }

    /// Taxonomy node name for a page: the full title when the bare name is
    /// shared by several pages and a bracket is available, else the bare name.
    pub fn node_name(&self, page: &EncyclopediaPage) -> String {
        if page.bracket_compound.is_some() && self.is_ambiguous(&page.entity_name) {
            page.full_title()
        } else {
            page.entity_name.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn record(json: &str) -> RawRecord {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn split_title_bracketed() {
        assert_eq!(
            split_title("Dehua Liu (singer)").unwrap(),
            ("Dehua Liu".into(), Some("singer".into()))
        );
    }

    #[test]
    fn split_title_plain() {
        assert_eq!(split_title("apple").unwrap(), ("apple".into(), None));
    }

    #[test]
    fn split_title_inner_brackets_kept() {
        assert_eq!(
            split_title("f(x) (function)").unwrap(),
            ("f(x)".into(), Some("function".into()))
        );
    }

    #[test]
    fn split_title_full_width() {
        assert_eq!(
            split_title("刘德华（歌手）").unwrap(),
            ("刘德华".into(), Some("歌手".into()))
        );
    }

    #[test]
    fn split_title_nested_yields_no_compound() {
        assert_eq!(split_title("a (b (c))").unwrap(), ("a (b (c))".into(), None));
    }

    #[test]
    fn split_title_unbalanced_yields_no_compound() {
        assert_eq!(split_title("abc)").unwrap(), ("abc)".into(), None));
    }

    #[test]
    fn split_title_bracket_only_yields_no_compound() {
        assert_eq!(split_title("(thing)").unwrap(), ("(thing)".into(), None));
    }

    #[test]
    fn split_title_empty_is_error() {
        assert!(split_title("   ").is_err());
    }

    #[test]
    fn parse_page_dedups_tags() {
        let page = parse_page(&record(
            r#"{"title":"x","tags":["person","person","music"]}"#,
        ))
        .unwrap();
        assert_eq!(page.tags, vec!["person", "music"]);
    }

    #[test]
    fn parse_page_missing_abstract_is_none() {
        let page = parse_page(&record(r#"{"title":"x"}"#)).unwrap();
        assert_eq!(page.abstract_text, None);
    }

    #[test]
    fn parse_page_dehua_fixture_has_all_sources() {
        let page = parse_page(&record(
            r#"{"title":"Dehua Liu (singer)","abstract":"Dehua Liu is a Hong Kong singer and actor.","infobox":{"occupation":"actor"},"tags":["person","music"]}"#,
        ))
        .unwrap();
        assert_eq!(page.entity_name, "Dehua Liu");
        assert_eq!(page.bracket_compound.as_deref(), Some("singer"));
        assert!(page.abstract_text.is_some());
        assert_eq!(
            page.triples,
            vec![SpoTriple {
                subject: "Dehua Liu".into(),
                predicate: "occupation".into(),
                object: "actor".into(),
            }]
        );
        assert_eq!(page.tags, vec!["person", "music"]);
    }

    #[test]
    fn parse_roundtrip_is_identity() {
        for json in [
            r#"{"title":"Dehua Liu (singer)","abstract":"a b","infobox":{"occupation":"actor"},"tags":["person"]}"#,
            r#"{"title":"f(x) (band)","tags":["music"]}"#,
            r#"{"title":"(thing)"}"#,
            r#"{"title":"刘德华（歌手）","tags":["人物"]}"#,
        ] {
            let page = parse_page(&record(json)).unwrap();
            let reparsed = parse_page(&page.to_record()).unwrap();
            assert_eq!(reparsed, page, "roundtrip diverged for {json}");
        }
    }

    #[test]
    fn empty_file_yields_empty_stream() {
        let mut reader = CorpusReader::new(Cursor::new(""));
        assert!(reader.next().is_none());
        assert_eq!(reader.report().records, 0);
    }

    #[test]
    fn malformed_lines_are_counted_and_skipped() {
        let mut data = String::new();
        for i in 0..48 {
            data.push_str(&format!("{{\"title\":\"page {i}\"}}\n"));
        }
        data.insert_str(0, "not json\n");
        data.push_str("{\"title\":\"   \"}\n");
        let mut reader = CorpusReader::new(Cursor::new(data));
        let pages: Vec<_> = reader.by_ref().collect();
        assert_eq!(pages.len(), 48);
        let report = reader.into_report();
        assert_eq!(report.records, 50);
        assert_eq!(report.parsed, 48);
        assert_eq!(report.skipped, 2);
        assert_eq!(report.errors.len(), 2);
        assert_eq!(report.errors[0].line, 1);
    }

    #[test]
    fn blank_lines_are_not_records() {
        let mut reader = CorpusReader::new(Cursor::new("\n{\"title\":\"a\"}\n\n"));
        assert_eq!(reader.by_ref().count(), 1);
        assert_eq!(reader.report().records, 1);
    }

    #[test]
    fn streams_tenfold_corpus_one_page_at_a_time() {
        // 10x the bundled fixture size; the reader yields incrementally off
        // the BufRead without collecting
        let mut data = String::new();
        for i in 0..500 {
            data.push_str(&format!(
                "{{\"title\":\"page {i}\",\"tags\":[\"t{}\"]}}\n",
                i % 7
            ));
        }
        let mut reader = CorpusReader::new(Cursor::new(data));
        let mut seen = 0u64;
        for page in reader.by_ref() {
            assert!(!page.entity_name.is_empty());
            seen += 1;
        }
        assert_eq!(seen, 500);
        assert_eq!(reader.report().parsed, 500);
        assert_eq!(reader.report().skipped, 0);
    }

    #[test]
    fn census_disambiguates_shared_bare_names() {
        let a = parse_page(&record(r#"{"title":"Apple (company)"}"#)).unwrap();
        let b = parse_page(&record(r#"{"title":"Apple (fruit)"}"#)).unwrap();
        let c = parse_page(&record(r#"{"title":"Dehua Liu (singer)"}"#)).unwrap();
        let census = TitleCensus::from_pages([&a, &b, &c]);
        assert_eq!(census.node_name(&a), "Apple (company)");
        assert_eq!(census.node_name(&b), "Apple (fruit)");
        assert_eq!(census.node_name(&c), "Dehua Liu");
    }

    #[test]
    fn report_merge_accumulates() {
        let mut left = IngestReport {
            records: 2,
            parsed: 1,
            skipped: 1,
            errors: vec![IngestError {
                line: 2,
                message: "x".into(),
            }],
        };
        let right = IngestReport {
            records: 3,
            parsed: 3,
            skipped: 0,
            errors: vec![],
        };
        left.merge(right);
        assert_eq!(left.records, 5);
        assert_eq!(left.parsed, 4);
        assert_eq!(left.skipped, 1);
    }
}
