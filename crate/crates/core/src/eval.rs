//! Evaluation harness: precision audits over labeled edge samples and
//! question coverage against the taxonomy vocabulary.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generation::{sources_to_string, Source, SourceSet};
use crate::segment::{segment, Dictionary};
use crate::store::TaxonomyGraph;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("sample size {n} exceeds edge count {edges}")]
    SampleTooLarge { n: usize, edges: usize },
    #[error("cannot compute precision over an empty sample")]
    EmptySample,
    #[error("unlabeled rows: {}", format_rows(.0))]
    Unlabeled(Vec<usize>),
    #[error("labeling sheet line {line}: {message}")]
    Sheet { line: u64, message: String },
}

fn format_rows(rows: &[usize]) -> String {
    rows.iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Correct,
    Wrong,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Correct => "correct",
            Label::Wrong => "wrong",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "correct" => Some(Label::Correct),
            "wrong" => Some(Label::Wrong),
            _ => None,
        }
    }
}

/// One sampled edge for human labeling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSample {
    pub hyponym: String,
    pub hypernym: String,
    pub sources: SourceSet,
    pub label: Option<Label>,
}

/// Uniform sample of `n` edges without replacement, shuffled, deterministic
/// for a fixed seed.
pub fn sample_for_labeling(
    graph: &TaxonomyGraph,
    n: usize,
    seed: u64,
) -> Result<Vec<LabeledSample>, EvalError> {
    let edges: Vec<(&str, &str, &SourceSet)> = graph.edges().collect();
    if n > edges.len() {
        return Err(EvalError::SampleTooLarge {
            n,
            edges: edges.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, edges.len(), n);
    Ok(picks
        .into_iter()
        .map(|i| {
            let (hyponym, hypernym, sources) = edges[i];
            LabeledSample {
                hyponym: hyponym.to_string(),
                hypernym: hypernym.to_string(),
                sources: sources.clone(),
                label: None,
            }
        })
        .collect())
}

const SHEET_HEADER: &str = "hyponym\thypernym\tsources\tlabel";

/// Write a labeling sheet with an empty label column to fill in.
pub fn write_labeling_sheet<W: Write>(mut w: W, samples: &[LabeledSample]) -> io::Result<()> {
    writeln!(w, "{SHEET_HEADER}")?;
    for sample in samples {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            sample.hyponym,
            sample.hypernym,
            sources_to_string(&sample.sources),
            sample.label.map(|l| l.as_str()).unwrap_or("")
        )?;
    }
    Ok(())
}

pub fn read_labeling_sheet<R: BufRead>(r: R) -> Result<Vec<LabeledSample>, EvalError> {
    let mut samples = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let err = |message: String| EvalError::Sheet {
            line: line_no,
            message,
        };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() || (line_no == 1 && line == SHEET_HEADER) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, got {}", fields.len())));
        }
        let mut sources = SourceSet::new();
        for raw in fields[2].split(',').filter(|s| !s.is_empty()) {
            sources.insert(
                Source::parse(raw).ok_or_else(|| err(format!("unknown source {raw:?}")))?,
            );
        }
        let label = match fields[3] {
            "" => None,
            raw => Some(Label::parse(raw).ok_or_else(|| err(format!("unknown label {raw:?}")))?),
        };
        samples.push(LabeledSample {
            hyponym: fields[0].to_string(),
            hypernym: fields[1].to_string(),
            sources,
            label,
        });
    }
    Ok(samples)
}

pub const WILSON_Z_95: f64 = 1.96;

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(correct: u64, total: u64, z: f64) -> (f64, f64) {
    if total == 0 {
        return (0.0, 0.0);
    }
    let n = total as f64;
    let p = correct.min(total) as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let margin = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (
        ((center - margin) / denom).max(0.0),
        ((center + margin) / denom).min(1.0),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcePrecision {
    pub total: u64,
    pub correct: u64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub total: u64,
    pub correct: u64,
    pub precision: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// A multi-source edge counts toward each of its sources.
    pub per_source: Vec<(Source, SourcePrecision)>,
}

/// Overall and per-source precision with a 95% Wilson interval. Every row
/// must carry a label; offending 1-based row numbers are reported otherwise.
pub fn compute_precision(samples: &[LabeledSample]) -> Result<PrecisionReport, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::EmptySample);
    }
    let unlabeled: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.label.is_none())
        .map(|(i, _)| i + 1)
        .collect();
    if !unlabeled.is_empty() {
        return Err(EvalError::Unlabeled(unlabeled));
    }
    let total = samples.len() as u64;
    let correct = samples
        .iter()
        .filter(|s| s.label == Some(Label::Correct))
        .count() as u64;
    let (wilson_low, wilson_high) = wilson_interval(correct, total, WILSON_Z_95);
    let mut per_source = Vec::new();
    for source in Source::ALL {
        let of_source: Vec<&LabeledSample> = samples
            .iter()
            .filter(|s| s.sources.contains(&source))
            .collect();
        if of_source.is_empty() {
            continue;
        }
        let source_total = of_source.len() as u64;
        let source_correct = of_source
            .iter()
            .filter(|s| s.label == Some(Label::Correct))
            .count() as u64;
        per_source.push((
            source,
            SourcePrecision {
                total: source_total,
                correct: source_correct,
                precision: source_correct as f64 / source_total as f64,
            },
        ));
    }
    Ok(PrecisionReport {
        total,
        correct,
        precision: correct as f64 / total as f64,
        wilson_low,
        wilson_high,
        per_source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub questions_total: u64,
    pub questions_covered: u64,
    pub coverage_ratio: f64,
    pub avg_concepts_per_covered_entity: f64,
}

/// A question is covered iff greedy longest-match over the taxonomy
/// vocabulary (node names and mentions, with the segmentation dictionary
/// merged in for tokenization) finds at least one taxonomy term in it.
///
/// The concept average is taken over the distinct entities the matched
/// mentions resolve to.
pub fn question_coverage(
    questions: &[String],
    graph: &TaxonomyGraph,
    dict: &Dictionary,
) -> CoverageReport {
    let mut taxonomy_vocab: BTreeSet<&str> = BTreeSet::new();
    for (name, _) in graph.nodes() {
        taxonomy_vocab.insert(name);
    }
    for (mention, _) in graph.mentions() {
        taxonomy_vocab.insert(mention);
    }
    let mut matcher = Dictionary::new(taxonomy_vocab.iter().copied());
    for word in dict.words() {
        matcher.insert(word.to_string());
    }
    let mut covered = 0u64;
    let mut matched_entities: BTreeSet<String> = BTreeSet::new();
    for question in questions {
        let seg = segment(question, &matcher);
        let mut any = false;
        for i in 0..seg.len() {
            if !seg.is_dict_match(i) {
                continue;
            }
            let word = seg.word(i);
            if !taxonomy_vocab.contains(word) {
                continue;
            }
            any = true;
            let via_mentions = graph.men2ent(word);
            if via_mentions.is_empty() {
                // a node name outside the mention index still counts when it
                // is an entity
                if graph.node_kind(word).is_some_and(|k| k.is_entity()) {
                    matched_entities.insert(word.to_string());
                }
            } else {
                matched_entities.extend(via_mentions);
            }
        }
        if any {
            covered += 1;
        }
    }
    let total = questions.len() as u64;
    let avg = if matched_entities.is_empty() {
        0.0
    } else {
        matched_entities
            .iter()
            .map(|e| graph.get_concepts(e).len() as f64)
            .sum::<f64>()
            / matched_entities.len() as f64
    };
    CoverageReport {
        questions_total: total,
        questions_covered: covered,
        coverage_ratio: if total == 0 {
            0.0
        } else {
            covered as f64 / total as f64
        },
        avg_concepts_per_covered_entity: avg,
    }
}
