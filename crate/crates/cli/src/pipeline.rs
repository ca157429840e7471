//! The staged pipeline: ingest → pmi-build → generate → verify → store.
//!
//! Every stage materializes its output under `paths.out_dir` before the next
//! stage starts, so a run can resume: a stage whose outputs already exist is
//! skipped. Outputs are written to a temp file and renamed, and all of them
//! are canonical sorted text, so identical configs over identical corpora
//! produce byte-identical snapshots.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use taxoforge_core::corpus::{load_corpus, EncyclopediaPage, IngestReport, TitleCensus};
use taxoforge_core::generation::{
    abstract_extract, bracket_extract, infobox_extract, load_whitelist, merge_candidates,
    read_candidates, tag_extract, write_candidates, CandidateRelation, NoopGenerator, Source,
};
use taxoforge_core::pmi::PmiTable;
use taxoforge_core::segment::{segment, Dictionary};
use taxoforge_core::store::{SnapshotMeta, TaxonomyGraph};
use taxoforge_core::verification::{
    verify, DefaultStemMatcher, NeCounts, ThematicLexicon, TripleIndex, VerifyInputs,
    VerifyOutcome,
};

use crate::config::PipelineConfig;

const EXTRACT_CHUNK: usize = 4096;

/// File names of the materialized stage outputs.
#[derive(Debug, Clone)]
pub struct StagePaths {
    pub normalized: PathBuf,
    pub ingest_report: PathBuf,
    pub pmi: PathBuf,
    pub candidates: PathBuf,
    pub accepted: PathBuf,
    pub filtered: PathBuf,
    pub snapshot: PathBuf,
    pub manifest: PathBuf,
}

impl StagePaths {
    pub fn new(out_dir: &Path) -> Self {
        StagePaths {
            normalized: out_dir.join("normalized.jsonl"),
            ingest_report: out_dir.join("ingest_report.json"),
            pmi: out_dir.join("pmi.tsv"),
            candidates: out_dir.join("candidates.tsv"),
            accepted: out_dir.join("accepted.tsv"),
            filtered: out_dir.join("filtered.tsv"),
            snapshot: out_dir.join("snapshot.tsv"),
            manifest: out_dir.join("manifest.json"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Completed,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub status: StageStatus,
    pub duration_ms: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub counts: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub stages: Vec<StageReport>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).context("serialize manifest")?;
        fs::write(path, json).with_context(|| format!("write manifest {}", path.display()))?;
        Ok(())
    }
}

/// Write through a temp file so a crashed stage never leaves a plausible
/// output behind.
fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let file = fs::File::create(&tmp)
            .with_context(|| format!("create {}", tmp.display()))?;
        let mut w = BufWriter::new(file);
        write(&mut w)?;
        w.flush().context("flush output")?;
    }
    fs::rename(&tmp, path)
        .with_context(|| format!("rename {} into place", tmp.display()))?;
    Ok(())
}

fn collect_pages(corpus: &Path) -> Result<(Vec<EncyclopediaPage>, IngestReport)> {
    let mut reader = load_corpus(corpus)?;
    let pages: Vec<EncyclopediaPage> = reader.by_ref().collect();
    Ok((pages, reader.into_report()))
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

/// Normalize the raw dump into canonical JSON lines plus an ingest report.
pub fn ingest_stage(corpus: &Path, normalized: &Path, report_out: &Path) -> Result<IngestReport> {
    let mut reader = load_corpus(corpus)?;
    write_atomic(normalized, |w| {
        for page in reader.by_ref() {
            writeln!(w, "{}", page.to_json_line()).context("write normalized page")?;
        }
        Ok(())
    })?;
    let report = reader.into_report();
    write_atomic(report_out, |w| {
        serde_json::to_writer_pretty(&mut *w, &report).context("write ingest report")?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(report)
}

/// PMI corpus: every bracket compound (optionally plus tag strings),
/// segmented against the dictionary.
pub fn pmi_stage(
    corpus: &Path,
    dict: &Dictionary,
    out: &Path,
    alpha: f64,
    include_tags: bool,
) -> Result<(u64, PmiTable)> {
    let mut table = PmiTable::new(alpha)?;
    let mut compounds = 0u64;
    for page in load_corpus(corpus)? {
        let mut texts: Vec<&str> = Vec::new();
        if let Some(compound) = &page.bracket_compound {
            texts.push(compound);
        }
        if include_tags {
            texts.extend(page.tags.iter().map(String::as_str));
        }
        for text in texts {
            let seg = segment(text, dict);
            let words: Vec<&str> = seg.words().collect();
            if words.is_empty() {
                continue;
            }
            compounds += 1;
            table.observe(&words);
        }
    }
    write_atomic(out, |w| {
        table.save(&mut *w).context("write pmi table")?;
        Ok(())
    })?;
    Ok((compounds, table))
}

#[derive(Debug, Clone, Default)]
pub struct GenerateCounts {
    pub pages: u64,
    pub per_source: BTreeMap<Source, u64>,
    pub merged: u64,
}

/// Run the enabled extractors over every page, rewrite hyponyms to their
/// census-resolved node names, and merge the streams.
pub fn generate_stage(
    corpus: &Path,
    dict: &Dictionary,
    table: &PmiTable,
    whitelist: Option<&std::collections::BTreeSet<String>>,
    flags: &crate::config::GenerateSection,
    out: &Path,
    ds_out: Option<&Path>,
) -> Result<GenerateCounts> {
    let (pages, _) = collect_pages(corpus)?;
    let census = TitleCensus::from_pages(pages.iter());
    let empty_whitelist = std::collections::BTreeSet::new();
    let whitelist = whitelist.unwrap_or(&empty_whitelist);
    let generator = NoopGenerator;

    let mut counts = GenerateCounts {
        pages: pages.len() as u64,
        ..GenerateCounts::default()
    };
    let mut streams: Vec<Vec<CandidateRelation>> = Vec::new();
    let mut bracket_stream: Vec<CandidateRelation> = Vec::new();
    for chunk in pages.chunks(EXTRACT_CHUNK) {
        let extracted: Vec<Vec<CandidateRelation>> = chunk
            .par_iter()
            .map(|page| {
                let node = census.node_name(page);
                let mut from_page = Vec::new();
                if flags.enable_bracket {
                    from_page.extend(bracket_extract(page, table, dict));
                }
                if flags.enable_abstract {
                    from_page.extend(abstract_extract(page, &generator));
                }
                if flags.enable_infobox {
                    from_page.extend(infobox_extract(page, whitelist));
                }
                if flags.enable_tag {
                    from_page.extend(tag_extract(page));
                }
                if node == page.entity_name {
                    return from_page;
                }
                // ambiguous bare name: re-key this page's candidates to the
                // disambiguated node
                from_page
                    .into_iter()
                    .filter_map(|rel| {
                        CandidateRelation::new(&node, &rel.hypernym, rel.sources.iter().copied())
                            .map_err(|e| log::debug!("dropping rewritten candidate: {e}"))
                            .ok()
                    })
                    .collect()
            })
            .collect();
        for page_candidates in extracted {
            for candidate in &page_candidates {
                for source in &candidate.sources {
                    *counts.per_source.entry(*source).or_insert(0) += 1;
                }
            }
            bracket_stream.extend(
                page_candidates
                    .iter()
                    .filter(|c| c.sources.contains(&Source::Bracket))
                    .cloned(),
            );
            streams.push(page_candidates);
        }
    }
    let merged = merge_candidates(streams);
    counts.merged = merged.len() as u64;
    write_atomic(out, |w| {
        write_candidates(&mut *w, &merged).context("write candidates")?;
        Ok(())
    })?;
    if let Some(ds_out) = ds_out {
        let mut abstracts: BTreeMap<String, String> = BTreeMap::new();
        for page in &pages {
            if let Some(text) = &page.abstract_text {
                abstracts.insert(census.node_name(page), text.clone());
            }
        }
        let dataset = taxoforge_core::generation::build_ds_dataset(&bracket_stream, &abstracts);
        write_atomic(ds_out, |w| {
            for (abstract_text, concept) in &dataset {
                writeln!(w, "{abstract_text}\t{concept}").context("write ds pair")?;
            }
            Ok(())
        })?;
    }
    Ok(counts)
}

/// Load the verification artifacts named by the config and run the verifier.
pub fn verify_stage(
    config: &PipelineConfig,
    candidates_path: &Path,
    out_accepted: &Path,
    out_filtered: &Path,
) -> Result<VerifyOutcome> {
    let file = fs::File::open(candidates_path)
        .with_context(|| format!("open candidates {}", candidates_path.display()))?;
    let candidates = read_candidates(std::io::BufReader::new(file))?;
    let dict = Dictionary::load(&config.paths.dictionary)
        .with_context(|| format!("load dictionary {}", config.paths.dictionary.display()))?;
    let lexicon = match (&config.paths.lexicon, config.verify.enable_thematic) {
        (Some(path), true) => Some(ThematicLexicon::load(path)?),
        _ => None,
    };
    let ne_counts = match (&config.paths.ne_counts, config.verify.enable_ne) {
        (Some(path), true) => Some(NeCounts::load(path)?),
        _ => None,
    };
    let (pages, _) = collect_pages(&config.paths.corpus)?;
    let census = TitleCensus::from_pages(pages.iter());
    let triples = TripleIndex::from_pages(pages, Some(&census));
    let stemmer = DefaultStemMatcher::default();
    let inputs = VerifyInputs {
        dict: &dict,
        lexicon: lexicon.as_ref(),
        ne_counts: ne_counts.as_ref(),
        triples: &triples,
        stemmer: &stemmer,
    };
    let outcome = verify(candidates, &config.verify, &inputs)?;
    write_atomic(out_accepted, |w| {
        write_candidates(&mut *w, &outcome.accepted).context("write accepted")?;
        Ok(())
    })?;
    write_atomic(out_filtered, |w| {
        write_candidates(&mut *w, &outcome.filtered).context("write filtered")?;
        Ok(())
    })?;
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
pub struct StoreCounts {
    pub nodes: u64,
    pub edges: u64,
    pub mentions: u64,
    pub rejected: u64,
    pub entities: u64,
    pub concepts: u64,
    pub entity_concept_edges: u64,
    pub subconcept_edges: u64,
}

/// Freeze the accepted relations plus the corpus mention index into a
/// snapshot.
pub fn store_stage(
    corpus: &Path,
    accepted_path: &Path,
    out_snapshot: &Path,
    config_hash: Option<String>,
) -> Result<(TaxonomyGraph, StoreCounts)> {
    let file = fs::File::open(accepted_path)
        .with_context(|| format!("open accepted relations {}", accepted_path.display()))?;
    let accepted = read_candidates(std::io::BufReader::new(file))?;
    let (pages, _) = collect_pages(corpus)?;
    let census = TitleCensus::from_pages(pages.iter());
    let mut graph = TaxonomyGraph::new();
    graph.build_mention_index(pages, &census);
    let report = graph.insert_edges(&accepted);
    for rejection in &report.rejected {
        log::warn!(
            "rejected edge {:?} -> {:?}: {}",
            rejection.hyponym,
            rejection.hypernym,
            rejection.reason
        );
    }
    let meta = SnapshotMeta { config_hash };
    write_atomic(out_snapshot, |w| {
        graph.save(&mut *w, &meta)?;
        Ok(())
    })?;
    let stats = graph.stats();
    let counts = StoreCounts {
        nodes: graph.node_count() as u64,
        edges: graph.edge_count() as u64,
        mentions: graph.mentions().count() as u64,
        rejected: report.rejected.len() as u64,
        entities: stats.entities,
        concepts: stats.concepts,
        entity_concept_edges: stats.entity_concept_edges,
        subconcept_edges: stats.subconcept_edges,
    };
    Ok((graph, counts))
}

// ---------------------------------------------------------------------------
// The runner
// ---------------------------------------------------------------------------

struct StageRunner {
    manifest: RunManifest,
}

impl StageRunner {
    fn run(
        &mut self,
        name: &str,
        outputs: &[&Path],
        run: impl FnOnce() -> Result<BTreeMap<String, u64>>,
    ) -> Result<()> {
        if !outputs.is_empty() && outputs.iter().all(|p| p.exists()) {
            log::info!("stage {name}: outputs exist, skipping");
            self.manifest.stages.push(StageReport {
                name: name.to_string(),
                status: StageStatus::Skipped,
                duration_ms: 0,
                counts: BTreeMap::new(),
                error: None,
            });
            return Ok(());
        }
        let start = Instant::now();
        match run() {
            Ok(counts) => {
                self.manifest.stages.push(StageReport {
                    name: name.to_string(),
                    status: StageStatus::Completed,
                    duration_ms: start.elapsed().as_millis() as u64,
                    counts,
                    error: None,
                });
                Ok(())
            }
            Err(e) => {
                self.manifest.stages.push(StageReport {
                    name: name.to_string(),
                    status: StageStatus::Failed,
                    duration_ms: start.elapsed().as_millis() as u64,
                    counts: BTreeMap::new(),
                    error: Some(format!("{e:#}")),
                });
                Err(e.context(format!("stage {name} failed")))
            }
        }
    }
}

/// Execute the full pipeline. The manifest is written to the output
/// directory (and to `manifest_copy` when given) even when a stage fails;
/// stages whose outputs already exist are skipped.
pub fn run_pipeline(config: &PipelineConfig, manifest_copy: Option<&Path>) -> Result<RunManifest> {
    config.validate()?;
    fs::create_dir_all(&config.paths.out_dir)
        .with_context(|| format!("create out dir {}", config.paths.out_dir.display()))?;
    let paths = StagePaths::new(&config.paths.out_dir);
    let mut runner = StageRunner {
        manifest: RunManifest {
            config_hash: config.config_hash.clone(),
            stages: Vec::new(),
        },
    };
    let result = run_stages(config, &paths, &mut runner);
    runner.manifest.write(&paths.manifest)?;
    if let Some(copy) = manifest_copy {
        runner.manifest.write(copy)?;
    }
    result.map(|()| runner.manifest)
}

fn run_stages(config: &PipelineConfig, paths: &StagePaths, runner: &mut StageRunner) -> Result<()> {
    runner.run(
        "ingest",
        &[&paths.normalized, &paths.ingest_report],
        || {
            let report = ingest_stage(&config.paths.corpus, &paths.normalized, &paths.ingest_report)?;
            Ok(BTreeMap::from([
                ("records".into(), report.records),
                ("parsed".into(), report.parsed),
                ("skipped".into(), report.skipped),
            ]))
        },
    )?;

    let dict = Dictionary::load(&config.paths.dictionary)
        .with_context(|| format!("load dictionary {}", config.paths.dictionary.display()))?;

    runner.run("pmi-build", &[&paths.pmi], || {
        let (compounds, table) = pmi_stage(
            &paths.normalized,
            &dict,
            &paths.pmi,
            config.pmi.alpha,
            config.pmi.include_tags,
        )?;
        Ok(BTreeMap::from([
            ("compounds".into(), compounds),
            ("unigrams".into(), table.vocab_size() as u64),
            ("bigram_total".into(), table.total_bigrams()),
        ]))
    })?;

    runner.run("generate", &[&paths.candidates], || {
        let table = PmiTable::load_from(&paths.pmi)?;
        let whitelist = match (&config.paths.whitelist, config.generate.enable_infobox) {
            (Some(path), true) => Some(load_whitelist(path).with_context(|| {
                format!("load whitelist {}", path.display())
            })?),
            _ => None,
        };
        let counts = generate_stage(
            &paths.normalized,
            &dict,
            &table,
            whitelist.as_ref(),
            &config.generate,
            &paths.candidates,
            None,
        )?;
        let mut map = BTreeMap::from([
            ("pages".into(), counts.pages),
            ("merged".into(), counts.merged),
        ]);
        for (source, count) in counts.per_source {
            map.insert(source.as_str().to_string(), count);
        }
        Ok(map)
    })?;

    runner.run("verify", &[&paths.accepted, &paths.filtered], || {
        let outcome = verify_stage(config, &paths.candidates, &paths.accepted, &paths.filtered)?;
        let mut map = BTreeMap::from([
            (
                "candidates_in".to_string(),
                (outcome.accepted.len() + outcome.filtered.len()) as u64,
            ),
            ("accepted".into(), outcome.accepted.len() as u64),
            ("filtered".into(), outcome.filtered.len() as u64),
        ]);
        for (reason, count) in &outcome.reason_counts {
            map.insert(format!("filtered_{}", reason.as_str()), *count);
        }
        Ok(map)
    })?;

    runner.run("store", &[&paths.snapshot], || {
        let (_, counts) = store_stage(
            &paths.normalized,
            &paths.accepted,
            &paths.snapshot,
            Some(config.config_hash.clone()),
        )?;
        Ok(BTreeMap::from([
            ("nodes".into(), counts.nodes),
            ("edges".into(), counts.edges),
            ("mentions".into(), counts.mentions),
            ("rejected".into(), counts.rejected),
            ("entities".into(), counts.entities),
            ("concepts".into(), counts.concepts),
            ("entity_concept_edges".into(), counts.entity_concept_edges),
            ("subconcept_edges".into(), counts.subconcept_edges),
        ]))
    })?;

    Ok(())
}

/// Bail out unless the relation list carries at least one bracket-sourced
/// relation to serve as the distant-supervision prior.
pub fn require_bracket_prior(relations: &[CandidateRelation]) -> Result<Vec<CandidateRelation>> {
    let bracket: Vec<CandidateRelation> = relations
        .iter()
        .filter(|r| r.sources.contains(&Source::Bracket))
        .cloned()
        .collect();
    if bracket.is_empty() {
        bail!("no bracket-sourced relations available as prior knowledge");
    }
    Ok(bracket)
}
