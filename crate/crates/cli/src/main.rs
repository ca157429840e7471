use std::collections::BTreeSet;
use std::fs;
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use taxoforge::config::PipelineConfig;
use taxoforge::pipeline;
use taxoforge_core::corpus::load_corpus;
use taxoforge_core::eval::{
    compute_precision, question_coverage, read_labeling_sheet, sample_for_labeling,
    write_labeling_sheet,
};
use taxoforge_core::generation::{load_whitelist, read_candidates};
use taxoforge_core::pmi::PmiTable;
use taxoforge_core::segment::Dictionary;
use taxoforge_core::store::TaxonomyGraph;

/// Builds an isA taxonomy from encyclopedia page dumps and serves it.
#[derive(Parser)]
#[command(name = "taxoforge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a raw dump and write an ingest report.
    Ingest {
        /// Line-delimited JSON dump.
        path: PathBuf,
        /// Where to write the ingest report (JSON).
        #[arg(long)]
        report: PathBuf,
        /// Where to write normalized pages; defaults next to the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the PMI statistics table from bracket compounds.
    PmiBuild {
        corpus: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = taxoforge_core::pmi::DEFAULT_ALPHA)]
        alpha: f64,
        /// Also count tag strings as compounds.
        #[arg(long)]
        include_tags: bool,
    },
    /// Extract candidate relations from all four sources and merge them.
    Generate {
        corpus: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        pmi: PathBuf,
        /// Infobox predicate whitelist; omit to disable infobox extraction.
        #[arg(long)]
        whitelist: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the distant-supervision (abstract, concept) dataset.
        #[arg(long)]
        ds_out: Option<PathBuf>,
    },
    /// Rank infobox predicates by alignment with bracket-derived relations.
    DiscoverPredicates {
        corpus: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        /// Keep the top-ranked predicates.
        #[arg(long, default_value_t = 341)]
        top: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Filter candidates with the verification strategies.
    Verify {
        candidates: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_accepted: PathBuf,
        #[arg(long)]
        out_filtered: PathBuf,
    },
    /// Build, inspect, or query taxonomy snapshots.
    Store {
        #[command(subcommand)]
        command: StoreCommand,
    },
    /// Serve the query API over a snapshot.
    Serve {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
    /// Evaluation harness: sampling, precision, coverage.
    Eval {
        #[command(subcommand)]
        command: EvalCommand,
    },
    /// Run the whole pipeline from one config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Write a copy of the run manifest here.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum StoreCommand {
    /// Freeze accepted relations plus the corpus mention index.
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        accepted: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print node/edge statistics of a snapshot.
    Stats {
        #[arg(long)]
        snapshot: PathBuf,
    },
    /// Query a snapshot from the command line.
    Query {
        #[arg(long)]
        snapshot: PathBuf,
        #[command(subcommand)]
        command: QueryCommand,
    },
}

#[derive(Args)]
struct Pagination {
    #[arg(long, default_value_t = 0)]
    offset: usize,
    #[arg(long, default_value_t = taxoforge_core::service::DEFAULT_LIMIT)]
    limit: usize,
}

#[derive(Subcommand)]
enum QueryCommand {
    /// Entities reachable from a mention.
    Men2ent { mention: String },
    /// Hypernym list of an entity.
    GetConcept { entity: String },
    /// Hyponym list of a concept (paginated).
    GetEntity {
        concept: String,
        #[command(flatten)]
        page: Pagination,
    },
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Export a uniform edge sample as a labeling sheet.
    Sample {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute precision and a Wilson interval from a filled sheet.
    Precision {
        #[arg(long)]
        labels: PathBuf,
    },
    /// Measure question coverage against a snapshot.
    Coverage {
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        dict: PathBuf,
    },
}

fn load_snapshot(path: &std::path::Path) -> Result<TaxonomyGraph> {
    let (graph, _) = TaxonomyGraph::load_from(path)
        .with_context(|| format!("load snapshot {}", path.display()))?;
    Ok(graph)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest { path, report, out } => {
            let normalized = out.unwrap_or_else(|| {
                report
                    .parent()
                    .unwrap_or(std::path::Path::new("."))
                    .join("normalized.jsonl")
            });
            let summary = pipeline::ingest_stage(&path, &normalized, &report)?;
            println!(
                "ingested {} records: {} parsed, {} skipped",
                summary.records, summary.parsed, summary.skipped
            );
            println!("normalized pages: {}", normalized.display());
            println!("report: {}", report.display());
        }
        Command::PmiBuild {
            corpus,
            dict,
            out,
            alpha,
            include_tags,
        } => {
            let dict = Dictionary::load(&dict)
                .with_context(|| format!("load dictionary {}", dict.display()))?;
            let (compounds, table) = pipeline::pmi_stage(&corpus, &dict, &out, alpha, include_tags)?;
            println!(
                "counted {} compounds: {} unigrams, {} bigram occurrences",
                compounds,
                table.vocab_size(),
                table.total_bigrams()
            );
        }
        Command::Generate {
            corpus,
            dict,
            pmi,
            whitelist,
            out,
            ds_out,
        } => {
            let dict = Dictionary::load(&dict)
                .with_context(|| format!("load dictionary {}", dict.display()))?;
            let table = PmiTable::load_from(&pmi)?;
            let whitelist: Option<BTreeSet<String>> = match whitelist {
                Some(path) => Some(
                    load_whitelist(&path)
                        .with_context(|| format!("load whitelist {}", path.display()))?,
                ),
                None => None,
            };
            let flags = taxoforge::config::GenerateSection {
                enable_infobox: whitelist.is_some(),
                ..Default::default()
            };
            let counts = pipeline::generate_stage(
                &corpus,
                &dict,
                &table,
                whitelist.as_ref(),
                &flags,
                &out,
                ds_out.as_deref(),
            )?;
            println!("extracted from {} pages:", counts.pages);
            for (source, count) in &counts.per_source {
                println!("  {}: {}", source.as_str(), count);
            }
            println!("merged candidates: {}", counts.merged);
        }
        Command::DiscoverPredicates {
            corpus,
            candidates,
            top,
            out,
        } => {
            let file = fs::File::open(&candidates)
                .with_context(|| format!("open candidates {}", candidates.display()))?;
            let all = read_candidates(BufReader::new(file))?;
            let prior = pipeline::require_bracket_prior(&all)?;
            let pages = load_corpus(&corpus)?;
            let ranked = taxoforge_core::generation::discover_predicates(&prior, pages);
            let mut lines = String::new();
            for candidate in ranked.iter().take(top) {
                lines.push_str(&format!(
                    "{}\t{}\n",
                    candidate.predicate, candidate.alignment_count
                ));
            }
            match out {
                Some(path) => fs::write(&path, lines)
                    .with_context(|| format!("write {}", path.display()))?,
                None => print!("{lines}"),
            }
        }
        Command::Verify {
            candidates,
            config,
            out_accepted,
            out_filtered,
        } => {
            let config = PipelineConfig::load(&config)?;
            let outcome =
                pipeline::verify_stage(&config, &candidates, &out_accepted, &out_filtered)?;
            println!(
                "verified {} candidates: {} accepted, {} filtered",
                outcome.accepted.len() + outcome.filtered.len(),
                outcome.accepted.len(),
                outcome.filtered.len()
            );
            for (reason, count) in &outcome.reason_counts {
                println!("  {}: {}", reason.as_str(), count);
            }
        }
        Command::Store { command } => match command {
            StoreCommand::Build {
                corpus,
                accepted,
                out,
            } => {
                let (_, counts) = pipeline::store_stage(&corpus, &accepted, &out, None)?;
                println!(
                    "stored {} nodes, {} edges, {} mentions ({} rejected)",
                    counts.nodes, counts.edges, counts.mentions, counts.rejected
                );
            }
            StoreCommand::Stats { snapshot } => {
                let graph = load_snapshot(&snapshot)?;
                let stats = graph.stats();
                println!("entities\t{}", stats.entities);
                println!("concepts\t{}", stats.concepts);
                println!("entity_concept_edges\t{}", stats.entity_concept_edges);
                println!("subconcept_edges\t{}", stats.subconcept_edges);
            }
            StoreCommand::Query { snapshot, command } => {
                let graph = load_snapshot(&snapshot)?;
                let results = match command {
                    QueryCommand::Men2ent { mention } => graph.men2ent(&mention),
                    QueryCommand::GetConcept { entity } => graph.get_concepts(&entity),
                    QueryCommand::GetEntity { concept, page } => graph
                        .get_entities(&concept)
                        .into_iter()
                        .skip(page.offset)
                        .take(page.limit)
                        .collect(),
                };
                for result in results {
                    println!("{result}");
                }
            }
        },
        Command::Serve { snapshot, addr } => {
            let graph = Arc::new(load_snapshot(&snapshot)?);
            let runtime = tokio::runtime::Runtime::new().context("start tokio runtime")?;
            println!("serving {} on http://{addr}", snapshot.display());
            runtime.block_on(taxoforge_core::service::serve(graph, addr))?;
        }
        Command::Eval { command } => match command {
            EvalCommand::Sample {
                snapshot,
                n,
                seed,
                out,
            } => {
                let graph = load_snapshot(&snapshot)?;
                let samples = sample_for_labeling(&graph, n, seed)?;
                let file = fs::File::create(&out)
                    .with_context(|| format!("create {}", out.display()))?;
                write_labeling_sheet(std::io::BufWriter::new(file), &samples)?;
                println!("wrote {} samples to {}", samples.len(), out.display());
            }
            EvalCommand::Precision { labels } => {
                let file = fs::File::open(&labels)
                    .with_context(|| format!("open {}", labels.display()))?;
                let samples = read_labeling_sheet(BufReader::new(file))?;
                let report = compute_precision(&samples)?;
                println!(
                    "precision {:.4} ({}/{}), wilson95 [{:.4}, {:.4}]",
                    report.precision, report.correct, report.total, report.wilson_low,
                    report.wilson_high
                );
                for (source, precision) in &report.per_source {
                    println!(
                        "  {}: {:.4} ({}/{})",
                        source.as_str(),
                        precision.precision,
                        precision.correct,
                        precision.total
                    );
                }
            }
            EvalCommand::Coverage {
                questions,
                snapshot,
                dict,
            } => {
                let graph = load_snapshot(&snapshot)?;
                let dict = Dictionary::load(&dict)
                    .with_context(|| format!("load dictionary {}", dict.display()))?;
                let text = fs::read_to_string(&questions)
                    .with_context(|| format!("read questions {}", questions.display()))?;
                let questions: Vec<String> = text
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(String::from)
                    .collect();
                let report = question_coverage(&questions, &graph, &dict);
                println!(
                    "covered {}/{} questions ({:.2}%), avg {:.2} concepts per covered entity",
                    report.questions_covered,
                    report.questions_total,
                    report.coverage_ratio * 100.0,
                    report.avg_concepts_per_covered_entity
                );
            }
        },
        Command::Run { config, manifest } => {
            let config = PipelineConfig::load(&config)?;
            let result = pipeline::run_pipeline(&config, manifest.as_deref())?;
            println!("pipeline complete; config hash {}", result.config_hash);
            for stage in &result.stages {
                println!(
                    "  {}: {:?} ({} ms)",
                    stage.name, stage.status, stage.duration_ms
                );
            }
        }
    }
    Ok(())
}
