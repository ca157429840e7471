//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with
//! `cargo test -p taxoforge --test acceptance -- --nocapture`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use taxoforge::config::PipelineConfig;
use taxoforge::pipeline::{run_pipeline, StagePaths};
use taxoforge_core::corpus::{parse_page, RawRecord, TitleCensus};
use taxoforge_core::generation::{
    discover_predicates, CandidateRelation, FilterReason, Source,
};
use taxoforge_core::pmi::PmiTable;
use taxoforge_core::segment::Segmented;
use taxoforge_core::separation::{extract_hypernyms, separate};
use taxoforge_core::store::{SnapshotMeta, TaxonomyGraph};
use taxoforge_core::verification::{kl_divergence, noisy_or, AttributeDistribution};

/// Prints the criterion verdict even when the test panics.
struct Verdict {
    name: &'static str,
    passed: bool,
}

impl Verdict {
    fn new(name: &'static str) -> Self {
        Verdict {
            name,
            passed: false,
        }
    }

    fn pass(mut self) {
        self.passed = true;
    }
}

impl Drop for Verdict {
    fn drop(&mut self) {
        println!(
            "[acceptance] {}: {}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" }
        );
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn fixture_config(out_dir: &Path) -> PipelineConfig {
    let mut config = PipelineConfig::load(&fixtures().join("config.toml")).unwrap();
    config.paths.out_dir = out_dir.to_path_buf();
    config
}

// ---------------------------------------------------------------------------
// Criterion 1 — separation matches a brute-force oracle exhaustively
// ---------------------------------------------------------------------------

/// Independent transliteration of the sliding-window rules. Elements carry
/// their concatenated text (for PMI lookups) and a bracketing string over
/// leaf indices; no tree structures or span bookkeeping are shared with the
/// production code.
fn oracle_separate(words: &[String], table: &PmiTable) -> String {
    #[derive(Clone)]
    struct Elem {
        text: String,
        shape: String,
    }
    let mut elems: Vec<Elem> = words
        .iter()
        .enumerate()
        .map(|(i, w)| Elem {
            text: w.clone(),
            shape: i.to_string(),
        })
        .collect();
    fn merge(elems: &mut Vec<Elem>, i: usize) {
        let right = elems.remove(i + 1);
        let left = elems[i].clone();
        elems[i] = Elem {
            text: format!("{}{}", left.text, right.text),
            shape: format!("({} {})", left.shape, right.shape),
        };
    }
    if elems.len() == 1 {
        return elems[0].shape.clone();
    }
    while elems.len() > 2 {
        let mut merged_this_pass = false;
        let mut k = elems.len() - 3; // window (k, k+1, k+2), rightmost first
        loop {
            let left_pmi = table.pmi(&elems[k].text, &elems[k + 1].text);
            let right_pmi = table.pmi(&elems[k + 1].text, &elems[k + 2].text);
            if left_pmi < right_pmi {
                // step 2: merge the right pair, shift the window left
                merge(&mut elems, k + 1);
                merged_this_pass = true;
                if k == 0 || elems.len() < 3 {
                    break;
                }
                k -= 1;
            } else if k > 0 {
                // step 3: shift left without merging
                k -= 1;
            } else if left_pmi > right_pmi {
                // step 4: leftmost window, left pair binds tighter
                merge(&mut elems, 0);
                merged_this_pass = true;
                if elems.len() < 3 {
                    break;
                }
            } else {
                break; // tie at the leftmost window
            }
        }
        if elems.len() > 2 && !merged_this_pass {
            let m = elems.len();
            merge(&mut elems, m - 2);
        }
    }
    if elems.len() == 2 {
        merge(&mut elems, 0);
    }
    elems[0].shape.clone()
}

fn criterion_table() -> PmiTable {
    let unigrams = [
        ("w0", 12u64),
        ("w1", 9),
        ("w2", 6),
        ("w3", 3),
        ("w2w3", 4),
    ];
    let bigrams = [
        (("w0", "w1"), 8u64),
        (("w1", "w2"), 2),
        (("w2", "w3"), 3),
        (("w1", "w0"), 1),
        (("w1", "w2w3"), 2),
    ];
    PmiTable::from_counts(
        unigrams.map(|(w, c)| (w.to_string(), c)),
        bigrams.map(|((a, b), c)| ((a.to_string(), b.to_string()), c)),
        1.0,
    )
    .unwrap()
}

#[test]
fn c01_separation_oracle_equivalence() {
    let verdict = Verdict::new("criterion 01 (separation oracle equivalence)");
    let start = Instant::now();
    let table = criterion_table();
    let vocab = ["w0", "w1", "w2", "w3"];
    let mut checked = 0u64;
    for len in 1..=5usize {
        let mut indices = vec![0usize; len];
        loop {
            let words: Vec<String> = indices.iter().map(|&i| vocab[i].to_string()).collect();
            let expected = oracle_separate(&words, &table);
            let compound = Segmented::from_words(&words);
            let tree = separate(&compound, &table).unwrap();
            assert_eq!(
                tree.shape(),
                expected,
                "bracketing mismatch on {words:?}"
            );
            checked += 1;
            // next sequence in lexicographic order
            let mut pos = len;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                indices[pos] += 1;
                if indices[pos] < vocab.len() {
                    break;
                }
                indices[pos] = 0;
            }
            if indices.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    assert_eq!(checked, 4 + 16 + 64 + 256 + 1024);
    assert!(
        start.elapsed().as_secs() < 10,
        "exhaustive diff took {:?}",
        start.elapsed()
    );
    verdict.pass();
}

// ---------------------------------------------------------------------------
// Criterion 2 — planted-constituency recovery
// ---------------------------------------------------------------------------

#[test]
fn c02_planted_constituency_recovery() {
    let verdict = Verdict::new("criterion 02 (planted constituency recovery)");
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let modifiers: Vec<String> = (0..20).map(|i| format!("m{i:02}")).collect();
    let heads: Vec<(String, String)> = (0..10)
        .map(|i| (format!("ha{i}"), format!("hb{i}")))
        .collect();
    // compounds follow modifier* + (hA hB); the head pair always co-occurs,
    // so its PMI dwarfs the modifier pairs
    let compounds: Vec<Vec<String>> = (0..1000)
        .map(|_| {
            let (ha, hb) = heads[rng.gen_range(0..heads.len())].clone();
            let mut words = Vec::new();
            for _ in 0..rng.gen_range(1..=2) {
                words.push(modifiers[rng.gen_range(0..modifiers.len())].clone());
            }
            words.push(ha);
            words.push(hb);
            words
        })
        .collect();
    let table = PmiTable::from_sequences(compounds.clone(), 1.0).unwrap();
    let mut recovered = 0usize;
    for words in &compounds {
        let planted_head = words.last().unwrap().clone();
        let planted_phrase = format!("{}{}", words[words.len() - 2], planted_head);
        let compound = Segmented::from_words(words);
        let tree = separate(&compound, &table).unwrap();
        let hypernyms = extract_hypernyms(&tree);
        if hypernyms.contains(&planted_head) && hypernyms.contains(&planted_phrase) {
            recovered += 1;
        }
    }
    assert!(
        recovered >= 990,
        "recovered head and head-phrase on only {recovered}/1000 compounds"
    );
    verdict.pass();
}

// ---------------------------------------------------------------------------
// Criterion 3 — KL divergence properties
// ---------------------------------------------------------------------------

fn random_distribution(rng: &mut ChaCha8Rng, dims: usize) -> AttributeDistribution {
    let raw: Vec<f64> = (0..dims).map(|_| rng.gen_range(0.01..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let weights: BTreeMap<String, f64> = raw
        .iter()
        .enumerate()
        .map(|(i, w)| (format!("a{i}"), w / sum))
        .collect();
    AttributeDistribution::from_weights(weights, 1).unwrap()
}

#[test]
fn c03_kl_divergence_properties() {
    let verdict = Verdict::new("criterion 03 (kl divergence properties)");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let dims = rng.gen_range(2..10);
        let p = random_distribution(&mut rng, dims);
        let q = random_distribution(&mut rng, dims);
        let kl = kl_divergence(&p, &q).unwrap();
        assert!(kl >= -1e-9, "negative divergence {kl}");
        assert!(
            kl_divergence(&p, &p).unwrap().abs() <= 1e-9,
            "self-divergence not zero"
        );
        let differs = (0..dims).any(|i| {
            let key = format!("a{i}");
            (p.weight(&key) - q.weight(&key)).abs() > 1e-12
        });
        if differs {
            assert!(kl > 0.0, "distinct distributions with zero divergence");
        }
    }
    // (0.5, 0.5) against (0.9, 0.1): 0.5·ln(5/9) + 0.5·ln(5) ≈ 0.5108
    let p = AttributeDistribution::from_weights(
        BTreeMap::from([("x".to_string(), 0.5), ("y".to_string(), 0.5)]),
        1,
    )
    .unwrap();
    let q = AttributeDistribution::from_weights(
        BTreeMap::from([("x".to_string(), 0.9), ("y".to_string(), 0.1)]),
        1,
    )
    .unwrap();
    let kl = kl_divergence(&p, &q).unwrap();
    assert!((kl - 0.5108).abs() < 1e-3, "hand value mismatch: {kl}");
    verdict.pass();
}

// ---------------------------------------------------------------------------
// Criterion 4 — noisy-or algebra on a full grid
// ---------------------------------------------------------------------------

#[test]
fn c04_noisy_or_grid() {
    let verdict = Verdict::new("criterion 04 (noisy-or grid)");
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    for &s1 in &grid {
        for &s2 in &grid {
            let s = noisy_or(s1, s2);
            assert!((0.0..=1.0 + 1e-12).contains(&s), "s out of range at ({s1}, {s2})");
            assert!(s >= s1.max(s2) - 1e-12, "s below max at ({s1}, {s2})");
            if s1 == 1.0 || s2 == 1.0 {
                assert_eq!(s, 1.0, "absorbing case failed at ({s1}, {s2})");
            }
            if s1 >= 0.01 {
                assert!(
                    noisy_or(s1 - 0.01, s2) <= s + 1e-12,
                    "not monotone in s1 at ({s1}, {s2})"
                );
            }
            if s2 >= 0.01 {
                assert!(
                    noisy_or(s1, s2 - 0.01) <= s + 1e-12,
                    "not monotone in s2 at ({s1}, {s2})"
                );
            }
        }
    }
    verdict.pass();
}

// ---------------------------------------------------------------------------
// Criterion 5 — end-to-end fixture filters exactly the planted wrong edges
// ---------------------------------------------------------------------------

#[test]
fn c05_planted_wrong_relations() {
    let verdict = Verdict::new("criterion 05 (planted wrong-relation fixtures)");
    let out = tempfile::tempdir().unwrap();
    let config = fixture_config(out.path());
    run_pipeline(&config, None).unwrap();
    let paths = StagePaths::new(out.path());

    let filtered = fs::read_to_string(&paths.filtered).unwrap();
    let expected_filtered = [
        ("Dehua Liu", "music", FilterReason::IncompatibleKl),
        ("educational institution", "education", FilterReason::HeadStem),
        ("iPhone", "America", FilterReason::NeSupport),
    ];
    let lines: Vec<&str> = filtered.lines().collect();
    assert_eq!(lines.len(), 3, "expected exactly 3 filtered relations");
    for (line, (hypo, hyper, reason)) in lines.iter().zip(expected_filtered) {
        let rel = CandidateRelation::from_tsv(line, 1).unwrap();
        assert_eq!(rel.hyponym, hypo);
        assert_eq!(rel.hypernym, hyper);
        assert_eq!(rel.filter_reason(), Some(reason));
    }

    let accepted = fs::read_to_string(&paths.accepted).unwrap();
    assert!(
        accepted.lines().count() >= 40,
        "expected at least 40 accepted relations"
    );
    let golden_accepted = fs::read_to_string(fixtures().join("golden/accepted.tsv")).unwrap();
    let golden_filtered = fs::read_to_string(fixtures().join("golden/filtered.tsv")).unwrap();
    assert_eq!(accepted, golden_accepted, "accepted output drifted from golden");
    assert_eq!(filtered, golden_filtered, "filtered output drifted from golden");
    verdict.pass();
}

// ---------------------------------------------------------------------------
// Criterion 6 — predicate discovery equals a nested-loop join oracle
// ---------------------------------------------------------------------------

#[test]
fn c06_predicate_discovery_matches_join_oracle() {
    let verdict = Verdict::new("criterion 06 (predicate discovery vs join oracle)");
    // occupation aligns for five entities, profession for two, career for one
    let mut pages = Vec::new();
    let mut relations = Vec::new();
    for i in 0..5 {
        let name = format!("singer{i}");
        let mut infobox = BTreeMap::new();
        infobox.insert("occupation".to_string(), "singer".to_string());
        if i < 2 {
            infobox.insert("profession".to_string(), "singer".to_string());
        }
        if i < 1 {
            infobox.insert("career".to_string(), "singer".to_string());
        }
        infobox.insert("birthplace".to_string(), "somewhere".to_string());
        pages.push(
            parse_page(&RawRecord {
                title: name.clone(),
                abstract_text: None,
                infobox,
                tags: vec![],
            })
            .unwrap(),
        );
        relations.push(CandidateRelation::new(&name, "singer", [Source::Bracket]).unwrap());
    }
    // the canonical example: isA(Jay Chou, singer) aligning <Jay Chou, occupation, singer>
    pages.push(
        parse_page(&RawRecord {
            title: "Jay Chou".into(),
            abstract_text: None,
            infobox: BTreeMap::from([("occupation".to_string(), "singer".to_string())]),
            tags: vec![],
        })
        .unwrap(),
    );
    relations.push(CandidateRelation::new("Jay Chou", "singer", [Source::Bracket]).unwrap());

    // nested-loop join oracle: count every (relation, triple) match
    let mut oracle: BTreeMap<String, u64> = BTreeMap::new();
    for relation in &relations {
        for page in &pages {
            for triple in &page.triples {
                if triple.subject == relation.hyponym && triple.object == relation.hypernym {
                    *oracle.entry(triple.predicate.clone()).or_insert(0) += 1;
                }
            }
        }
    }
    let mut oracle_ranked: Vec<(String, u64)> = oracle.into_iter().collect();
    oracle_ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let ranked = discover_predicates(&relations, pages);
    let got: Vec<(String, u64)> = ranked
        .into_iter()
        .map(|p| (p.predicate, p.alignment_count))
        .collect();
    assert_eq!(got, oracle_ranked, "ranking differs from the join oracle");
    assert_eq!(got[0].0, "occupation", "dominant predicate should rank first");
    assert_eq!(got[0].1, 6);
    verdict.pass();
}

// ---------------------------------------------------------------------------
// Criterion 7 — snapshot round-trip on 1,000 fuzzed graphs
// ---------------------------------------------------------------------------

#[test]
fn c07_store_roundtrip_fuzz() {
    let verdict = Verdict::new("criterion 07 (store round-trip fuzz)");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let names: Vec<String> = (0..12).map(|i| format!("node{i:02}")).collect();
    for _ in 0..1000 {
        let mut graph = TaxonomyGraph::new();
        let mut relations = Vec::new();
        let mut seen = BTreeSet::new();
        for _ in 0..rng.gen_range(0..20) {
            let a = rng.gen_range(0..names.len());
            let b = rng.gen_range(0..names.len());
            if a == b || !seen.insert((a, b)) {
                continue;
            }
            let mut sources = BTreeSet::new();
            for source in [Source::Bracket, Source::Abstract, Source::Infobox, Source::Tag] {
                if rng.gen_bool(0.4) {
                    sources.insert(source);
                }
            }
            sources.insert(Source::Tag);
            let mut rel =
                CandidateRelation::new(&names[a], &names[b], sources.iter().copied()).unwrap();
            rel.mark_accepted();
            relations.push(rel);
        }
        graph.insert_edges(&relations);
        let mut pages = Vec::new();
        let page_count = rng.gen_range(0..5);
        for name in names.choose_multiple(&mut rng, page_count) {
            let title = if rng.gen_bool(0.5) {
                format!("{name} (thing)")
            } else {
                name.clone()
            };
            pages.push(
                parse_page(&RawRecord {
                    title,
                    ..RawRecord::default()
                })
                .unwrap(),
            );
        }
        let census = TitleCensus::from_pages(pages.iter());
        graph.build_mention_index(pages, &census);

        let mut buf = Vec::new();
        graph.save(&mut buf, &SnapshotMeta::default()).unwrap();
        let (loaded, _) = TaxonomyGraph::load(buf.as_slice()).unwrap();
        assert_eq!(loaded, graph, "round-trip mismatch");
        let stats = graph.stats();
        assert_eq!(
            stats.entity_concept_edges + stats.subconcept_edges,
            graph.edge_count() as u64,
            "stats split does not sum to the edge count"
        );
    }
    verdict.pass();
}

// ---------------------------------------------------------------------------
// Criterion 8 — service contract over the fixture snapshot
// ---------------------------------------------------------------------------

fn http_get(addr: std::net::SocketAddr, path: &str) -> (u16, Vec<u8>) {
    let mut stream = std::net::TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).unwrap();
    let header_end = raw.windows(4).position(|w| w == b"\r\n\r\n").unwrap();
    let head = String::from_utf8_lossy(&raw[..header_end]).to_string();
    let status: u16 = head
        .lines()
        .next()
        .and_then(|l| l.split_whitespace().nth(1))
        .and_then(|c| c.parse().ok())
        .unwrap();
    (status, raw[header_end + 4..].to_vec())
}

fn results_of(body: &[u8]) -> (String, Vec<String>, u64) {
    let value: serde_json::Value = serde_json::from_slice(body).unwrap();
    let results = value["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    (
        value["status"].as_str().unwrap().to_string(),
        results,
        value["total"].as_u64().unwrap(),
    )
}

#[test]
fn c08_service_contract() {
    let verdict = Verdict::new("criterion 08 (service contract)");
    let start = Instant::now();
    let out = tempfile::tempdir().unwrap();
    let config = fixture_config(out.path());
    run_pipeline(&config, None).unwrap();
    let (graph, _) = TaxonomyGraph::load_from(&StagePaths::new(out.path()).snapshot).unwrap();
    let graph = Arc::new(graph);

    let rt = tokio::runtime::Runtime::new().unwrap();
    let listener =
        rt.block_on(async { tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap() });
    let addr = listener.local_addr().unwrap();
    rt.spawn(async move {
        taxoforge_core::service::serve_listener(graph, listener)
            .await
            .unwrap();
    });

    // oracle lists computed by hand from the fixture corpus
    let (status, body) = http_get(addr, "/getConcept?entity=Dehua%20Liu");
    assert_eq!(status, 200);
    let (ok, results, _) = results_of(&body);
    assert_eq!(ok, "ok");
    assert_eq!(results, vec!["actor", "person", "singer"]);

    let (status, body) = http_get(addr, "/men2ent?mention=Apple");
    assert_eq!(status, 200);
    let (_, results, total) = results_of(&body);
    assert_eq!(results, vec!["Apple (company)", "Apple (fruit)"]);
    assert_eq!(total, 2);

    let singers = vec!["Dehua Liu", "Faye Wong", "Gang Liu", "Jay Chou", "Teresa Teng"];
    let (status, body) = http_get(addr, "/getEntity?concept=singer");
    assert_eq!(status, 200);
    let (_, results, total) = results_of(&body);
    assert_eq!(results, singers);
    assert_eq!(total, 5);

    // pagination: single middle element, then exhaustive page concatenation
    let (_, body) = http_get(addr, "/getEntity?concept=singer&offset=1&limit=1");
    let (_, results, total) = results_of(&body);
    assert_eq!(results, vec!["Faye Wong"]);
    assert_eq!(total, 5);
    let mut collected = Vec::new();
    let mut offset = 0;
    loop {
        let (_, body) = http_get(
            addr,
            &format!("/getEntity?concept=singer&offset={offset}&limit=2"),
        );
        let (_, page, _) = results_of(&body);
        if page.is_empty() {
            break;
        }
        offset += page.len();
        collected.extend(page);
    }
    assert_eq!(collected, singers);

    for path in ["/men2ent", "/getConcept", "/getEntity?concept=singer&offset=x"] {
        let (status, body) = http_get(addr, path);
        assert_eq!(status, 400, "{path}");
        let (err, _, _) = results_of(&body);
        assert_eq!(err, "error");
    }

    assert!(
        start.elapsed().as_secs() < 5,
        "service suite took {:?}",
        start.elapsed()
    );
    verdict.pass();
}

// ---------------------------------------------------------------------------
// Criterion 9 — eval harness: Wilson interval and question coverage
// ---------------------------------------------------------------------------

#[test]
fn c09_eval_harness() {
    let verdict = Verdict::new("criterion 09 (eval harness)");
    // 19 of 20 correct: the point estimate echoes the headline precision
    let mut samples: Vec<taxoforge_core::eval::LabeledSample> = (0..20)
        .map(|i| taxoforge_core::eval::LabeledSample {
            hyponym: format!("e{i}"),
            hypernym: "c".into(),
            sources: BTreeSet::from([Source::Tag]),
            label: Some(if i < 19 {
                taxoforge_core::eval::Label::Correct
            } else {
                taxoforge_core::eval::Label::Wrong
            }),
        })
        .collect();
    samples.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
    let report = taxoforge_core::eval::compute_precision(&samples).unwrap();
    assert!((report.precision - 0.95).abs() < 1e-12);
    // hand computation: z=1.96, p=0.95, n=20
    assert!((report.wilson_low - 0.7638641064874331).abs() < 1e-9);
    assert!((report.wilson_high - 0.9911187805671267).abs() < 1e-9);

    // coverage over the ten bundled questions, against the manual oracle:
    // 7 covered; matched entities and their direct-hypernym counts are
    // Dehua Liu 3, Faye Wong 2, France 1, Huawei 1, Red Sorghum 1,
    // Shanghai 1, iPhone 1 → average 10/7
    let out = tempfile::tempdir().unwrap();
    let config = fixture_config(out.path());
    run_pipeline(&config, None).unwrap();
    let (graph, _) = TaxonomyGraph::load_from(&StagePaths::new(out.path()).snapshot).unwrap();
    let dict = taxoforge_core::segment::Dictionary::load(&fixtures().join("dict.txt")).unwrap();
    let questions: Vec<String> = fs::read_to_string(fixtures().join("questions.txt"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    let coverage = taxoforge_core::eval::question_coverage(&questions, &graph, &dict);
    assert_eq!(coverage.questions_total, 10);
    assert_eq!(coverage.questions_covered, 7);
    assert!((coverage.coverage_ratio - 0.7).abs() < 1e-12);
    assert!((coverage.avg_concepts_per_covered_entity - 10.0 / 7.0).abs() < 1e-9);
    verdict.pass();
}

// ---------------------------------------------------------------------------
// Criterion 10 — byte-identical snapshots across runs
// ---------------------------------------------------------------------------

#[test]
fn c10_pipeline_determinism() {
    let verdict = Verdict::new("criterion 10 (pipeline determinism)");
    let digest_of = |out_dir: &Path| -> (String, Vec<u8>) {
        let config = fixture_config(out_dir);
        run_pipeline(&config, None).unwrap();
        let bytes = fs::read(StagePaths::new(out_dir).snapshot).unwrap();
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        (format!("{:x}", hasher.finalize()), bytes)
    };
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let (hash_one, bytes_one) = digest_of(first.path());
    let (hash_two, bytes_two) = digest_of(second.path());
    assert_eq!(hash_one, hash_two, "snapshot hashes differ across runs");
    assert_eq!(bytes_one, bytes_two);
    verdict.pass();
}
