//! Synthetic data builders shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use taxoforge_core::generation::{CandidateRelation, Source};
use taxoforge_core::pmi::PmiTable;
use taxoforge_core::store::TaxonomyGraph;

/// Compounds drawn from a modifier+head grammar, as word vectors.
pub fn synthetic_compounds(count: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modifiers: Vec<String> = (0..50).map(|i| format!("mod{i:02}")).collect();
    let heads: Vec<(String, String)> = (0..20)
        .map(|i| (format!("ha{i}"), format!("hb{i}")))
        .collect();
    (0..count)
        .map(|_| {
            let (ha, hb) = heads[rng.gen_range(0..heads.len())].clone();
            let mut words: Vec<String> = (0..rng.gen_range(1..4))
                .map(|_| modifiers[rng.gen_range(0..modifiers.len())].clone())
                .collect();
            words.push(ha);
            words.push(hb);
            words
        })
        .collect()
}

pub fn pmi_table_over(compounds: &[Vec<String>]) -> PmiTable {
    PmiTable::from_sequences(compounds.to_vec(), 1.0).unwrap()
}

/// A frozen graph with `entities` hyponyms spread over `concepts` classes.
pub fn synthetic_graph(entities: usize, concepts: usize) -> TaxonomyGraph {
    let mut graph = TaxonomyGraph::new();
    let relations: Vec<CandidateRelation> = (0..entities)
        .map(|i| {
            let mut rel = CandidateRelation::new(
                format!("entity{i:05}"),
                format!("concept{:02}", i % concepts),
                [Source::Tag],
            )
            .unwrap();
            rel.mark_accepted();
            rel
        })
        .collect();
    graph.insert_edges(&relations);
    graph
}
