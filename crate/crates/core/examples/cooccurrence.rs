//! Builds the GloVe cooccurrence matrix and the term/entity graph from the
//! sample corpus and lists the heaviest entity edges.
//!
//! cargo run --example cooccurrence

use std::fs::File;
use std::io::BufReader;

use entity_embeddings::cooc::{accumulate_glove_counts, build_graph, graph_stats, GraphBuildConfig};
use entity_embeddings::corpus::{parse_annotated, prepare_corpus, FilterMode};

fn main() -> entity_embeddings::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/news.jsonl");
    let docs = parse_annotated(BufReader::new(File::open(path)?)).collect::<Result<Vec<_>, _>>()?;
    let (vocab, corpus) = prepare_corpus(&docs, FilterMode::Annotated, 1)?;

    let matrix = accumulate_glove_counts(&corpus.documents, 10, 1)?;
    println!("cooccurrence matrix: {} nonzero pairs", matrix.len());

    let graph = build_graph(&corpus.documents, &vocab, &GraphBuildConfig::default(), 2)?;
    let stats = graph_stats(&graph);
    println!(
        "graph: {} nodes with edges, {} edges, weight quantiles {:?}",
        stats.connected_nodes, stats.edges, stats.weight_quantiles
    );

    let mut entity_edges: Vec<(u32, u32, f64)> = graph
        .edges()
        .filter(|&(i, j, _)| vocab.is_entity(i as usize) && vocab.is_entity(j as usize))
        .collect();
    entity_edges.sort_by(|a, b| b.2.total_cmp(&a.2));
    println!("heaviest entity-entity edges:");
    for (i, j, w) in entity_edges.into_iter().take(5) {
        let (a, b) = (&vocab.entry(i as usize).key, &vocab.entry(j as usize).key);
        println!("  {a:<16} {b:<16} {w:.3}");
    }
    Ok(())
}
