//! VERSE with adjacency similarity on the cooccurrence graph.
//!
//! cargo run --release --example verse

use std::fs::File;
use std::io::BufReader;

use entity_embeddings::cooc::{build_graph, GraphBuildConfig};
use entity_embeddings::corpus::{parse_annotated, prepare_corpus, FilterMode};
use entity_embeddings::eval::nearest_neighbors;
use entity_embeddings::graph::{verse_train, VerseConfig};

fn main() -> entity_embeddings::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/news.jsonl");
    let docs = parse_annotated(BufReader::new(File::open(path)?)).collect::<Result<Vec<_>, _>>()?;
    let (vocab, corpus) = prepare_corpus(&docs, FilterMode::Annotated, 1)?;
    let graph = build_graph(&corpus.documents, &vocab, &GraphBuildConfig::default(), 1)?;

    let cfg = VerseConfig {
        dim: 32,
        samples: 2_000,
        ..VerseConfig::default()
    };
    let (model, stats) = verse_train(&graph, &cfg)?;
    let losses = &stats.epoch_losses;
    println!(
        "{} rounds, block loss {:.3} -> {:.3}",
        stats.updates,
        losses[0],
        losses[losses.len() - 1]
    );

    let emb = model.publish(&vocab.keys())?;
    for query in ["@LOC:Q64", "@ORG:Q9617"] {
        let found: Vec<String> = nearest_neighbors(&emb, query, 4, None)?
            .into_iter()
            .map(|n| format!("{} ({:.2})", n.key, n.cosine))
            .collect();
        println!("{query}: {}", found.join(", "));
    }
    Ok(())
}
