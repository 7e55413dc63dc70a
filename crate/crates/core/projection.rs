//! Two-component PCA of selected vectors, written as TSV for plotting.
//!
//! cargo run --release --example projection

use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use entity_embeddings::cooc::{build_graph, GraphBuildConfig};
use entity_embeddings::corpus::{parse_annotated, prepare_corpus, FilterMode};
use entity_embeddings::eval::export_projection;
use entity_embeddings::graph::{verse_train, VerseConfig};

fn main() -> entity_embeddings::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let docs = parse_annotated(BufReader::new(File::open(data.join("news.jsonl"))?))
        .collect::<Result<Vec<_>, _>>()?;
    let (vocab, corpus) = prepare_corpus(&docs, FilterMode::Annotated, 1)?;
    let graph = build_graph(&corpus.documents, &vocab, &GraphBuildConfig::default(), 1)?;
    let cfg = VerseConfig {
        dim: 32,
        samples: 2_000,
        ..VerseConfig::default()
    };
    let (model, _) = verse_train(&graph, &cfg)?;
    let emb = model.publish(&vocab.keys())?;

    let text = fs::read_to_string(data.join("keys.txt"))?;
    let keys: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    println!("key\tpc1\tpc2");
    for row in export_projection(&emb, &keys)? {
        println!("{}\t{:.4}\t{:.4}", row.key, row.pc1, row.pc2);
    }
    Ok(())
}
