//! Reads the annotated sample corpus, runs both preparation pipelines and
//! prints the head of each vocabulary.
//!
//! cargo run --example ingest_corpus

use std::fs::File;
use std::io::BufReader;

use entity_embeddings::corpus::{parse_annotated, prepare_corpus, FilterMode};

fn main() -> entity_embeddings::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/news.jsonl");
    let docs = parse_annotated(BufReader::new(File::open(path)?)).collect::<Result<Vec<_>, _>>()?;
    println!("{} documents, first sentence:", docs.len());
    let first: Vec<&str> = docs[0].sentences[0].iter().map(|t| t.surface.as_str()).collect();
    println!("  {}", first.join(" "));

    for mode in [FilterMode::Raw, FilterMode::Annotated] {
        let (vocab, corpus) = prepare_corpus(&docs, mode, 3)?;
        let sentence: Vec<&str> = corpus.documents[0].sentences[0]
            .iter()
            .map(|&i| vocab.entry(i as usize).key.as_str())
            .collect();
        println!("\n{mode}: {} types, {} tokens", vocab.len(), corpus.token_count());
        println!("  prepared: {}", sentence.join(" "));
        for e in vocab.entries().iter().take(6) {
            println!("  {:>3}  {:<14} {:?}  {}", e.index, e.key, e.kind, e.frequency);
        }
    }
    Ok(())
}
