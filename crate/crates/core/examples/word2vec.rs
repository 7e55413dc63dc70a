//! Skip-gram with negative sampling on the annotated sample corpus.
//!
//! cargo run --release --example word2vec

use std::fs::File;
use std::io::BufReader;

use entity_embeddings::corpus::{parse_annotated, prepare_corpus, FilterMode};
use entity_embeddings::eval::nearest_neighbors;
use entity_embeddings::sgns::{train_sgns, SgnsConfig};

fn main() -> entity_embeddings::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/news.jsonl");
    let docs = parse_annotated(BufReader::new(File::open(path)?)).collect::<Result<Vec<_>, _>>()?;
    let (vocab, corpus) = prepare_corpus(&docs, FilterMode::Annotated, 3)?;

    let cfg = SgnsConfig {
        dim: 32,
        epochs: 20,
        ..SgnsConfig::annotated()
    };
    let (model, stats) = train_sgns(&corpus.sentences(), vocab.len(), &cfg)?;
    println!("epoch losses:");
    for (e, loss) in stats.epoch_losses.iter().enumerate().step_by(5) {
        println!("  {e:>2}  {loss:.4}");
    }

    let emb = model.publish(&vocab.keys())?;
    for query in ["@PER:Q76", "goal"] {
        println!("nearest to {query}:");
        for n in nearest_neighbors(&emb, query, 4, None)? {
            println!("  {:<16} {:.3}", n.key, n.cosine);
        }
    }
    Ok(())
}
