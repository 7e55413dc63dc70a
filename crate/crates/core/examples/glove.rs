//! GloVe with AdaGrad on the raw sample text.
//!
//! cargo run --release --example glove

use std::fs::File;
use std::io::BufReader;

use entity_embeddings::cooc::accumulate_glove_counts;
use entity_embeddings::corpus::{parse_raw, prepare_corpus, FilterMode};
use entity_embeddings::eval::nearest_neighbors;
use entity_embeddings::glove::{glove_objective, train_glove, GloveConfig};

fn main() -> entity_embeddings::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/news.txt");
    let docs = parse_raw(BufReader::new(File::open(path)?))?;
    let (vocab, corpus) = prepare_corpus(&docs, FilterMode::Raw, 5)?;

    let cfg = GloveConfig {
        dim: 16,
        epochs: 500,
        x_max: 5.0,
        ..GloveConfig::default()
    };
    let matrix = accumulate_glove_counts(&corpus.documents, cfg.window, 1)?;
    let (model, stats) = train_glove(&matrix, vocab.len(), &cfg)?;
    println!(
        "{} entries, weighted cost {:.3} after {} epochs",
        matrix.len(),
        glove_objective(&model, &matrix, &cfg),
        stats.epoch_losses.len()
    );

    let emb = model.publish(&vocab.keys())?;
    for query in ["president", "striker"] {
        let found: Vec<String> = nearest_neighbors(&emb, query, 5, None)?
            .into_iter()
            .map(|n| format!("{} ({:.2})", n.key, n.cosine))
            .collect();
        println!("{query}: {}", found.join(", "));
    }
    Ok(())
}
