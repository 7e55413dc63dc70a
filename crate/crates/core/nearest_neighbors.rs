//! Top-k cosine neighbours: plain, restricted to an entity type, and for a
//! multi-word phrase composed from its word vectors.
//!
//! cargo run --release --example nearest_neighbors

use std::fs::File;
use std::io::BufReader;

use entity_embeddings::corpus::{parse_raw, prepare_corpus, EntityType, FilterMode};
use entity_embeddings::eval::{compose_multiword, extend_with_compositions, nearest_neighbors, neighbors_of_vector};
use entity_embeddings::sgns::{train_sgns, SgnsConfig};
use entity_embeddings::Embeddings;

fn show(title: &str, found: &[entity_embeddings::eval::Neighbor]) {
    println!("{title}");
    for n in found {
        println!("  {:<16} {:.3}", n.key, n.cosine);
    }
}

fn main() -> entity_embeddings::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/news.txt");
    let docs = parse_raw(BufReader::new(File::open(path)?))?;
    let (vocab, corpus) = prepare_corpus(&docs, FilterMode::Raw, 3)?;
    let cfg = SgnsConfig {
        dim: 32,
        epochs: 20,
        ..SgnsConfig::raw()
    };
    let (model, _) = train_sgns(&corpus.sentences(), vocab.len(), &cfg)?;
    let emb = model.publish(&vocab.keys())?;

    show("president:", &nearest_neighbors(&emb, "president", 3, None)?);

    let words = ["lionel", "messi"];
    let (phrase, _) = compose_multiword(&emb, &words)?;
    let exclude: Vec<usize> = words.iter().filter_map(|w| emb.index_of(w)).collect();
    show("lionel messi (composed):", &neighbors_of_vector(&emb, &phrase, 3, None, &exclude)?);

    let (extended, added) = extend_with_compositions(&emb, ["barack_obama", "angela_merkel"])?;
    println!("{added} composed keys added, {} vectors in total", extended.len());
    show("barack_obama:", &nearest_neighbors(&extended, "barack_obama", 3, None)?);

    // Entity keys carry their type, so a filter keeps only that class.
    let typed = Embeddings::from_rows(
        vec!["@PER:Q76".into(), "@PER:Q567".into(), "@LOC:Q61".into(), "senate".into()],
        &[vec![1.0, 0.1], vec![0.9, 0.2], vec![1.0, 0.0], vec![0.8, 0.3]],
    )?;
    show(
        "@PER:Q76 among persons:",
        &nearest_neighbors(&typed, "@PER:Q76", 3, Some(EntityType::Per))?,
    );
    Ok(())
}
