//! Trains a small skip-gram model and runs the three intrinsic tasks:
//! relatedness, analogy (plain and typed) and categorization.
//!
//! cargo run --release --example evaluate

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use entity_embeddings::corpus::{parse_annotated, prepare_corpus, FilterMode};
use entity_embeddings::eval::{
    analogy_eval, categorization_eval, relatedness_eval, AnalogyConvention, AnalogyDataset,
    CategorizationDataset, ClusterMethod, Correlation, RelatednessDataset,
};
use entity_embeddings::sgns::{train_sgns, SgnsConfig};

fn main() -> entity_embeddings::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let docs = parse_annotated(BufReader::new(File::open(data.join("news.jsonl"))?))
        .collect::<Result<Vec<_>, _>>()?;
    let (vocab, corpus) = prepare_corpus(&docs, FilterMode::Annotated, 3)?;
    let cfg = SgnsConfig {
        dim: 32,
        epochs: 20,
        ..SgnsConfig::annotated()
    };
    let (model, _) = train_sgns(&corpus.sentences(), vocab.len(), &cfg)?;
    let emb = model.publish(&vocab.keys())?;

    let rel = RelatednessDataset::load(&data.join("relatedness.tsv"))?;
    for corr in [Correlation::Pearson, Correlation::Spearman] {
        let res = relatedness_eval(&emb, &rel, corr)?;
        println!("relatedness {corr:?}: r = {:.3} over {} pairs", res.r, res.evaluated);
    }

    let analogies = AnalogyDataset::load(&data.join("analogy.txt"))?;
    for typed in [false, true] {
        let res = analogy_eval(&emb, &analogies, typed, AnalogyConvention::AMinusB)?;
        println!(
            "analogy (typed = {typed}): {}/{} correct",
            res.correct, res.evaluated
        );
    }

    let categories = CategorizationDataset::load(&data.join("categories.tsv"))?;
    for method in [ClusterMethod::KMeans, ClusterMethod::Agglomerative] {
        let res = categorization_eval(&emb, &categories, method, 1)?;
        println!("categorization {method:?}: purity {:.3} with {} clusters", res.purity, res.clusters);
    }
    Ok(())
}
