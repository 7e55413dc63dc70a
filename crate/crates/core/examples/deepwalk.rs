//! Weighted DeepWalk on the cooccurrence graph, with identity and
//! logarithmic edge weights.
//!
//! cargo run --release --example deepwalk

use std::fs::File;
use std::io::BufReader;

use entity_embeddings::cooc::{build_graph, GraphBuildConfig};
use entity_embeddings::corpus::{parse_annotated, prepare_corpus, EntityType, FilterMode};
use entity_embeddings::eval::nearest_neighbors;
use entity_embeddings::graph::{deepwalk_train, generate_walks, transition_distribution, WalkConfig, WeightNorm};
use entity_embeddings::sgns::SgnsConfig;

fn main() -> entity_embeddings::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/news.jsonl");
    let docs = parse_annotated(BufReader::new(File::open(path)?)).collect::<Result<Vec<_>, _>>()?;
    let (vocab, corpus) = prepare_corpus(&docs, FilterMode::Annotated, 1)?;
    let graph = build_graph(&corpus.documents, &vocab, &GraphBuildConfig::default(), 1)?;
    let keys = vocab.keys();
    let obama = vocab.get("@PER:Q76").expect("sample corpus mentions Q76");

    for norm in [WeightNorm::Id, WeightNorm::Log] {
        let mut dist = transition_distribution(&graph, obama, norm)?;
        dist.sort_by(|a, b| b.1.total_cmp(&a.1));
        let top: Vec<String> = dist
            .iter()
            .take(3)
            .map(|&(j, p)| format!("{} {:.3}", keys[j as usize], p))
            .collect();
        println!("{norm}: most likely steps from @PER:Q76: {}", top.join(", "));

        let walk_cfg = WalkConfig {
            walks_per_node: 20,
            weight_norm: norm,
            ..WalkConfig::default()
        };
        let walks = generate_walks(&graph, &walk_cfg, 1)?;
        let sample: Vec<&str> = walks[0].iter().map(|&i| keys[i as usize].as_str()).collect();
        println!("  {} walks, e.g. {}", walks.len(), sample.join(" -> "));

        let sgns = SgnsConfig {
            dim: 32,
            epochs: 3,
            ..SgnsConfig::deepwalk(walk_cfg.walk_length)
        };
        let (model, _) = deepwalk_train(&graph, &walk_cfg, &sgns)?;
        let emb = model.publish(&keys)?;
        let found: Vec<String> = nearest_neighbors(&emb, "@PER:Q76", 3, Some(EntityType::Per))?
            .into_iter()
            .map(|n| format!("{} ({:.2})", n.key, n.cosine))
            .collect();
        println!("  persons closest to @PER:Q76: {}", found.join(", "));
    }
    Ok(())
}
