//! Drives the command-line front end end to end in a scratch directory:
//! ingest, build-graph, train (all methods), eval, neighbors and
//! export-projection.
//!
//! cargo run --release --example cli_pipeline

use std::path::Path;
use std::process::ExitCode;

use entity_embeddings::cli::main_with_args;

fn entemb(args: &[&str]) {
    println!("\n$ entemb {}", args.join(" "));
    let code = main_with_args(std::iter::once("entemb").chain(args.iter().copied()));
    assert_eq!(code, ExitCode::SUCCESS, "command failed");
}

fn main() -> std::io::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let file = |name: &str| data.join(name).display().to_string();
    let dir = tempfile::tempdir()?;
    std::env::set_current_dir(dir.path())?;

    entemb(&["ingest", &file("news.jsonl"), "--mode", "annotated"]);
    entemb(&["build-graph"]);
    let runs: [&[&str]; 5] = [
        &["--method", "w2v", "--corpus", "corpus.cache", "--vocab", "vocab.tsv", "--epochs", "10"],
        &["--method", "glove", "--corpus", "corpus.cache", "--vocab", "vocab.tsv", "--epochs", "50", "--x-max", "10"],
        &["--method", "deepwalk_id", "--graph", "graph.tsv", "--walks-per-node", "10", "--epochs", "2"],
        &["--method", "deepwalk_log", "--graph", "graph.tsv", "--walks-per-node", "10", "--epochs", "2"],
        &["--method", "verse", "--graph", "graph.tsv", "--samples", "500"],
    ];
    for run in runs {
        let mut args = vec!["train", "--dim", "32"];
        args.extend_from_slice(run);
        entemb(&args);
    }
    entemb(&["train", "--replay", "verse.emb.manifest.json", "-o", "verse-again.emb"]);
    let same = std::fs::read("verse.emb")? == std::fs::read("verse-again.emb")?;
    println!("replayed VERSE run is byte-identical: {same}");

    let (rel, ana, cat) = (file("relatedness.tsv"), file("analogy.txt"), file("categories.tsv"));
    entemb(&[
        "eval",
        "-m",
        "w2v.emb",
        "--task",
        &format!("relatedness={rel}"),
        "--task",
        &format!("analogy={ana}"),
        "--task",
        &format!("categorization={cat}"),
        "--typed",
    ]);
    entemb(&["neighbors", "-m", "deepwalk_log.emb", "@PER:Q615", "-k", "3"]);
    entemb(&["neighbors", "-m", "verse.emb", "@PER:Q76", "--type", "PER", "-k", "2"]);
    entemb(&["export-projection", "-m", "glove.emb", "--keys", &file("keys.txt")]);
    Ok(())
}
