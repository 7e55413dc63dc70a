//! Drives the command-line front end in a scratch directory: ingest,
//! build-graph, train with every method, replay, eval, neighbors and
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
    let text = ["--corpus", "corpus.cache", "--vocab", "vocab.tsv"];
    let runs: [(&str, &[&str]); 5] = [
        ("w2v", &["--epochs", "10"]),
        ("glove", &["--epochs", "50", "--x-max", "10"]),
        ("deepwalk_id", &["--walks-per-node", "10", "--epochs", "2"]),
        ("deepwalk_log", &["--walks-per-node", "10", "--epochs", "2"]),
        ("verse", &["--samples", "500"]),
    ];
    for (method, extra) in runs {
        let mut args = vec!["train", "--method", method, "--dim", "32"];
        if matches!(method, "w2v" | "glove") {
            args.extend_from_slice(&text);
        } else {
            args.extend_from_slice(&["--graph", "graph.tsv"]);
        }
        args.extend_from_slice(extra);
        entemb(&args);
    }

    entemb(&["train", "--replay", "verse.emb.manifest.json", "-o", "verse-again.emb"]);
    let same = std::fs::read("verse.emb")? == std::fs::read("verse-again.emb")?;
    println!("replayed run is byte-identical: {same}");

    let tasks = [
        format!("relatedness={}", file("relatedness.tsv")),
        format!("analogy={}", file("analogy.txt")),
        format!("categorization={}", file("categories.tsv")),
    ];
    let mut args = vec!["eval", "-m", "w2v.emb", "--typed"];
    for t in &tasks {
        args.extend_from_slice(&["--task", t]);
    }
    entemb(&args);
    entemb(&["neighbors", "-m", "deepwalk_log.emb", "@PER:Q615", "-k", "3"]);
    entemb(&["neighbors", "-m", "verse.emb", "@PER:Q76", "--type", "PER", "-k", "2"]);
    entemb(&["export-projection", "-m", "glove.emb", "--keys", &file("keys.txt")]);
    Ok(())
}
