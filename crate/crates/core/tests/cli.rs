use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sample(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples/data")
        .join(name)
        .display()
        .to_string()
}

fn entemb(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entemb"))
        .args(args)
        .current_dir(dir)
        .env_remove("ENTITY_EMBED_SEED")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = entemb(dir, args);
    assert!(
        out.status.success(),
        "entemb {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Scratch directory with the sample corpus ingested and its graph built.
fn prepared() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["ingest", &sample("news.jsonl")]);
    ok(dir.path(), &["build-graph"]);
    dir
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap()
}

fn manifest(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_slice(&read(dir, name)).unwrap()
}

const SMALL: [(&str, &[&str]); 5] = [
    ("w2v", &["--corpus", "corpus.cache", "--vocab", "vocab.tsv", "--epochs", "2"]),
    ("glove", &["--corpus", "corpus.cache", "--vocab", "vocab.tsv", "--epochs", "5"]),
    ("deepwalk_id", &["--graph", "graph.tsv", "--walks-per-node", "3", "--epochs", "1"]),
    ("deepwalk_log", &["--graph", "graph.tsv", "--walks-per-node", "3", "--epochs", "1"]),
    ("verse", &["--graph", "graph.tsv", "--samples", "50"]),
];

fn train(dir: &Path, method: &str, extra: &[&str], out: &str) {
    let mut args = vec!["train", "--method", method, "--dim", "8", "-o", out];
    args.extend_from_slice(extra);
    ok(dir, &args);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(entemb(dir.path(), &[]).status.code(), Some(2));
    assert_eq!(entemb(dir.path(), &["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(entemb(dir.path(), &["train", "--method", "cbow"]).status.code(), Some(2));
    assert_eq!(entemb(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = entemb(dir.path(), &["ingest", "missing.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));

    // the annotated pipeline cannot read plain text
    let out = entemb(dir.path(), &["ingest", &sample("news.txt"), "--mode", "annotated"]);
    assert_eq!(out.status.code(), Some(1));

    ok(dir.path(), &["ingest", &sample("news.txt"), "--mode", "raw"]);
    assert_eq!(entemb(dir.path(), &["build-graph"]).status.code(), Some(1));
    assert_eq!(entemb(dir.path(), &["train", "--method", "verse"]).status.code(), Some(1));
    assert_eq!(entemb(dir.path(), &["train", "--method", "w2v"]).status.code(), Some(1));
}

#[test]
fn ingest_writes_vocabulary_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = ok(dir.path(), &["ingest", &sample("news.jsonl"), "--min-count", "3"]);
    assert!(summary.starts_with("documents=80 "));
    let vocab = String::from_utf8(read(dir.path(), "vocab.tsv")).unwrap();
    assert!(vocab.starts_with("#total_tokens="));
    assert!(vocab.lines().any(|l| l.starts_with("@PER:Q76\tENTITY\tPER\t")));
    assert!(!dir.path().join("graph.tsv").exists());
}

#[test]
fn commands_are_byte_reproducible() {
    let a = prepared();
    let b = tempfile::tempdir().unwrap();
    ok(b.path(), &["ingest", &sample("news.jsonl")]);
    ok(b.path(), &["build-graph", "--workers", "3"]);
    for name in ["vocab.tsv", "corpus.cache", "graph.tsv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    for (method, extra) in SMALL {
        for dir in [a.path(), b.path()] {
            train(dir, method, extra, &format!("{method}.emb"));
        }
        assert_eq!(
            read(a.path(), &format!("{method}.emb")),
            read(b.path(), &format!("{method}.emb")),
            "{method}"
        );
    }
}

#[test]
fn replay_reproduces_the_run() {
    let dir = prepared();
    for (method, extra) in SMALL {
        let out = format!("{method}.bin");
        train(dir.path(), method, extra, &out);
        let replayed = format!("{method}-replay.bin");
        let manifest_path = format!("{out}.manifest.json");
        ok(dir.path(), &["train", "--replay", &manifest_path, "-o", &replayed]);
        assert_eq!(read(dir.path(), &out), read(dir.path(), &replayed), "{method}");
        let m = manifest(dir.path(), &manifest_path);
        assert_eq!(m["plan"]["method"], method);
        assert_eq!(m["plan"]["binary"], true);
        assert!(m["final_loss"].as_f64().unwrap().is_finite());
    }
}

#[test]
fn seed_changes_output_and_env_supplies_default() {
    let dir = prepared();
    let verse = ["--graph", "graph.tsv", "--samples", "50"];
    train(dir.path(), "verse", &verse, "s1.emb");
    let mut seeded = verse.to_vec();
    seeded.extend_from_slice(&["--seed", "7"]);
    train(dir.path(), "verse", &seeded, "s7.emb");
    assert_ne!(read(dir.path(), "s1.emb"), read(dir.path(), "s7.emb"));

    let out = Command::new(env!("CARGO_BIN_EXE_entemb"))
        .args(["train", "--method", "verse", "--dim", "8", "-o", "env.emb"])
        .args(verse)
        .current_dir(dir.path())
        .env("ENTITY_EMBED_SEED", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(read(dir.path(), "env.emb"), read(dir.path(), "s7.emb"));
    assert_eq!(manifest(dir.path(), "env.emb.manifest.json")["plan"]["seed"], 7);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = prepared();
    fs::write(
        dir.path().join("run.toml"),
        "method = \"w2v\"\nseed = 3\n\n[paths]\ncorpus = \"corpus.cache\"\nvocab = \"vocab.tsv\"\nmodel = \"cfg.emb\"\n\n[params]\ndim = 6\nepochs = 1\nnegatives = 2\n",
    )
    .unwrap();
    ok(dir.path(), &["train", "--config", "run.toml"]);
    let m = manifest(dir.path(), "cfg.emb.manifest.json");
    assert_eq!(m["plan"]["sgns"]["dim"], 6);
    assert_eq!(m["plan"]["sgns"]["negatives"], 2);
    assert_eq!(m["plan"]["seed"], 3);

    ok(dir.path(), &["train", "--config", "run.toml", "--dim", "4", "--seed", "5"]);
    let m = manifest(dir.path(), "cfg.emb.manifest.json");
    assert_eq!(m["plan"]["sgns"]["dim"], 4);
    assert_eq!(m["plan"]["sgns"]["negatives"], 2);
    assert_eq!(m["plan"]["seed"], 5);

    ok(dir.path(), &["train", "--config", "run.toml", "--preset", "paper", "--epochs", "1"]);
    let m = manifest(dir.path(), "cfg.emb.manifest.json");
    assert_eq!(m["plan"]["sgns"]["dim"], 100);
    assert_eq!(m["plan"]["sgns"]["negatives"], 16);
    assert_eq!(m["plan"]["min_count"], 3);

    fs::write(dir.path().join("bad.toml"), "method = \"w2v\"\n[params]\nlayers = 2\n").unwrap();
    assert_eq!(entemb(dir.path(), &["train", "--config", "bad.toml"]).status.code(), Some(1));
}

#[test]
fn dump_walks_writes_one_walk_per_line() {
    let dir = prepared();
    let mut extra = SMALL[2].1.to_vec();
    extra.extend_from_slice(&["--dump-walks", "walks.txt", "--walk-length", "5"]);
    train(dir.path(), "deepwalk_id", &extra, "dw.emb");
    let walks = String::from_utf8(read(dir.path(), "walks.txt")).unwrap();
    assert_eq!(walks.lines().count(), 3 * 54);
    assert!(walks.lines().all(|l| l.split(' ').count() == 5));
}

#[test]
fn eval_neighbors_and_projection() {
    let dir = prepared();
    train(dir.path(), "verse", SMALL[4].1, "v.emb");
    let report = ok(
        dir.path(),
        &[
            "eval",
            "-m",
            "v.emb",
            "--task",
            &format!("relatedness={}", sample("relatedness.tsv")),
            "--task",
            &format!("analogy={}", sample("analogy.txt")),
            "--task",
            &format!("categorization={}", sample("categories.tsv")),
            "--typed",
            "--correlation",
            "spearman",
        ],
    );
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    let tasks = report["tasks"].as_array().unwrap();
    assert_eq!(tasks.len(), 3);
    assert!(tasks[0]["metrics"]["spearman"].is_f64());
    assert!(tasks[1]["metrics"]["typed_accuracy"].is_f64());
    assert!(tasks[2]["metrics"]["purity_kmeans"].is_f64());
    assert!(tasks[2]["metrics"]["purity_agglomerative"].is_f64());

    let listing = ok(dir.path(), &["neighbors", "-m", "v.emb", "@PER:Q76", "-k", "3", "--type", "LOC"]);
    let lines: Vec<&str> = listing.lines().collect();
    assert_eq!(lines[0], "rank\tkey\tkind\tcosine");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.split('\t').nth(2) == Some("LOC")));
    assert_eq!(entemb(dir.path(), &["neighbors", "-m", "v.emb", "nobody"]).status.code(), Some(1));

    ok(
        dir.path(),
        &["export-projection", "-m", "v.emb", "--keys", &sample("keys.txt"), "-o", "proj.tsv"],
    );
    let proj = String::from_utf8(read(dir.path(), "proj.tsv")).unwrap();
    assert_eq!(proj.lines().next(), Some("key\tpc1\tpc2"));
    assert_eq!(proj.lines().count(), 11);
}

#[test]
fn raw_pipeline_text_methods() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["ingest", &sample("news.txt"), "--mode", "raw", "--min-count", "1"]);
    train(dir.path(), "glove", SMALL[1].1, "g.emb");
    let m = manifest(dir.path(), "g.emb.manifest.json");
    assert_eq!(m["plan"]["pipeline"], "raw");
    assert_eq!(m["plan"]["min_count"], 5);
    let out = ok(dir.path(), &["neighbors", "-m", "g.emb", "--compose", "Barack Obama", "-k", "2"]);
    assert_eq!(out.lines().count(), 3);
}
