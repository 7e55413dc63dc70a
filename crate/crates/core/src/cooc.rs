//! Windowed cooccurrence counts (GloVe input) and the weighted term/entity
//! cooccurrence graph (node-embedding input).
//!
//! Both are accumulated as integer histograms over distance, keyed by the
//! unordered index pair. Shards merge by integer addition and weights are
//! only formed in [`CoocCounts::finish`], so sharded and single-pass builds
//! produce identical floating-point values.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::corpus::{IndexedDocument, Vocabulary};
use crate::error::{parse_error, Error, Result};

/// Per-pair counts indexed by distance slot.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoocCounts {
    pairs: HashMap<(u32, u32), SmallVec<[u64; 4]>>,
}

impl CoocCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one cooccurrence of `a` and `b` at distance slot `slot`.
    /// Self pairs are ignored.
    pub fn add(&mut self, a: u32, b: u32, slot: usize) {
        if a == b {
            return;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        let hist = self.pairs.entry(key).or_default();
        if hist.len() <= slot {
            hist.resize(slot + 1, 0);
        }
        hist[slot] += 1;
    }

    pub fn merge(&mut self, other: CoocCounts) {
        for (key, hist) in other.pairs {
            let mine = self.pairs.entry(key).or_default();
            if mine.len() < hist.len() {
                mine.resize(hist.len(), 0);
            }
            for (m, h) in mine.iter_mut().zip(hist) {
                *m += h;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Converts histograms into weights `sum_slot count * weight(slot)`,
    /// summed in ascending slot order. Pairs with weight not above zero or
    /// below `floor` are dropped.
    pub fn finish(&self, weight: impl Fn(usize) -> f64, floor: f64) -> CoocMatrix {
        let mut entries = BTreeMap::new();
        for (&key, hist) in &self.pairs {
            let mut w = 0.0;
            for (slot, &count) in hist.iter().enumerate() {
                if count > 0 {
                    w += count as f64 * weight(slot);
                }
            }
            if w > 0.0 && w >= floor {
                entries.insert(key, w);
            }
        }
        CoocMatrix { entries }
    }
}

/// Symmetric sparse matrix without diagonal, stored once per unordered pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoocMatrix {
    entries: BTreeMap<(u32, u32), f64>,
}

impl CoocMatrix {
    pub fn get(&self, i: u32, j: u32) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.entries.get(&key).copied().unwrap_or(0.0)
    }

    /// Number of unordered nonzero pairs.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Unordered pairs `(i, j, x)` with `i < j`, in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &x)| (i, j, x))
    }

    /// Both orientations of every pair.
    pub fn iter_symmetric(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.iter().flat_map(|(i, j, x)| [(i, j, x), (j, i, x)])
    }

    /// Largest index referenced plus one.
    pub fn dimension(&self) -> usize {
        self.entries
            .keys()
            .map(|&(_, j)| j as usize + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, u32, f64)>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, j, x) in pairs {
            if i == j || !(x > 0.0) || !x.is_finite() {
                return Err(Error::Validation(format!(
                    "invalid cooccurrence entry ({i}, {j}, {x})"
                )));
            }
            let key = if i < j { (i, j) } else { (j, i) };
            *entries.entry(key).or_insert(0.0) += x;
        }
        Ok(CoocMatrix { entries })
    }

    /// Writes the edge-list TSV, one line per unordered pair.
    pub fn write_tsv<W: Write>(&self, keys: &[String], w: W) -> Result<()> {
        let nodes = self.node_count();
        write_edge_tsv(keys, nodes, self.iter(), w)
    }

    fn node_count(&self) -> usize {
        let mut seen: Vec<u32> = self.entries.keys().flat_map(|&(i, j)| [i, j]).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

fn write_edge_tsv<W: Write>(
    keys: &[String],
    nodes: usize,
    edges: impl Iterator<Item = (u32, u32, f64)>,
    mut w: W,
) -> Result<()> {
    let mut lines: Vec<(&str, &str, f64)> = edges
        .map(|(i, j, x)| {
            let (a, b) = (keys[i as usize].as_str(), keys[j as usize].as_str());
            if a < b {
                (a, b, x)
            } else {
                (b, a, x)
            }
        })
        .collect();
    lines.sort_by(|l, r| (l.0, l.1).cmp(&(r.0, r.1)));
    writeln!(w, "#nodes={} edges={}", nodes, lines.len())?;
    for (a, b, x) in lines {
        writeln!(w, "{a}\t{b}\t{x}")?;
    }
    Ok(())
}

/// Accumulates windowed counts: each pair of positions at token distance
/// `1 <= d <= window` inside a sentence contributes `1/d`.
pub fn glove_counts(docs: &[IndexedDocument], window: usize) -> CoocCounts {
    let mut counts = CoocCounts::new();
    for sentence in docs.iter().flat_map(|d| &d.sentences) {
        for (p, &a) in sentence.iter().enumerate() {
            for (d, &b) in sentence[p + 1..].iter().take(window).enumerate() {
                counts.add(a, b, d + 1);
            }
        }
    }
    counts
}

/// Harmonic-weighted cooccurrence matrix over `window` tokens, built on
/// `workers` document shards.
pub fn accumulate_glove_counts(
    docs: &[IndexedDocument],
    window: usize,
    workers: usize,
) -> Result<CoocMatrix> {
    if window == 0 {
        return Err(Error::Config("window must be >= 1".into()));
    }
    let counts = sharded(docs, workers, |shard| glove_counts(shard, window));
    Ok(counts.finish(|d| 1.0 / d as f64, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Decay {
    /// `1 / (1 + d)`
    #[default]
    Harmonic,
    /// `exp(-d)`
    Exponential,
}

impl Decay {
    pub fn weight(self, distance: usize) -> f64 {
        match self {
            Decay::Harmonic => 1.0 / (1.0 + distance as f64),
            Decay::Exponential => (-(distance as f64)).exp(),
        }
    }
}

impl FromStr for Decay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "harmonic" => Ok(Decay::Harmonic),
            "exp" | "exponential" => Ok(Decay::Exponential),
            other => Err(Error::Config(format!("unknown decay `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphBuildConfig {
    /// Sentences spanned by entity-entity cooccurrences (1 = same sentence).
    pub entity_window: usize,
    pub decay: Decay,
    /// Edges with total weight below this are pruned.
    pub min_weight: f64,
}

impl Default for GraphBuildConfig {
    fn default() -> Self {
        GraphBuildConfig {
            entity_window: 5,
            decay: Decay::Harmonic,
            min_weight: 0.0,
        }
    }
}

impl GraphBuildConfig {
    pub fn validate(&self) -> Result<()> {
        if self.entity_window == 0 {
            return Err(Error::Config("entity_window must be >= 1".into()));
        }
        if !(self.min_weight >= 0.0) {
            return Err(Error::Config("min_weight must be >= 0".into()));
        }
        Ok(())
    }
}

/// Counts per mention pair and sentence distance: every pair inside a
/// sentence at distance 0, entity pairs also across up to
/// `entity_window - 1` following sentences.
pub fn graph_counts(
    docs: &[IndexedDocument],
    is_entity: &[bool],
    entity_window: usize,
) -> CoocCounts {
    let mut counts = CoocCounts::new();
    for doc in docs {
        let entities: Vec<Vec<u32>> = doc
            .sentences
            .iter()
            .map(|s| {
                s.iter()
                    .copied()
                    .filter(|&i| is_entity[i as usize])
                    .collect()
            })
            .collect();
        for (s, sentence) in doc.sentences.iter().enumerate() {
            for (p, &a) in sentence.iter().enumerate() {
                for &b in &sentence[p + 1..] {
                    counts.add(a, b, 0);
                }
            }
            for d in 1..entity_window {
                let Some(later) = entities.get(s + d) else {
                    break;
                };
                for &a in &entities[s] {
                    for &b in later {
                        counts.add(a, b, d);
                    }
                }
            }
        }
    }
    counts
}

/// Builds the cooccurrence graph over all vocabulary indices.
pub fn build_graph(
    docs: &[IndexedDocument],
    vocab: &Vocabulary,
    cfg: &GraphBuildConfig,
    workers: usize,
) -> Result<CoocGraph> {
    cfg.validate()?;
    let is_entity: Vec<bool> = (0..vocab.len()).map(|i| vocab.is_entity(i)).collect();
    let counts = sharded(docs, workers, |shard| {
        graph_counts(shard, &is_entity, cfg.entity_window)
    });
    let decay = cfg.decay;
    let matrix = counts.finish(|d| decay.weight(d), cfg.min_weight);
    Ok(CoocGraph::from_matrix(vocab.len(), &matrix))
}

fn sharded<F>(docs: &[IndexedDocument], workers: usize, count: F) -> CoocCounts
where
    F: Fn(&[IndexedDocument]) -> CoocCounts + Sync,
{
    let workers = workers.max(1);
    if workers == 1 || docs.len() < 2 {
        return count(docs);
    }
    let chunk = docs.len().div_ceil(workers);
    let parts: Vec<CoocCounts> = std::thread::scope(|scope| {
        let handles: Vec<_> = docs
            .chunks(chunk)
            .map(|shard| scope.spawn(|| count(shard)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("cooccurrence worker panicked"))
            .collect()
    });
    let mut total = CoocCounts::new();
    for part in parts {
        total.merge(part);
    }
    total
}

/// Undirected weighted graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct CoocGraph {
    adjacency: Vec<Vec<(u32, f64)>>,
}

impl CoocGraph {
    pub fn from_matrix(n_nodes: usize, matrix: &CoocMatrix) -> Self {
        let mut adjacency = vec![Vec::new(); n_nodes.max(matrix.dimension())];
        for (i, j, w) in matrix.iter() {
            adjacency[i as usize].push((j, w));
            adjacency[j as usize].push((i, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(j, _)| j);
        }
        CoocGraph { adjacency }
    }

    /// Builds from undirected edges; duplicate edges add their weights.
    pub fn from_edges(
        n_nodes: usize,
        edges: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Result<Self> {
        let matrix = CoocMatrix::from_pairs(edges)?;
        Ok(Self::from_matrix(n_nodes, &matrix))
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Each undirected edge counted once.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[(u32, f64)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let list = &self.adjacency[i];
        list.binary_search_by_key(&(j as u32), |&(n, _)| n)
            .ok()
            .map(|p| list[p].1)
    }

    /// Nodes with at least one edge.
    pub fn connected_nodes(&self) -> Vec<u32> {
        (0..self.adjacency.len() as u32)
            .filter(|&i| !self.adjacency[i as usize].is_empty())
            .collect()
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, list)| {
            list.iter()
                .filter(move |&&(j, _)| (i as u32) < j)
                .map(move |&(j, w)| (i as u32, j, w))
        })
    }

    /// Edge-list TSV: header `#nodes=<n> edges=<m>` where `n` counts nodes
    /// with at least one edge, then `src<TAB>dst<TAB>weight` with
    /// `src < dst`, sorted.
    pub fn write_tsv<W: Write>(&self, keys: &[String], w: W) -> Result<()> {
        write_edge_tsv(keys, self.connected_nodes().len(), self.edges(), w)
    }

    /// Reads an edge-list TSV. Node indices follow the sorted order of the
    /// keys that appear in the file.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<(Vec<String>, CoocGraph)> {
        let mut raw = Vec::new();
        let mut declared_nodes = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = i + 1;
            if let Some(header) = line.strip_prefix("#nodes=") {
                declared_nodes = header
                    .split_whitespace()
                    .next()
                    .and_then(|n| n.parse::<usize>().ok());
                continue;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(parse_error(line_no, "expected src<TAB>dst<TAB>weight"));
            }
            let w: f64 = cols[2]
                .parse()
                .map_err(|_| parse_error(line_no, format!("bad weight `{}`", cols[2])))?;
            if !(w > 0.0) || !w.is_finite() || cols[0] == cols[1] {
                return Err(parse_error(line_no, "edge weight must be positive, no self loops"));
            }
            raw.push((cols[0].to_string(), cols[1].to_string(), w));
        }
        let mut keys: Vec<String> = raw
            .iter()
            .flat_map(|(a, b, _)| [a.clone(), b.clone()])
            .collect();
        keys.sort();
        keys.dedup();
        if let Some(n) = declared_nodes {
            if n != keys.len() {
                log::warn!("graph header declares {n} nodes, edge list has {}", keys.len());
            }
        }
        let index: HashMap<&str, u32> = keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.as_str(), i as u32))
            .collect();
        let edges: Vec<(u32, u32, f64)> = raw
            .iter()
            .map(|(a, b, w)| (index[a.as_str()], index[b.as_str()], *w))
            .collect();
        let graph = CoocGraph::from_edges(keys.len(), edges)?;
        Ok((keys, graph))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub connected_nodes: usize,
    pub edges: usize,
    /// Edge-weight quantiles at 0, 0.25, 0.5, 0.75 and 1 (nearest rank).
    pub weight_quantiles: Option<[f64; 5]>,
}

pub fn graph_stats(g: &CoocGraph) -> GraphStats {
    let mut weights: Vec<f64> = g.edges().map(|(_, _, w)| w).collect();
    weights.sort_by(f64::total_cmp);
    let weight_quantiles = (!weights.is_empty()).then(|| {
        let q = |p: f64| weights[((weights.len() - 1) as f64 * p).round() as usize];
        [q(0.0), q(0.25), q(0.5), q(0.75), q(1.0)]
    });
    GraphStats {
        nodes: g.node_count(),
        connected_nodes: g.connected_nodes().len(),
        edges: weights.len(),
        weight_quantiles,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(sentences: &[&[u32]]) -> IndexedDocument {
        IndexedDocument {
            id: "d".into(),
            sentences: sentences.iter().map(|s| s.to_vec()).collect(),
        }
    }

    #[test]
    fn adjacent_pair_counts_one() {
        let m = accumulate_glove_counts(&[doc(&[&[0, 1]])], 10, 1).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(1, 0), 1.0);
    }

    #[test]
    fn distance_two_counts_half() {
        let m = accumulate_glove_counts(&[doc(&[&[0, 2, 1]])], 10, 1).unwrap();
        assert_eq!(m.get(0, 1), 0.5);
    }

    #[test]
    fn pairs_beyond_window_do_not_count() {
        let mut s: Vec<u32> = vec![0];
        s.extend(std::iter::repeat_n(2, 10));
        s.push(1);
        let m = accumulate_glove_counts(&[doc(&[&s])], 10, 1).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        let m = accumulate_glove_counts(&[doc(&[&s])], 11, 1).unwrap();
        assert_eq!(m.get(0, 1), 1.0 / 11.0);
    }

    #[test]
    fn glove_counts_stay_inside_sentences() {
        let m = accumulate_glove_counts(&[doc(&[&[0], &[1]])], 10, 1).unwrap();
        assert!(m.is_empty());
    }

    fn entity_flags(n: usize, entities: &[u32]) -> Vec<bool> {
        (0..n as u32).map(|i| entities.contains(&i)).collect()
    }

    #[test]
    fn term_pair_in_sentence_gets_unit_weight() {
        let counts = graph_counts(&[doc(&[&[0, 1]])], &entity_flags(2, &[]), 5);
        let g = CoocGraph::from_matrix(2, &counts.finish(|d| Decay::Harmonic.weight(d), 0.0));
        assert_eq!(g.weight(0, 1), Some(1.0));
    }

    #[test]
    fn entity_pair_three_sentences_apart() {
        let d = doc(&[&[0], &[], &[], &[1]]);
        let counts = graph_counts(&[d], &entity_flags(2, &[0, 1]), 5);
        let g = CoocGraph::from_matrix(2, &counts.finish(|d| Decay::Harmonic.weight(d), 0.0));
        assert_eq!(g.weight(0, 1), Some(0.25));
    }

    #[test]
    fn term_pairs_do_not_cross_sentences() {
        let d = doc(&[&[0], &[1]]);
        let counts = graph_counts(&[d], &entity_flags(2, &[0]), 5);
        assert!(counts.is_empty());
    }

    #[test]
    fn window_one_keeps_entities_in_sentence() {
        let d = doc(&[&[0], &[1]]);
        assert!(graph_counts(std::slice::from_ref(&d), &entity_flags(2, &[0, 1]), 1).is_empty());
        assert_eq!(graph_counts(&[d], &entity_flags(2, &[0, 1]), 2).len(), 1);
    }

    #[test]
    fn stats_of_small_graphs() {
        let triangle = CoocGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let s = graph_stats(&triangle);
        assert_eq!((s.nodes, s.edges), (3, 3));

        let empty = CoocGraph::from_edges(0, []).unwrap();
        let s = graph_stats(&empty);
        assert_eq!((s.nodes, s.edges), (0, 0));
        assert_eq!(s.weight_quantiles, None);

        let star =
            CoocGraph::from_edges(5, (1..5).map(|leaf| (0, leaf, leaf as f64))).unwrap();
        let s = graph_stats(&star);
        assert_eq!((s.nodes, s.edges), (5, 4));
        assert_eq!(s.weight_quantiles, Some([1.0, 2.0, 3.0, 3.0, 4.0]));
    }

    #[test]
    fn floor_prunes_light_edges() {
        let d = doc(&[&[0, 1], &[], &[2]]);
        let counts = graph_counts(&[d], &entity_flags(3, &[0, 2]), 5);
        let kept = counts.finish(|d| Decay::Harmonic.weight(d), 0.5);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept.get(0, 1), 1.0);
    }

    #[test]
    fn graph_tsv_round_trip() {
        let keys: Vec<String> = ["b", "a", "@LOC:Q1"].iter().map(|s| s.to_string()).collect();
        let g = CoocGraph::from_edges(3, [(0, 1, 1.5), (1, 2, 0.25)]).unwrap();
        let mut buf = Vec::new();
        g.write_tsv(&keys, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "#nodes=3 edges=2\n@LOC:Q1\ta\t0.25\na\tb\t1.5\n");
        let (read_keys, back) = CoocGraph::read_tsv(buf.as_slice()).unwrap();
        assert_eq!(read_keys, ["@LOC:Q1", "a", "b"]);
        assert_eq!(back.weight(0, 1), Some(0.25));
        assert_eq!(back.weight(1, 2), Some(1.5));
    }
}
