//! Node embeddings of the cooccurrence graph: DeepWalk over weighted random
//! walks and VERSE with adjacency similarity.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cooc::CoocGraph;
use crate::error::{Error, Result};
use crate::model::{EmbeddingModel, TrainStats};
use crate::sgns::{train_sgns, SgnsConfig, MIN_LR_FRACTION};
use crate::vecmath::{axpy, dot, neg_log_sigmoid, sigmoid, SharedRows};

/// Transform applied to edge weights before normalising transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightNorm {
    /// Weights as they are.
    #[default]
    Id,
    /// `ln(1 + w)`.
    Log,
}

impl WeightNorm {
    #[inline]
    pub fn apply(self, w: f64) -> f64 {
        match self {
            WeightNorm::Id => w,
            WeightNorm::Log => w.ln_1p(),
        }
    }
}

impl fmt::Display for WeightNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightNorm::Id => "id",
            WeightNorm::Log => "log",
        })
    }
}

impl FromStr for WeightNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "id" => Ok(WeightNorm::Id),
            "log" => Ok(WeightNorm::Log),
            other => Err(Error::Config(format!("unknown weight normalization `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub weight_norm: WeightNorm,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 100,
            walk_length: 4,
            weight_norm: WeightNorm::Id,
            seed: 1,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_length < 2 {
            return Err(Error::Config("walk_length must be >= 2".into()));
        }
        if self.walks_per_node == 0 {
            return Err(Error::Config("walks_per_node must be >= 1".into()));
        }
        Ok(())
    }
}

/// Probability of stepping from `i` to each neighbour, proportional to the
/// normalised edge weight.
pub fn transition_distribution(
    g: &CoocGraph,
    i: usize,
    norm: WeightNorm,
) -> Result<Vec<(u32, f64)>> {
    let neighbors = g.neighbors(i);
    if neighbors.is_empty() {
        return Err(Error::IsolatedNode(i));
    }
    let total: f64 = neighbors.iter().map(|&(_, w)| norm.apply(w)).sum();
    Ok(neighbors
        .iter()
        .map(|&(j, w)| (j, norm.apply(w) / total))
        .collect())
}

/// Precomputed cumulative transition tables for every node.
#[derive(Debug, Clone)]
pub struct WalkSampler {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    cdf: Vec<f64>,
}

impl WalkSampler {
    pub fn new(g: &CoocGraph, norm: WeightNorm) -> Self {
        let mut offsets = Vec::with_capacity(g.node_count() + 1);
        let mut targets = Vec::new();
        let mut cdf = Vec::new();
        offsets.push(0);
        for i in 0..g.node_count() {
            let neighbors = g.neighbors(i);
            let total: f64 = neighbors.iter().map(|&(_, w)| norm.apply(w)).sum();
            let mut acc = 0.0;
            for &(j, w) in neighbors {
                acc += norm.apply(w);
                targets.push(j);
                cdf.push(acc / total);
            }
            if let Some(last) = cdf.last_mut().filter(|_| !neighbors.is_empty()) {
                *last = 1.0;
            }
            offsets.push(targets.len());
        }
        WalkSampler {
            offsets,
            targets,
            cdf,
        }
    }

    /// Next node after `i`, or `None` for an isolated node.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Option<u32> {
        let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
        if lo == hi {
            return None;
        }
        let u: f64 = rng.gen();
        let k = self.cdf[lo..hi].partition_point(|&c| c <= u).min(hi - lo - 1);
        Some(self.targets[lo + k])
    }

    /// Walk of up to `length` nodes starting at `start`.
    pub fn walk<R: Rng + ?Sized>(&self, start: u32, length: usize, rng: &mut R) -> Vec<u32> {
        let mut walk = Vec::with_capacity(length);
        walk.push(start);
        while walk.len() < length {
            match self.step(*walk.last().unwrap() as usize, rng) {
                Some(next) => walk.push(next),
                None => break,
            }
        }
        walk
    }
}

/// A single weighted random walk of `cfg.walk_length` nodes.
pub fn random_walk<R: Rng + ?Sized>(
    g: &CoocGraph,
    start: usize,
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<Vec<u32>> {
    if g.degree(start) == 0 {
        return Err(Error::IsolatedNode(start));
    }
    let mut walk = vec![start as u32];
    while walk.len() < cfg.walk_length {
        let current = *walk.last().unwrap() as usize;
        let dist = transition_distribution(g, current, cfg.weight_norm)?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut next = dist.last().unwrap().0;
        for &(j, p) in &dist {
            acc += p;
            if u < acc {
                next = j;
                break;
            }
        }
        walk.push(next);
    }
    Ok(walk)
}

fn walk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `walks_per_node` rounds; each round starts one walk at every node with
/// an edge, in a freshly shuffled order. Every walk draws from its own
/// stream keyed by round and start node, so the output does not depend on
/// `workers`.
pub fn generate_walks(g: &CoocGraph, cfg: &WalkConfig, workers: usize) -> Result<Vec<Vec<u32>>> {
    cfg.validate()?;
    let starts = g.connected_nodes();
    if starts.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let sampler = WalkSampler::new(g, cfg.weight_norm);
    let n = g.node_count() as u64;
    let mut order_rng = walk_rng(cfg.seed, u64::MAX);
    let mut jobs: Vec<(u64, u32)> = Vec::with_capacity(starts.len() * cfg.walks_per_node);
    for round in 0..cfg.walks_per_node as u64 {
        let mut order = starts.clone();
        order.shuffle(&mut order_rng);
        jobs.extend(order.into_iter().map(|s| (round, s)));
    }
    let run = |jobs: &[(u64, u32)]| -> Vec<Vec<u32>> {
        jobs.iter()
            .map(|&(round, s)| {
                let mut rng = walk_rng(cfg.seed, round * n + s as u64);
                sampler.walk(s, cfg.walk_length, &mut rng)
            })
            .collect()
    };
    let workers = workers.max(1);
    if workers == 1 {
        return Ok(run(&jobs));
    }
    let chunk = jobs.len().div_ceil(workers);
    Ok(std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| scope.spawn(move || run(part)))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("walk worker panicked"))
            .collect()
    }))
}

/// Writes walks one per line as space-separated node keys.
pub fn write_walks<W: std::io::Write>(walks: &[Vec<u32>], keys: &[String], mut w: W) -> Result<()> {
    for walk in walks {
        let line: Vec<&str> = walk.iter().map(|&i| keys[i as usize].as_str()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// DeepWalk: weighted walks fed to the skip-gram trainer as sentences.
pub fn deepwalk_train(
    g: &CoocGraph,
    wcfg: &WalkConfig,
    scfg: &SgnsConfig,
) -> Result<(EmbeddingModel, TrainStats)> {
    let walks = generate_walks(g, wcfg, scfg.workers)?;
    train_sgns(&walks, g.node_count(), scfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerseConfig {
    pub dim: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    /// Sampling rounds per node.
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    /// Draw positives proportional to edge weight instead of uniformly.
    pub weighted: bool,
}

impl Default for VerseConfig {
    fn default() -> Self {
        VerseConfig {
            dim: 100,
            negatives: 16,
            learning_rate: 0.025,
            samples: 50_000,
            seed: 1,
            workers: 1,
            weighted: false,
        }
    }
}

impl VerseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be > 0".into()));
        }
        if self.negatives == 0 {
            return Err(Error::Config("negatives must be >= 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

/// Adjacency similarity of node `i`: `1/out(i)` for every neighbour.
pub fn verse_similarity_row(g: &CoocGraph, i: usize) -> Result<Vec<(u32, f64)>> {
    let neighbors = g.neighbors(i);
    if neighbors.is_empty() {
        return Err(Error::IsolatedNode(i));
    }
    let p = 1.0 / neighbors.len() as f64;
    Ok(neighbors.iter().map(|&(j, _)| (j, p)).collect())
}

/// Loss of one round on the single table `θ`:
/// `-log σ(θ_u·θ_v) - Σ_k log σ(-θ_u·θ_{n_k})`.
pub fn verse_round_loss(model: &EmbeddingModel, u: u32, v: u32, negatives: &[u32]) -> f64 {
    let h = model.center_row(u as usize);
    let mut loss = neg_log_sigmoid(dot(h, model.center_row(v as usize)));
    for &n in negatives {
        loss += neg_log_sigmoid(-dot(h, model.center_row(n as usize)));
    }
    loss
}

#[derive(Default)]
struct Scratch {
    hu: Vec<f64>,
    grad: Vec<f64>,
    targets: Vec<(u32, f64)>,
}

/// Exact gradient step on the round loss. `u` may coincide with `v` or a
/// negative; all terms are evaluated at the pre-update table.
fn verse_update(
    table: &SharedRows<'_>,
    u: u32,
    v: u32,
    negatives: &[u32],
    lr: f64,
    s: &mut Scratch,
) -> f64 {
    // SAFETY: rows are borrowed one at a time within this thread.
    s.hu.clear();
    s.hu.extend_from_slice(unsafe { table.row(u as usize) });
    s.targets.clear();
    let f = dot(&s.hu, unsafe { table.row(v as usize) });
    let mut loss = neg_log_sigmoid(f);
    s.targets.push((v, 1.0 - sigmoid(f)));
    for &n in negatives {
        let f = dot(&s.hu, unsafe { table.row(n as usize) });
        loss += neg_log_sigmoid(-f);
        s.targets.push((n, -sigmoid(f)));
    }
    s.grad.clear();
    s.grad.resize(s.hu.len(), 0.0);
    for &(t, g) in &s.targets {
        axpy(g, unsafe { table.row(t as usize) }, &mut s.grad);
    }
    for &(t, g) in &s.targets {
        axpy(lr * g, &s.hu, unsafe { table.row(t as usize) });
    }
    axpy(lr, &s.grad, unsafe { table.row(u as usize) });
    loss
}

/// One round with explicit nodes. Returns the loss before the update.
pub fn verse_step_with_negatives(
    model: &mut EmbeddingModel,
    u: u32,
    v: u32,
    negatives: &[u32],
    lr: f64,
) -> Result<f64> {
    let n = model.len();
    if [u, v].iter().chain(negatives).any(|&i| i as usize >= n) {
        return Err(Error::Validation(format!("node index out of range for {n} nodes")));
    }
    let dim = model.dim();
    let table = SharedRows::new(&mut model.center, dim);
    let loss = verse_update(&table, u, v, negatives, lr, &mut Scratch::default());
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            loss,
            context: format!("VERSE round ({u}, {v})"),
        });
    }
    Ok(loss)
}

/// Parameters initialised uniform in `[-0.5/d, 0.5/d]`.
pub fn verse_init<R: Rng>(n: usize, dim: usize, rng: &mut R) -> EmbeddingModel {
    let mut model = EmbeddingModel::zeros(n, dim);
    let scale = 1.0 / dim as f64;
    for v in &mut model.center {
        *v = (rng.gen::<f64>() - 0.5) * scale;
    }
    model
}

/// VERSE with adjacency similarity and uniform noise nodes.
///
/// Runs `samples × |V|` rounds over the nodes that have edges; the learning
/// rate decays linearly to `MIN_LR_FRACTION` of its initial value. Loss is
/// reported as the mean over each of up to 100 equal blocks of rounds.
pub fn verse_train(g: &CoocGraph, cfg: &VerseConfig) -> Result<(EmbeddingModel, TrainStats)> {
    cfg.validate()?;
    let nodes = g.connected_nodes();
    if nodes.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = verse_init(g.node_count(), cfg.dim, &mut rng);
    let positives = WalkSampler::new(g, WeightNorm::Id);

    let total = cfg.samples as u64 * nodes.len() as u64;
    let blocks = total.min(100);
    let block_len = total.div_ceil(blocks);
    let workers = cfg.workers.max(1) as u64;
    let done = AtomicU64::new(0);
    let dim = cfg.dim;
    let mut stats = TrainStats::default();
    let mut rngs: Vec<ChaCha8Rng> = (0..workers).map(|w| walk_rng(cfg.seed, 1 + w)).collect();

    let mut start = 0;
    while start < total {
        let len = block_len.min(total - start);
        let table = SharedRows::new(&mut model.center, dim);
        let run = |rounds: u64, rng: &mut ChaCha8Rng| -> Result<f64> {
            let mut scratch = Scratch::default();
            let mut negatives = vec![0u32; cfg.negatives];
            let mut loss_sum = 0.0;
            for _ in 0..rounds {
                let progress = done.fetch_add(1, Ordering::Relaxed) as f64 / total as f64;
                let lr = cfg.learning_rate * (1.0 - progress).max(MIN_LR_FRACTION);
                let u = nodes[rng.gen_range(0..nodes.len())];
                let v = if cfg.weighted {
                    positives.step(u as usize, rng).unwrap()
                } else {
                    let nb = g.neighbors(u as usize);
                    nb[rng.gen_range(0..nb.len())].0
                };
                for n in negatives.iter_mut() {
                    *n = nodes[rng.gen_range(0..nodes.len())];
                }
                let loss = verse_update(&table, u, v, &negatives, lr, &mut scratch);
                if !loss.is_finite() {
                    return Err(Error::NonFinite {
                        loss,
                        context: format!("VERSE round ({u}, {v}), lr {lr}"),
                    });
                }
                loss_sum += loss;
            }
            Ok(loss_sum)
        };
        let sum: f64 = if workers == 1 {
            run(len, &mut rngs[0])?
        } else {
            let share = len.div_ceil(workers);
            let results: Vec<Result<f64>> = std::thread::scope(|scope| {
                let handles: Vec<_> = rngs
                    .iter_mut()
                    .enumerate()
                    .map(|(w, rng)| {
                        let rounds = share.min(len.saturating_sub(w as u64 * share));
                        let run = &run;
                        scope.spawn(move || run(rounds, rng))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("VERSE worker panicked"))
                    .collect()
            });
            let mut sum = 0.0;
            for r in results {
                sum += r?;
            }
            sum
        };
        stats.epoch_losses.push(sum / len as f64);
        stats.updates += len;
        start += len;
    }
    Ok((model, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecmath::norm;

    fn star(weights: &[f64]) -> CoocGraph {
        let edges = weights
            .iter()
            .enumerate()
            .map(|(k, &w)| (0, k as u32 + 1, w));
        CoocGraph::from_edges(weights.len() + 1, edges).unwrap()
    }

    fn barbell(k: u32) -> CoocGraph {
        let mut edges = Vec::new();
        for offset in [0, k] {
            for i in 0..k {
                for j in i + 1..k {
                    edges.push((offset + i, offset + j, 1.0));
                }
            }
        }
        edges.push((k - 1, k, 1.0));
        CoocGraph::from_edges(2 * k as usize, edges).unwrap()
    }

    fn cos(a: &[f64], b: &[f64]) -> f64 {
        dot(a, b) / (norm(a) * norm(b))
    }

    fn intra_minus_inter(model: &EmbeddingModel, k: usize) -> f64 {
        let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
        for i in 0..2 * k {
            for j in i + 1..2 * k {
                let c = cos(model.center_row(i), model.center_row(j));
                if (i < k) == (j < k) {
                    intra += c;
                    ni += 1;
                } else {
                    inter += c;
                    nx += 1;
                }
            }
        }
        intra / ni as f64 - inter / nx as f64
    }

    #[test]
    fn transition_examples() {
        let p = transition_distribution(&star(&[2.0, 2.0]), 0, WeightNorm::Id).unwrap();
        assert_eq!(p, [(1, 0.5), (2, 0.5)]);
        let p = transition_distribution(&star(&[1.0, 3.0]), 0, WeightNorm::Id).unwrap();
        assert_eq!(p, [(1, 0.25), (2, 0.75)]);
        let e1 = std::f64::consts::E - 1.0;
        let p = transition_distribution(&star(&[e1, e1]), 0, WeightNorm::Log).unwrap();
        assert!((p[0].1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn isolated_node_is_an_error() {
        let g = CoocGraph::from_edges(3, [(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            transition_distribution(&g, 2, WeightNorm::Id),
            Err(Error::IsolatedNode(2))
        ));
        assert!(verse_similarity_row(&g, 2).is_err());
    }

    #[test]
    fn forced_walks() {
        let g = CoocGraph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = WalkConfig { walk_length: 2, ..WalkConfig::default() };
        assert_eq!(random_walk(&g, 0, &cfg, &mut rng).unwrap(), [0, 1]);
        let cfg = WalkConfig { walk_length: 4, ..cfg };
        assert_eq!(random_walk(&g, 0, &cfg, &mut rng).unwrap(), [0, 1, 0, 1]);
        let sampler = WalkSampler::new(&g, WeightNorm::Id);
        assert_eq!(sampler.walk(1, 4, &mut rng), [1, 0, 1, 0]);
    }

    #[test]
    fn empirical_steps_match_distribution() {
        let sampler = WalkSampler::new(&star(&[1.0, 3.0]), WeightNorm::Id);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let hits = (0..n).filter(|_| sampler.step(0, &mut rng) == Some(2)).count();
        assert!((hits as f64 / n as f64 - 0.75).abs() < 0.01);
    }

    #[test]
    fn walks_stay_in_components_and_follow_edges() {
        let g = CoocGraph::from_edges(
            6,
            [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 3.0)],
        )
        .unwrap();
        let cfg = WalkConfig { walks_per_node: 20, ..WalkConfig::default() };
        let walks = generate_walks(&g, &cfg, 1).unwrap();
        assert_eq!(walks.len(), 6 * 20);
        for walk in &walks {
            assert_eq!(walk.len(), 4);
            let side = walk[0] < 3;
            for pair in walk.windows(2) {
                assert!(g.weight(pair[0] as usize, pair[1] as usize).is_some());
                assert_eq!(pair[1] < 3, side);
            }
        }
        assert_eq!(walks, generate_walks(&g, &cfg, 3).unwrap());
    }

    #[test]
    fn similarity_rows_are_uniform() {
        let row = verse_similarity_row(&star(&[1.0, 5.0, 2.0, 9.0]), 0).unwrap();
        assert!(row.iter().all(|&(_, p)| p == 0.25));
        assert_eq!(verse_similarity_row(&star(&[4.0]), 1).unwrap(), [(0, 1.0)]);
    }

    #[test]
    fn round_loss_at_zero() {
        let mut model = EmbeddingModel::zeros(4, 3);
        let loss = verse_step_with_negatives(&mut model, 0, 1, &[2, 3, 1], 0.1).unwrap();
        assert!((loss - 4.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn self_aliased_step_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut model = verse_init(3, 5, &mut rng);
        for v in &mut model.center {
            *v *= 50.0;
        }
        let (u, v, negs) = (0u32, 1u32, [0u32, 2, 2]);
        let lr = 1e-7;
        let mut stepped = model.clone();
        verse_step_with_negatives(&mut stepped, u, v, &negs, lr).unwrap();
        let h = 1e-6;
        for idx in 0..model.center.len() {
            let mut plus = model.clone();
            let mut minus = model.clone();
            plus.center[idx] += h;
            minus.center[idx] -= h;
            let fd = (verse_round_loss(&plus, u, v, &negs) - verse_round_loss(&minus, u, v, &negs))
                / (2.0 * h);
            let analytic = (model.center[idx] - stepped.center[idx]) / lr;
            assert!((fd - analytic).abs() <= 1e-5 * fd.abs().max(1.0), "{idx}: {fd} vs {analytic}");
        }
    }

    #[test]
    fn barbell_separates_cliques() {
        let g = barbell(6);
        let cfg = VerseConfig { dim: 16, samples: 2000, ..VerseConfig::default() };
        let (model, _) = verse_train(&g, &cfg).unwrap();
        assert!(model.is_finite());
        assert!(intra_minus_inter(&model, 6) > 0.0);

        let wcfg = WalkConfig { walks_per_node: 20, ..WalkConfig::default() };
        let scfg = SgnsConfig { dim: 16, epochs: 5, ..SgnsConfig::deepwalk(4) };
        let (model, _) = deepwalk_train(&g, &wcfg, &scfg).unwrap();
        assert!(intra_minus_inter(&model, 6) > 0.0);
    }

    #[test]
    fn verse_is_deterministic() {
        let g = barbell(4);
        let cfg = VerseConfig { dim: 8, samples: 50, ..VerseConfig::default() };
        assert_eq!(verse_train(&g, &cfg).unwrap().0, verse_train(&g, &cfg).unwrap().0);
    }
}
