//! Skip-gram with negative sampling.
//!
//! Each `(center, context)` pair contributes
//! `L = -log σ(θ_c·θ̃_o) - Σ_k log σ(-θ_c·θ̃_{n_k})`, with negatives drawn from
//! the unigram distribution raised to `unigram_power`. One update is an
//! exact gradient step on `L`: all dot products and the center gradient are
//! taken at the pre-update parameters.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EmbeddingModel, TrainStats};
use crate::vecmath::{axpy, dot, neg_log_sigmoid, sigmoid, SharedRows};

/// Learning rates never decay below this fraction of the initial value.
pub const MIN_LR_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub unigram_power: f64,
    /// Frequent-token subsampling threshold; `None` disables it.
    pub subsample: Option<f64>,
    pub seed: u64,
    pub workers: usize,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig::raw()
    }
}

impl SgnsConfig {
    /// Defaults for raw text: 8 negatives.
    pub fn raw() -> Self {
        SgnsConfig {
            dim: 100,
            window: 10,
            negatives: 8,
            learning_rate: 0.015,
            epochs: 100,
            unigram_power: 0.75,
            subsample: None,
            seed: 1,
            workers: 1,
        }
    }

    /// Defaults for entity-annotated text: 16 negatives.
    pub fn annotated() -> Self {
        SgnsConfig {
            negatives: 16,
            ..SgnsConfig::raw()
        }
    }

    /// Defaults for the skip-gram stage of DeepWalk: 64 negatives, window
    /// equal to the walk length.
    pub fn deepwalk(walk_length: usize) -> Self {
        SgnsConfig {
            negatives: 64,
            window: walk_length,
            ..SgnsConfig::raw()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be > 0".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be >= 1".into()));
        }
        if self.negatives == 0 {
            return Err(Error::Config("negatives must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if !(self.unigram_power >= 0.0) {
            return Err(Error::Config("unigram_power must be >= 0".into()));
        }
        if matches!(self.subsample, Some(t) if !(t > 0.0)) {
            return Err(Error::Config("subsample threshold must be > 0".into()));
        }
        Ok(())
    }
}

/// Sampling distribution proportional to `frequency^power`.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSampler {
    cdf: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(frequencies: &[u64], power: f64) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if let Some(i) = frequencies.iter().position(|&f| f == 0) {
            return Err(Error::Config(format!("index {i} has zero frequency")));
        }
        let weights: Vec<f64> = frequencies.iter().map(|&f| (f as f64).powf(power)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc / total
            })
            .collect();
        *cdf.last_mut().unwrap() = 1.0;
        Ok(NegativeSampler { cdf })
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    pub fn probability(&self, i: usize) -> f64 {
        if i == 0 {
            self.cdf[0]
        } else {
            self.cdf[i] - self.cdf[i - 1]
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        let i = self.cdf.partition_point(|&c| c <= u);
        i.min(self.cdf.len() - 1) as u32
    }
}

/// Pairs `(center, context)` for every position and every other position
/// within `radius(i)` of it.
pub fn pairs_with_radius(
    sentence: &[u32],
    mut radius: impl FnMut(usize) -> usize,
) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    for (i, &center) in sentence.iter().enumerate() {
        let r = radius(i);
        let lo = i.saturating_sub(r);
        let hi = (i + r).min(sentence.len().saturating_sub(1));
        for (j, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i {
                pairs.push((center, context));
            }
        }
    }
    pairs
}

/// Skip-gram pairs with a dynamic window: the radius for each center is
/// drawn uniformly from `1..=window`.
pub fn generate_pairs<R: Rng + ?Sized>(
    sentence: &[u32],
    window: usize,
    rng: &mut R,
) -> Vec<(u32, u32)> {
    let window = window.max(1);
    pairs_with_radius(sentence, |_| rng.gen_range(1..=window))
}

/// Loss of one pair with explicit negatives. Negatives equal to `context`
/// are skipped, as in [`sgns_step_with_negatives`].
pub fn sgns_loss(model: &EmbeddingModel, center: u32, context: u32, negatives: &[u32]) -> f64 {
    let h = model.center_row(center as usize);
    let mut loss = neg_log_sigmoid(dot(h, model.context_row(context as usize)));
    for &n in negatives {
        if n != context {
            loss += neg_log_sigmoid(-dot(h, model.context_row(n as usize)));
        }
    }
    loss
}

#[derive(Default)]
struct Scratch {
    grad: Vec<f64>,
    targets: Vec<(u32, f64)>,
    negatives: Vec<u32>,
}

/// Exact gradient step on the pair loss. Returns the loss before the update.
fn update(
    h: &mut [f64],
    outputs: &SharedRows<'_>,
    context: u32,
    negatives: &[u32],
    lr: f64,
    scratch: &mut Scratch,
) -> f64 {
    let Scratch { grad, targets, .. } = scratch;
    targets.clear();
    // SAFETY: rows are borrowed one at a time; `h` lives in a different table.
    let f = dot(h, unsafe { outputs.row(context as usize) });
    let mut loss = neg_log_sigmoid(f);
    targets.push((context, 1.0 - sigmoid(f)));
    for &n in negatives {
        if n == context {
            continue;
        }
        let f = dot(h, unsafe { outputs.row(n as usize) });
        loss += neg_log_sigmoid(-f);
        targets.push((n, -sigmoid(f)));
    }
    grad.clear();
    grad.resize(h.len(), 0.0);
    for &(t, g) in targets.iter() {
        axpy(g, unsafe { outputs.row(t as usize) }, grad);
    }
    for &(t, g) in targets.iter() {
        axpy(lr * g, h, unsafe { outputs.row(t as usize) });
    }
    axpy(lr, grad, h);
    loss
}

/// One SGD update with the given negatives. Returns the loss before the
/// update.
pub fn sgns_step_with_negatives(
    model: &mut EmbeddingModel,
    center: u32,
    context: u32,
    negatives: &[u32],
    lr: f64,
) -> Result<f64> {
    let dim = model.dim();
    let n = model.len();
    if [center, context].iter().chain(negatives).any(|&i| i as usize >= n) {
        return Err(Error::Validation(format!("index out of range for {n} rows")));
    }
    let c = center as usize;
    let h = &mut model.center[c * dim..(c + 1) * dim];
    let outputs = SharedRows::new(&mut model.context, dim);
    let loss = update(h, &outputs, context, negatives, lr, &mut Scratch::default());
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            loss,
            context: format!("pair ({center}, {context})"),
        });
    }
    Ok(loss)
}

/// One SGD update for a pair, drawing `cfg.negatives` negatives.
pub fn sgns_step<R: Rng + ?Sized>(
    model: &mut EmbeddingModel,
    center: u32,
    context: u32,
    sampler: &NegativeSampler,
    cfg: &SgnsConfig,
    rng: &mut R,
) -> Result<f64> {
    let negatives: Vec<u32> = (0..cfg.negatives).map(|_| sampler.sample(rng)).collect();
    sgns_step_with_negatives(model, center, context, &negatives, cfg.learning_rate)
}

/// Per-index probability of keeping a token under frequent-token
/// subsampling.
fn keep_probabilities(counts: &[u64], threshold: f64) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let t = threshold * total as f64;
    counts
        .iter()
        .map(|&c| {
            if c == 0 {
                1.0
            } else {
                let c = c as f64;
                (((c / t).sqrt() + 1.0) * t / c).min(1.0)
            }
        })
        .collect()
}

/// Trains skip-gram embeddings over index sentences.
///
/// The center table starts uniform in `[-0.5/d, 0.5/d]` and the context
/// table at zero. The learning rate decays linearly with processed tokens
/// down to `MIN_LR_FRACTION` of its initial value. With `workers > 1` the
/// corpus is split into contiguous shards updated concurrently without
/// locks; only single-worker runs are reproducible.
pub fn train_sgns(
    corpus: &[Vec<u32>],
    vocab_size: usize,
    cfg: &SgnsConfig,
) -> Result<(EmbeddingModel, TrainStats)> {
    cfg.validate()?;
    let total_tokens: u64 = corpus.iter().map(|s| s.len() as u64).sum();
    if total_tokens == 0 || vocab_size == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut counts = vec![0u64; vocab_size];
    for &i in corpus.iter().flatten() {
        let slot = counts.get_mut(i as usize).ok_or_else(|| {
            Error::Validation(format!("index {i} outside vocabulary of {vocab_size}"))
        })?;
        *slot += 1;
    }
    // every index keeps some noise mass, including ones absent from the corpus
    let noise_counts: Vec<u64> = counts.iter().map(|&c| c.max(1)).collect();
    let sampler = NegativeSampler::new(&noise_counts, cfg.unigram_power)?;
    let keep = cfg.subsample.map(|t| keep_probabilities(&counts, t));

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = EmbeddingModel::word2vec_init(vocab_size, cfg.dim, &mut init_rng);

    let workers = cfg.workers.max(1).min(corpus.len().max(1));
    let shard_len = corpus.len().div_ceil(workers);
    let shards: Vec<&[Vec<u32>]> = corpus.chunks(shard_len).collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..shards.len())
        .map(|w| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(1 + w as u64);
            rng
        })
        .collect();

    let planned = (total_tokens * cfg.epochs as u64) as f64;
    let processed = AtomicU64::new(0);
    let mut stats = TrainStats::default();
    let dim = cfg.dim;

    for epoch in 0..cfg.epochs {
        let centers = SharedRows::new(&mut model.center, dim);
        let outputs = SharedRows::new(&mut model.context, dim);
        let run_shard = |shard: &[Vec<u32>], rng: &mut ChaCha8Rng| -> Result<(f64, u64)> {
            let mut scratch = Scratch::default();
            let mut kept: Vec<u32> = Vec::new();
            let mut loss_sum = 0.0;
            let mut updates = 0u64;
            for sentence in shard {
                let done = processed.load(Ordering::Relaxed) as f64;
                let lr = cfg.learning_rate * (1.0 - done / planned).max(MIN_LR_FRACTION);
                kept.clear();
                match &keep {
                    Some(p) => kept.extend(
                        sentence
                            .iter()
                            .copied()
                            .filter(|&w| rng.gen::<f64>() < p[w as usize]),
                    ),
                    None => kept.extend_from_slice(sentence),
                }
                for i in 0..kept.len() {
                    let r = rng.gen_range(1..=cfg.window);
                    let lo = i.saturating_sub(r);
                    let hi = (i + r).min(kept.len() - 1);
                    for j in lo..=hi {
                        if j == i {
                            continue;
                        }
                        scratch.negatives.clear();
                        for _ in 0..cfg.negatives {
                            let n = sampler.sample(rng);
                            scratch.negatives.push(n);
                        }
                        let negatives = std::mem::take(&mut scratch.negatives);
                        // SAFETY: one center row borrowed at a time in this thread.
                        let h = unsafe { centers.row(kept[i] as usize) };
                        let loss = update(h, &outputs, kept[j], &negatives, lr, &mut scratch);
                        scratch.negatives = negatives;
                        if !loss.is_finite() {
                            return Err(Error::NonFinite {
                                loss,
                                context: format!(
                                    "epoch {epoch}, pair ({}, {}), lr {lr}",
                                    kept[i], kept[j]
                                ),
                            });
                        }
                        loss_sum += loss;
                        updates += 1;
                    }
                }
                processed.fetch_add(sentence.len() as u64, Ordering::Relaxed);
            }
            Ok((loss_sum, updates))
        };

        let results: Vec<Result<(f64, u64)>> = if shards.len() == 1 {
            vec![run_shard(shards[0], &mut rngs[0])]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = shards
                    .iter()
                    .zip(rngs.iter_mut())
                    .map(|(shard, rng)| scope.spawn(|| run_shard(shard, rng)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("skip-gram worker panicked"))
                    .collect()
            })
        };
        let mut loss_sum = 0.0;
        let mut updates = 0;
        for r in results {
            let (l, u) = r?;
            loss_sum += l;
            updates += u;
        }
        stats.updates += updates;
        stats
            .epoch_losses
            .push(if updates > 0 { loss_sum / updates as f64 } else { 0.0 });
        log::debug!("sgns epoch {epoch}: mean loss {:?}", stats.epoch_losses.last());
    }
    Ok((model, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_for_adjacent_tokens() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(generate_pairs(&[0, 1], 1, &mut rng), [(0, 1), (1, 0)]);
        assert!(generate_pairs(&[7], 5, &mut rng).is_empty());
    }

    #[test]
    fn fixed_radius_enumerates_all_pairs() {
        let pairs = pairs_with_radius(&[0, 1, 2], |_| 2);
        assert_eq!(pairs, [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]);
    }

    #[test]
    fn dynamic_window_never_exceeds_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sentence: Vec<u32> = (0..30).collect();
        for (c, o) in generate_pairs(&sentence, 4, &mut rng) {
            let d = (c as i64 - o as i64).abs();
            assert!((1..=4).contains(&d));
        }
    }

    #[test]
    fn loss_at_zero_dot_products() {
        let mut model = EmbeddingModel::zeros(3, 4);
        let loss = sgns_step_with_negatives(&mut model, 0, 1, &[2], 0.1).unwrap();
        assert!((loss - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!((loss - 1.3863).abs() < 1e-4);
    }

    #[test]
    fn repeated_positive_pair_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut model = EmbeddingModel::word2vec_init(2, 5, &mut rng);
        for _ in 0..20_000 {
            sgns_step_with_negatives(&mut model, 0, 1, &[], 0.5).unwrap();
        }
        let p = sigmoid(dot(model.center_row(0), model.context_row(1)));
        assert!(1.0 - p < 1e-3, "sigma = {p}");
    }

    #[test]
    fn sampler_probabilities_follow_power_law() {
        let s = NegativeSampler::new(&[1, 16, 81], 0.75).unwrap();
        let total = 1.0 + 8.0 + 27.0;
        assert!((s.probability(0) - 1.0 / total).abs() < 1e-12);
        assert!((s.probability(1) - 8.0 / total).abs() < 1e-12);
        assert!((s.probability(2) - 27.0 / total).abs() < 1e-12);
        assert!(NegativeSampler::new(&[1, 0], 0.75).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SgnsConfig { negatives: 0, ..SgnsConfig::raw() }.validate().is_err());
        assert!(SgnsConfig { window: 0, ..SgnsConfig::raw() }.validate().is_err());
        assert!(SgnsConfig { learning_rate: 0.0, ..SgnsConfig::raw() }.validate().is_err());
        assert_eq!(SgnsConfig::annotated().negatives, 16);
        assert_eq!(SgnsConfig::deepwalk(4).negatives, 64);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let cfg = SgnsConfig { epochs: 1, ..SgnsConfig::raw() };
        assert!(matches!(train_sgns(&[], 3, &cfg), Err(Error::EmptyCorpus)));
        assert!(matches!(train_sgns(&[vec![]], 3, &cfg), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn huge_learning_rate_reports_non_finite_loss() {
        let mut model = EmbeddingModel::zeros(2, 2);
        model.center.copy_from_slice(&[1e200, 1e200, 1e200, 1e200]);
        model.context.copy_from_slice(&[1e200, -1e200, 0.0, 0.0]);
        let err = sgns_step_with_negatives(&mut model, 0, 0, &[1], 1.0).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }
}
