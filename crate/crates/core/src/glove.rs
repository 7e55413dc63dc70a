//! GloVe: weighted least squares on log cooccurrence counts.
//!
//! For every nonzero entry the cost is
//! `f(X_ij) * (θ_i·θ̃_j + b_i + b̃_j - ln X_ij)^2`, minimised with AdaGrad
//! over both orientations of the symmetric matrix.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cooc::CoocMatrix;
use crate::error::{Error, Result};
use crate::model::{EmbeddingModel, Published, TrainStats};
use crate::vecmath::{dot, SharedRows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GloveConfig {
    pub dim: usize,
    /// Token window used when counting cooccurrences.
    pub window: usize,
    pub x_max: f64,
    pub alpha: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub workers: usize,
    pub published: Published,
}

impl Default for GloveConfig {
    fn default() -> Self {
        GloveConfig {
            dim: 100,
            window: 10,
            x_max: 1000.0,
            alpha: 0.5,
            learning_rate: 0.06,
            epochs: 100,
            seed: 1,
            workers: 1,
            published: Published::Sum,
        }
    }
}

impl GloveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be > 0".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be >= 1".into()));
        }
        if !(self.x_max > 0.0) {
            return Err(Error::Config("x_max must be > 0".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config("alpha must be in (0, 1]".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

/// `(x / x_max)^alpha` below `x_max`, 1 from `x_max` on.
pub fn weighting_f(x: f64, cfg: &GloveConfig) -> f64 {
    if x < cfg.x_max {
        (x / cfg.x_max).powf(cfg.alpha)
    } else {
        1.0
    }
}

fn check_count(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("cooccurrence value {x} must be positive")))
    }
}

fn biases(model: &EmbeddingModel) -> (&[f64], &[f64]) {
    let b = model.bias.as_deref().expect("GloVe model has center biases");
    let bt = model
        .context_bias
        .as_deref()
        .expect("GloVe model has context biases");
    (b, bt)
}

fn residual(model: &EmbeddingModel, i: usize, j: usize, x: f64) -> f64 {
    let (b, bt) = biases(model);
    dot(model.center_row(i), model.context_row(j)) + b[i] + bt[j] - x.ln()
}

/// Cost of one ordered entry.
pub fn glove_cost_term(
    model: &EmbeddingModel,
    i: usize,
    j: usize,
    x: f64,
    cfg: &GloveConfig,
) -> Result<f64> {
    check_count(x)?;
    let diff = residual(model, i, j, x);
    Ok(weighting_f(x, cfg) * diff * diff)
}

/// Total cost over both orientations of every nonzero entry.
pub fn glove_objective(model: &EmbeddingModel, matrix: &CoocMatrix, cfg: &GloveConfig) -> f64 {
    matrix
        .iter_symmetric()
        .map(|(i, j, x)| {
            let diff = residual(model, i as usize, j as usize, x);
            weighting_f(x, cfg) * diff * diff
        })
        .sum()
}

/// Gradient of one cost term.
#[derive(Debug, Clone, PartialEq)]
pub struct GloveGradient {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub bias: f64,
    pub context_bias: f64,
}

pub fn glove_gradient(
    model: &EmbeddingModel,
    i: usize,
    j: usize,
    x: f64,
    cfg: &GloveConfig,
) -> Result<GloveGradient> {
    check_count(x)?;
    let g = 2.0 * weighting_f(x, cfg) * residual(model, i, j, x);
    Ok(GloveGradient {
        center: model.context_row(j).iter().map(|v| g * v).collect(),
        context: model.center_row(i).iter().map(|v| g * v).collect(),
        bias: g,
        context_bias: g,
    })
}

/// Parameters initialised uniform in `[-0.5/d, 0.5/d]`, biases included.
pub fn glove_init<R: Rng>(n: usize, dim: usize, rng: &mut R) -> EmbeddingModel {
    let mut model = EmbeddingModel::zeros(n, dim);
    let scale = 1.0 / dim as f64;
    let mut draw = || (rng.gen::<f64>() - 0.5) * scale;
    model.center.iter_mut().for_each(|v| *v = draw());
    model.context.iter_mut().for_each(|v| *v = draw());
    model.bias = Some((0..n).map(|_| draw()).collect());
    model.context_bias = Some((0..n).map(|_| draw()).collect());
    model
}

struct Tables<'a> {
    w: SharedRows<'a>,
    wt: SharedRows<'a>,
    b: SharedRows<'a>,
    bt: SharedRows<'a>,
    gw: SharedRows<'a>,
    gwt: SharedRows<'a>,
    gb: SharedRows<'a>,
    gbt: SharedRows<'a>,
}

/// AdaGrad step on one entry; returns the cost before the update.
fn adagrad_step(t: &Tables<'_>, i: usize, j: usize, x: f64, cfg: &GloveConfig) -> f64 {
    // SAFETY: i and j index different tables, so no row is borrowed twice.
    let (wi, wj) = unsafe { (t.w.row(i), t.wt.row(j)) };
    let (bi, bj) = unsafe { (&mut t.b.row(i)[0], &mut t.bt.row(j)[0]) };
    let (gwi, gwj) = unsafe { (t.gw.row(i), t.gwt.row(j)) };
    let (gbi, gbj) = unsafe { (&mut t.gb.row(i)[0], &mut t.gbt.row(j)[0]) };

    let diff = dot(wi, wj) + *bi + *bj - x.ln();
    let f = weighting_f(x, cfg);
    let cost = f * diff * diff;
    let g = 2.0 * f * diff;
    let lr = cfg.learning_rate;
    for k in 0..wi.len() {
        let gi = g * wj[k];
        let gj = g * wi[k];
        wi[k] -= lr * gi / gwi[k].sqrt();
        wj[k] -= lr * gj / gwj[k].sqrt();
        gwi[k] += gi * gi;
        gwj[k] += gj * gj;
    }
    *bi -= lr * g / gbi.sqrt();
    *bj -= lr * g / gbj.sqrt();
    *gbi += g * g;
    *gbj += g * g;
    cost
}

/// Trains GloVe vectors from a cooccurrence matrix over `vocab_size`
/// indices.
///
/// Entries are visited in a freshly shuffled order each epoch. AdaGrad
/// accumulators start at 1. With `workers > 1` the shuffled entries are
/// split into contiguous shards processed concurrently without locks.
pub fn train_glove(
    matrix: &CoocMatrix,
    vocab_size: usize,
    cfg: &GloveConfig,
) -> Result<(EmbeddingModel, TrainStats)> {
    cfg.validate()?;
    if matrix.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if matrix.dimension() > vocab_size {
        return Err(Error::Validation(format!(
            "matrix index {} outside vocabulary of {vocab_size}",
            matrix.dimension() - 1
        )));
    }
    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = glove_init(vocab_size, dim, &mut rng);
    model.published = cfg.published;

    let mut entries: Vec<(u32, u32, f64)> = matrix.iter_symmetric().collect();
    let mut gw = vec![1.0; vocab_size * dim];
    let mut gwt = vec![1.0; vocab_size * dim];
    let mut gb = vec![1.0; vocab_size];
    let mut gbt = vec![1.0; vocab_size];
    let mut b = model.bias.take().unwrap();
    let mut bt = model.context_bias.take().unwrap();

    let workers = cfg.workers.max(1).min(entries.len());
    let mut stats = TrainStats::default();
    for epoch in 0..cfg.epochs {
        entries.shuffle(&mut rng);
        let tables = Tables {
            w: SharedRows::new(&mut model.center, dim),
            wt: SharedRows::new(&mut model.context, dim),
            b: SharedRows::new(&mut b, 1),
            bt: SharedRows::new(&mut bt, 1),
            gw: SharedRows::new(&mut gw, dim),
            gwt: SharedRows::new(&mut gwt, dim),
            gb: SharedRows::new(&mut gb, 1),
            gbt: SharedRows::new(&mut gbt, 1),
        };
        let run = |shard: &[(u32, u32, f64)]| -> f64 {
            shard
                .iter()
                .map(|&(i, j, x)| adagrad_step(&tables, i as usize, j as usize, x, cfg))
                .sum()
        };
        let total: f64 = if workers == 1 {
            run(&entries)
        } else {
            let shard_len = entries.len().div_ceil(workers);
            std::thread::scope(|scope| {
                let handles: Vec<_> = entries
                    .chunks(shard_len)
                    .map(|shard| scope.spawn(move || run(shard)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("GloVe worker panicked"))
                    .sum()
            })
        };
        if !total.is_finite() {
            return Err(Error::NonFinite {
                loss: total,
                context: format!("GloVe epoch {epoch}, lr {}", cfg.learning_rate),
            });
        }
        stats.updates += entries.len() as u64;
        stats.epoch_losses.push(total / entries.len() as f64);
        log::debug!("glove epoch {epoch}: mean cost {}", total / entries.len() as f64);
    }
    model.bias = Some(b);
    model.context_bias = Some(bt);
    Ok((model, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighting_function_values() {
        let cfg = GloveConfig::default();
        assert_eq!(weighting_f(1000.0, &cfg), 1.0);
        assert_eq!(weighting_f(2500.0, &cfg), 1.0);
        assert!((weighting_f(250.0, &cfg) - 0.5).abs() < 1e-15);
        assert_eq!(weighting_f(0.0, &cfg), 0.0);
    }

    #[test]
    fn cost_term_edge_cases() {
        let cfg = GloveConfig::default();
        let mut model = EmbeddingModel::zeros(2, 3);
        model.bias = Some(vec![0.0; 2]);
        model.context_bias = Some(vec![0.0; 2]);
        assert_eq!(glove_cost_term(&model, 0, 1, 1.0, &cfg).unwrap(), 0.0);
        assert!(glove_cost_term(&model, 0, 1, 0.0, &cfg).is_err());
        model.bias.as_mut().unwrap()[0] = 5f64.ln();
        assert!(glove_cost_term(&model, 0, 1, 5.0, &cfg).unwrap().abs() < 1e-15);
        assert!(GloveConfig { alpha: 0.0, ..cfg.clone() }.validate().is_err());
        assert!(GloveConfig { alpha: 1.5, ..cfg }.validate().is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = GloveConfig { dim: 4, x_max: 10.0, ..GloveConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut model = glove_init(3, 4, &mut rng);
        for v in model.center.iter_mut().chain(model.context.iter_mut()) {
            *v *= 20.0;
        }
        let (i, j, x) = (0, 2, 3.5);
        let grad = glove_gradient(&model, i, j, x, &cfg).unwrap();
        let h = 1e-6;
        let cost = |m: &EmbeddingModel| glove_cost_term(m, i, j, x, &cfg).unwrap();
        for k in 0..4 {
            let mut plus = model.clone();
            let mut minus = model.clone();
            plus.center_row_mut(i)[k] += h;
            minus.center_row_mut(i)[k] -= h;
            let fd = (cost(&plus) - cost(&minus)) / (2.0 * h);
            assert!((fd - grad.center[k]).abs() < 1e-5, "center {k}");

            let mut plus = model.clone();
            let mut minus = model.clone();
            plus.context_row_mut(j)[k] += h;
            minus.context_row_mut(j)[k] -= h;
            let fd = (cost(&plus) - cost(&minus)) / (2.0 * h);
            assert!((fd - grad.context[k]).abs() < 1e-5, "context {k}");
        }
        let mut plus = model.clone();
        let mut minus = model.clone();
        plus.bias.as_mut().unwrap()[i] += h;
        minus.bias.as_mut().unwrap()[i] -= h;
        let fd = (cost(&plus) - cost(&minus)) / (2.0 * h);
        assert!((fd - grad.bias).abs() < 1e-5);
    }

    #[test]
    fn recovers_low_rank_log_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 6;
        let latent: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let l = latent[i][0] * latent[j][0] + latent[i][1] * latent[j][1];
                pairs.push((i as u32, j as u32, (2.0 + l).exp()));
            }
        }
        let matrix = CoocMatrix::from_pairs(pairs).unwrap();
        let cfg = GloveConfig {
            dim: 4,
            x_max: 10.0,
            learning_rate: 0.1,
            epochs: 3000,
            ..GloveConfig::default()
        };
        let (model, stats) = train_glove(&matrix, n, &cfg).unwrap();
        let cost = glove_objective(&model, &matrix, &cfg);
        assert!(cost < 1e-2, "final cost {cost}");
        assert!(stats.epoch_losses[0] > *stats.epoch_losses.last().unwrap());
    }

    #[test]
    fn same_seed_same_vectors() {
        let matrix = CoocMatrix::from_pairs([(0, 1, 3.0), (1, 2, 1.0), (0, 2, 0.5)]).unwrap();
        let cfg = GloveConfig { dim: 3, epochs: 5, ..GloveConfig::default() };
        let a = train_glove(&matrix, 3, &cfg).unwrap().0;
        let b = train_glove(&matrix, 3, &cfg).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn empty_matrix_is_rejected() {
        let cfg = GloveConfig::default();
        assert!(train_glove(&CoocMatrix::default(), 3, &cfg).is_err());
    }
}
