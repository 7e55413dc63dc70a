//! Reference implementations written independently of the library code,
//! shared by the property tests and the acceptance harness.

#![allow(dead_code)]

use std::collections::BTreeSet;

use entity_embeddings::cooc::CoocGraph;
use entity_embeddings::glove::{glove_cost_term, glove_gradient, glove_init, GloveConfig};
use entity_embeddings::graph::{verse_init, verse_round_loss, verse_step_with_negatives};
use entity_embeddings::sgns::{sgns_loss, sgns_step_with_negatives};
use entity_embeddings::{EmbeddingModel, Embeddings};
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;

/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Central differences of `loss` with respect to every entry of `params`.
fn central_differences(
    params: &mut [f64],
    mut loss: impl FnMut(&[f64]) -> f64,
) -> Vec<f64> {
    (0..params.len())
        .map(|k| {
            let orig = params[k];
            params[k] = orig + FD_STEP;
            let up = loss(params);
            params[k] = orig - FD_STEP;
            let down = loss(params);
            params[k] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

fn fill_uniform<R: Rng>(v: &mut [f64], rng: &mut R, scale: f64) {
    for x in v {
        *x = rng.gen_range(-scale..scale);
    }
}

/// Relative error between the gradient applied by one skip-gram step and
/// the finite-difference gradient of the pair loss, on a random instance.
pub fn sgns_gradient_error<R: Rng>(rng: &mut R, n: usize, dim: usize) -> f64 {
    let mut model = EmbeddingModel::zeros(n, dim);
    fill_uniform(&mut model.center, rng, 1.0);
    fill_uniform(&mut model.context, rng, 1.0);
    let center = rng.gen_range(0..n as u32);
    let context = rng.gen_range(0..n as u32);
    let negatives: Vec<u32> = (0..3).map(|_| rng.gen_range(0..n as u32)).collect();

    let mut stepped = model.clone();
    sgns_step_with_negatives(&mut stepped, center, context, &negatives, 1.0).unwrap();
    let applied: Vec<f64> = model
        .center
        .iter()
        .chain(&model.context)
        .zip(stepped.center.iter().chain(&stepped.context))
        .map(|(before, after)| before - after)
        .collect();

    let split = n * dim;
    let mut params: Vec<f64> = model.center.iter().chain(&model.context).copied().collect();
    let numeric = central_differences(&mut params, |p| {
        let mut m = EmbeddingModel::zeros(n, dim);
        m.center.copy_from_slice(&p[..split]);
        m.context.copy_from_slice(&p[split..]);
        sgns_loss(&m, center, context, &negatives)
    });
    relative_error(&applied, &numeric)
}

/// Relative error between the analytic gradient of one GloVe cost term and
/// its finite-difference gradient, on a random instance.
pub fn glove_gradient_error<R: Rng>(rng: &mut R, n: usize, dim: usize) -> f64 {
    let mut model = glove_init(n, dim, rng);
    fill_uniform(&mut model.center, rng, 1.0);
    fill_uniform(&mut model.context, rng, 1.0);
    fill_uniform(model.bias.as_mut().unwrap(), rng, 1.0);
    fill_uniform(model.context_bias.as_mut().unwrap(), rng, 1.0);
    let cfg = GloveConfig {
        x_max: 100.0,
        alpha: 0.75,
        ..GloveConfig::default()
    };
    let i = rng.gen_range(0..n);
    let j = rng.gen_range(0..n);
    let x = rng.gen_range(0.5..200.0);

    let g = glove_gradient(&model, i, j, x, &cfg).unwrap();
    let mut analytic = g.center.clone();
    analytic.extend(&g.context);
    analytic.push(g.bias);
    analytic.push(g.context_bias);

    let mut params: Vec<f64> = model.center_row(i).to_vec();
    params.extend(model.context_row(j));
    params.push(model.bias.as_ref().unwrap()[i]);
    params.push(model.context_bias.as_ref().unwrap()[j]);
    let numeric = central_differences(&mut params, |p| {
        let mut m = model.clone();
        m.center_row_mut(i).copy_from_slice(&p[..dim]);
        m.context_row_mut(j).copy_from_slice(&p[dim..2 * dim]);
        m.bias.as_mut().unwrap()[i] = p[2 * dim];
        m.context_bias.as_mut().unwrap()[j] = p[2 * dim + 1];
        glove_cost_term(&m, i, j, x, &cfg).unwrap()
    });
    relative_error(&analytic, &numeric)
}

/// Relative error between the gradient applied by one VERSE round and the
/// finite-difference gradient of the round loss. Small node counts make
/// `u` coincide with `v` or a negative now and then.
pub fn verse_gradient_error<R: Rng>(rng: &mut R, n: usize, dim: usize) -> f64 {
    let mut model = verse_init(n, dim, rng);
    fill_uniform(&mut model.center, rng, 1.0);
    let u = rng.gen_range(0..n as u32);
    let v = rng.gen_range(0..n as u32);
    let negatives: Vec<u32> = (0..3).map(|_| rng.gen_range(0..n as u32)).collect();

    let mut stepped = model.clone();
    verse_step_with_negatives(&mut stepped, u, v, &negatives, 1.0).unwrap();
    let applied: Vec<f64> = model
        .center
        .iter()
        .zip(&stepped.center)
        .map(|(before, after)| before - after)
        .collect();

    let mut params = model.center.clone();
    let numeric = central_differences(&mut params, |p| {
        let mut m = EmbeddingModel::zeros(n, dim);
        m.center.copy_from_slice(p);
        verse_round_loss(&m, u, v, &negatives)
    });
    relative_error(&applied, &numeric)
}

/// Random undirected graph with weights in `[0.01, 100)`; isolated nodes
/// are allowed.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> CoocGraph {
    let mut edges = Vec::new();
    for i in 0..n as u32 {
        for j in i + 1..n as u32 {
            if rng.gen::<f64>() < density {
                edges.push((i, j, rng.gen_range(0.01..100.0)));
            }
        }
    }
    CoocGraph::from_edges(n, edges).unwrap()
}

/// `(n Σxy - Σx Σy) / sqrt((n Σx² - (Σx)²)(n Σy² - (Σy)²))`
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Rank of each value as `#smaller + (#equal + 1) / 2`, by counting.
pub fn rank_oracle(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let smaller = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            smaller + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Spearman as the closed form `1 - 6 Σd² / (n(n² - 1))` when there are no
/// ties, Pearson of counted ranks otherwise.
pub fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (rank_oracle(x), rank_oracle(y));
    let distinct = |v: &[f64]| v.iter().map(|f| f.to_bits()).collect::<BTreeSet<_>>().len() == v.len();
    if distinct(x) && distinct(y) {
        let n = x.len() as f64;
        let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
        1.0 - 6.0 * d2 / (n * (n * n - 1.0))
    } else {
        pearson_oracle(&rx, &ry)
    }
}

/// Purity by scanning every (cluster, label) combination.
pub fn purity_oracle(assignments: &[usize], labels: &[usize]) -> f64 {
    let clusters: BTreeSet<usize> = assignments.iter().copied().collect();
    let classes: BTreeSet<usize> = labels.iter().copied().collect();
    let mut total = 0;
    for &c in &clusters {
        let mut best = 0;
        for &l in &classes {
            let count = assignments
                .iter()
                .zip(labels)
                .filter(|&(&a, &b)| a == c && b == l)
                .count();
            best = best.max(count);
        }
        total += best;
    }
    total as f64 / assignments.len() as f64
}

/// Answer of an analogy by scoring every candidate and sorting by
/// descending cosine, then ascending index.
pub fn analogy_oracle(
    emb: &Embeddings,
    a: usize,
    b: usize,
    x: usize,
    allowed: impl Fn(usize) -> bool,
) -> Option<usize> {
    let query: Vec<f64> = (0..emb.dim())
        .map(|k| emb.row(a)[k] - emb.row(b)[k] + emb.row(x)[k])
        .collect();
    let len = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>().sqrt();
    if len(&query) == 0.0 {
        return None;
    }
    let mut scored: Vec<(f64, usize)> = (0..emb.len())
        .filter(|&i| i != a && i != b && i != x && allowed(i) && len(emb.row(i)) > 0.0)
        .map(|i| {
            let dot: f64 = emb.row(i).iter().zip(&query).map(|(p, q)| p * q).sum();
            (dot / (len(emb.row(i)) * len(&query)), i)
        })
        .collect();
    scored.sort_by(|l, r| r.0.total_cmp(&l.0).then(l.1.cmp(&r.1)));
    scored.first().map(|&(_, i)| i)
}
