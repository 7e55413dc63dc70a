//! Intrinsic evaluation: relatedness correlation, analogies, categorization
//! purity, nearest neighbours, multi-word composition and 2-D projection.

mod cluster;
mod datasets;
mod metrics;
mod projection;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use cluster::{cluster, minibatch_kmeans, ward, ClusterMethod, KMeansConfig};
pub use datasets::{
    normalize_key, AnalogyDataset, AnalogyItem, CategorizationDataset, RelatednessDataset,
    RelatednessPair,
};
pub use metrics::{cosine, pearson, purity, ranks, spearman};
pub use projection::pca_2d;

use crate::corpus::EntityType;
use crate::error::{Error, Result};
use crate::model::Embeddings;
use crate::vecmath::{dot, norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    #[default]
    Pearson,
    Spearman,
}

impl std::str::FromStr for Correlation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(Correlation::Pearson),
            "spearman" => Ok(Correlation::Spearman),
            other => Err(Error::Config(format!("unknown correlation `{other}`"))),
        }
    }
}

/// Offset used to form the analogy query vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalogyConvention {
    /// `θ_a - θ_b + θ_x`
    #[default]
    AMinusB,
    /// `θ_b - θ_a + θ_x`
    BMinusA,
}

impl std::str::FromStr for AnalogyConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a-minus-b" => Ok(AnalogyConvention::AMinusB),
            "b-minus-a" => Ok(AnalogyConvention::BMinusA),
            other => Err(Error::Config(format!("unknown analogy convention `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelatednessResult {
    pub r: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Correlation between pair cosines and human scores. Pairs with an
/// unknown key or a zero vector are skipped and counted.
pub fn relatedness_eval(
    emb: &Embeddings,
    ds: &RelatednessDataset,
    correlation: Correlation,
) -> Result<RelatednessResult> {
    let mut cosines = Vec::new();
    let mut scores = Vec::new();
    for pair in &ds.pairs {
        let c = match (emb.get(&pair.word1), emb.get(&pair.word2)) {
            (Some(u), Some(v)) => cosine(u, v).ok(),
            _ => None,
        };
        if let Some(c) = c {
            cosines.push(c);
            scores.push(pair.score);
        }
    }
    if cosines.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "only {} of {} relatedness pairs are usable",
            cosines.len(),
            ds.len()
        )));
    }
    let r = match correlation {
        Correlation::Pearson => pearson(&cosines, &scores)?,
        Correlation::Spearman => spearman(&cosines, &scores)?,
    };
    Ok(RelatednessResult {
        r,
        evaluated: cosines.len(),
        skipped: ds.len() - cosines.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalogyResult {
    pub accuracy: f64,
    pub correct: usize,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Index of the candidate with the highest cosine to `query`, ties to the
/// lowest index. Zero-norm rows are never chosen.
fn argmax_cosine(
    emb: &Embeddings,
    norms: &[f64],
    query: &[f64],
    mut allowed: impl FnMut(usize) -> bool,
) -> Option<usize> {
    let qn = norm(query);
    if qn == 0.0 {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, &n) in norms.iter().enumerate() {
        if n == 0.0 || !allowed(i) {
            continue;
        }
        let c = dot(emb.row(i), query) / (n * qn);
        if best.is_none_or(|(_, b)| c > b) {
            best = Some((i, c));
        }
    }
    best.map(|(i, _)| i)
}

fn row_norms(emb: &Embeddings) -> Vec<f64> {
    (0..emb.len()).map(|i| norm(emb.row(i))).collect()
}

/// Analogy accuracy by nearest cosine neighbour of the offset vector. The
/// query keys are excluded from the candidates; with `typed`, candidates
/// are limited to the item's entity type. Items with an unknown key are
/// skipped.
pub fn analogy_eval(
    emb: &Embeddings,
    ds: &AnalogyDataset,
    typed: bool,
    convention: AnalogyConvention,
) -> Result<AnalogyResult> {
    let norms = row_norms(emb);
    let types: Vec<Option<EntityType>> = (0..emb.len()).map(|i| emb.entity_type(i)).collect();
    let mut correct = 0;
    let mut evaluated = 0;
    for item in &ds.items {
        let idx = [&item.a, &item.b, &item.x, &item.y].map(|k| emb.index_of(k));
        let [Some(a), Some(b), Some(x), Some(y)] = idx else {
            continue;
        };
        evaluated += 1;
        let (plus, minus) = match convention {
            AnalogyConvention::AMinusB => (a, b),
            AnalogyConvention::BMinusA => (b, a),
        };
        let query: Vec<f64> = (0..emb.dim())
            .map(|k| emb.row(plus)[k] - emb.row(minus)[k] + emb.row(x)[k])
            .collect();
        let restrict = if typed { item.etype } else { None };
        let answer = argmax_cosine(emb, &norms, &query, |i| {
            i != a && i != b && i != x && restrict.is_none_or(|t| types[i] == Some(t))
        });
        match answer {
            Some(i) if i == y => correct += 1,
            Some(_) => {}
            None => log::warn!(
                "no candidates for analogy {} {} {} {}",
                item.a,
                item.b,
                item.x,
                item.y
            ),
        }
    }
    if evaluated == 0 {
        return Err(Error::InsufficientData(format!(
            "none of {} analogy items is in the vocabulary",
            ds.len()
        )));
    }
    Ok(AnalogyResult {
        accuracy: correct as f64 / evaluated as f64,
        correct,
        evaluated,
        skipped: ds.len() - evaluated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategorizationResult {
    pub purity: f64,
    pub clusters: usize,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Clusters the in-vocabulary items into as many clusters as the dataset
/// has categories and scores the purity of the result.
pub fn categorization_eval(
    emb: &Embeddings,
    ds: &CategorizationDataset,
    method: ClusterMethod,
    seed: u64,
) -> Result<CategorizationResult> {
    let k = ds.categories().len();
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (key, label) in &ds.items {
        if let Some(v) = emb.get(key) {
            points.push(v.to_vec());
            labels.push(label.as_str());
        }
    }
    if points.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} in-vocabulary items for {k} categories",
            points.len()
        )));
    }
    let assignments = cluster(&points, k, method, seed)?;
    Ok(CategorizationResult {
        purity: purity(&assignments, &labels)?,
        clusters: k,
        evaluated: points.len(),
        skipped: ds.len() - points.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub index: usize,
    pub key: String,
    pub cosine: f64,
}

/// Top-`k` rows by cosine to `query`, skipping `exclude`; with
/// `type_filter`, only entities of that type are candidates. Ties go to
/// the lower index.
pub fn neighbors_of_vector(
    emb: &Embeddings,
    query: &[f64],
    k: usize,
    type_filter: Option<EntityType>,
    exclude: &[usize],
) -> Result<Vec<Neighbor>> {
    let qn = norm(query);
    if qn == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut scored: Vec<(usize, f64)> = (0..emb.len())
        .filter(|i| !exclude.contains(i))
        .filter(|&i| type_filter.is_none_or(|t| emb.entity_type(i) == Some(t)))
        .filter_map(|i| {
            let n = norm(emb.row(i));
            (n > 0.0).then(|| (i, dot(emb.row(i), query) / (n * qn)))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(index, cosine)| Neighbor {
            index,
            key: emb.key(index).to_string(),
            cosine,
        })
        .collect())
}

pub fn nearest_neighbors(
    emb: &Embeddings,
    query: &str,
    k: usize,
    type_filter: Option<EntityType>,
) -> Result<Vec<Neighbor>> {
    let i = emb
        .index_of(query)
        .ok_or_else(|| Error::UnknownKey(query.to_string()))?;
    neighbors_of_vector(emb, emb.row(i), k, type_filter, &[i])
}

/// Mean of the known component vectors, plus the number of unknown
/// components that were skipped.
pub fn compose_multiword<S: AsRef<str>>(emb: &Embeddings, words: &[S]) -> Result<(Vec<f64>, usize)> {
    let mut sum = vec![0.0; emb.dim()];
    let mut found = 0;
    for w in words {
        if let Some(v) = emb.get(w.as_ref()) {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            found += 1;
        }
    }
    if found == 0 {
        let joined: Vec<&str> = words.iter().map(AsRef::as_ref).collect();
        return Err(Error::UnknownKey(joined.join(" ")));
    }
    sum.iter_mut().for_each(|s| *s /= found as f64);
    Ok((sum, words.len() - found))
}

/// Appends a composed vector for every multi-word key (words joined by
/// `_`) that is missing from `emb` and has at least one
/// known component. Returns the extended table and the number of keys
/// added.
pub fn extend_with_compositions<'a>(
    emb: &Embeddings,
    keys: impl IntoIterator<Item = &'a str>,
) -> Result<(Embeddings, usize)> {
    let mut new_keys: Vec<String> = emb.keys().to_vec();
    let mut data: Vec<f64> = (0..emb.len()).flat_map(|i| emb.row(i).to_vec()).collect();
    let mut seen: HashSet<&str> = HashSet::new();
    let mut added = 0;
    for key in keys {
        if emb.index_of(key).is_some() || !seen.insert(key) {
            continue;
        }
        let words: Vec<&str> = key
            .split('_')
            .filter(|w| !w.is_empty())
            .collect();
        if words.len() < 2 {
            continue;
        }
        if let Ok((v, _)) = compose_multiword(emb, &words) {
            new_keys.push(key.to_string());
            data.extend(v);
            added += 1;
        }
    }
    Ok((Embeddings::new(new_keys, emb.dim(), data)?, added))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionRow {
    pub key: String,
    pub pc1: f64,
    pub pc2: f64,
}

/// Top-2 principal-component coordinates of the selected keys. Duplicate
/// and unknown keys are dropped with a warning.
pub fn export_projection<S: AsRef<str>>(emb: &Embeddings, keys: &[S]) -> Result<Vec<ProjectionRow>> {
    let mut seen = HashSet::new();
    let mut selected = Vec::new();
    for key in keys {
        let key = key.as_ref();
        if !seen.insert(key) {
            log::warn!("duplicate key `{key}` ignored");
            continue;
        }
        match emb.get(key) {
            Some(v) => selected.push((key.to_string(), v.to_vec())),
            None => log::warn!("unknown key `{key}` skipped"),
        }
    }
    let rows: Vec<Vec<f64>> = selected.iter().map(|(_, v)| v.clone()).collect();
    let coords = pca_2d(&rows)?;
    Ok(selected
        .into_iter()
        .zip(coords)
        .map(|((key, _), [pc1, pc2])| ProjectionRow { key, pc1, pc2 })
        .collect())
}

/// One evaluated task in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: String,
    pub dataset: String,
    pub metrics: BTreeMap<String, f64>,
    pub evaluated: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub seeds: HashMap<String, u64>,
    pub tasks: Vec<TaskReport>,
}
