use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMethod {
    KMeans,
    Agglomerative,
}

impl std::str::FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmeans" | "k-means" => Ok(ClusterMethod::KMeans),
            "agglomerative" | "ward" => Ok(ClusterMethod::Agglomerative),
            other => Err(Error::Config(format!("unknown clustering method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub batch_size: usize,
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            batch_size: 32,
            iterations: 100,
            restarts: 10,
            seed: 1,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn check_input(points: &[Vec<f64>], k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Config("number of clusters must be >= 1".into()));
    }
    if points.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} points cannot form {k} clusters",
            points.len()
        )));
    }
    Ok(())
}

/// k-means++ seeding; falls back to uniform draws once every point
/// coincides with a chosen center.
fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap();
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.gen_range(0..points.len())
        };
        centers.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

/// Mini-batch k-means with per-center learning rates `1/count`. The run
/// with the lowest inertia over all points wins among `restarts` seeded
/// runs. Returns the cluster of each point.
pub fn minibatch_kmeans(points: &[Vec<f64>], k: usize, cfg: &KMeansConfig) -> Result<Vec<usize>> {
    check_input(points, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..cfg.restarts.max(1) {
        let mut centers = kmeans_plus_plus(points, k, &mut rng);
        let mut counts = vec![0usize; k];
        let mut batch = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.iterations {
            batch.clear();
            for _ in 0..cfg.batch_size.max(1) {
                let i = rng.gen_range(0..points.len());
                batch.push((i, nearest(&points[i], &centers).0));
            }
            for &(i, c) in &batch {
                counts[c] += 1;
                let eta = 1.0 / counts[c] as f64;
                for (cv, pv) in centers[c].iter_mut().zip(&points[i]) {
                    *cv = (1.0 - eta) * *cv + eta * pv;
                }
            }
        }
        let mut inertia = 0.0;
        let labels: Vec<usize> = points
            .iter()
            .map(|p| {
                let (c, d) = nearest(p, &centers);
                inertia += d;
                c
            })
            .collect();
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    Ok(best.unwrap().1)
}

/// Ward agglomerative clustering on Euclidean distance, merged down to `k`
/// clusters. Cluster ids are numbered by first appearance.
pub fn ward(points: &[Vec<f64>], k: usize) -> Result<Vec<usize>> {
    check_input(points, k)?;
    let n = points.len();
    // Lance-Williams recurrence on squared distances
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = sq_dist(&points[i], &points[j]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let mut size = vec![1usize; n];
    let mut active: Vec<bool> = vec![true; n];
    let mut parent: Vec<usize> = (0..n).collect();
    for _ in 0..n - k {
        let mut best = (f64::INFINITY, 0, 0);
        for i in (0..n).filter(|&i| active[i]) {
            for j in (i + 1..n).filter(|&j| active[j]) {
                if d[i * n + j] < best.0 {
                    best = (d[i * n + j], i, j);
                }
            }
        }
        let (dij, i, j) = best;
        for m in (0..n).filter(|&m| active[m] && m != i && m != j) {
            let (si, sj, sm) = (size[i] as f64, size[j] as f64, size[m] as f64);
            let v = ((si + sm) * d[m * n + i] + (sj + sm) * d[m * n + j] - sm * dij)
                / (si + sj + sm);
            d[m * n + i] = v;
            d[i * n + m] = v;
        }
        size[i] += size[j];
        active[j] = false;
        parent[j] = i;
    }
    let root = |mut x: usize| {
        while parent[x] != x {
            x = parent[x];
        }
        x
    };
    let mut ids: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    Ok((0..n)
        .map(|p| {
            let r = root(p);
            *ids[r].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect())
}

pub fn cluster(points: &[Vec<f64>], k: usize, method: ClusterMethod, seed: u64) -> Result<Vec<usize>> {
    match method {
        ClusterMethod::KMeans => minibatch_kmeans(
            points,
            k,
            &KMeansConfig {
                seed,
                ..KMeansConfig::default()
            },
        ),
        ClusterMethod::Agglomerative => ward(points, k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (label, center) in [[0.0, 0.0], [20.0, 20.0]].iter().enumerate() {
            for _ in 0..25 {
                points.push(vec![
                    center[0] + rng.gen_range(-1.0..1.0),
                    center[1] + rng.gen_range(-1.0..1.0),
                ]);
                labels.push(label);
            }
        }
        (points, labels)
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let (points, labels) = blobs();
        let km = minibatch_kmeans(&points, 2, &KMeansConfig::default()).unwrap();
        assert!(same_partition(&km, &labels));
        let w = ward(&points, 2).unwrap();
        assert!(same_partition(&w, &labels));
    }

    #[test]
    fn ward_merges_closest_pair_first() {
        let points = vec![vec![0.0], vec![0.1], vec![5.0], vec![9.0]];
        assert_eq!(ward(&points, 3).unwrap(), [0, 0, 1, 2]);
        assert_eq!(ward(&points, 2).unwrap(), [0, 0, 1, 1]);
        assert_eq!(ward(&points, 4).unwrap(), [0, 1, 2, 3]);
    }

    #[test]
    fn identical_points_and_determinism() {
        let points = vec![vec![1.0, 1.0]; 6];
        let km = minibatch_kmeans(&points, 2, &KMeansConfig::default()).unwrap();
        assert_eq!(km.len(), 6);
        let (points, _) = blobs();
        let cfg = KMeansConfig { seed: 9, ..KMeansConfig::default() };
        assert_eq!(
            minibatch_kmeans(&points, 3, &cfg).unwrap(),
            minibatch_kmeans(&points, 3, &cfg).unwrap()
        );
        assert!(ward(&points[..1], 2).is_err());
    }
}
