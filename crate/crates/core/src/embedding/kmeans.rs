use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::store::VectorStore;

/// Lloyd iterations stop here even if assignments are still moving.
pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterAssignment {
    pub k: usize,
    /// Cluster of each stored vector, in store (ADA) order.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared Euclidean distances to the assigned centroids.
    pub inertia: f64,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl ClusterAssignment {
    /// Store positions of a cluster's members.
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignments.iter().enumerate().filter(|(_, &c)| c == cluster).map(|(i, _)| i).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClusterError {
    #[error("k = {k} is invalid for {n} vectors")]
    InvalidK { k: usize, n: usize },
    #[error("cluster {0} has no members")]
    EmptyCluster(usize),
}

fn sq_dist(v: &[f32], c: &[f64]) -> f64 {
    v.iter().zip(c).map(|(&a, &b)| (f64::from(a) - b).powi(2)).sum()
}

fn nearest(v: &[f32], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(v, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn to_f64(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

/// k-means++ seeding: first centre uniform, then proportional to squared
/// distance from the nearest chosen centre.
fn seed_centroids(points: &[&[f32]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![to_f64(points[rng.random_range(0..n)])];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = to_f64(points[pick]);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm with seeded k-means++ initialization.
///
/// Converges when assignments stop changing or after [`MAX_ITERATIONS`].
/// An emptied cluster keeps its previous centroid.
pub fn kmeans(store: &VectorStore, k: usize, seed: u64) -> Result<ClusterAssignment, ClusterError> {
    let n = store.len();
    if k == 0 || k > n {
        return Err(ClusterError::InvalidK { k, n });
    }
    let points: Vec<&[f32]> = store.vectors().iter().map(|v| v.values()).collect();
    let dim = store.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(&points, k, &mut rng);

    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let step: Vec<(usize, f64)> = points.par_iter().map(|p| nearest(p, &centroids)).collect();
        let inertia: f64 = step.iter().map(|(_, d)| d).sum();
        history.push(inertia);
        let next: Vec<usize> = step.into_iter().map(|(c, _)| c).collect();
        let stable = next == assignments;
        assignments = next;
        if stable || iterations >= MAX_ITERATIONS {
            break;
        }
        let mut sums = vec![vec![0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, &x) in sums[c].iter_mut().zip(p.iter()) {
                *s += f64::from(x);
            }
        }
        for (j, sum) in sums.into_iter().enumerate() {
            if counts[j] > 0 {
                centroids[j] = sum.into_iter().map(|s| s / counts[j] as f64).collect();
            }
        }
    }
    Ok(ClusterAssignment {
        k,
        assignments,
        centroids,
        inertia: *history.last().expect("at least one iteration"),
        inertia_history: history,
        iterations,
    })
}

/// The member of `cluster` closest to its centroid; ties by ADA.
pub fn centroid_document(assignment: &ClusterAssignment, cluster: usize, store: &VectorStore) -> Result<String, ClusterError> {
    let centroid = assignment.centroids.get(cluster).ok_or(ClusterError::EmptyCluster(cluster))?;
    assignment
        .members(cluster)
        .into_iter()
        .map(|i| (i, sq_dist(store.vectors()[i].values(), centroid)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| store.adas()[i].clone())
        .ok_or(ClusterError::EmptyCluster(cluster))
}
