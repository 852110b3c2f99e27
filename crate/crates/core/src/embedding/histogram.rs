use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::store::{cosine_distance, VectorStore};

/// Equal-width histogram of cosine distances over `[0, 2]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceHistogram {
    pub sample_size: usize,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl DistanceHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Lower edge of each bin.
    pub fn edges(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|i| i as f64 * self.bin_width).collect()
    }

    /// Indices of local maxima: non-zero bins strictly above the nearest
    /// differing bin on each side (plateaus count once).
    pub fn modes(&self) -> Vec<usize> {
        let c = &self.counts;
        let mut modes = Vec::new();
        let mut i = 0;
        while i < c.len() {
            let mut j = i;
            while j + 1 < c.len() && c[j + 1] == c[i] {
                j += 1;
            }
            let left_ok = i == 0 || c[i - 1] < c[i];
            let right_ok = j + 1 == c.len() || c[j + 1] < c[i];
            if c[i] > 0 && left_ok && right_ok {
                modes.push(i);
            }
            i = j + 1;
        }
        modes
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HistogramError {
    #[error("sample size {sample} exceeds store size {available}")]
    SampleTooLarge { sample: usize, available: usize },
    #[error("bin count must be at least 1")]
    NoBins,
}

/// Cosine distances over all pairs of a seeded uniform sample (without
/// replacement) of the store.
pub fn pairwise_distance_histogram(
    store: &VectorStore,
    sample_size: usize,
    bins: usize,
    seed: u64,
) -> Result<DistanceHistogram, HistogramError> {
    if bins == 0 {
        return Err(HistogramError::NoBins);
    }
    if sample_size > store.len() {
        return Err(HistogramError::SampleTooLarge { sample: sample_size, available: store.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, store.len(), sample_size).into_vec();
    idx.sort_unstable();
    let bin_width = 2.0 / bins as f64;
    let vectors = store.vectors();
    let counts = (0..idx.len())
        .into_par_iter()
        .map(|a| {
            let mut local = vec![0u64; bins];
            for &b in &idx[a + 1..] {
                let d = cosine_distance(&vectors[idx[a]], &vectors[b]);
                let bin = ((d / bin_width) as usize).min(bins - 1);
                local[bin] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; bins],
            |mut acc, local| {
                acc.iter_mut().zip(local).for_each(|(x, y)| *x += y);
                acc
            },
        );
    Ok(DistanceHistogram { sample_size, bin_width, counts })
}
