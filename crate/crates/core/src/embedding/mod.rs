//! Dense embeddings: encoders, an exact cosine kNN store, pairwise-distance
//! histograms and k-means clustering.
//!
//! Vectors are unit-normalized at ingest, so cosine distance is `1 - u·v`
//! and squared Euclidean distance is `2 (1 - u·v)`; k-means on the stored
//! vectors therefore agrees with the cosine geometry used for kNN.

mod encoder;
mod histogram;
mod kmeans;
mod store;

pub use encoder::{EmbeddingVector, EncodeError, Encoder, ReferenceEncoder, REFERENCE_DIMENSION};
pub use histogram::{pairwise_distance_histogram, DistanceHistogram, HistogramError};
pub use kmeans::{centroid_document, kmeans, ClusterAssignment, ClusterError, MAX_ITERATIONS};
pub use store::{cosine_distance, embed_corpus, EmbedFailure, Neighbor, StoreError, VectorStore};

/// Neighbors taken around each centroid document when none is configured.
pub const DEFAULT_TOP_N: usize = 10;
