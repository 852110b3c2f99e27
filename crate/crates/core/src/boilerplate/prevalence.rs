use std::collections::{BTreeMap, HashMap};
use std::io;

use rayon::prelude::*;
use serde::Serialize;

use super::segmentation::Classifier;
use crate::corpus::CorpusLayout;
use crate::embedding::{centroid_document, kmeans, ClusterError, VectorStore};

/// Likelihood at or above which a centroid counts as boilerplate.
pub const CLASSIFICATION_THRESHOLD: f64 = 0.5;

/// Resolves an ADA to the text handed to classifiers.
pub trait TextLookup: Sync {
    fn text(&self, ada: &str) -> Option<String>;
}

impl TextLookup for CorpusLayout {
    fn text(&self, ada: &str) -> Option<String> {
        self.load(ada).ok().map(|d| d.body_markdown)
    }
}

impl TextLookup for HashMap<String, String> {
    fn text(&self, ada: &str) -> Option<String> {
        self.get(ada).cloned()
    }
}

impl TextLookup for BTreeMap<String, String> {
    fn text(&self, ada: &str) -> Option<String> {
        self.get(ada).cloned()
    }
}

/// One classified cluster centroid, as exported for manual inspection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentroidRow {
    pub k: usize,
    pub cluster: usize,
    pub cluster_size: usize,
    pub centroid_ada: String,
    /// Neighbor ADAs separated by `;`.
    pub neighbor_adas: String,
    pub likelihood: Option<f64>,
    pub boilerplate: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrevalenceResult {
    pub k: usize,
    /// Share of successfully classified centroids at or above the threshold.
    pub rate: f64,
    pub classified: usize,
    pub failed: usize,
    pub rows: Vec<CentroidRow>,
}

fn classify_centroid(
    store: &VectorStore,
    texts: &dyn TextLookup,
    classifier: &dyn Classifier,
    n_neighbors: usize,
    centroid: &str,
) -> (Vec<String>, Result<f64, String>) {
    let Some(query) = store.get(centroid) else { return (Vec::new(), Err(format!("{centroid} missing from store"))) };
    let neighbors = match store.knn_excluding(query, n_neighbors, centroid) {
        Ok(n) => n,
        Err(e) => return (Vec::new(), Err(e.to_string())),
    };
    let adas: Vec<String> = neighbors.into_iter().map(|n| n.ada).collect();
    let Some(doc) = texts.text(centroid) else { return (adas, Err(format!("no text for {centroid}"))) };
    let mut neighbor_texts = Vec::with_capacity(adas.len());
    for a in &adas {
        match texts.text(a) {
            Some(t) => neighbor_texts.push(t),
            None => return (adas.clone(), Err(format!("no text for {a}"))),
        }
    }
    let refs: Vec<&str> = neighbor_texts.iter().map(String::as_str).collect();
    let outcome = classifier.classify(&doc, &refs).map_err(|e| e.to_string()).and_then(|l| {
        if (0.0..=1.0).contains(&l) {
            Ok(l)
        } else {
            Err(format!("classifier returned {l} outside [0, 1]"))
        }
    });
    (adas, outcome)
}

/// For each k: cluster the store, classify every centroid document against
/// its `n_neighbors` nearest neighbors and report the share classified as
/// boilerplate. Classifier failures are counted and excluded from the rate.
pub fn prevalence_study(
    store: &VectorStore,
    texts: &dyn TextLookup,
    k_list: &[usize],
    classifier: &dyn Classifier,
    n_neighbors: usize,
    seed: u64,
) -> Result<BTreeMap<usize, PrevalenceResult>, ClusterError> {
    let mut out = BTreeMap::new();
    for &k in k_list {
        let assignment = kmeans(store, k, seed)?;
        let rows: Vec<CentroidRow> = (0..k)
            .into_par_iter()
            .map(|cluster| {
                let size = assignment.members(cluster).len();
                let centroid = match centroid_document(&assignment, cluster, store) {
                    Ok(c) => c,
                    Err(e) => {
                        return CentroidRow {
                            k,
                            cluster,
                            cluster_size: size,
                            centroid_ada: String::new(),
                            neighbor_adas: String::new(),
                            likelihood: None,
                            boilerplate: false,
                            error: Some(e.to_string()),
                        }
                    }
                };
                let (adas, outcome) = classify_centroid(store, texts, classifier, n_neighbors, &centroid);
                let (likelihood, error) = match outcome {
                    Ok(l) => (Some(l), None),
                    Err(e) => (None, Some(e)),
                };
                CentroidRow {
                    k,
                    cluster,
                    cluster_size: size,
                    centroid_ada: centroid,
                    neighbor_adas: adas.join(";"),
                    likelihood,
                    boilerplate: likelihood.is_some_and(|l| l >= CLASSIFICATION_THRESHOLD),
                    error,
                }
            })
            .collect();
        let classified = rows.iter().filter(|r| r.likelihood.is_some()).count();
        let positive = rows.iter().filter(|r| r.boilerplate).count();
        let rate = if classified == 0 { 0.0 } else { positive as f64 / classified as f64 };
        out.insert(k, PrevalenceResult { k, rate, classified, failed: rows.len() - classified, rows });
    }
    Ok(out)
}

/// Writes one CSV row per centroid, with a header.
pub fn write_centroid_csv<'a>(rows: impl IntoIterator<Item = &'a CentroidRow>, w: impl io::Write) -> io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for row in rows {
        csv.serialize(row).map_err(io::Error::other)?;
    }
    csv.flush()
}
