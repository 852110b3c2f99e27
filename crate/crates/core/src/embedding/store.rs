//! Vector store keyed by ADA with exact kNN.
//!
//! File format (little-endian):
//!
//! ```text
//! magic "DVEC" | version u32 (= 1) | dim u32 | count u32
//! count x (u32 byte length + UTF-8 ADA)        ADA table, sorted
//! count x dim x f32                            vectors, same order
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::encoder::{EmbeddingVector, EncodeError, Encoder};
use crate::corpus::CorpusLayout;

const MAGIC: &[u8; 4] = b"DVEC";
const VERSION: u32 = 1;

/// `1 - u·v` for unit vectors, clamped to `[0, 2]` against rounding.
pub fn cosine_distance(u: &EmbeddingVector, v: &EmbeddingVector) -> f64 {
    (1.0 - u.dot(v)).clamp(0.0, 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub ada: String,
    pub distance: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("the vector store is empty")]
    EmptyStore,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("dimension mismatch: store has {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a vector store file")]
    BadMagic,
    #[error("unsupported vector store version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed vector store: {0}")]
    Malformed(String),
}

/// Unit vectors sorted by ADA.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorStore {
    dimension: usize,
    adas: Vec<String>,
    vectors: Vec<EmbeddingVector>,
}

impl VectorStore {
    pub fn from_entries(dimension: usize, entries: BTreeMap<String, EmbeddingVector>) -> Result<Self, StoreError> {
        let mut adas = Vec::with_capacity(entries.len());
        let mut vectors = Vec::with_capacity(entries.len());
        for (ada, v) in entries {
            if v.dimension() != dimension {
                return Err(StoreError::Dimension { expected: dimension, actual: v.dimension() });
            }
            adas.push(ada);
            vectors.push(v);
        }
        Ok(Self { dimension, adas, vectors })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.adas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adas.is_empty()
    }

    pub fn adas(&self) -> &[String] {
        &self.adas
    }

    pub fn vectors(&self) -> &[EmbeddingVector] {
        &self.vectors
    }

    pub fn position(&self, ada: &str) -> Option<usize> {
        self.adas.binary_search_by(|a| a.as_str().cmp(ada)).ok()
    }

    pub fn get(&self, ada: &str) -> Option<&EmbeddingVector> {
        self.position(ada).map(|i| &self.vectors[i])
    }

    /// Exact `k` nearest stored vectors by cosine distance, ascending, ties
    /// by ADA.
    pub fn knn(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<Neighbor>, StoreError> {
        self.knn_filtered(query, k, |_| true)
    }

    /// Like [`knn`](Self::knn) but skipping the given ADA.
    pub fn knn_excluding(&self, query: &EmbeddingVector, k: usize, exclude: &str) -> Result<Vec<Neighbor>, StoreError> {
        self.knn_filtered(query, k, |ada| ada != exclude)
    }

    fn knn_filtered(
        &self,
        query: &EmbeddingVector,
        k: usize,
        keep: impl Fn(&str) -> bool + Sync,
    ) -> Result<Vec<Neighbor>, StoreError> {
        if k == 0 {
            return Err(StoreError::InvalidK);
        }
        if self.is_empty() {
            return Err(StoreError::EmptyStore);
        }
        if query.dimension() != self.dimension {
            return Err(StoreError::Dimension { expected: self.dimension, actual: query.dimension() });
        }
        let mut scored: Vec<(usize, f64)> = self
            .vectors
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(&self.adas[*i]))
            .map(|(i, v)| (i, cosine_distance(query, v)))
            .collect();
        let by_distance = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, by_distance);
            scored.truncate(k);
        }
        // Entries are in ADA order, so the index tie-break is the ADA tie-break.
        scored.sort_by(by_distance);
        Ok(scored.into_iter().map(|(i, d)| Neighbor { ada: self.adas[i].clone(), distance: d }).collect())
    }

    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.dimension as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u32).to_le_bytes())?;
        for ada in &self.adas {
            w.write_all(&(ada.len() as u32).to_le_bytes())?;
            w.write_all(ada.as_bytes())?;
        }
        for v in &self.vectors {
            for x in v.values() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, StoreError> {
        let mut u32buf = [0u8; 4];
        let mut read_u32 = |r: &mut dyn Read| -> io::Result<u32> {
            r.read_exact(&mut u32buf)?;
            Ok(u32::from_le_bytes(u32buf))
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(StoreError::BadMagic);
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(StoreError::UnsupportedVersion(version));
        }
        let dimension = read_u32(r)? as usize;
        let count = read_u32(r)? as usize;
        let mut adas = Vec::with_capacity(count);
        for _ in 0..count {
            let len = read_u32(r)? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            adas.push(String::from_utf8(buf).map_err(|_| StoreError::Malformed("ADA is not UTF-8".into()))?);
        }
        if adas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StoreError::Malformed("ADA table is not sorted".into()));
        }
        let mut vectors = Vec::with_capacity(count);
        let mut fbuf = [0u8; 4];
        for _ in 0..count {
            let mut values = Vec::with_capacity(dimension);
            for _ in 0..dimension {
                r.read_exact(&mut fbuf)?;
                let x = f32::from_le_bytes(fbuf);
                if !x.is_finite() {
                    return Err(StoreError::Malformed("non-finite component".into()));
                }
                values.push(x);
            }
            vectors.push(EmbeddingVector::from_stored(values));
        }
        Ok(Self { dimension, adas, vectors })
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedFailure {
    pub ada: String,
    pub reason: String,
}

/// Encodes every stored document (metadata header + body) into a store.
/// Documents the encoder rejects are reported and left out.
pub fn embed_corpus(layout: &CorpusLayout, encoder: &dyn Encoder) -> (VectorStore, Vec<EmbedFailure>) {
    let (docs, load_errors) = layout.load_all();
    let mut failures: Vec<EmbedFailure> =
        load_errors.into_iter().map(|e| EmbedFailure { ada: String::new(), reason: e.to_string() }).collect();
    let encoded: Vec<(String, Result<EmbeddingVector, EncodeError>)> =
        docs.par_iter().map(|d| (d.record.ada.clone(), encoder.encode(&d.content()))).collect();
    let mut entries = BTreeMap::new();
    for (ada, result) in encoded {
        match result {
            Ok(v) if v.dimension() == encoder.dimension() => {
                entries.insert(ada, v);
            }
            Ok(v) => failures.push(EmbedFailure {
                ada,
                reason: EncodeError::Dimension { expected: encoder.dimension(), actual: v.dimension() }.to_string(),
            }),
            Err(e) => failures.push(EmbedFailure { ada, reason: e.to_string() }),
        }
    }
    let store = VectorStore::from_entries(encoder.dimension(), entries).expect("dimensions checked above");
    (store, failures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DecisionRecord, DocumentSource, StoredDocument};
    use crate::embedding::ReferenceEncoder;

    fn unit(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::normalized(values).unwrap()
    }

    fn store_of(vs: &[(&str, &[f64])]) -> VectorStore {
        let entries = vs.iter().map(|(a, v)| (a.to_string(), unit(v))).collect();
        VectorStore::from_entries(vs[0].1.len(), entries).unwrap()
    }

    #[test]
    fn self_neighbor_and_orthogonality() {
        let s = store_of(&[("A", &[1.0, 0.0]), ("B", &[0.0, 1.0]), ("C", &[1.0, 1.0])]);
        let n = s.knn(s.get("B").unwrap(), 3).unwrap();
        assert_eq!(n[0].ada, "B");
        assert!(n[0].distance.abs() < 1e-9);
        assert!((n[2].distance - 1.0).abs() < 1e-9);
        assert_eq!(n[2].ada, "A");
    }

    #[test]
    fn ties_break_by_ada() {
        let s = store_of(&[("Z", &[1.0, 0.0]), ("A", &[1.0, 0.0]), ("M", &[0.0, 1.0])]);
        let n = s.knn(&unit(&[1.0, 0.0]), 2).unwrap();
        assert_eq!(n.iter().map(|x| x.ada.as_str()).collect::<Vec<_>>(), vec!["A", "Z"]);
    }

    #[test]
    fn errors() {
        let empty = VectorStore::default();
        assert!(matches!(empty.knn(&unit(&[1.0]), 1), Err(StoreError::EmptyStore)));
        let s = store_of(&[("A", &[1.0, 0.0])]);
        assert!(matches!(s.knn(&unit(&[1.0, 0.0]), 0), Err(StoreError::InvalidK)));
        assert!(matches!(s.knn(&unit(&[1.0]), 1), Err(StoreError::Dimension { .. })));
    }

    #[test]
    fn file_round_trip() {
        let s = store_of(&[("ΑΒΓΔ4690Ω8-ΑΗΖ", &[0.3, -0.2, 0.9]), ("B", &[0.0, 1.0, 0.0])]);
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + (4 + "ΑΒΓΔ4690Ω8-ΑΗΖ".len()) + (4 + 1) + 2 * 3 * 4);
        assert_eq!(VectorStore::read_from(&mut buf.as_slice()).unwrap(), s);
        buf[0] = b'X';
        assert!(matches!(VectorStore::read_from(&mut buf.as_slice()), Err(StoreError::BadMagic)));
    }

    struct FailOn(&'static str);
    impl Encoder for FailOn {
        fn dimension(&self) -> usize {
            ReferenceEncoder::default().dimension()
        }
        fn encode(&self, text: &str) -> Result<EmbeddingVector, EncodeError> {
            if text.contains(self.0) {
                Err(EncodeError::Failed("refused".into()))
            } else {
                ReferenceEncoder::default().encode(text)
            }
        }
    }

    fn corpus() -> (tempfile::TempDir, CorpusLayout) {
        let dir = tempfile::tempdir().unwrap();
        let layout = CorpusLayout::new(dir.path());
        for (ada, body) in [
            ("ΑΑΑΑ4690Ω8-ΑΑΑ", "πρώτο έγγραφο"),
            ("ΒΒΒΒ4690Ω8-ΒΒΒ", "δεύτερο έγγραφο"),
            ("ΓΓΓΓ4690Ω8-ΓΓΓ", "τρίτο έγγραφο"),
        ] {
            layout
                .store(&StoredDocument {
                    record: DecisionRecord::minimal(ada),
                    body_markdown: body.into(),
                    source: DocumentSource::PreextractedText,
                    extraction_tool: "t".into(),
                    stored_at: 0,
                })
                .unwrap();
        }
        (dir, layout)
    }

    #[test]
    fn embed_corpus_normalizes_and_is_deterministic() {
        let (_dir, layout) = corpus();
        let (store, failures) = embed_corpus(&layout, &ReferenceEncoder::default());
        assert!(failures.is_empty());
        assert_eq!(store.len(), 3);
        for v in store.vectors() {
            assert!((v.norm() - 1.0).abs() <= 1e-6);
        }
        let (again, _) = embed_corpus(&layout, &ReferenceEncoder::default());
        let (mut a, mut b) = (Vec::new(), Vec::new());
        store.write_to(&mut a).unwrap();
        again.write_to(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn encoder_failure_is_recorded() {
        let (_dir, layout) = corpus();
        let (store, failures) = embed_corpus(&layout, &FailOn("δεύτερο"));
        assert_eq!(store.len(), 2);
        assert_eq!(failures.len(), 1);
        assert_eq!(failures[0].ada, "ΒΒΒΒ4690Ω8-ΒΒΒ");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec3() -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-1.0f64..1.0, 3).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
        }

        proptest! {
            #[test]
            fn distance_symmetric_and_bounded(a in vec3(), b in vec3()) {
                let (u, v) = (unit(&a), unit(&b));
                let d1 = cosine_distance(&u, &v);
                let d2 = cosine_distance(&v, &u);
                prop_assert_eq!(d1, d2);
                prop_assert!((0.0..=2.0).contains(&d1));
            }
        }
    }
}
