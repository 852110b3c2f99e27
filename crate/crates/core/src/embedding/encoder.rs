use serde::{Deserialize, Serialize};

/// Dimension of [`ReferenceEncoder`] vectors.
pub const REFERENCE_DIMENSION: usize = 128;

/// A unit-length embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EncodeError {
    #[error("vector has non-finite components")]
    NonFinite,
    #[error("vector has zero norm")]
    ZeroNorm,
    #[error("expected dimension {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("encoder failed: {0}")]
    Failed(String),
}

impl EmbeddingVector {
    /// Scales `raw` to unit L2 norm.
    pub fn normalized(raw: &[f64]) -> Result<Self, EncodeError> {
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(EncodeError::NonFinite);
        }
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(EncodeError::ZeroNorm);
        }
        Ok(Self { values: raw.iter().map(|v| (v / norm) as f32).collect() })
    }

    /// Wraps stored values that are already unit length.
    pub(crate) fn from_stored(values: Vec<f32>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(&a, &b)| f64::from(a) * f64::from(b)).sum()
    }
}

/// Deterministic text → vector mapping.
pub trait Encoder: Send + Sync {
    fn dimension(&self) -> usize;
    fn encode(&self, text: &str) -> Result<EmbeddingVector, EncodeError>;
}

/// Seeded random projection of character trigram counts.
///
/// Each trigram of the lowercased, whitespace-collapsed text is hashed; the
/// hash seeds a ±1 pattern across the output dimensions and the patterns are
/// summed with the trigram counts as weights.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceEncoder {
    pub seed: u64,
    pub dimension: usize,
}

impl Default for ReferenceEncoder {
    fn default() -> Self {
        Self { seed: 0x5eed, dimension: REFERENCE_DIMENSION }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a64(chars: &[char], seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for c in chars {
        h ^= u64::from(*c as u32);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl Encoder for ReferenceEncoder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn encode(&self, text: &str) -> Result<EmbeddingVector, EncodeError> {
        let normalized: Vec<char> = text
            .split_whitespace()
            .flat_map(|w| std::iter::once(' ').chain(w.chars().flat_map(char::to_lowercase)))
            .chain(std::iter::once(' '))
            .collect();
        let mut acc = vec![0f64; self.dimension];
        if normalized.len() >= 3 {
            for gram in normalized.windows(3) {
                let h = fnv1a64(gram, self.seed);
                let mut bits = 0u64;
                for (j, slot) in acc.iter_mut().enumerate() {
                    if j % 64 == 0 {
                        bits = splitmix64(h.wrapping_add(j as u64));
                    }
                    *slot += if bits & (1 << (j % 64)) != 0 { 1.0 } else { -1.0 };
                }
            }
        }
        EmbeddingVector::normalized(&acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_vectors_are_unit_and_deterministic() {
        let enc = ReferenceEncoder::default();
        let a = enc.encode("Απόφαση ανάληψης υποχρέωσης").unwrap();
        assert_eq!(a.dimension(), REFERENCE_DIMENSION);
        assert!((a.norm() - 1.0).abs() <= 1e-6);
        assert_eq!(a, enc.encode("Απόφαση   ανάληψης\nυποχρέωσης").unwrap());
    }

    #[test]
    fn empty_text_fails() {
        assert_eq!(ReferenceEncoder::default().encode("   "), Err(EncodeError::ZeroNorm));
    }

    #[test]
    fn similar_texts_are_closer_than_unrelated() {
        let enc = ReferenceEncoder::default();
        let a = enc.encode("Ανάθεση σύμβασης καθαριότητας του δημαρχείου για το έτος 2021").unwrap();
        let b = enc.encode("Ανάθεση σύμβασης καθαριότητας του σχολείου για το έτος 2021").unwrap();
        let c = enc.encode("Procurement of laboratory reagents and consumables").unwrap();
        assert!(a.dot(&b) > a.dot(&c));
    }

    #[test]
    fn normalization_rejects_bad_input() {
        assert_eq!(EmbeddingVector::normalized(&[0.0, 0.0]), Err(EncodeError::ZeroNorm));
        assert_eq!(EmbeddingVector::normalized(&[f64::NAN, 1.0]), Err(EncodeError::NonFinite));
        let v = EmbeddingVector::normalized(&[3.0, 4.0]).unwrap();
        assert_eq!(v.values(), &[0.6, 0.8]);
    }
}
