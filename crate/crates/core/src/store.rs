//! In-memory embedding store keyed by pair or class identifier and provenance.

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::types::{Embedding, Provenance};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StoreKey {
    pub id: String,
    pub provenance: Provenance,
}

impl StoreKey {
    pub fn new(id: impl Into<String>, provenance: Provenance) -> Self {
        Self {
            id: id.into(),
            provenance,
        }
    }
}

/// All embeddings share one dimension, fixed by the first insert.
/// Iteration follows insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingStore {
    dim: Option<usize>,
    entries: IndexMap<StoreKey, Embedding>,
}

impl EmbeddingStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// A store whose dimension is fixed before any insert.
    pub fn with_dim(dim: usize) -> Self {
        Self {
            dim: Some(dim),
            entries: IndexMap::new(),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts under `(id, embedding.provenance)`.
    pub fn put(&mut self, id: impl Into<String>, embedding: Embedding) -> Result<()> {
        if let Some(dim) = self.dim {
            if dim != embedding.dim() {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: embedding.dim(),
                });
            }
        }
        let key = StoreKey::new(id, embedding.provenance);
        if self.entries.contains_key(&key) {
            return Err(Error::DuplicateKey {
                id: key.id,
                provenance: key.provenance,
            });
        }
        self.dim = Some(embedding.dim());
        self.entries.insert(key, embedding);
        Ok(())
    }

    pub fn get(&self, id: &str, provenance: Provenance) -> Option<&Embedding> {
        // IndexMap lookups need an owned key; ids are short.
        self.entries.get(&StoreKey::new(id, provenance))
    }

    pub fn require(&self, id: &str, provenance: Provenance) -> Result<&Embedding> {
        self.get(id, provenance).ok_or_else(|| Error::MissingEmbedding {
            id: id.to_string(),
            provenance,
        })
    }

    pub fn contains(&self, id: &str, provenance: Provenance) -> bool {
        self.get(id, provenance).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StoreKey, &Embedding)> {
        self.entries.iter()
    }

    /// Ids holding an embedding of the given provenance, in insertion order.
    pub fn ids_with(&self, provenance: Provenance) -> impl Iterator<Item = &str> {
        self.entries
            .keys()
            .filter(move |k| k.provenance == provenance)
            .map(|k| k.id.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn emb(v: Vec<f32>) -> Embedding {
        Embedding::new(v, Provenance::MentionContext).unwrap()
    }

    #[test]
    fn first_insert_fixes_dimension() {
        let mut store = EmbeddingStore::new();
        assert_eq!(store.dim(), None);
        store.put("p1", emb(vec![0.0, 1.0, 2.0, 3.0])).unwrap();
        assert_eq!(store.dim(), Some(4));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut store = EmbeddingStore::new();
        store.put("p1", emb(vec![0.0; 4])).unwrap();
        assert!(matches!(
            store.put("p2", emb(vec![0.0; 3])),
            Err(Error::DimensionMismatch { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn duplicate_key_is_rejected_but_other_provenance_is_not() {
        let mut store = EmbeddingStore::new();
        store.put("p1", emb(vec![1.0, 2.0])).unwrap();
        assert!(matches!(
            store.put("p1", emb(vec![3.0, 4.0])),
            Err(Error::DuplicateKey { .. })
        ));
        let analog = Embedding::new(vec![5.0, 6.0], Provenance::AnalogousPattern).unwrap();
        store.put("p1", analog).unwrap();
        assert_eq!(store.len(), 2);
    }

    proptest! {
        #[test]
        fn put_then_get_is_bit_exact(v in prop::collection::vec(-1e30f32..1e30f32, 1..32)) {
            let mut store = EmbeddingStore::new();
            let e = emb(v.clone());
            store.put("k", e.clone()).unwrap();
            let got = store.get("k", Provenance::MentionContext).unwrap();
            prop_assert_eq!(got, &e);
            let bits: Vec<u32> = got.as_slice().iter().map(|x| x.to_bits()).collect();
            let want: Vec<u32> = v.iter().map(|x| x.to_bits()).collect();
            prop_assert_eq!(bits, want);
        }
    }
}
