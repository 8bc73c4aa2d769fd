use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Hidden vectors at the two mask positions of one text.
pub type MaskVectors = [Vec<f32>; 2];

/// Source of mask-position vectors, typically a masked language model.
///
/// Implementations must be deterministic for identical input and return
/// finite vectors of length [`EmbeddingProvider::dim`].
pub trait EmbeddingProvider: Send + Sync {
    fn mask_token(&self) -> &str;

    fn dim(&self) -> usize;

    /// One result per text, in input order.
    fn embed_masked(&self, texts: &[String]) -> Result<Vec<MaskVectors>>;
}

/// Deterministic offline provider.
///
/// Each mask vector is the normalized sum of hashed vectors for the text's
/// non-mask words plus a term for the word preceding that mask, so texts that
/// share vocabulary land near each other. Useful for dry runs and tests; it
/// has no linguistic knowledge.
#[derive(Debug, Clone)]
pub struct HashingProvider {
    dim: usize,
    mask_token: String,
}

impl HashingProvider {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("provider dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            mask_token: crate::probing::MASK_PLACEHOLDER.to_string(),
        })
    }

    fn hashed(&self, word: &str) -> Vec<f64> {
        let seed: [u8; 32] = Sha256::digest(word.as_bytes()).into();
        let mut rng = ChaCha8Rng::from_seed(seed);
        (0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn embed_one(&self, text: &str) -> Result<MaskVectors> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let mask_at: Vec<usize> = words
            .iter()
            .enumerate()
            .filter(|(_, w)| **w == self.mask_token)
            .map(|(i, _)| i)
            .collect();
        if mask_at.len() != 2 {
            return Err(Error::Provider(format!(
                "text must contain exactly two `{}` tokens, found {}",
                self.mask_token,
                mask_at.len()
            )));
        }
        let mut context = vec![0.0f64; self.dim];
        for w in words.iter().filter(|w| **w != self.mask_token) {
            for (c, h) in context.iter_mut().zip(self.hashed(&w.to_lowercase())) {
                *c += h;
            }
        }
        let norm = context.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        let make = |slot: usize, at: usize| {
            let prev = if at == 0 { "<s>" } else { words[at - 1] };
            let local = self.hashed(&format!("{slot}|{}", prev.to_lowercase()));
            context
                .iter()
                .zip(local)
                .map(|(c, l)| (c / norm + 0.25 * l) as f32)
                .collect::<Vec<f32>>()
        };
        Ok([make(0, mask_at[0]), make(1, mask_at[1])])
    }
}

impl EmbeddingProvider for HashingProvider {
    fn mask_token(&self) -> &str {
        &self.mask_token
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_masked(&self, texts: &[String]) -> Result<Vec<MaskVectors>> {
        texts.iter().map(|t| self.embed_one(t)).collect()
    }
}
