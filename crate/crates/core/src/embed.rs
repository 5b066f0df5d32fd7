//! Sentence embedding behind a small trait so a real encoder can be plugged
//! in; the default is a hashed character-n-gram count vector, which is fast,
//! deterministic, and nonnegative (cosine stays in [0, 1]).

use sha2::{Digest, Sha256};

/// Maps a sentence to a fixed-width vector. Implementations must be
/// deterministic: equal inputs give equal outputs.
pub trait SentenceEncoder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Vec<f64>;
}

/// Hashed character n-gram counts over the lowercased text.
#[derive(Debug, Clone)]
pub struct HashedNgramEncoder {
    pub dim: usize,
    pub min_n: usize,
    pub max_n: usize,
}

impl Default for HashedNgramEncoder {
    fn default() -> Self {
        Self {
            dim: 512,
            min_n: 2,
            max_n: 4,
        }
    }
}

fn bucket(dim: usize, piece: &str) -> usize {
    let digest = Sha256::digest(piece.as_bytes());
    let mut x = [0u8; 8];
    x.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(x) % dim as u64) as usize
}

impl SentenceEncoder for HashedNgramEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        let chars: Vec<char> = text.to_lowercase().chars().collect();
        for n in self.min_n..=self.max_n {
            if chars.len() < n {
                continue;
            }
            for w in chars.windows(n) {
                let piece: String = w.iter().collect();
                v[bucket(self.dim, &piece)] += 1.0;
            }
        }
        v
    }
}

/// Raw cosine similarity; zero vectors yield 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
