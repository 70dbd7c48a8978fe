use rand::Rng;

use super::Vocabulary;

pub const UNIGRAM_POWER: f64 = 0.75;

/// Alias-method sampler for the smoothed unigram distribution
/// `P(w) ∝ count(w)^0.75`.
#[derive(Clone, Debug)]
pub struct NegativeTable {
    probabilities: Vec<f64>,
    accept: Vec<f64>,
    alias: Vec<u32>,
}

impl NegativeTable {
    pub fn new(vocab: &Vocabulary) -> Self {
        Self::from_counts(vocab.counts())
    }

    /// Words with a zero count are treated as if seen once, so every entry
    /// keeps a positive probability.
    pub fn from_counts(counts: &[u64]) -> Self {
        assert!(!counts.is_empty(), "negative table needs a non-empty vocabulary");
        let weights: Vec<f64> = counts
            .iter()
            .map(|&c| (c.max(1) as f64).powf(UNIGRAM_POWER))
            .collect();
        let total: f64 = weights.iter().sum();
        let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();

        // Vose's alias method.
        let n = probabilities.len();
        let mut scaled: Vec<f64> = probabilities.iter().map(|p| p * n as f64).collect();
        let mut accept = vec![1.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            accept[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for i in small.into_iter().chain(large) {
            accept[i] = 1.0;
        }

        NegativeTable {
            probabilities,
            accept,
            alias,
        }
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probability(&self, idx: usize) -> f64 {
        self.probabilities[idx]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.accept.len());
        if rng.random::<f64>() < self.accept[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }

    /// Draws `k` samples, redrawing any that hit `exclude`. Returns fewer
    /// than `k` only when `exclude` is the sole word.
    pub fn sample_excluding<R: Rng + ?Sized>(&self, rng: &mut R, exclude: usize, k: usize, out: &mut Vec<usize>) {
        out.clear();
        if self.len() < 2 {
            return;
        }
        while out.len() < k {
            let s = self.sample(rng);
            if s != exclude {
                out.push(s);
            }
        }
    }
}

/// Builds the negative-sampling distribution for a vocabulary.
pub fn build_negative_table(vocab: &Vocabulary) -> NegativeTable {
    NegativeTable::new(vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_counts() {
        let t = NegativeTable::from_counts(&[1, 1]);
        assert_eq!(t.probability(0), 0.5);
        assert_eq!(t.probability(1), 0.5);
    }

    #[test]
    fn single_word() {
        let t = NegativeTable::from_counts(&[42]);
        assert_eq!(t.probability(0), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(t.sample(&mut rng), 0);
        let mut out = Vec::new();
        t.sample_excluding(&mut rng, 0, 5, &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn closed_form_sixteen_to_one() {
        let t = NegativeTable::from_counts(&[16, 1]);
        assert!((t.probability(0) - 8.0 / 9.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| t.sample(&mut rng) == 0).count();
        assert!((hits as f64 / n as f64 - 8.0 / 9.0).abs() < 0.01);
    }

    #[test]
    fn probabilities_normalized_and_positive() {
        let counts: Vec<u64> = (0..500).map(|i| (i * 7919 % 1000) as u64).collect();
        let t = NegativeTable::from_counts(&counts);
        let total: f64 = t.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(t.probabilities().iter().all(|&p| p > 0.0));
    }

    #[test]
    fn exclusion_is_respected() {
        let t = NegativeTable::from_counts(&[100, 1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut out = Vec::new();
        for _ in 0..100 {
            t.sample_excluding(&mut rng, 0, 5, &mut out);
            assert_eq!(out.len(), 5);
            assert!(!out.contains(&0));
        }
    }
}
