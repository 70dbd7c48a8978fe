use std::cmp::Ordering;

use super::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

fn norm<F: Scalar>(v: &[F]) -> F {
    dot(v, v).sqrt()
}

/// `a·b / (‖a‖‖b‖)`, clamped to [-1, 1].
pub fn cosine_similarity<F: Scalar>(a: &[F], b: &[F]) -> Result<F> {
    assert_eq!(a.len(), b.len(), "vector dimensions differ");
    let (na, nb) = (norm(a), norm(b));
    if na == F::zero() || nb == F::zero() {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(a, b) / (na * nb)).max(-F::one()).min(F::one()))
}

impl<F: Scalar> EmbeddingMatrix<F> {
    /// Cosine between two vocabulary words. Operands are ordered by index,
    /// so the result is exactly symmetric.
    pub fn similarity(&self, a: &str, b: &str) -> Result<F> {
        let ia = self.index_of(a)?;
        let ib = self.index_of(b)?;
        let (lo, hi) = if ia <= ib { (ia, ib) } else { (ib, ia) };
        cosine_similarity(self.vector(lo), self.vector(hi))
    }

    fn index_of(&self, word: &str) -> Result<usize> {
        self.vocab
            .index(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.to_owned()))
    }

    /// The `k` words closest to `word` by cosine similarity of input
    /// vectors, excluding `word` itself. Ties go to the lower index.
    /// Zero vectors score 0 against everything.
    pub fn top_k_neighbors(&self, word: &str, k: usize) -> Result<Vec<(String, F)>> {
        let query = self.index_of(word)?;
        if k == 0 || k >= self.len() {
            return Err(Error::Invalid(format!(
                "k must be in 1..{} for this vocabulary, got {k}",
                self.len()
            )));
        }
        let q = self.vector(query);
        let qn = norm(q);
        if qn == F::zero() {
            return Err(Error::ZeroNorm);
        }

        let mut scored: Vec<(usize, F)> = (0..self.len())
            .filter(|&i| i != query)
            .map(|i| {
                let v = self.vector(i);
                let n = norm(v);
                let s = if n == F::zero() { F::zero() } else { dot(q, v) / (qn * n) };
                (i, s)
            })
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(i, s)| (self.vocab.word(i).to_owned(), s))
            .collect())
    }
}

pub fn top_k_neighbors<F: Scalar>(model: &EmbeddingMatrix<F>, word: &str, k: usize) -> Result<Vec<(String, F)>> {
    model.top_k_neighbors(word, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::Vocabulary;

    fn model(rows: &[[f64; 2]]) -> EmbeddingMatrix<f64> {
        let vocab = Vocabulary::from_words((0..rows.len()).map(|i| format!("w{i}")).collect()).unwrap();
        EmbeddingMatrix::from_input_vectors(vocab, 2, rows.iter().flatten().copied().collect())
    }

    #[test]
    fn closed_forms() {
        assert_eq!(cosine_similarity(&[3.0, -4.0], &[3.0, -4.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let s = cosine_similarity(&[1.0f64, 1.0], &[1.0, 0.0]).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn zero_norm_is_an_error() {
        assert!(matches!(cosine_similarity(&[0.0f32, 0.0], &[1.0, 0.0]), Err(Error::ZeroNorm)));
    }

    #[test]
    fn neighbors_exclude_query_and_cover_vocab() {
        let m = model(&[[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [-1.0, 0.0]]);
        let all = m.top_k_neighbors("w0", 3).unwrap();
        let names: Vec<_> = all.iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(names, ["w1", "w2", "w3"]);
        assert!(all.windows(2).all(|p| p[0].1 >= p[1].1));
    }

    #[test]
    fn ties_break_by_index() {
        let m = model(&[[1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [0.0, 2.0]]);
        let got = m.top_k_neighbors("w0", 3).unwrap();
        let names: Vec<_> = got.iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(names, ["w1", "w2", "w3"]);
    }

    #[test]
    fn lookup_errors() {
        let m = model(&[[1.0, 0.0], [0.0, 1.0]]);
        match m.top_k_neighbors("nope", 1) {
            Err(Error::OutOfVocabulary(w)) => assert_eq!(w, "nope"),
            other => panic!("{other:?}"),
        }
        assert!(m.top_k_neighbors("w0", 2).is_err());
        assert!(m.top_k_neighbors("w0", 0).is_err());
    }

    #[test]
    fn similarity_is_symmetric() {
        let m = model(&[[0.3, 0.7], [0.11, -0.9]]);
        assert_eq!(m.similarity("w0", "w1").unwrap(), m.similarity("w1", "w0").unwrap());
    }
}
