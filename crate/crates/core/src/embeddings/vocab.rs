use std::collections::HashMap;

use crate::error::{Error, Result};

/// Word ↔ dense index mapping with corpus frequencies.
///
/// Indices are ordered by descending count, ties broken lexicographically.
/// A vocabulary read back from a vector file has no frequency information;
/// its counts are all zero and `min_count` is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    min_count: u64,
}

impl Vocabulary {
    pub fn build<D, S>(corpus: &[D], min_count: u64) -> Result<Self>
    where
        D: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for doc in corpus {
            for tok in doc.as_ref() {
                *freq.entry(tok.as_ref()).or_default() += 1;
            }
        }
        let mut entries: Vec<(&str, u64)> = freq.into_iter().filter(|&(_, c)| c >= min_count).collect();
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let (words, counts): (Vec<String>, Vec<u64>) =
            entries.into_iter().map(|(w, c)| (w.to_owned(), c)).unzip();
        Ok(Self::from_parts(words, counts, min_count))
    }

    /// Vocabulary in the given index order, without frequencies.
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        let counts = vec![0; words.len()];
        let vocab = Self::from_parts(words, counts, 0);
        if vocab.index.len() != vocab.words.len() {
            return Err(Error::Invalid("duplicate word in vocabulary".into()));
        }
        Ok(vocab)
    }

    /// Vocabulary with explicit frequencies, as stored in a model file.
    pub fn from_counts(words: Vec<String>, counts: Vec<u64>, min_count: u64) -> Result<Self> {
        if words.len() != counts.len() {
            return Err(Error::Invalid("word and count lists differ in length".into()));
        }
        let vocab = Self::from_parts(words, counts, min_count);
        if vocab.index.len() != vocab.words.len() {
            return Err(Error::Invalid("duplicate word in vocabulary".into()));
        }
        Ok(vocab)
    }

    fn from_parts(words: Vec<String>, counts: Vec<u64>, min_count: u64) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocabulary {
            words,
            counts,
            index,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Builds a vocabulary holding exactly the tokens seen at least `min_count`
/// times.
pub fn build_vocabulary<D, S>(corpus: &[D], min_count: u64) -> Result<Vocabulary>
where
    D: AsRef<[S]>,
    S: AsRef<str>,
{
    Vocabulary::build(corpus, min_count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(spec: &[(&str, usize)]) -> Vec<Vec<String>> {
        spec.iter()
            .map(|&(w, n)| vec![w.to_owned(); n])
            .collect()
    }

    #[test]
    fn threshold_rule() {
        let v = build_vocabulary(&corpus(&[("calor", 5), ("rare", 1)]), 2).unwrap();
        assert_eq!(v.words(), ["calor"]);
        assert_eq!(v.count(0), 5);
        assert!(v.index("rare").is_none());
    }

    #[test]
    fn min_count_one_keeps_everything() {
        let v = build_vocabulary(&corpus(&[("a", 1), ("b", 2), ("c", 1)]), 1).unwrap();
        assert_eq!(v.words(), ["b", "a", "c"]);
    }

    #[test]
    fn ties_are_lexicographic() {
        let v = build_vocabulary(&corpus(&[("ab", 3), ("aa", 3)]), 1).unwrap();
        assert!(v.index("aa").unwrap() < v.index("ab").unwrap());
    }

    #[test]
    fn empty_after_threshold() {
        let err = build_vocabulary(&corpus(&[("a", 1)]), 5).unwrap_err();
        assert!(matches!(err, Error::EmptyVocabulary { min_count: 5 }));
    }

    #[test]
    fn duplicate_words_rejected() {
        assert!(Vocabulary::from_words(vec!["a".into(), "a".into()]).is_err());
    }
}
