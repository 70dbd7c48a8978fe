//! CBOW with negative sampling.
//!
//! Training shards documents across worker threads that update the shared
//! input/output matrices without locks. Each matrix element is an atomic
//! cell accessed with relaxed ordering, so racing updates may be lost but
//! values are never torn. With one worker the run is fully deterministic.

use std::cell::Cell;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NegativeTable, Vocabulary};
use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, AtomicScalar, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct CbowConfig {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub workers: usize,
    pub negatives: usize,
    pub min_count: u64,
    pub initial_lr: f64,
    pub seed: u64,
    /// Frequent-word subsampling threshold; `None` disables subsampling.
    pub sample: Option<f64>,
}

impl Default for CbowConfig {
    fn default() -> Self {
        CbowConfig {
            dim: 100,
            window: 5,
            epochs: 20,
            workers: 10,
            negatives: 5,
            min_count: 5,
            initial_lr: 0.025,
            seed: 1,
            sample: None,
        }
    }
}

impl CbowConfig {
    pub const SUBSAMPLING_THRESHOLD: f64 = 1e-3;

    pub const KEYS: &'static [&'static str] = &[
        "dim",
        "window",
        "epochs",
        "workers",
        "negatives",
        "min_count",
        "initial_lr",
        "seed",
        "sample",
    ];

    /// Applies `key = value` settings on top of the defaults. `sample` takes
    /// a threshold or `off`. Unknown keys are rejected.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(Self::KEYS)?;
        let mut c = Self::default();
        kv.read_into("dim", &mut c.dim)?;
        kv.read_into("window", &mut c.window)?;
        kv.read_into("epochs", &mut c.epochs)?;
        kv.read_into("workers", &mut c.workers)?;
        kv.read_into("negatives", &mut c.negatives)?;
        kv.read_into("min_count", &mut c.min_count)?;
        kv.read_into("initial_lr", &mut c.initial_lr)?;
        kv.read_into("seed", &mut c.seed)?;
        if let Some(raw) = kv.get("sample") {
            c.sample = match raw {
                "off" | "none" => None,
                v => Some(
                    v.parse()
                        .map_err(|e| Error::Config(format!("sample = {v:?}: {e}")))?,
                ),
            };
        }
        c.validate()?;
        Ok(c)
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.set("dim", self.dim);
        kv.set("window", self.window);
        kv.set("epochs", self.epochs);
        kv.set("workers", self.workers);
        kv.set("negatives", self.negatives);
        kv.set("min_count", self.min_count);
        kv.set("initial_lr", self.initial_lr);
        kv.set("seed", self.seed);
        kv.set("sample", self.sample.map_or("off".to_owned(), |t| t.to_string()));
        kv
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_owned()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if self.min_count == 0 {
            return bad("min_count must be positive");
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return bad("initial_lr must be a positive number");
        }
        if let Some(t) = self.sample {
            if !(t > 0.0 && t.is_finite()) {
                return bad("sample threshold must be positive");
            }
        }
        Ok(())
    }
}

/// Trained word vectors. `input` rows are the published embeddings;
/// `output` rows are the negative-sampling context vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix<F> {
    pub vocab: Vocabulary,
    pub dim: usize,
    pub input: Vec<F>,
    pub output: Vec<F>,
}

impl<F: Scalar> EmbeddingMatrix<F> {
    /// Input vectors uniform in `[-0.5/dim, 0.5/dim]`, output vectors zero.
    pub fn initialize(vocab: Vocabulary, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = 0.5 / dim as f64;
        let n = vocab.len() * dim;
        let input = (0..n).map(|_| F::from_f64_lossy(rng.random_range(-half..half))).collect();
        EmbeddingMatrix {
            vocab,
            dim,
            input,
            output: vec![F::zero(); n],
        }
    }

    pub fn from_input_vectors(vocab: Vocabulary, dim: usize, input: Vec<F>) -> Self {
        assert_eq!(input.len(), vocab.len() * dim);
        let output = vec![F::zero(); input.len()];
        EmbeddingMatrix {
            vocab,
            dim,
            input,
            output,
        }
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vector(&self, idx: usize) -> &[F] {
        &self.input[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn output_vector(&self, idx: usize) -> &[F] {
        &self.output[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn lookup(&self, word: &str) -> Option<&[F]> {
        self.vocab.index(word).map(|i| self.vector(i))
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(&self.output).all(|v| v.is_finite())
    }

    /// One SGD step on a single (context → center) example.
    ///
    /// Returns the loss before the update. Panics if `context` is empty.
    pub fn cbow_step(&mut self, center: usize, context: &[usize], negatives: &[usize], lr: F) -> F {
        let dim = self.dim;
        let input = Cell::from_mut(self.input.as_mut_slice()).as_slice_of_cells();
        let output = Cell::from_mut(self.output.as_mut_slice()).as_slice_of_cells();
        let mut scratch = Scratch::new(dim);
        cbow_update(input, output, dim, center, context, negatives, lr, &mut scratch)
    }
}

/// Element access shared by plain (single-owner) and atomic storage.
pub(crate) trait Store<F> {
    fn get(&self, i: usize) -> F;
    fn set(&self, i: usize, v: F);
}

impl<F: Copy> Store<F> for [Cell<F>] {
    #[inline]
    fn get(&self, i: usize) -> F {
        self[i].get()
    }

    #[inline]
    fn set(&self, i: usize, v: F) {
        self[i].set(v)
    }
}

struct Shared<'a, F: Scalar>(&'a [F::Atomic]);

impl<F: Scalar> Store<F> for Shared<'_, F> {
    #[inline]
    fn get(&self, i: usize) -> F {
        self.0[i].load()
    }

    #[inline]
    fn set(&self, i: usize, v: F) {
        self.0[i].store(v)
    }
}

pub(crate) struct Scratch<F> {
    hidden: Vec<F>,
    grad: Vec<F>,
}

impl<F: Scalar> Scratch<F> {
    pub(crate) fn new(dim: usize) -> Self {
        Scratch {
            hidden: vec![F::zero(); dim],
            grad: vec![F::zero(); dim],
        }
    }
}

/// Loss is `-log σ(v'_c·h) - Σ log σ(-v'_n·h)` with `h` the mean context
/// input vector. The gradient w.r.t. `h` is split evenly over the context
/// words.
#[allow(clippy::too_many_arguments)]
pub(crate) fn cbow_update<F: Scalar, S: Store<F> + ?Sized>(
    input: &S,
    output: &S,
    dim: usize,
    center: usize,
    context: &[usize],
    negatives: &[usize],
    lr: F,
    scratch: &mut Scratch<F>,
) -> F {
    assert!(!context.is_empty(), "CBOW step needs a non-empty context");
    let inv_len = F::one() / F::from_usize(context.len()).unwrap();
    let h = &mut scratch.hidden;
    let grad_h = &mut scratch.grad;
    h.fill(F::zero());
    grad_h.fill(F::zero());

    for &c in context {
        let row = c * dim;
        for (k, hk) in h.iter_mut().enumerate() {
            *hk += input.get(row + k);
        }
    }
    for hk in h.iter_mut() {
        *hk *= inv_len;
    }

    let mut loss = F::zero();
    let targets = std::iter::once((center, true)).chain(negatives.iter().map(|&n| (n, false)));
    for (target, positive) in targets {
        let row = target * dim;
        let mut score = F::zero();
        for (k, &hk) in h.iter().enumerate() {
            score += output.get(row + k) * hk;
        }
        let label = if positive { F::one() } else { F::zero() };
        let p = sigmoid(score);
        let signed = if positive { p } else { F::one() - p };
        loss -= signed.ln();
        // descent direction on the score
        let g = label - p;
        for (k, (&hk, gk)) in h.iter().zip(grad_h.iter_mut()).enumerate() {
            let v = output.get(row + k);
            *gk += g * v;
            output.set(row + k, v + lr * g * hk);
        }
    }

    let scale = lr * inv_len;
    for &c in context {
        let row = c * dim;
        for (k, &gk) in grad_h.iter().enumerate() {
            input.set(row + k, input.get(row + k) + scale * gk);
        }
    }
    loss
}

/// Free-function form of [`EmbeddingMatrix::cbow_step`].
pub fn cbow_step<F: Scalar>(model: &mut EmbeddingMatrix<F>, center: usize, context: &[usize], negatives: &[usize], lr: F) -> F {
    model.cbow_step(center, context, negatives, lr)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    /// Mean per-example loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub vocab_size: usize,
    pub corpus_tokens: usize,
}

const PROGRESS_FLUSH: u64 = 256;
const MIN_LR_FRACTION: f64 = 1e-4;

struct Trainer<'a, F: Scalar> {
    config: &'a CbowConfig,
    dim: usize,
    input: &'a [F::Atomic],
    output: &'a [F::Atomic],
    negatives: &'a NegativeTable,
    keep_prob: Option<&'a [f64]>,
    processed: &'a AtomicU64,
    total_updates: f64,
}

impl<F: Scalar> Trainer<'_, F> {
    fn lr(&self) -> f64 {
        let progress = self.processed.load(Ordering::Relaxed) as f64 / (self.total_updates + 1.0);
        self.config.initial_lr * (1.0 - progress).max(MIN_LR_FRACTION)
    }

    /// Trains over one shard of documents; returns (loss sum, examples).
    fn run_shard(&self, docs: &[Vec<usize>], rng: &mut ChaCha8Rng) -> (f64, u64) {
        let input = Shared::<F>(self.input);
        let output = Shared::<F>(self.output);
        let mut scratch = Scratch::new(self.dim);
        let mut context = Vec::with_capacity(2 * self.config.window);
        let mut negs = Vec::with_capacity(self.config.negatives);
        let mut kept = Vec::new();
        let mut loss_sum = 0.0;
        let mut examples = 0;
        let mut pending = 0;
        let mut lr = F::from_f64_lossy(self.lr());

        for doc in docs {
            let sentence: &[usize] = match self.keep_prob {
                Some(keep) => {
                    kept.clear();
                    kept.extend(doc.iter().copied().filter(|&w| rng.random::<f64>() < keep[w]));
                    &kept
                }
                None => doc,
            };
            for (pos, &center) in sentence.iter().enumerate() {
                let reach = rng.random_range(1..=self.config.window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(sentence.len() - 1);
                context.clear();
                context.extend((lo..=hi).filter(|&j| j != pos).map(|j| sentence[j]));

                pending += 1;
                if pending == PROGRESS_FLUSH {
                    self.processed.fetch_add(pending, Ordering::Relaxed);
                    pending = 0;
                    lr = F::from_f64_lossy(self.lr());
                }
                if context.is_empty() {
                    continue;
                }
                self.negatives.sample_excluding(rng, center, self.config.negatives, &mut negs);
                let loss = cbow_update(&input, &output, self.dim, center, &context, &negs, lr, &mut scratch);
                loss_sum += loss.to_f64_lossy();
                examples += 1;
            }
        }
        self.processed.fetch_add(pending, Ordering::Relaxed);
        (loss_sum, examples)
    }
}

fn shard_seed(seed: u64, epoch: usize, worker: usize) -> u64 {
    seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (worker as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Trains CBOW embeddings on tokenized documents.
pub fn train_cbow<F, D, S>(corpus: &[D], config: &CbowConfig) -> Result<(EmbeddingMatrix<F>, TrainingLog)>
where
    F: Scalar,
    D: AsRef<[S]> + Sync,
    S: AsRef<str>,
{
    config.validate()?;
    let vocab = Vocabulary::build(corpus, config.min_count)?;
    let docs: Vec<Vec<usize>> = corpus
        .iter()
        .map(|d| d.as_ref().iter().filter_map(|t| vocab.index(t.as_ref())).collect::<Vec<_>>())
        .filter(|d| !d.is_empty())
        .collect();
    let corpus_tokens: usize = docs.iter().map(Vec::len).sum();
    if corpus_tokens < 2 {
        return Err(Error::CorpusTooShort { tokens: corpus_tokens });
    }

    let negatives = NegativeTable::new(&vocab);
    let keep_prob: Option<Vec<f64>> = config.sample.map(|t| {
        let total = vocab.total_count() as f64;
        vocab
            .counts()
            .iter()
            .map(|&c| {
                let f = c as f64 / total;
                ((f / t).sqrt() + 1.0) * t / f
            })
            .collect()
    });

    let init = EmbeddingMatrix::<F>::initialize(vocab, config.dim, config.seed);
    let input: Vec<F::Atomic> = init.input.iter().map(|&v| F::Atomic::new(v)).collect();
    let output: Vec<F::Atomic> = init.output.iter().map(|&v| F::Atomic::new(v)).collect();
    let processed = AtomicU64::new(0);
    let trainer = Trainer::<F> {
        config,
        dim: config.dim,
        input: &input,
        output: &output,
        negatives: &negatives,
        keep_prob: keep_prob.as_deref(),
        processed: &processed,
        total_updates: (config.epochs * corpus_tokens) as f64,
    };

    let workers = config.workers.min(docs.len());
    let shard_len = docs.len().div_ceil(workers);
    let mut log = TrainingLog {
        epoch_losses: Vec::with_capacity(config.epochs),
        vocab_size: init.vocab.len(),
        corpus_tokens,
    };
    for epoch in 0..config.epochs {
        let results: Vec<(f64, u64)> = if workers == 1 {
            let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(config.seed, epoch, 0));
            vec![trainer.run_shard(&docs, &mut rng)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = docs
                    .chunks(shard_len)
                    .enumerate()
                    .map(|(w, shard)| {
                        let trainer = &trainer;
                        scope.spawn(move || {
                            let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(config.seed, epoch, w));
                            trainer.run_shard(shard, &mut rng)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            })
        };
        let (loss, n) = results.iter().fold((0.0, 0), |(l, c), &(l2, c2)| (l + l2, c + c2));
        log.epoch_losses.push(if n > 0 { loss / n as f64 } else { 0.0 });
    }

    let model = EmbeddingMatrix {
        input: input.iter().map(AtomicScalar::load).collect(),
        output: output.iter().map(AtomicScalar::load).collect(),
        ..init
    };
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(dim: usize, words: usize) -> EmbeddingMatrix<f64> {
        let vocab = Vocabulary::from_words((0..words).map(|i| format!("w{i}")).collect()).unwrap();
        EmbeddingMatrix::initialize(vocab, dim, 11)
    }

    #[test]
    fn all_zero_single_negative_loss() {
        let mut m = toy(4, 3);
        m.input.fill(0.0);
        let loss = m.cbow_step(0, &[1], &[2], 0.1);
        assert!((loss - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn step_decreases_loss() {
        let mut m = toy(10, 8);
        for (i, v) in m.output.iter_mut().enumerate() {
            *v = ((i * 37 % 11) as f64 - 5.0) / 20.0;
        }
        let before = m.cbow_step(3, &[0, 1, 5], &[2, 6], 0.05);
        let mut probe = m.clone();
        let after = probe.cbow_step(3, &[0, 1, 5], &[2, 6], 0.0);
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    #[should_panic]
    fn empty_context_panics() {
        toy(2, 2).cbow_step(0, &[], &[1], 0.1);
    }

    #[test]
    fn config_key_values() {
        let c = CbowConfig {
            dim: 50,
            sample: Some(1e-3),
            ..Default::default()
        };
        assert_eq!(CbowConfig::from_key_values(&c.to_key_values()).unwrap(), c);
        let kv = KeyValues::parse("c", b"sample = off\nepochs = 30\n").unwrap();
        let c = CbowConfig::from_key_values(&kv).unwrap();
        assert_eq!((c.sample, c.epochs), (None, 30));
        let kv = KeyValues::parse("c", b"dims = 3\n").unwrap();
        assert!(CbowConfig::from_key_values(&kv).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(CbowConfig::default().validate().is_ok());
        let bad = CbowConfig {
            window: 0,
            ..CbowConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn tiny_corpus_rejected() {
        let corpus = vec![vec!["solo".to_string()]];
        let cfg = CbowConfig {
            min_count: 1,
            ..CbowConfig::default()
        };
        let err = train_cbow::<f32, _, _>(&corpus, &cfg).unwrap_err();
        assert!(matches!(err, Error::CorpusTooShort { tokens: 1 }));
    }

    #[test]
    fn initialization_ranges() {
        let m = toy(8, 20);
        assert!(m.input.iter().all(|v| v.abs() <= 0.5 / 8.0));
        assert!(m.output.iter().all(|&v| v == 0.0));
    }
}
