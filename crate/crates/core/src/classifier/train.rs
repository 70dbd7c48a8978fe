use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adamax::AdamaxParams;
use super::data::LabeledExample;
use super::early_stopping::{Decision, EarlyStopping};
use super::model::{BiLstmModel, PAD, RESERVED_ROWS, UNK};
use super::network::{evaluation_loss, forward, loss_and_gradients};
use super::SentimentLabel;
use crate::embeddings::Vocabulary;
use crate::error::{Error, Result};
use crate::preprocess::Preprocessor;
use crate::scalar::Scalar;

/// Maps tokens to embedding-table rows: vocabulary index + 2, or UNK.
/// The result is left-padded with PAD to `max_seq_len`; longer inputs keep
/// their last `max_seq_len` tokens.
pub fn encode_sequence<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, max_seq_len: usize) -> Vec<usize> {
    assert!(max_seq_len >= 1, "max_seq_len must be positive");
    let kept = &tokens[tokens.len().saturating_sub(max_seq_len)..];
    let mut out = vec![PAD; max_seq_len - kept.len()];
    out.extend(
        kept.iter()
            .map(|t| vocab.index(t.as_ref()).map_or(UNK, |i| i + RESERVED_ROWS)),
    );
    out
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<F: PartialOrd + Copy>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

struct Encoded {
    seqs: Vec<Vec<usize>>,
    labels: Vec<SentimentLabel>,
}

fn encode_all<F>(model: &BiLstmModel<F>, examples: &[LabeledExample]) -> Encoded {
    Encoded {
        seqs: examples
            .iter()
            .map(|e| encode_sequence(&e.tokens, &model.vocab, model.config.max_seq_len))
            .collect(),
        labels: examples.iter().map(|e| e.label).collect(),
    }
}

fn accuracy<F: Scalar>(model: &BiLstmModel<F>, data: &Encoded) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let probs = forward(model, &data.seqs, false, &mut rng);
    let correct = probs
        .iter()
        .zip(&data.labels)
        .filter(|(p, l)| argmax(&p[..]) == l.index())
        .count();
    correct as f64 / data.labels.len() as f64
}

/// Trains with the model's own configuration; see [`train_with`].
pub fn train<F: Scalar>(
    model: BiLstmModel<F>,
    train_set: &[LabeledExample],
    dev_set: &[LabeledExample],
) -> Result<(BiLstmModel<F>, TrainLog)> {
    train_with(model, train_set, dev_set, |_| {})
}

/// Mini-batch Adamax training with early stopping on validation loss.
/// Returns the parameters of the best validation epoch. `on_epoch` sees
/// each epoch's record as soon as it is complete.
pub fn train_with<F: Scalar>(
    mut model: BiLstmModel<F>,
    train_set: &[LabeledExample],
    dev_set: &[LabeledExample],
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(BiLstmModel<F>, TrainLog)> {
    model.config.validate()?;
    if train_set.is_empty() || dev_set.is_empty() {
        return Err(Error::Invalid("training and validation sets must be non-empty".into()));
    }
    let cfg = model.config.clone();
    let hp = AdamaxParams::with_lr(cfg.lr);
    let train_data = encode_all(&model, train_set);
    let dev_data = encode_all(&model, dev_set);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut stopper = EarlyStopping::new(cfg.early_stop_min_delta, cfg.early_stop_patience);
    let mut best = model.clone();
    let mut log = TrainLog::default();
    let mut batch_id = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let seqs: Vec<Vec<usize>> = chunk.iter().map(|&i| train_data.seqs[i].clone()).collect();
            let labels: Vec<SentimentLabel> = chunk.iter().map(|&i| train_data.labels[i]).collect();
            let (loss, grads) = loss_and_gradients(&model, &seqs, &labels, true, &mut rng, batch_id)?;
            model
                .optimizer
                .apply(&mut model.params, &grads, &hp, cfg.freeze_embeddings);
            loss_sum += loss.to_f64_lossy() * chunk.len() as f64;
            batch_id += 1;
        }

        let val_loss = evaluation_loss(&model, &dev_data.seqs, &dev_data.labels).to_f64_lossy();
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteValidation { epoch, loss: val_loss });
        }
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_accuracy: accuracy(&model, &train_data),
            val_loss,
            val_accuracy: accuracy(&model, &dev_data),
        };
        on_epoch(&record);
        log.epochs.push(record);

        match stopper.observe(val_loss) {
            Decision::Improved => best = model.clone(),
            Decision::Continue => {}
            Decision::Stop => {
                log.stopped_early = true;
                break;
            }
        }
    }
    log.best_epoch = stopper.best_epoch();
    Ok((best, log))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub label: SentimentLabel,
    pub probabilities: [f64; SentimentLabel::COUNT],
    /// Preprocessing produced no tokens; the prediction is the all-PAD one.
    pub empty_input: bool,
}

/// Predictions for pre-tokenized inputs, in input order.
pub fn predict_tokens<F: Scalar, S: AsRef<str>>(model: &BiLstmModel<F>, inputs: &[Vec<S>]) -> Vec<Prediction> {
    let seqs: Vec<Vec<usize>> = inputs
        .iter()
        .map(|t| encode_sequence(t, &model.vocab, model.config.max_seq_len))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    forward(model, &seqs, false, &mut rng)
        .into_iter()
        .zip(inputs)
        .map(|(p, tokens)| {
            let probabilities = p.map(|v| v.to_f64_lossy());
            Prediction {
                label: SentimentLabel::from_index(argmax(&probabilities)).expect("three classes"),
                probabilities,
                empty_input: tokens.is_empty(),
            }
        })
        .collect()
}

/// Preprocesses `text` and classifies it.
pub fn predict<F: Scalar>(model: &BiLstmModel<F>, text: &str, pre: &Preprocessor) -> Prediction {
    let tokens: Vec<String> = pre.tokens(text).into_iter().map(|t| t.text).collect();
    predict_tokens(model, &[tokens]).pop().expect("one prediction")
}
