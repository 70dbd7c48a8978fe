//! Forward and backward passes of the full classifier.
//!
//! embedding → `lstm_layers` × bidirectional LSTM (dropout on each layer's
//! output) → last-step state `[h_fwd(T) ; h_bwd(1)]` → dense + ReLU →
//! dropout → dense → softmax.
//!
//! PAD positions are skipped by the recurrences, which is the same as
//! carrying the state through them unchanged. Examples are processed
//! independently and in parallel; gradients are reduced in example order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::lstm::{self, LstmGrads, LstmParams, StepCache};
use super::model::{BiLstmModel, Gradients, Layout, PAD};
use super::SentimentLabel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Examples per parallel work unit. Fixed so that the reduction order does
/// not depend on the thread count.
const CHUNK: usize = 4;

pub type Probabilities<F> = [F; SentimentLabel::COUNT];

struct LayerTrace<F> {
    /// Layer input per time step (after the previous layer's dropout).
    input: Vec<Vec<F>>,
    fwd: Vec<StepCache<F>>,
    /// Backward-direction caches in processing order (last token first).
    bwd: Vec<StepCache<F>>,
    /// Inverted-dropout scale per output element; `None` when inactive.
    mask: Option<Vec<Vec<F>>>,
}

struct Trace<F> {
    tokens: Vec<usize>,
    layers: Vec<LayerTrace<F>>,
    final_raw: Vec<F>,
    final_mask: Option<Vec<F>>,
    final_in: Vec<F>,
    z1: Vec<F>,
    dense_mask: Option<Vec<F>>,
    a1: Vec<F>,
    logits: Vec<F>,
}

fn dropout_mask<F: Scalar>(rng: &mut Option<ChaCha8Rng>, rate: f64, len: usize) -> Option<Vec<F>> {
    let rng = rng.as_mut()?;
    if rate <= 0.0 {
        return None;
    }
    let keep = F::from_f64_lossy(1.0 / (1.0 - rate));
    Some(
        (0..len)
            .map(|_| if rng.random::<f64>() < rate { F::zero() } else { keep })
            .collect(),
    )
}

fn apply_mask<F: Scalar>(v: &mut [F], mask: Option<&Vec<F>>) {
    if let Some(m) = mask {
        v.iter_mut().zip(m).for_each(|(a, &s)| *a *= s);
    }
}

fn lstm_params<F: Scalar>(model: &BiLstmModel<F>, layer: usize, backward: bool) -> LstmParams<'_, F> {
    let [w, u, b] = model.layout().lstm(layer, backward);
    LstmParams {
        w: &model.params[w],
        u: &model.params[u],
        b: &model.params[b],
    }
}

fn log_softmax<F: Scalar>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<F>().ln();
    logits.iter().map(|&z| z - lse).collect()
}

fn softmax<F: Scalar>(logits: &[F]) -> Probabilities<F> {
    let ls = log_softmax(logits);
    let mut p = [F::zero(); SentimentLabel::COUNT];
    for (pi, l) in p.iter_mut().zip(ls) {
        *pi = l.exp();
    }
    p
}

fn forward_trace<F: Scalar>(model: &BiLstmModel<F>, seq: &[usize], mut rng: Option<ChaCha8Rng>) -> Trace<F> {
    let cfg = &model.config;
    let hd = cfg.lstm_hidden;
    let table = &model.params[Layout::EMBEDDING];
    let tokens: Vec<usize> = seq.iter().copied().filter(|&t| t != PAD).collect();
    assert!(
        tokens.iter().all(|&t| t < table.rows),
        "token index outside the embedding table"
    );
    let steps = tokens.len();

    let mut layers = Vec::with_capacity(cfg.lstm_layers);
    let mut input: Vec<Vec<F>> = tokens.iter().map(|&t| table.row(t).to_vec()).collect();
    let mut final_raw = vec![F::zero(); 2 * hd];
    for layer in 0..cfg.lstm_layers {
        let xs: Vec<&[F]> = input.iter().map(Vec::as_slice).collect();
        let fwd = lstm::run(&xs, lstm_params(model, layer, false));
        let rev: Vec<&[F]> = xs.iter().rev().copied().collect();
        let bwd = lstm::run(&rev, lstm_params(model, layer, true));

        let last = layer + 1 == cfg.lstm_layers;
        if last {
            if steps > 0 {
                final_raw[..hd].copy_from_slice(&fwd[steps - 1].h);
                final_raw[hd..].copy_from_slice(&bwd[steps - 1].h);
            }
            layers.push(LayerTrace {
                input,
                fwd,
                bwd,
                mask: None,
            });
            break;
        }

        let mut mask = rng.as_ref().map(|_| Vec::with_capacity(steps));
        let mut output = Vec::with_capacity(steps);
        for t in 0..steps {
            let mut y = Vec::with_capacity(2 * hd);
            y.extend_from_slice(&fwd[t].h);
            y.extend_from_slice(&bwd[steps - 1 - t].h);
            let m = dropout_mask(&mut rng, cfg.lstm_dropout, 2 * hd);
            apply_mask(&mut y, m.as_ref());
            if let (Some(masks), Some(m)) = (mask.as_mut(), m) {
                masks.push(m);
            }
            output.push(y);
        }
        if cfg.lstm_dropout <= 0.0 {
            mask = None;
        }
        layers.push(LayerTrace { input, fwd, bwd, mask });
        input = output;
    }

    let final_mask = dropout_mask(&mut rng, cfg.lstm_dropout, 2 * hd);
    let mut final_in = final_raw.clone();
    apply_mask(&mut final_in, final_mask.as_ref());

    let [w1, b1] = model.layout().dense1();
    let mut z1 = model.params[b1].data.clone();
    model.params[w1].matvec_into(&final_in, &mut z1, true);
    let dense_mask = dropout_mask(&mut rng, cfg.dense1_dropout, z1.len());
    let mut a1: Vec<F> = z1.iter().map(|&z| z.max(F::zero())).collect();
    apply_mask(&mut a1, dense_mask.as_ref());

    let [w2, b2] = model.layout().output();
    let mut logits = model.params[b2].data.clone();
    model.params[w2].matvec_into(&a1, &mut logits, true);

    Trace {
        tokens,
        layers,
        final_raw,
        final_mask,
        final_in,
        z1,
        dense_mask,
        a1,
        logits,
    }
}

fn lstm_grads<'a, F: Scalar>(grads: &'a mut Gradients<F>, layout: Layout, layer: usize, backward: bool) -> LstmGrads<'a, F> {
    let [w, u, b] = layout.lstm(layer, backward);
    let [gw, gu, gb] = grads.dense.get_disjoint_mut([w, u, b]).expect("distinct parameter blocks");
    LstmGrads { w: gw, u: gu, b: gb }
}

/// Backpropagates `dL/dlogits` through one trace, accumulating into `grads`.
fn backward_trace<F: Scalar>(model: &BiLstmModel<F>, trace: &Trace<F>, dlogits: &[F], grads: &mut Gradients<F>) {
    let layout = model.layout();
    let hd = model.config.lstm_hidden;

    let [w2, b2] = layout.output();
    grads.dense[w2].outer_acc(dlogits, &trace.a1);
    grads.dense[b2].data.iter_mut().zip(dlogits).for_each(|(g, &d)| *g += d);
    let mut da1 = vec![F::zero(); trace.a1.len()];
    model.params[w2].matvec_t_acc(dlogits, &mut da1);
    apply_mask(&mut da1, trace.dense_mask.as_ref());
    let dz1: Vec<F> = da1
        .iter()
        .zip(&trace.z1)
        .map(|(&d, &z)| if z > F::zero() { d } else { F::zero() })
        .collect();

    let [w1, b1] = layout.dense1();
    grads.dense[w1].outer_acc(&dz1, &trace.final_in);
    grads.dense[b1].data.iter_mut().zip(&dz1).for_each(|(g, &d)| *g += d);
    let mut dfinal = vec![F::zero(); trace.final_in.len()];
    model.params[w1].matvec_t_acc(&dz1, &mut dfinal);
    apply_mask(&mut dfinal, trace.final_mask.as_ref());
    debug_assert_eq!(dfinal.len(), trace.final_raw.len());

    let steps = trace.tokens.len();
    if steps == 0 {
        return;
    }

    // Gradient w.r.t. each layer's (dropped-out) output, time-major.
    let mut d_out: Vec<Vec<F>> = vec![vec![F::zero(); 2 * hd]; steps];
    d_out[steps - 1][..hd].copy_from_slice(&dfinal[..hd]);
    d_out[0][hd..].copy_from_slice(&dfinal[hd..]);

    for layer in (0..trace.layers.len()).rev() {
        let lt = &trace.layers[layer];
        if let Some(mask) = &lt.mask {
            for (d, m) in d_out.iter_mut().zip(mask) {
                apply_mask(d, Some(m));
            }
        }
        let xs: Vec<&[F]> = lt.input.iter().map(Vec::as_slice).collect();
        let dh_fwd: Vec<Vec<F>> = d_out.iter().map(|d| d[..hd].to_vec()).collect();
        let dx_fwd = lstm::backward(
            &xs,
            &lt.fwd,
            &dh_fwd,
            lstm_params(model, layer, false),
            &mut lstm_grads(grads, layout, layer, false),
        );
        let rev: Vec<&[F]> = xs.iter().rev().copied().collect();
        let dh_bwd: Vec<Vec<F>> = d_out.iter().rev().map(|d| d[hd..].to_vec()).collect();
        let dx_bwd = lstm::backward(
            &rev,
            &lt.bwd,
            &dh_bwd,
            lstm_params(model, layer, true),
            &mut lstm_grads(grads, layout, layer, true),
        );
        d_out = dx_fwd
            .into_iter()
            .zip(dx_bwd.into_iter().rev())
            .map(|(a, b)| a.into_iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
    }

    for (&tok, d) in trace.tokens.iter().zip(&d_out) {
        for (g, &v) in grads.embedding_row(tok).iter_mut().zip(d) {
            *g += v;
        }
    }
}

fn example_rngs<R: RngCore + ?Sized>(n: usize, train_mode: bool, rng: &mut R) -> Vec<Option<u64>> {
    (0..n).map(|_| train_mode.then(|| rng.next_u64())).collect()
}

/// Class probabilities for each sequence of the batch.
pub fn forward<F: Scalar, R: RngCore + ?Sized>(
    model: &BiLstmModel<F>,
    batch: &[Vec<usize>],
    train_mode: bool,
    rng: &mut R,
) -> Vec<Probabilities<F>> {
    let seeds = example_rngs(batch.len(), train_mode, rng);
    batch
        .par_iter()
        .zip(seeds)
        .map(|(seq, seed)| {
            let trace = forward_trace(model, seq, seed.map(ChaCha8Rng::seed_from_u64));
            softmax(&trace.logits)
        })
        .collect()
}

/// Mean cross-entropy over the batch and its gradient for every parameter.
pub fn loss_and_gradients<F: Scalar, R: RngCore + ?Sized>(
    model: &BiLstmModel<F>,
    batch: &[Vec<usize>],
    labels: &[SentimentLabel],
    train_mode: bool,
    rng: &mut R,
    batch_id: usize,
) -> Result<(F, Gradients<F>)> {
    assert_eq!(batch.len(), labels.len(), "one label per sequence");
    assert!(!batch.is_empty(), "empty batch");
    let seeds = example_rngs(batch.len(), train_mode, rng);
    let scale = F::one() / F::from_usize(batch.len()).unwrap();

    let partials: Vec<(F, Gradients<F>)> = batch
        .par_chunks(CHUNK)
        .zip(labels.par_chunks(CHUNK))
        .zip(seeds.par_chunks(CHUNK))
        .map(|((seqs, labels), seeds)| {
            let mut grads = Gradients::zeros_for(model);
            let mut loss = F::zero();
            for ((seq, &label), &seed) in seqs.iter().zip(labels).zip(seeds) {
                let trace = forward_trace(model, seq, seed.map(ChaCha8Rng::seed_from_u64));
                let logp = log_softmax(&trace.logits);
                loss -= logp[label.index()];
                let dlogits: Vec<F> = logp
                    .iter()
                    .enumerate()
                    .map(|(k, &lp)| {
                        let y = if k == label.index() { F::one() } else { F::zero() };
                        (lp.exp() - y) * scale
                    })
                    .collect();
                backward_trace(model, &trace, &dlogits, &mut grads);
            }
            (loss, grads)
        })
        .collect();

    let mut iter = partials.into_iter();
    let (mut loss, mut grads) = iter.next().expect("non-empty batch");
    for (l, g) in iter {
        loss += l;
        grads.add_assign(&g);
    }
    let loss = loss * scale;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { batch: batch_id });
    }
    if model.config.freeze_embeddings {
        grads.clear_embedding();
    }
    Ok((loss, grads))
}

/// Mean cross-entropy with dropout disabled.
pub fn evaluation_loss<F: Scalar>(model: &BiLstmModel<F>, batch: &[Vec<usize>], labels: &[SentimentLabel]) -> F {
    let total: F = batch
        .par_iter()
        .zip(labels)
        .map(|(seq, label)| {
            let trace = forward_trace(model, seq, None);
            -log_softmax(&trace.logits)[label.index()]
        })
        .collect::<Vec<F>>()
        .into_iter()
        .sum();
    total / F::from_usize(batch.len()).unwrap()
}

/// Concatenated last-step states `[h_fwd ; h_bwd]` of the top layer, with
/// dropout disabled.
pub fn final_states<F: Scalar>(model: &BiLstmModel<F>, seq: &[usize]) -> Vec<F> {
    forward_trace(model, seq, None).final_raw
}
