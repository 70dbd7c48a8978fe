use super::model::{Gradients, Layout, Tensor};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamaxParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamaxParams {
    pub fn with_lr(lr: f64) -> Self {
        AdamaxParams {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First moments `m`, infinity-norm accumulators `u`, one per parameter
/// tensor, plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamaxState<F> {
    pub step: u64,
    pub m: Vec<Tensor<F>>,
    pub u: Vec<Tensor<F>>,
}

impl<F: Scalar> AdamaxState<F> {
    pub fn new(params: &[Tensor<F>]) -> Self {
        AdamaxState {
            step: 0,
            m: params.iter().map(Tensor::zeros_like).collect(),
            u: params.iter().map(Tensor::zeros_like).collect(),
        }
    }

    /// Advances the step counter and returns `lr / (1 - β1^t)`.
    fn advance(&mut self, hp: &AdamaxParams) -> F {
        self.step += 1;
        let t = i32::try_from(self.step).unwrap_or(i32::MAX);
        F::from_f64_lossy(hp.lr / (1.0 - hp.beta1.powi(t)))
    }

    /// One Adamax step on every tensor. Embedding gradients come from the
    /// sparse rows of `grads`; rows without a gradient see `g = 0`. With
    /// `skip_embedding` the embedding table and its state are left as is.
    pub fn apply(&mut self, params: &mut [Tensor<F>], grads: &Gradients<F>, hp: &AdamaxParams, skip_embedding: bool) {
        let lr_t = self.advance(hp);
        let (b1, b2, eps) = (F::from_f64_lossy(hp.beta1), F::from_f64_lossy(hp.beta2), F::from_f64_lossy(hp.eps));
        for (idx, param) in params.iter_mut().enumerate() {
            let (m, u) = (&mut self.m[idx].data, &mut self.u[idx].data);
            if idx != Layout::EMBEDDING {
                update(&mut param.data, &grads.dense[idx].data, m, u, lr_t, b1, b2, eps);
                continue;
            }
            if skip_embedding {
                continue;
            }
            let dim = param.cols;
            let zeros = vec![F::zero(); dim];
            for r in 0..param.rows {
                let g = grads.embedding_rows.get(&r).map_or(zeros.as_slice(), Vec::as_slice);
                let span = r * dim..(r + 1) * dim;
                update(
                    &mut param.data[span.clone()],
                    g,
                    &mut m[span.clone()],
                    &mut u[span],
                    lr_t,
                    b1,
                    b2,
                    eps,
                );
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn update<F: Scalar>(theta: &mut [F], g: &[F], m: &mut [F], u: &mut [F], lr_t: F, b1: F, b2: F, eps: F) {
    for (((th, &gi), mi), ui) in theta.iter_mut().zip(g).zip(m.iter_mut()).zip(u.iter_mut()) {
        *mi = b1 * *mi + (F::one() - b1) * gi;
        *ui = (b2 * *ui).max(gi.abs());
        *th -= lr_t * *mi / (*ui + eps);
    }
}

/// Elementwise Adamax step on flat slices; `step` is the counter before
/// the update and is incremented.
pub fn adamax_step<F: Scalar>(params: &mut [F], grads: &[F], m: &mut [F], u: &mut [F], step: &mut u64, hp: &AdamaxParams) {
    *step += 1;
    let lr_t = F::from_f64_lossy(hp.lr / (1.0 - hp.beta1.powi(*step as i32)));
    update(
        params,
        grads,
        m,
        u,
        lr_t,
        F::from_f64_lossy(hp.beta1),
        F::from_f64_lossy(hp.beta2),
        F::from_f64_lossy(hp.eps),
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Straight transcription of the update rule for one scalar.
    fn reference(theta: f64, grads: &[f64], hp: &AdamaxParams) -> f64 {
        let (mut th, mut m, mut u) = (theta, 0.0, 0.0);
        for (t, &g) in grads.iter().enumerate() {
            m = hp.beta1 * m + (1.0 - hp.beta1) * g;
            u = f64::max(hp.beta2 * u, g.abs());
            th -= hp.lr / (1.0 - hp.beta1.powi(t as i32 + 1)) * m / (u + hp.eps);
        }
        th
    }

    #[test]
    fn zero_gradient_is_identity() {
        let hp = AdamaxParams::with_lr(0.0002);
        let mut p = vec![1.0f64, -2.0, 3.5];
        let (mut m, mut u, mut t) = (vec![0.0; 3], vec![0.0; 3], 0);
        adamax_step(&mut p, &[0.0; 3], &mut m, &mut u, &mut t, &hp);
        assert_eq!(p, [1.0, -2.0, 3.5]);
        assert_eq!(t, 1);
    }

    #[test]
    fn single_scalar_step() {
        let hp = AdamaxParams::with_lr(0.0002);
        let mut p = vec![1.0f64];
        let (mut m, mut u, mut t) = (vec![0.0], vec![0.0], 0);
        adamax_step(&mut p, &[1.0], &mut m, &mut u, &mut t, &hp);
        assert!((m[0] - 0.1).abs() < 1e-15);
        assert_eq!(u[0], 1.0);
        let hand = 1.0 - 0.0002 * 10.0 * 0.1 / (1.0 + 1e-8);
        assert!((p[0] - hand).abs() < 1e-15);
        assert!((p[0] - 0.9998).abs() < 1e-9);
        assert!((p[0] - reference(1.0, &[1.0], &hp)).abs() < 1e-15);
    }

    #[test]
    fn matches_reference_over_many_steps() {
        let hp = AdamaxParams::with_lr(0.01);
        let grads = [0.3, -1.2, 0.0, 2.5, -0.01, 0.7];
        let mut p = vec![0.4f64];
        let (mut m, mut u, mut t) = (vec![0.0], vec![0.0], 0);
        for &g in &grads {
            adamax_step(&mut p, &[g], &mut m, &mut u, &mut t, &hp);
        }
        assert!((p[0] - reference(0.4, &grads, &hp)).abs() < 1e-14);
    }

    #[test]
    fn update_bounded_by_corrected_lr() {
        let hp = AdamaxParams::with_lr(0.05);
        let mut p = vec![0.0f64; 4];
        let (mut m, mut u, mut t) = (vec![0.0; 4], vec![0.0; 4], 0);
        let seq = [[1.0, -3.0, 0.5, 0.0], [-2.0, 0.1, 0.5, 7.0], [0.0, 0.0, -9.0, 1.0]];
        for g in seq {
            let before = p.clone();
            adamax_step(&mut p, &g, &mut m, &mut u, &mut t, &hp);
            let bound = hp.lr / (1.0 - hp.beta1.powi(t as i32));
            for (a, b) in p.iter().zip(&before) {
                assert!((a - b).abs() <= bound + 1e-15);
            }
        }
    }
}
