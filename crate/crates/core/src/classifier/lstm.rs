//! LSTM recurrence and its backward pass.
//!
//! `z = W x + U h_prev + b` is split into input, forget, cell and output
//! blocks: `i = σ(z_i)`, `f = σ(z_f)`, `g = tanh(z_g)`, `o = σ(z_o)`,
//! `c = f ⊙ c_prev + i ⊙ g`, `h = o ⊙ tanh(c)`.

use super::model::Tensor;
use crate::scalar::{sigmoid, Scalar};

#[derive(Clone, Copy, Debug)]
pub struct LstmParams<'a, F> {
    pub w: &'a Tensor<F>,
    pub u: &'a Tensor<F>,
    pub b: &'a Tensor<F>,
}

impl<F: Scalar> LstmParams<'_, F> {
    pub fn hidden(&self) -> usize {
        self.u.cols
    }
}

/// Everything the backward pass needs from one time step.
#[derive(Clone, Debug)]
pub struct StepCache<F> {
    pub h_prev: Vec<F>,
    pub c_prev: Vec<F>,
    /// Activated gates, `[i | f | g | o]`.
    pub gates: Vec<F>,
    pub c: Vec<F>,
    pub tanh_c: Vec<F>,
    pub h: Vec<F>,
}

pub fn cell_forward<F: Scalar>(x: &[F], h_prev: &[F], c_prev: &[F], p: LstmParams<'_, F>) -> StepCache<F> {
    let hd = p.hidden();
    let mut z = p.b.data.clone();
    p.w.matvec_into(x, &mut z, true);
    p.u.matvec_into(h_prev, &mut z, true);

    let mut gates = z;
    for (k, v) in gates.iter_mut().enumerate() {
        *v = if (2 * hd..3 * hd).contains(&k) { v.tanh() } else { sigmoid(*v) };
    }
    let (i, rest) = gates.split_at(hd);
    let (f, rest) = rest.split_at(hd);
    let (g, o) = rest.split_at(hd);

    let c: Vec<F> = (0..hd).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<F> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<F> = (0..hd).map(|k| o[k] * tanh_c[k]).collect();
    StepCache {
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        gates,
        c,
        tanh_c,
        h,
    }
}

/// One LSTM step; returns `(h_t, c_t)`.
pub fn lstm_cell<F: Scalar>(x: &[F], h_prev: &[F], c_prev: &[F], params: LstmParams<'_, F>) -> (Vec<F>, Vec<F>) {
    let s = cell_forward(x, h_prev, c_prev, params);
    (s.h, s.c)
}

/// Gradient accumulators for one direction's `W`, `U`, `b`.
pub struct LstmGrads<'a, F> {
    pub w: &'a mut Tensor<F>,
    pub u: &'a mut Tensor<F>,
    pub b: &'a mut Tensor<F>,
}

/// Backward through one step. Takes `dL/dh_t` and `dL/dc_t` (the latter
/// from the following step only), accumulates parameter gradients, and
/// returns `(dL/dx, dL/dh_prev, dL/dc_prev)`.
pub fn cell_backward<F: Scalar>(
    x: &[F],
    cache: &StepCache<F>,
    dh: &[F],
    dc_next: &[F],
    p: LstmParams<'_, F>,
    grads: &mut LstmGrads<'_, F>,
) -> (Vec<F>, Vec<F>, Vec<F>) {
    let hd = p.hidden();
    let one = F::one();
    let (i, f, g, o) = (
        &cache.gates[..hd],
        &cache.gates[hd..2 * hd],
        &cache.gates[2 * hd..3 * hd],
        &cache.gates[3 * hd..],
    );
    let mut dz = vec![F::zero(); 4 * hd];
    let mut dc_prev = vec![F::zero(); hd];
    for k in 0..hd {
        let tc = cache.tanh_c[k];
        let dc = dc_next[k] + dh[k] * o[k] * (one - tc * tc);
        let d_o = dh[k] * tc;
        let d_i = dc * g[k];
        let d_g = dc * i[k];
        let d_f = dc * cache.c_prev[k];
        dc_prev[k] = dc * f[k];
        dz[k] = d_i * i[k] * (one - i[k]);
        dz[hd + k] = d_f * f[k] * (one - f[k]);
        dz[2 * hd + k] = d_g * (one - g[k] * g[k]);
        dz[3 * hd + k] = d_o * o[k] * (one - o[k]);
    }
    grads.w.outer_acc(&dz, x);
    grads.u.outer_acc(&dz, &cache.h_prev);
    for (b, &d) in grads.b.data.iter_mut().zip(&dz) {
        *b += d;
    }
    let mut dx = vec![F::zero(); x.len()];
    p.w.matvec_t_acc(&dz, &mut dx);
    let mut dh_prev = vec![F::zero(); hd];
    p.u.matvec_t_acc(&dz, &mut dh_prev);
    (dx, dh_prev, dc_prev)
}

/// Runs the recurrence over `xs` (in processing order) from zero state.
pub fn run<F: Scalar>(xs: &[&[F]], p: LstmParams<'_, F>) -> Vec<StepCache<F>> {
    let hd = p.hidden();
    let mut out: Vec<StepCache<F>> = Vec::with_capacity(xs.len());
    let zeros = vec![F::zero(); hd];
    for x in xs {
        let (h, c) = out.last().map_or((&zeros, &zeros), |s| (&s.h, &s.c));
        let step = cell_forward(x, h, c, p);
        out.push(step);
    }
    out
}

/// Backpropagation through time for [`run`]. `dh_out[t]` is the gradient
/// arriving at output `h_t` from above; returns `dL/dx_t` for every step.
pub fn backward<F: Scalar>(
    xs: &[&[F]],
    caches: &[StepCache<F>],
    dh_out: &[Vec<F>],
    p: LstmParams<'_, F>,
    grads: &mut LstmGrads<'_, F>,
) -> Vec<Vec<F>> {
    let hd = p.hidden();
    let mut dxs = vec![Vec::new(); xs.len()];
    let mut dh_next = vec![F::zero(); hd];
    let mut dc_next = vec![F::zero(); hd];
    for t in (0..xs.len()).rev() {
        let dh: Vec<F> = dh_out[t].iter().zip(&dh_next).map(|(&a, &b)| a + b).collect();
        let (dx, dh_prev, dc_prev) = cell_backward(xs[t], &caches[t], &dh, &dc_next, p, grads);
        dxs[t] = dx;
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    dxs
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor<f64> {
        Tensor {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.random_range(-0.8..0.8)).collect(),
        }
    }

    #[test]
    fn zero_everything_gives_zero_state() {
        let (w, u, b) = (Tensor::zeros(8, 3), Tensor::zeros(8, 2), Tensor::zeros(8, 1));
        let p = LstmParams { w: &w, u: &u, b: &b };
        let (h, c) = lstm_cell(&[0.0f64; 3], &[0.0; 2], &[0.0; 2], p);
        assert_eq!(h, [0.0, 0.0]);
        assert_eq!(c, [0.0, 0.0]);
    }

    #[test]
    fn saturated_forget_gate_keeps_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (w, u) = (random(&mut rng, 8, 3), random(&mut rng, 8, 2));
        let mut b = random(&mut rng, 8, 1);
        b.data[2..4].fill(30.0);
        let p = LstmParams { w: &w, u: &u, b: &b };
        let x = [0.1, -0.3, 0.2];
        let (h_prev, c_prev) = ([0.05, -0.2], [0.7, -1.1]);
        let s = cell_forward(&x, &h_prev, &c_prev, p);
        for k in 0..2 {
            let expect = c_prev[k] + s.gates[k] * s.gates[4 + k];
            assert!((s.c[k] - expect).abs() < 1e-9);
        }
    }

    /// Directional derivatives of a scalar readout of (h, c) vs central
    /// differences, for every input of the cell.
    #[test]
    fn cell_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (n_in, hd) = (3, 4);
        let w = random(&mut rng, 4 * hd, n_in);
        let u = random(&mut rng, 4 * hd, hd);
        let b = random(&mut rng, 4 * hd, 1);
        let x: Vec<f64> = (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h0: Vec<f64> = (0..hd).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c0: Vec<f64> = (0..hd).map(|_| rng.random_range(-1.0..1.0)).collect();
        let wh: Vec<f64> = (0..hd).map(|_| rng.random_range(-1.0..1.0)).collect();
        let wc: Vec<f64> = (0..hd).map(|_| rng.random_range(-1.0..1.0)).collect();

        let readout = |x: &[f64], h0: &[f64], c0: &[f64], w: &Tensor<f64>, u: &Tensor<f64>, b: &Tensor<f64>| {
            let s = cell_forward(x, h0, c0, LstmParams { w, u, b });
            s.h.iter().zip(&wh).map(|(a, b)| a * b).sum::<f64>() + s.c.iter().zip(&wc).map(|(a, b)| a * b).sum::<f64>()
        };

        let p = LstmParams { w: &w, u: &u, b: &b };
        let cache = cell_forward(&x, &h0, &c0, p);
        let (mut gw, mut gu, mut gb) = (Tensor::zeros(4 * hd, n_in), Tensor::zeros(4 * hd, hd), Tensor::zeros(4 * hd, 1));
        let mut grads = LstmGrads { w: &mut gw, u: &mut gu, b: &mut gb };
        let (dx, dh0, dc0) = cell_backward(&x, &cache, &wh, &wc, p, &mut grads);

        let eps = 1e-5;
        let check = |analytic: f64, plus: f64, minus: f64| {
            let numeric = (plus - minus) / (2.0 * eps);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            assert!(rel < 1e-4, "analytic {analytic} numeric {numeric}");
        };
        for k in 0..n_in {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[k] += eps;
            xm[k] -= eps;
            check(dx[k], readout(&xp, &h0, &c0, &w, &u, &b), readout(&xm, &h0, &c0, &w, &u, &b));
        }
        for k in 0..hd {
            let (mut hp, mut hm) = (h0.clone(), h0.clone());
            hp[k] += eps;
            hm[k] -= eps;
            check(dh0[k], readout(&x, &hp, &c0, &w, &u, &b), readout(&x, &hm, &c0, &w, &u, &b));
            let (mut cp, mut cm) = (c0.clone(), c0.clone());
            cp[k] += eps;
            cm[k] -= eps;
            check(dc0[k], readout(&x, &h0, &cp, &w, &u, &b), readout(&x, &h0, &cm, &w, &u, &b));
        }
        for k in 0..w.len() {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp.data[k] += eps;
            wm.data[k] -= eps;
            check(gw.data[k], readout(&x, &h0, &c0, &wp, &u, &b), readout(&x, &h0, &c0, &wm, &u, &b));
        }
        for k in 0..u.len() {
            let (mut up, mut um) = (u.clone(), u.clone());
            up.data[k] += eps;
            um.data[k] -= eps;
            check(gu.data[k], readout(&x, &h0, &c0, &w, &up, &b), readout(&x, &h0, &c0, &w, &um, &b));
        }
        for k in 0..b.len() {
            let (mut bp, mut bm) = (b.clone(), b.clone());
            bp.data[k] += eps;
            bm.data[k] -= eps;
            check(gb.data[k], readout(&x, &h0, &c0, &w, &u, &bp), readout(&x, &h0, &c0, &w, &u, &bm));
        }
    }
}
