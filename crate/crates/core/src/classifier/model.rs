use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::adamax::AdamaxState;
use super::ClassifierConfig;
use crate::embeddings::{EmbeddingMatrix, Vocabulary};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
/// Offset of vocabulary index 0 in the embedding table.
pub const RESERVED_ROWS: usize = 2;

/// Row-major matrix; vectors are stored as `n × 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<F> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<F>,
}

impl<F: Scalar> Tensor<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn zeros_like(other: &Self) -> Self {
        Self::zeros(other.rows, other.cols)
    }

    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `out = self · x` (+ `out` when `accumulate`).
    pub(crate) fn matvec_into(&self, x: &[F], out: &mut [F], accumulate: bool) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let row = self.row(r);
            let mut s = F::zero();
            for (&w, &xi) in row.iter().zip(x) {
                s += w * xi;
            }
            *o = if accumulate { *o + s } else { s };
        }
    }

    /// `out += selfᵀ · y`.
    pub(crate) fn matvec_t_acc(&self, y: &[F], out: &mut [F]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &yr) in y.iter().enumerate() {
            if yr == F::zero() {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(r)) {
                *o += w * yr;
            }
        }
    }

    /// `self += y ⊗ x`.
    pub(crate) fn outer_acc(&mut self, y: &[F], x: &[F]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (r, &yr) in y.iter().enumerate() {
            if yr == F::zero() {
                continue;
            }
            for (d, &xi) in self.row_mut(r).iter_mut().zip(x) {
                *d += yr * xi;
            }
        }
    }

    pub(crate) fn add_assign(&mut self, other: &Self) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Positions of each parameter block in [`BiLstmModel::params`].
///
/// Order: embedding table, then for each layer the forward direction
/// (input weights `W`, recurrent weights `U`, bias `b`) followed by the
/// backward direction, then dense1 weight/bias and output weight/bias.
/// Gate rows within `W`, `U` and `b` are ordered input, forget, cell,
/// output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub layers: usize,
}

impl Layout {
    pub const EMBEDDING: usize = 0;

    pub fn lstm(&self, layer: usize, backward: bool) -> [usize; 3] {
        let base = 1 + (layer * 2 + backward as usize) * 3;
        [base, base + 1, base + 2]
    }

    pub fn dense1(&self) -> [usize; 2] {
        let base = 1 + self.layers * 6;
        [base, base + 1]
    }

    pub fn output(&self) -> [usize; 2] {
        let base = 3 + self.layers * 6;
        [base, base + 1]
    }

    pub fn len(&self) -> usize {
        5 + self.layers * 6
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn name(&self, idx: usize) -> String {
        if idx == Self::EMBEDDING {
            return "embedding".into();
        }
        let [d1, _] = self.dense1();
        let [o1, _] = self.output();
        if idx < d1 {
            let k = idx - 1;
            let (layer, dir, part) = (k / 6, (k / 3) % 2, k % 3);
            let dir = if dir == 0 { "fwd" } else { "bwd" };
            return format!("lstm{layer}.{dir}.{}", ["W", "U", "b"][part]);
        }
        let part = if (idx - d1).is_multiple_of(2) { "W" } else { "b" };
        if idx < o1 {
            format!("dense1.{part}")
        } else {
            format!("output.{part}")
        }
    }
}

/// All classifier parameters plus optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstmModel<F> {
    pub config: ClassifierConfig,
    pub vocab: Vocabulary,
    pub embedding_dim: usize,
    pub params: Vec<Tensor<F>>,
    pub optimizer: AdamaxState<F>,
}

fn xavier<F: Scalar>(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_in: usize, fan_out: usize) -> Tensor<F> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor {
        rows,
        cols,
        data: (0..rows * cols)
            .map(|_| F::from_f64_lossy(rng.random_range(-limit..limit)))
            .collect(),
    }
}

/// `rows × cols` (rows ≥ cols) matrix with orthonormal columns, from
/// Gram-Schmidt on a Gaussian matrix.
fn orthogonal<F: Scalar>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor<F> {
    assert!(rows >= cols);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while columns.len() < cols {
        let mut v: Vec<f64> = (0..rows).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for q in &columns {
                let proj: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= proj * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            columns.push(v);
        }
    }
    let mut t = Tensor::zeros(rows, cols);
    for (c, col) in columns.iter().enumerate() {
        for (r, &x) in col.iter().enumerate() {
            t.data[r * cols + c] = F::from_f64_lossy(x);
        }
    }
    t
}

impl<F: Scalar> BiLstmModel<F> {
    /// Fresh model whose embedding rows (after PAD and UNK) are copied from
    /// `embeddings`.
    pub fn new(config: ClassifierConfig, embeddings: &EmbeddingMatrix<F>) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let dim = embeddings.dim;
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        let h = config.lstm_hidden;

        let mut table = Tensor::zeros(embeddings.len() + RESERVED_ROWS, dim);
        for v in table.row_mut(UNK) {
            *v = F::from_f64_lossy(rng.random_range(-0.05..0.05));
        }
        table.data[RESERVED_ROWS * dim..].copy_from_slice(&embeddings.input);

        let mut params = vec![table];
        for layer in 0..config.lstm_layers {
            let input_dim = if layer == 0 { dim } else { 2 * h };
            for _ in 0..2 {
                params.push(xavier(&mut rng, 4 * h, input_dim, input_dim, 4 * h));
                params.push(orthogonal(&mut rng, 4 * h, h));
                let mut b = Tensor::zeros(4 * h, 1);
                b.data[h..2 * h].fill(F::one());
                params.push(b);
            }
        }
        params.push(xavier(&mut rng, config.dense1_dim, 2 * h, 2 * h, config.dense1_dim));
        params.push(Tensor::zeros(config.dense1_dim, 1));
        params.push(xavier(&mut rng, config.output_dim, config.dense1_dim, config.dense1_dim, config.output_dim));
        params.push(Tensor::zeros(config.output_dim, 1));

        let optimizer = AdamaxState::new(&params);
        Ok(BiLstmModel {
            config,
            vocab: embeddings.vocab.clone(),
            embedding_dim: dim,
            params,
            optimizer,
        })
    }

    pub fn layout(&self) -> Layout {
        Layout {
            layers: self.config.lstm_layers,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}

/// Gradients matching [`BiLstmModel::params`]. Embedding gradients are kept
/// sparse (by table row); `dense[Layout::EMBEDDING]` is an empty tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<F> {
    pub dense: Vec<Tensor<F>>,
    pub embedding_rows: BTreeMap<usize, Vec<F>>,
    pub embedding_dim: usize,
}

impl<F: Scalar> Gradients<F> {
    pub fn zeros_for(model: &BiLstmModel<F>) -> Self {
        let mut dense: Vec<Tensor<F>> = model.params.iter().map(Tensor::zeros_like).collect();
        dense[Layout::EMBEDDING] = Tensor::zeros(0, model.embedding_dim);
        Gradients {
            dense,
            embedding_rows: BTreeMap::new(),
            embedding_dim: model.embedding_dim,
        }
    }

    pub(crate) fn embedding_row(&mut self, row: usize) -> &mut [F] {
        let dim = self.embedding_dim;
        self.embedding_rows.entry(row).or_insert_with(|| vec![F::zero(); dim])
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.dense.iter_mut().zip(&other.dense) {
            a.add_assign(b);
        }
        for (&row, g) in &other.embedding_rows {
            for (a, &b) in self.embedding_row(row).iter_mut().zip(g) {
                *a += b;
            }
        }
    }

    /// Scatters the embedding gradient into a full table-shaped tensor.
    pub fn embedding_dense(&self, rows: usize) -> Tensor<F> {
        let mut t = Tensor::zeros(rows, self.embedding_dim);
        for (&r, g) in &self.embedding_rows {
            t.row_mut(r).copy_from_slice(g);
        }
        t
    }

    pub fn clear_embedding(&mut self) {
        self.embedding_rows.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn embeddings(words: usize, dim: usize) -> EmbeddingMatrix<f64> {
        let vocab = Vocabulary::from_words((0..words).map(|i| format!("w{i}")).collect()).unwrap();
        EmbeddingMatrix::initialize(vocab, dim, 5)
    }

    #[test]
    fn layout_covers_params() {
        let cfg = ClassifierConfig {
            lstm_hidden: 4,
            dense1_dim: 6,
            ..Default::default()
        };
        let m = BiLstmModel::new(cfg, &embeddings(5, 3)).unwrap();
        let l = m.layout();
        assert_eq!(m.params.len(), l.len());
        let [w, u, b] = l.lstm(0, false);
        assert_eq!((m.params[w].rows, m.params[w].cols), (16, 3));
        assert_eq!((m.params[u].rows, m.params[u].cols), (16, 4));
        assert_eq!(m.params[b].rows, 16);
        let [w, _, _] = l.lstm(2, true);
        assert_eq!(m.params[w].cols, 8);
        let [d, _] = l.dense1();
        assert_eq!((m.params[d].rows, m.params[d].cols), (6, 8));
        let [o, ob] = l.output();
        assert_eq!((m.params[o].rows, m.params[o].cols, m.params[ob].rows), (3, 6, 3));
        assert_eq!(l.name(w), "lstm2.bwd.W");
        assert_eq!(l.name(ob), "output.b");
    }

    #[test]
    fn initial_state_invariants() {
        let cfg = ClassifierConfig {
            lstm_hidden: 4,
            ..Default::default()
        };
        let e = embeddings(5, 3);
        let m = BiLstmModel::new(cfg, &e).unwrap();
        assert!(m.is_finite());
        assert!(m.params[0].row(PAD).iter().all(|&v| v == 0.0));
        assert_eq!(m.params[0].row(RESERVED_ROWS + 2), e.vector(2));
        for layer in 0..3 {
            for dir in [false, true] {
                let b = &m.params[m.layout().lstm(layer, dir)[2]];
                assert!(b.data[4..8].iter().all(|&v| v == 1.0));
                assert!(b.data[..4].iter().chain(&b.data[8..]).all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn recurrent_weights_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q: Tensor<f64> = orthogonal(&mut rng, 12, 3);
        for a in 0..3 {
            for b in 0..3 {
                let d: f64 = (0..12).map(|r| q.data[r * 3 + a] * q.data[r * 3 + b]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
    }
}
