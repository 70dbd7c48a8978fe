//! Binary model file.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic          4 bytes  "CSBL"
//! version        u32      1
//! scalar width   u8       4 (f32) or 8 (f64)
//! config         lstm_layers u32, lstm_hidden u32, lstm_dropout f64,
//!                dense1_dim u32, dense1_dropout f64, output_dim u32, lr f64,
//!                early_stop_min_delta f64, early_stop_patience u32,
//!                max_seq_len u32, batch_size u32, max_epochs u32,
//!                freeze_embeddings u8, seed u64
//! embedding dim  u32
//! vocabulary     min_count u64, n u32, then n × (len u32, UTF-8 bytes, count u64)
//! tensors        k u32, then k × (rows u32, cols u32, rows·cols scalars)
//! optimizer      step u64, then the first-moment and infinity-norm
//!                accumulators: k tensors each, data only (shapes as above)
//! ```
//!
//! The file must end exactly after the last accumulator.

use std::path::Path;

use super::adamax::AdamaxState;
use super::model::{BiLstmModel, Layout, Tensor, RESERVED_ROWS};
use super::ClassifierConfig;
use crate::embeddings::Vocabulary;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::text::read_bytes;

pub const MAGIC: &[u8; 4] = b"CSBL";
pub const VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("value fits in u32");
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn scalars<F: Scalar>(&mut self, data: &[F]) {
        for &v in data {
            v.write_le(&mut self.0);
        }
    }
}

struct Reader<'a> {
    name: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail(&self, msg: impl Into<String>) -> Error {
        Error::Invalid(format!("{}: byte {}: {}", self.name, self.pos, msg.into()))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(self.fail("unexpected end of file"));
        };
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.array()?) as usize)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn scalars<F: Scalar>(&mut self, n: usize, width: u8) -> Result<Vec<F>> {
        let bytes = self.take(n.checked_mul(width as usize).ok_or_else(|| self.fail("size overflow"))?)?;
        Ok(match width {
            4 => bytes
                .chunks_exact(4)
                .map(|c| F::from_f64_lossy(f32::from_le_bytes(c.try_into().unwrap()) as f64))
                .collect(),
            _ => bytes
                .chunks_exact(8)
                .map(|c| F::from_f64_lossy(f64::from_le_bytes(c.try_into().unwrap())))
                .collect(),
        })
    }
}

pub fn encode<F: Scalar>(model: &BiLstmModel<F>) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION as usize);
    w.u8(F::BYTES as u8);

    let c = &model.config;
    w.u32(c.lstm_layers);
    w.u32(c.lstm_hidden);
    w.f64(c.lstm_dropout);
    w.u32(c.dense1_dim);
    w.f64(c.dense1_dropout);
    w.u32(c.output_dim);
    w.f64(c.lr);
    w.f64(c.early_stop_min_delta);
    w.u32(c.early_stop_patience);
    w.u32(c.max_seq_len);
    w.u32(c.batch_size);
    w.u32(c.max_epochs);
    w.u8(c.freeze_embeddings as u8);
    w.u64(c.seed);
    w.u32(model.embedding_dim);

    w.u64(model.vocab.min_count());
    w.u32(model.vocab.len());
    for (word, &count) in model.vocab.words().iter().zip(model.vocab.counts()) {
        w.u32(word.len());
        w.0.extend_from_slice(word.as_bytes());
        w.u64(count);
    }

    w.u32(model.params.len());
    for t in &model.params {
        w.u32(t.rows);
        w.u32(t.cols);
        w.scalars(&t.data);
    }
    w.u64(model.optimizer.step);
    for t in model.optimizer.m.iter().chain(&model.optimizer.u) {
        w.scalars(&t.data);
    }
    w.0
}

/// Decodes a model file. Files written with the other scalar width are
/// converted.
pub fn decode<F: Scalar>(source_name: &str, bytes: &[u8]) -> Result<BiLstmModel<F>> {
    let mut r = Reader {
        name: source_name,
        bytes,
        pos: 0,
    };
    if r.take(4)? != MAGIC {
        return Err(r.fail("not a classifier model file"));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(r.fail(format!("unsupported format version {version}")));
    }
    let width = r.u8()?;
    if width != 4 && width != 8 {
        return Err(r.fail(format!("unsupported scalar width {width}")));
    }

    let config = ClassifierConfig {
        lstm_layers: r.u32()?,
        lstm_hidden: r.u32()?,
        lstm_dropout: r.f64()?,
        dense1_dim: r.u32()?,
        dense1_dropout: r.f64()?,
        output_dim: r.u32()?,
        lr: r.f64()?,
        early_stop_min_delta: r.f64()?,
        early_stop_patience: r.u32()?,
        max_seq_len: r.u32()?,
        batch_size: r.u32()?,
        max_epochs: r.u32()?,
        freeze_embeddings: match r.u8()? {
            0 => false,
            1 => true,
            b => return Err(r.fail(format!("bad boolean {b}"))),
        },
        seed: r.u64()?,
    };
    config.validate()?;
    let embedding_dim = r.u32()?;

    let min_count = r.u64()?;
    let n = r.u32()?;
    let mut words = Vec::with_capacity(n.min(1 << 20));
    let mut counts = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let len = r.u32()?;
        let word = std::str::from_utf8(r.take(len)?).map_err(|_| r.fail("vocabulary word is not UTF-8"))?;
        words.push(word.to_owned());
        counts.push(r.u64()?);
    }
    let vocab = Vocabulary::from_counts(words, counts, min_count)?;

    let layout = Layout {
        layers: config.lstm_layers,
    };
    let k = r.u32()?;
    if k != layout.len() {
        return Err(r.fail(format!("expected {} tensors, found {k}", layout.len())));
    }
    let mut params = Vec::with_capacity(k);
    for _ in 0..k {
        let (rows, cols) = (r.u32()?, r.u32()?);
        let n = rows.checked_mul(cols).ok_or_else(|| r.fail("tensor size overflow"))?;
        params.push(Tensor {
            rows,
            cols,
            data: r.scalars(n, width)?,
        });
    }
    let table = &params[Layout::EMBEDDING];
    if table.rows != vocab.len() + RESERVED_ROWS || table.cols != embedding_dim {
        return Err(r.fail("embedding table shape does not match vocabulary"));
    }

    let step = r.u64()?;
    let mut moments = Vec::with_capacity(2 * k);
    for i in 0..2 * k {
        let shape = &params[i % k];
        moments.push(Tensor {
            rows: shape.rows,
            cols: shape.cols,
            data: r.scalars(shape.len(), width)?,
        });
    }
    if r.pos != bytes.len() {
        return Err(r.fail("trailing bytes after model"));
    }
    let u = moments.split_off(k);
    Ok(BiLstmModel {
        config,
        vocab,
        embedding_dim,
        params,
        optimizer: AdamaxState { step, m: moments, u },
    })
}

pub fn save_model<F: Scalar>(model: &BiLstmModel<F>, path: &Path) -> Result<()> {
    std::fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model<F: Scalar>(path: &Path) -> Result<BiLstmModel<F>> {
    let bytes = read_bytes(path)?;
    decode(&path.display().to_string(), &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::EmbeddingMatrix;

    fn model() -> BiLstmModel<f32> {
        let vocab = Vocabulary::from_words(vec!["hola".into(), "día".into(), "😂".into()]).unwrap();
        let emb = EmbeddingMatrix::initialize(vocab, 3, 9);
        let cfg = ClassifierConfig {
            lstm_layers: 2,
            lstm_hidden: 2,
            dense1_dim: 4,
            freeze_embeddings: true,
            seed: u64::MAX - 3,
            ..Default::default()
        };
        let mut m = BiLstmModel::new(cfg, &emb).unwrap();
        m.optimizer.step = 17;
        m.optimizer.m[3].data[1] = 0.25;
        m.optimizer.u[5].data[0] = 2.5;
        m
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let bytes = encode(&m);
        assert_eq!(&bytes[..4], MAGIC);
        let back: BiLstmModel<f32> = decode("m", &bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn widens_to_f64() {
        let m = model();
        let back: BiLstmModel<f64> = decode("m", &encode(&m)).unwrap();
        for (a, b) in m.params.iter().zip(&back.params) {
            for (&x, &y) in a.data.iter().zip(&b.data) {
                assert_eq!(x as f64, y);
            }
        }
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode(&model());
        assert!(decode::<f32>("m", &bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode::<f32>("m", &extra).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode::<f32>("m", &bad).is_err());
        let mut bad = bytes;
        bad[4] = 2;
        assert!(decode::<f32>("m", &bad).is_err());
    }
}
