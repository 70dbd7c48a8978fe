use crate::config::KeyValues;
use crate::error::{Error, Result};

use super::SentimentLabel;

/// Hyperparameters of the BiLSTM classifier and its training loop.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierConfig {
    pub lstm_layers: usize,
    /// Hidden width of each LSTM direction.
    pub lstm_hidden: usize,
    pub lstm_dropout: f64,
    pub dense1_dim: usize,
    pub dense1_dropout: f64,
    pub output_dim: usize,
    pub lr: f64,
    pub early_stop_min_delta: f64,
    pub early_stop_patience: usize,
    pub max_seq_len: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub freeze_embeddings: bool,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            lstm_layers: 3,
            lstm_hidden: 64,
            lstm_dropout: 0.2,
            dense1_dim: 100,
            dense1_dropout: 0.3,
            output_dim: SentimentLabel::COUNT,
            lr: 0.0002,
            early_stop_min_delta: 0.0002,
            early_stop_patience: 5,
            max_seq_len: 40,
            batch_size: 32,
            max_epochs: 100,
            freeze_embeddings: false,
            seed: 1,
        }
    }
}

impl ClassifierConfig {
    pub const KEYS: &'static [&'static str] = &[
        "lstm_layers",
        "lstm_hidden",
        "lstm_dropout",
        "dense1_dim",
        "dense1_dropout",
        "output_dim",
        "lr",
        "early_stop_min_delta",
        "early_stop_patience",
        "max_seq_len",
        "batch_size",
        "max_epochs",
        "freeze_embeddings",
        "seed",
    ];

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_owned()));
        for (name, p) in [("lstm_dropout", self.lstm_dropout), ("dense1_dropout", self.dense1_dropout)] {
            if !(0.0..1.0).contains(&p) {
                return fail(&format!("{name} must be in [0, 1)"));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail("lr must be positive");
        }
        if !(self.early_stop_min_delta >= 0.0) {
            return fail("early_stop_min_delta must be non-negative");
        }
        if self.early_stop_patience == 0 {
            return fail("early_stop_patience must be at least 1");
        }
        if self.output_dim != SentimentLabel::COUNT {
            return fail("output_dim must be 3");
        }
        for (name, v) in [
            ("lstm_layers", self.lstm_layers),
            ("lstm_hidden", self.lstm_hidden),
            ("dense1_dim", self.dense1_dim),
            ("max_seq_len", self.max_seq_len),
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
        ] {
            if v == 0 {
                return fail(&format!("{name} must be positive"));
            }
        }
        Ok(())
    }

    /// Applies `key = value` settings on top of the defaults. Unknown keys
    /// are rejected.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(Self::KEYS)?;
        let mut c = Self::default();
        kv.read_into("lstm_layers", &mut c.lstm_layers)?;
        kv.read_into("lstm_hidden", &mut c.lstm_hidden)?;
        kv.read_into("lstm_dropout", &mut c.lstm_dropout)?;
        kv.read_into("dense1_dim", &mut c.dense1_dim)?;
        kv.read_into("dense1_dropout", &mut c.dense1_dropout)?;
        kv.read_into("output_dim", &mut c.output_dim)?;
        kv.read_into("lr", &mut c.lr)?;
        kv.read_into("early_stop_min_delta", &mut c.early_stop_min_delta)?;
        kv.read_into("early_stop_patience", &mut c.early_stop_patience)?;
        kv.read_into("max_seq_len", &mut c.max_seq_len)?;
        kv.read_into("batch_size", &mut c.batch_size)?;
        kv.read_into("max_epochs", &mut c.max_epochs)?;
        kv.read_into("freeze_embeddings", &mut c.freeze_embeddings)?;
        kv.read_into("seed", &mut c.seed)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.set("lstm_layers", self.lstm_layers);
        kv.set("lstm_hidden", self.lstm_hidden);
        kv.set("lstm_dropout", self.lstm_dropout);
        kv.set("dense1_dim", self.dense1_dim);
        kv.set("dense1_dropout", self.dense1_dropout);
        kv.set("output_dim", self.output_dim);
        kv.set("lr", self.lr);
        kv.set("early_stop_min_delta", self.early_stop_min_delta);
        kv.set("early_stop_patience", self.early_stop_patience);
        kv.set("max_seq_len", self.max_seq_len);
        kv.set("batch_size", self.batch_size);
        kv.set("max_epochs", self.max_epochs);
        kv.set("freeze_embeddings", self.freeze_embeddings);
        kv.set("seed", self.seed);
        kv
    }
}
