//! BiLSTM sentiment classifier.

pub mod adamax;
pub mod config;
pub mod data;
pub mod early_stopping;
pub mod io;
pub mod label;
pub mod lstm;
pub mod model;
pub mod network;
pub mod train;

pub use adamax::{adamax_step, AdamaxParams, AdamaxState};
pub use config::ClassifierConfig;
pub use data::{load_labeled_jsonl, load_labeled_tsv, parse_labeled_tsv, LabeledExample};
pub use early_stopping::{simulate as simulate_early_stopping, Decision, EarlyStopping};
pub use io::{load_model, save_model};
pub use label::SentimentLabel;
pub use lstm::lstm_cell;
pub use model::{BiLstmModel, Gradients, Layout, Tensor, PAD, RESERVED_ROWS, UNK};
pub use network::{evaluation_loss, forward, loss_and_gradients};
pub use train::{argmax, encode_sequence, predict, predict_tokens, train, train_with, EpochRecord, Prediction, TrainLog};
