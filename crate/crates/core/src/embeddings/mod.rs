//! Code-switched word embeddings: vocabulary, CBOW training with negative
//! sampling, nearest-neighbor exploration and the word2vec text format.

mod cbow;
mod negative;
mod similarity;
pub mod text_format;
mod vocab;

pub use cbow::{cbow_step, train_cbow, CbowConfig, EmbeddingMatrix, TrainingLog};
pub use negative::{build_negative_table, NegativeTable, UNIGRAM_POWER};
pub use similarity::{cosine_similarity, top_k_neighbors};
pub use text_format::{load_text, read_text, save_text, write_text};
pub use vocab::{build_vocabulary, Vocabulary};
