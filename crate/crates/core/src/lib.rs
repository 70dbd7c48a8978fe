//! Code-switched (Spanish/English) sentiment pipeline.

pub mod classifier;
pub mod config;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod fixtures;
pub mod preprocess;
pub mod scalar;
pub mod text;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Embeddings = embeddings::EmbeddingMatrix<f32>;
pub type Embeddings64 = embeddings::EmbeddingMatrix<f64>;
pub type Classifier = classifier::BiLstmModel<f32>;
pub type Classifier64 = classifier::BiLstmModel<f64>;
