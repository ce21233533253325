//! Batch scientometric analysis of bibliographic abstract collections.
//!
//! The pipeline runs in stages: record ingestion and corpus selection
//! ([`corpus`]), tokenization and the document-term matrix ([`text`]),
//! exploratory statistics with a quadratic publication trend ([`eda`]),
//! correspondence analysis of the document-term matrix ([`lsa`], backed by
//! [`svd`]), LDA topic modeling ([`lda`]) and bigram networks ([`bigrams`]).
//! [`pipeline`] wires the stages together and writes the report files.

pub mod bigrams;
pub mod config;
pub mod corpus;
pub mod eda;
pub mod error;
pub mod lda;
pub mod lsa;
pub mod pipeline;
pub mod plot;
pub mod svd;
pub mod text;

pub use error::{Error, Result};
