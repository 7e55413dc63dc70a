//! Word and entity embeddings trained on plain or entity-annotated text.
//!
//! The pipeline runs from corpus preparation ([`corpus`]) through
//! cooccurrence statistics ([`cooc`]) to four trainers: skip-gram with
//! negative sampling ([`sgns`]), GloVe ([`glove`]), and the graph embeddings
//! DeepWalk and VERSE ([`graph`]). Trained vectors are compared with
//! [`eval`], and the `entemb` binary wraps everything in [`cli`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cooc;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod glove;
pub mod graph;
pub mod model;
pub mod sgns;
pub mod vecmath;

pub use error::{Error, Result};
pub use model::{EmbeddingModel, Embeddings, Published, TrainStats};
