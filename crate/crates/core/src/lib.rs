//! Edge-private node classification on graphs.
//!
//! The crate trains node classifiers on graphs whose edges are sensitive and
//! measures how much edge information the trained models leak:
//!
//! * [`graph`]: CSR graphs, datasets, file formats, synthetic generators and
//!   homophily statistics.
//! * [`dp`]: Laplace sampling plus the per-phase privacy budget plan and ledger.
//! * [`nn`]: a small dense/sparse engine with MLP and GCN layers, exact
//!   gradients and Adam.
//! * [`models`]: noisy cluster degree vectors, the stacked-MLP model, the
//!   noised-adjacency GCN baseline and plain MLP/GCN baselines.
//! * [`attacks`]: influence-probing and posterior-similarity link stealing,
//!   evaluation pair sampling and AUC.
//! * [`eval`]: utility metrics, grid search and seeded experiment runs.
//!
//! Data-parallel loops (dense products, noise generation, attack queries,
//! experiment cells) run on rayon when the default `parallel` feature is
//! enabled and sequentially otherwise. Results are bit-identical either way.

pub mod attacks;
pub mod dp;
pub mod error;
pub mod eval;
pub mod graph;
pub mod matrix;
pub mod models;
pub mod nn;
pub mod par;
pub mod rng;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
