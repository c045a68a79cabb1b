//! Dense/sparse neural-network engine with hand-written backpropagation.

mod adam;
mod loss;
mod network;
mod sparse;
mod train;

pub use adam::Adam;
pub use loss::cross_entropy;
pub use network::{ForwardPass, GcnModel, Gradients, Linear, MlpModel, Network};
pub use sparse::{normalize_adjacency, CsrMatrix, NormalizationMode, NormalizedAdjacency};
pub use train::{train_gcn, train_mlp, Batch, SelectionMetric, TrainConfig, TrainOutcome};
