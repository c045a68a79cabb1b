//! Node classifiers: the degree-vector model stack, the noisy-adjacency GCN,
//! and the MLP / GCN baselines behind one interface.

mod degree;
mod dpgcn;
mod lpgnet;
mod trained;
mod views;

pub use degree::{cluster_degree_counts, find_degree_vec, DegreeVectorMatrix};
pub use dpgcn::{dpgcn_perturb, upper_triangle, upper_triangle_row, PerturbedAdjacency, DEFAULT_EPS_R};
pub use lpgnet::{degree_noise_seed, layer_input_dim, train_lpgnet, TrainedLpgnet};
pub use trained::{train_model, train_on_views, ModelKind, ModelRun, ModelSpec, TrainedModel, LEDGER_FILE, RUN_FILE};
pub use views::{PhaseView, SettingViews, ValidationView};
