//! Fisher information from a classifier that tells nearby parameter points
//! apart.

pub mod estimate;
pub mod network;
pub mod pairs;
pub mod train;

pub use estimate::{analytic_bc, estimate_fim, AnalyticClassifier, Classifier, FimEstimate, NeuralClassifier};
pub use network::{Architecture, Geometry, Network};
pub use pairs::{make_pairs, DeltaScheme, PairRecord};
pub use train::{geometry_for, train_bc, TrainConfig, TrainReport};
