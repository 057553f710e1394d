//! On-disk formats for sample datasets, FIM fields and run manifests.

pub mod dataset;
pub mod field;
pub mod grid;
pub mod manifest;

pub use dataset::{load_dataset, save_dataset, split_train_test, PointSamples, SampleDataset, Split};
pub use field::{FimField, Metric, Provenance};
pub use grid::ParameterGrid;
pub use manifest::RunManifest;
