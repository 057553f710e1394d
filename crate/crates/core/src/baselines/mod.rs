//! Reference methods: kernel PCA on bitstring samples and the confusion
//! scheme.

pub mod confusion;
pub mod spca;

pub use confusion::{confusion_scan, default_candidates, slice_dataset, ConfusionConfig, ConfusionCurve};
pub use spca::{kernel_pca, matching_bits, spca_kernel, EmbeddingField, KernelMatrix};
