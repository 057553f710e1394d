//! Ground-truth peak extraction and PeakRMSE scoring.

pub mod peaks;
pub mod rmse;

pub use peaks::{
    classify_inner_outer, field_slices, fim_field_to_slice_peaks, find_peaks, node_field_to_centers, BoundaryRule, Cutoff,
    LocalPeak, NeighbourFlags, Peak, PeakKind, SliceId, SlicePeaks,
};
pub use rmse::{
    peak_rmse, predictions_from_field, predictions_from_tsv, predictions_to_tsv, PeakRmseReport, SlicePrediction, SliceScore,
};
