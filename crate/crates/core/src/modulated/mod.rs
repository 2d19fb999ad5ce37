//! Multi-tone scanner drive, the region-of-interest objective and its
//! projected gradient optimizer.

mod objective;
mod optimize;
mod params;
mod weight;

pub use objective::{gradient, objective, Assignment, CoefficientGradient};
pub use optimize::{optimize, optimize_observed, warm_start, IterationInfo, OptimizeOptions, OptimizeResult, StepRule};
pub use params::{
    axis_norm, detection_example, synthesize_modulated, tones_around, tones_from_indices, Basis, Constraint,
    ModulatedParams, FIVE_TONES, MAX_TONES, THREE_TONES,
};
pub use weight::{roi_density, Rect, WeightMap, DEFAULT_PATCHES, ROI_A, ROI_B};
