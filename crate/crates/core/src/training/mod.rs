//! Beam training from the IA capture: coarse dictionary estimates followed
//! by local refinement.

pub mod dictionaries;
pub mod estimate;
pub mod hierarchical;
pub mod model;
pub mod pipeline;
pub mod refine;

pub use dictionaries::{angle_grid, AngleDictionary, DelayDictionary};
pub use estimate::{cfo_from_tone, estimate_delay, estimate_gain, matching_pursuit, rearrange, score_atom, DelayMetric, MpResult};
pub use hierarchical::hierarchical_refine;
pub use model::TrainingModel;
pub use pipeline::{run_algorithm1, Algorithm1Output, TrainingConfig};
pub use refine::{refine, RefineOptions, TrainingEstimate};
