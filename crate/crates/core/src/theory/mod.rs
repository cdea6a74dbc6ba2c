//! Closed-form performance theory.

pub mod detection;
pub mod fim;
pub mod system;

pub use detection::{gain_split_k, kappa, q_function, q_inv, DetectionTheory, GUMBEL_SCALE};
pub use fim::{fim, FimInputs, FimResult, LosParams};
pub use system::{complexity_counts, ComplexityCounts, SystemModel};
