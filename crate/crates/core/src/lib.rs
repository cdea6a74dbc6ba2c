//! Compressive initial access for millimeter-wave links: pseudorandom-beam
//! cell discovery, timing/CFO-robust beam training, and the matching
//! performance theory, plus a Monte Carlo harness.

pub mod channel;
pub mod codebook;
pub mod config;
pub mod detection;
pub mod dsp;
pub mod error;
pub mod harness;
pub mod rng;
pub mod theory;
pub mod training;
pub mod waveform;

pub use config::FrameConfig;
pub use error::{Error, Result};
pub use num_complex::Complex64;
