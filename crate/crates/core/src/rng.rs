//! Counter-based random streams.
//!
//! Every random draw in a simulation comes from a stream keyed by
//! `(master_seed, purpose, trial_index)`. Streams are independent ChaCha
//! keystreams, so results do not depend on evaluation order or thread count.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a stream is used for. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Noise,
    Beams,
    Channel,
    Sync,
    Calibration,
    PhaseNoise,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Noise => 1,
            Purpose::Beams => 2,
            Purpose::Channel => 3,
            Purpose::Sync => 4,
            Purpose::Calibration => 5,
            Purpose::PhaseNoise => 6,
        }
    }
}

impl fmt::Display for Purpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Purpose::Noise => "noise",
            Purpose::Beams => "beams",
            Purpose::Channel => "channel",
            Purpose::Sync => "sync",
            Purpose::Calibration => "calibration",
            Purpose::PhaseNoise => "phase_noise",
        };
        f.write_str(s)
    }
}

impl FromStr for Purpose {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise" => Ok(Purpose::Noise),
            "beams" => Ok(Purpose::Beams),
            "channel" => Ok(Purpose::Channel),
            "sync" => Ok(Purpose::Sync),
            "calibration" => Ok(Purpose::Calibration),
            "phase_noise" => Ok(Purpose::PhaseNoise),
            other => Err(Error::InvalidArgument(format!("unknown stream purpose '{other}'"))),
        }
    }
}

/// Trial indices must fit below the purpose tag.
pub const MAX_TRIAL_INDEX: u64 = (1 << 56) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

/// Maps `(purpose, trial_index)` injectively onto a ChaCha stream id.
pub fn derive_stream(master_seed: u64, purpose: Purpose, trial_index: u64) -> RngStream {
    assert!(trial_index <= MAX_TRIAL_INDEX, "trial index {trial_index} out of range");
    RngStream { master_seed, stream_id: (purpose.tag() << 56) | trial_index }
}

impl RngStream {
    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
