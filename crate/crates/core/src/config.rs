//! Frame and waveform constants.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frame timing shared by every stage of the simulator.
///
/// Serialized keys use the conventional symbols (`P`, `M`, `N_B`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameConfig {
    /// PSS length in samples (and occupied subcarriers).
    #[serde(rename = "P")]
    pub pss_len: usize,
    /// Number of SS bursts per period.
    #[serde(rename = "M")]
    pub bursts: usize,
    /// Samples per burst.
    #[serde(rename = "N_B")]
    pub burst_len: usize,
    #[serde(rename = "N_CP")]
    pub cp_len: usize,
    /// Maximum excess delay in taps.
    #[serde(rename = "N_c")]
    pub max_delay_taps: usize,
    /// Sample duration in seconds.
    #[serde(rename = "T_s")]
    pub sample_period: f64,
    /// SS period in seconds.
    #[serde(rename = "T_SS")]
    pub ss_period: f64,
    /// Timing-offset search window in samples.
    #[serde(rename = "eps_T_max")]
    pub eps_t_max: usize,
    /// Optional burst duration. When present it must equal `N_B * T_s`.
    #[serde(rename = "T_B", skip_serializing_if = "Option::is_none")]
    pub burst_duration: Option<f64>,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            pss_len: 128,
            bursts: 64,
            burst_len: 1024,
            cp_len: 8,
            max_delay_taps: 4,
            sample_period: 1.0 / 57.6e6,
            ss_period: 20e-3,
            eps_t_max: 1024,
            burst_duration: None,
        }
    }
}

impl FrameConfig {
    /// Checks every invariant and names the first one that fails.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.pss_len < 1 {
            return bad("PSS length P must be at least 1".into());
        }
        if self.bursts < 1 {
            return bad("burst count M must be at least 1".into());
        }
        if self.cp_len <= self.max_delay_taps {
            return bad(format!("CP must exceed max excess delay (N_CP={} <= N_c={})", self.cp_len, self.max_delay_taps));
        }
        if self.burst_len < self.pss_len + self.cp_len {
            return bad(format!("burst must hold CP and PSS (N_B={} < P+N_CP={})", self.burst_len, self.pss_len + self.cp_len));
        }
        if self.eps_t_max > self.burst_len {
            return bad(format!("timing search window exceeds burst length (eps_T_max={} > N_B={})", self.eps_t_max, self.burst_len));
        }
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return bad("sample period T_s must be positive".into());
        }
        if !(self.ss_period > 0.0 && self.ss_period.is_finite()) {
            return bad("SS period T_SS must be positive".into());
        }
        if let Some(tb) = self.burst_duration {
            let expect = self.burst_len as f64 * self.sample_period;
            if (tb - expect).abs() > 1e-12 * expect.abs().max(1e-30) {
                return bad(format!("burst duration T_B={tb} must equal N_B*T_s={expect}"));
            }
        }
        Ok(())
    }

    /// CP plus PSS samples per burst.
    pub fn symbol_len(&self) -> usize {
        self.pss_len + self.cp_len
    }

    pub fn burst_duration(&self) -> f64 {
        self.burst_len as f64 * self.sample_period
    }

    /// Length of a synthesized capture: all bursts plus enough tail for the
    /// last window to be complete.
    pub fn capture_len(&self) -> usize {
        self.bursts * self.burst_len + self.cp_len + self.pss_len + self.max_delay_taps
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: FrameConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = FrameConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.symbol_len(), 136);
    }

    #[test]
    fn cp_not_longer_than_delay_spread() {
        let cfg = FrameConfig { cp_len: 4, max_delay_taps: 4, ..Default::default() };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("CP must exceed max excess delay"), "{msg}");
    }

    #[test]
    fn window_larger_than_burst() {
        let cfg = FrameConfig { eps_t_max: 2048, ..Default::default() };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("timing search window"), "{msg}");
    }

    #[test]
    fn burst_duration_must_match() {
        let mut cfg = FrameConfig::default();
        cfg.burst_duration = Some(cfg.burst_duration());
        cfg.validate().unwrap();
        cfg.burst_duration = Some(17.84e-6);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = FrameConfig::default();
        let text = cfg.to_toml_string().unwrap();
        assert!(text.contains("N_CP = 8"));
        assert_eq!(FrameConfig::from_toml_str(&text).unwrap(), cfg);
    }
}
