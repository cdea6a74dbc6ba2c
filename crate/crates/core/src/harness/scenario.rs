//! Experiment descriptions loadable from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelDraw;
use crate::config::FrameConfig;
use crate::detection::DetectionMode;
use crate::error::{Error, Result};
use crate::theory::GUMBEL_SCALE;
use crate::training::TrainingConfig;
use crate::waveform::PssKind;

/// One discovery curve: a detector and a fixed synchronization offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryCase {
    pub label: String,
    pub mode: DetectionMode,
    /// Timing offset in samples.
    pub eps_t: usize,
    /// Oscillator offset in ppm of the carrier.
    #[serde(default)]
    pub cfo_ppm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingArray {
    pub n_tx: usize,
    pub n_rx: usize,
}

/// Access latency and overhead sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemScenario {
    pub n_ue: Vec<usize>,
    /// CSI-RS slots per SS period.
    pub k_r: Vec<usize>,
    /// CSI-RS block duration, seconds.
    pub csi_rs_duration: f64,
    pub p_md: f64,
    /// CSI-RS rounds per UE for the directional scheme.
    pub dia_n_train: Vec<usize>,
    pub b_ia: f64,
    pub b_tot: f64,
}

impl Default for SystemScenario {
    fn default() -> Self {
        SystemScenario {
            n_ue: (1..=64).collect(),
            k_r: (1..=8).collect(),
            csi_rs_duration: 35.7e-6,
            p_md: 0.04,
            dia_n_train: vec![1, 2],
            b_ia: 57.6e6,
            b_tot: 400e6,
        }
    }
}

/// Everything a sweep needs. Frame keys (`P`, `M`, `N_B`, ...) sit at the
/// top level of the TOML file; all other keys have defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    #[serde(flatten)]
    pub frame: FrameConfig,
    pub n_tx: usize,
    pub n_rx: usize,
    /// Sector counts for the directional benchmark; `m_tx * m_rx = M`.
    pub m_tx: usize,
    pub m_rx: usize,
    pub pss: PssKind,
    pub carrier_hz: f64,
    /// Bound on the UE oscillator offset, ppm.
    pub max_cfo_ppm: f64,
    pub p_fa: f64,
    /// Scale constant in the NT threshold correction.
    pub gumbel_scale: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub snr_db: Vec<f64>,
    pub channel: ChannelDraw,
    pub discovery: Vec<DiscoveryCase>,
    pub training: TrainingConfig,
    pub training_arrays: Vec<TrainingArray>,
    pub training_snr_db: Vec<f64>,
    /// Timing offset used in training sweeps (timing assumed known).
    pub training_eps_t: usize,
    /// UE oscillator offset in training sweeps, ppm; the sign is random.
    pub training_cfo_ppm: f64,
    /// Training-sweep LOS angles are uniform on `(-a, a)`.
    pub training_max_angle: f64,
    pub system: SystemScenario,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            frame: FrameConfig::default(),
            n_tx: 128,
            n_rx: 32,
            m_tx: 16,
            m_rx: 4,
            pss: PssKind::default(),
            carrier_hz: 28e9,
            max_cfo_ppm: 5.0,
            p_fa: 0.01,
            gumbel_scale: GUMBEL_SCALE,
            trials: 2000,
            master_seed: 1,
            snr_db: (0..=10).map(|i| -25.0 + 2.5 * i as f64).collect(),
            channel: ChannelDraw::default(),
            discovery: vec![
                DiscoveryCase { label: "pt".into(), mode: DetectionMode::Pt, eps_t: 0, cfo_ppm: 0.0 },
                DiscoveryCase { label: "nt".into(), mode: DetectionMode::Nt, eps_t: 170, cfo_ppm: 0.0 },
                DiscoveryCase { label: "nt_cfo".into(), mode: DetectionMode::Nt, eps_t: 170, cfo_ppm: 5.0 },
                DiscoveryCase { label: "dia".into(), mode: DetectionMode::Dia, eps_t: 170, cfo_ppm: 0.0 },
            ],
            training: TrainingConfig::default(),
            training_arrays: vec![TrainingArray { n_tx: 32, n_rx: 8 }, TrainingArray { n_tx: 128, n_rx: 32 }],
            training_snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            training_eps_t: 170,
            training_cfo_ppm: 5.0,
            training_max_angle: std::f64::consts::FRAC_PI_3,
            system: SystemScenario::default(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_tx == 0 || self.n_rx == 0 {
            return bad("array sizes must be positive".into());
        }
        if self.m_tx * self.m_rx != self.frame.bursts {
            return bad(format!("sector counts m_tx*m_rx={} must equal M={}", self.m_tx * self.m_rx, self.frame.bursts));
        }
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return bad("p_fa must lie in (0, 1)".into());
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.training_cfo_ppm.abs() > self.max_cfo_ppm {
            return bad("training_cfo_ppm exceeds max_cfo_ppm".into());
        }
        if !(self.training_max_angle > 0.0 && self.training_max_angle <= std::f64::consts::FRAC_PI_2) {
            return bad("training_max_angle must lie in (0, pi/2]".into());
        }
        for c in &self.discovery {
            if c.eps_t > self.frame.eps_t_max {
                return bad(format!("case '{}' timing offset exceeds eps_T_max", c.label));
            }
        }
        Ok(())
    }

    /// Normalized CFO bound implied by `max_cfo_ppm`.
    pub fn cfo_bound(&self) -> f64 {
        crate::channel::cfo_from_ppm(self.max_cfo_ppm, self.carrier_hz, &self.frame)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}
