//! Detector thresholds and miss-detection probability.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::config::FrameConfig;
use crate::detection::DetectionMode;
use crate::error::{Error, Result};

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Inverse of [`q_function`] on `(0, 1)`.
pub fn q_inv(p: f64) -> f64 {
    SQRT_2 * erfc_inv(2.0 * p)
}

/// Scale constant of the extreme-value threshold correction, `sqrt(6)/pi`.
pub const GUMBEL_SCALE: f64 = 2.449_489_742_783_178 / PI;

/// Number of PSS samples received after the UE switches combiner
/// mid-symbol because of the timing offset.
pub fn gain_split_k(eps_t: usize, cfg: &FrameConfig) -> usize {
    let nb = cfg.burst_len;
    if eps_t < nb && eps_t + cfg.pss_len >= nb {
        nb - eps_t
    } else {
        0
    }
}

/// SNR degradation from CFO and a mid-PSS combiner switch.
pub fn kappa(eps_t: usize, eps_f: f64, cfg: &FrameConfig) -> f64 {
    let p = cfg.pss_len as f64;
    let k = gain_split_k(eps_t, cfg) as f64;
    let den = (eps_f / 2.0).sin().powi(2);
    if den < 1e-24 {
        return (k * k + (p - k) * (p - k)) / (p * p);
    }
    // 1 - cos(x) = 2 sin^2(x/2) keeps small offsets accurate.
    let num = (k * eps_f / 2.0).sin().powi(2) + ((p - k) * eps_f / 2.0).sin().powi(2);
    num / (p * p * den)
}

/// Inputs of the discovery-performance formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionTheory {
    pub cfg: FrameConfig,
    pub mode: DetectionMode,
    /// Target false-alarm probability.
    pub p_fa: f64,
    /// Linear pre-beamforming SNR `sigma_g^2 / sigma_n^2`.
    pub snr: f64,
    pub eps_t: usize,
    pub eps_f: f64,
    /// Scale of the extreme-value correction in the NT threshold.
    pub gumbel_scale: f64,
}

impl DetectionTheory {
    pub fn new(cfg: FrameConfig, mode: DetectionMode, p_fa: f64) -> Self {
        DetectionTheory { cfg, mode, p_fa, snr: 0.0, eps_t: 0, eps_f: 0.0, gumbel_scale: GUMBEL_SCALE }
    }

    fn check(&self) -> Result<()> {
        if self.mode == DetectionMode::Dia {
            return Err(Error::InvalidArgument("no closed-form threshold for directional sounding".into()));
        }
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return Err(Error::InvalidArgument(format!("false-alarm target {} outside (0, 1)", self.p_fa)));
        }
        Ok(())
    }

    /// Threshold adjustment factor.
    pub fn xi(&self) -> Result<f64> {
        self.check()?;
        Ok(match self.mode {
            DetectionMode::Pt => q_inv(self.p_fa),
            _ => {
                let q = q_inv(1.0 / self.cfg.eps_t_max.max(2) as f64);
                q - self.gumbel_scale * (-(1.0 - self.p_fa).ln()).ln() / q
            }
        })
    }

    /// Spread of the noise-only statistic in units of `sigma_n^2`.
    fn noise_sd(&self) -> f64 {
        let c = &self.cfg;
        (c.max_delay_taps as f64 / (c.bursts as f64 * (c.pss_len as f64).powi(2))).sqrt()
    }

    /// Neyman-Pearson threshold for noise power `noise_power`.
    pub fn threshold(&self, noise_power: f64) -> Result<f64> {
        let mean = self.cfg.max_delay_taps as f64 / self.cfg.pss_len as f64;
        Ok(noise_power * (mean + self.noise_sd() * self.xi()?))
    }

    /// Predicted miss-detection probability at the threshold above.
    pub fn pmd(&self) -> Result<f64> {
        let xi = self.xi()?;
        let k = kappa(self.eps_t, self.eps_f, &self.cfg);
        let m = self.cfg.bursts as f64;
        let sd = self.noise_sd();
        let num = k * self.snr - sd * xi;
        let den = (2.0 * (k * self.snr).powi(2) / m + sd * sd).sqrt();
        Ok(q_function(num / den))
    }
}
