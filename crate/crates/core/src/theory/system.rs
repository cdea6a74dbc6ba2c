//! Access latency, overhead and complexity of the two IA schemes.

use serde::{Deserialize, Serialize};

use crate::config::FrameConfig;
use crate::error::{Error, Result};

/// Frame-level parameters of the access-latency and overhead model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    /// UEs requesting beam training in the same period.
    pub n_ue: usize,
    /// CSI-RS period `T_R`, seconds.
    pub csi_rs_period: f64,
    /// CSI-RS block duration `T_r`, seconds.
    pub csi_rs_duration: f64,
    /// CSI-RS rounds each UE needs after discovery.
    pub n_train: usize,
    /// IA bandwidth, Hz.
    pub b_ia: f64,
    /// Total bandwidth, Hz.
    pub b_tot: f64,
    pub p_md: f64,
}

impl Default for SystemModel {
    fn default() -> Self {
        SystemModel { n_ue: 1, csi_rs_period: 1e-3, csi_rs_duration: 35.7e-6, n_train: 0, b_ia: 57.6e6, b_tot: 400e6, p_md: 0.04 }
    }
}

impl SystemModel {
    /// Time left for CSI-RS in one SS period.
    fn csi_rs_budget(cfg: &FrameConfig) -> f64 {
        cfg.ss_period - cfg.bursts as f64 * cfg.burst_duration()
    }

    /// CSI-RS period that fits exactly `k_r` slots per SS period.
    pub fn period_for_slots(k_r: usize, cfg: &FrameConfig) -> f64 {
        Self::csi_rs_budget(cfg) / k_r as f64
    }

    /// `K_R = floor((T_SS - M T_B) / T_R)`.
    pub fn slots_per_frame(&self, cfg: &FrameConfig) -> usize {
        let r = Self::csi_rs_budget(cfg) / self.csi_rs_period;
        (r + 1e-9).floor().max(0.0) as usize
    }

    /// Mean wait until a UE's CSI-RS grant. UE `i` (0-based) is served in
    /// frame `floor(i / K_R)` at slot `i mod K_R + 1`.
    pub fn mean_csi_rs_wait(&self, cfg: &FrameConfig) -> Result<f64> {
        let k_r = self.slots_per_frame(cfg);
        if self.n_ue == 0 {
            return Ok(0.0);
        }
        if k_r == 0 {
            return Err(Error::NoCsiRs);
        }
        let (t_ss, t_r) = (cfg.ss_period, self.csi_rs_period);
        let k_f = (self.n_ue - 1) / k_r;
        let k_res = self.n_ue - k_f * k_r;
        let slot_sum = |count: usize| (count * (count + 1) / 2) as f64 * t_r;
        let full: f64 = (0..k_f).map(|k| k_r as f64 * k as f64 * t_ss + slot_sum(k_r)).sum();
        let rest = k_res as f64 * k_f as f64 * t_ss + slot_sum(k_res);
        Ok((full + rest) / self.n_ue as f64)
    }

    /// Mean access latency in seconds.
    pub fn latency(&self, cfg: &FrameConfig) -> Result<f64> {
        if !(0.0..1.0).contains(&self.p_md) {
            return Err(Error::LatencyDiverges);
        }
        let discovery = cfg.ss_period * self.p_md / (1.0 - self.p_md);
        let training = if self.n_train == 0 { 0.0 } else { self.mean_csi_rs_wait(cfg)? * self.n_train as f64 };
        Ok(discovery + training)
    }

    /// Share of time-frequency resources spent on IA and CSI-RS, percent.
    pub fn overhead(&self, cfg: &FrameConfig) -> f64 {
        let k_r = self.slots_per_frame(cfg) as f64;
        let ia = cfg.bursts as f64 * self.b_ia * cfg.burst_duration();
        let csi = k_r * self.b_tot * self.csi_rs_duration;
        (ia + csi) / (self.b_tot * cfg.ss_period) * 100.0
    }
}

/// Complex multiplications per stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityCounts {
    pub pss_corr: u64,
    pub detect: u64,
    pub delay_est: u64,
    pub angle_est: u64,
    pub cfo_est: u64,
}

pub fn complexity_counts(cfg: &FrameConfig, g_d: usize, g_t: usize, g_r: usize) -> ComplexityCounts {
    let (p, nb, m) = (cfg.pss_len as u64, cfg.burst_len as u64, cfg.bursts as u64);
    let grid = (g_t * g_r) as u64;
    ComplexityCounts { pss_corr: p * nb, detect: nb, delay_est: p * g_d as u64 + p * m, angle_est: m * grid, cfo_est: 2 * m * grid }
}

impl ComplexityCounts {
    /// Training cost relative to the correlation every UE runs anyway:
    /// `(P N_B + P G_d + 3 M G_T G_R) / (P N_B)`.
    pub fn training_ratio(&self, cfg: &FrameConfig, g_d: usize) -> f64 {
        let p = cfg.pss_len as f64;
        (self.pss_corr as f64 + p * g_d as f64 + (self.angle_est + self.cfo_est) as f64) / self.pss_corr as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Grants CSI-RS slots in order, frame by frame.
    fn enumerate_wait(n_ue: usize, k_r: usize, t_ss: f64, t_r: f64) -> f64 {
        let mut total = 0.0;
        let mut ue = 0;
        let mut frame = 0;
        while ue < n_ue {
            for slot in 1..=k_r {
                if ue == n_ue {
                    break;
                }
                total += frame as f64 * t_ss + slot as f64 * t_r;
                ue += 1;
            }
            frame += 1;
        }
        total / n_ue as f64
    }

    #[test]
    fn geometric_discovery_latency() {
        let cfg = FrameConfig::default();
        let s = SystemModel { p_md: 0.5, ..Default::default() };
        assert!((s.latency(&cfg).unwrap() - 0.020).abs() < 1e-15);
        let s = SystemModel { p_md: 1.0, ..Default::default() };
        assert!(matches!(s.latency(&cfg), Err(Error::LatencyDiverges)));
    }

    #[test]
    fn wait_matches_enumeration_small_case() {
        let cfg = FrameConfig::default();
        let t_r = SystemModel::period_for_slots(2, &cfg);
        let s = SystemModel { n_ue: 5, csi_rs_period: t_r, ..Default::default() };
        assert_eq!(s.slots_per_frame(&cfg), 2);
        let expect = enumerate_wait(5, 2, cfg.ss_period, t_r);
        assert!((s.mean_csi_rs_wait(&cfg).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn overhead_values() {
        let cfg = FrameConfig::default();
        let none = SystemModel { csi_rs_period: 1.0, ..Default::default() };
        assert_eq!(none.slots_per_frame(&cfg), 0);
        let oh = none.overhead(&cfg);
        assert!((oh - 0.82).abs() < 0.01, "{oh}");
        let slow = FrameConfig { ss_period: 0.04, ..cfg.clone() };
        assert!((none.overhead(&slow) - oh / 2.0).abs() < 1e-12);
        let o: Vec<f64> = (1..4)
            .map(|k| SystemModel { csi_rs_period: SystemModel::period_for_slots(k, &cfg), ..Default::default() }.overhead(&cfg))
            .collect();
        assert!(((o[2] - o[1]) - (o[1] - o[0])).abs() < 1e-12);
    }

    #[test]
    fn complexity_table() {
        let cfg = FrameConfig::default();
        let c = complexity_counts(&cfg, 500, 256, 64);
        assert_eq!(c.pss_corr, 131_072);
        assert_eq!(c.detect, 1024);
        assert_eq!(c.delay_est, 128 * 500 + 128 * 64);
        assert_eq!(c.angle_est, 64 * 256 * 64);
        assert_eq!(c.cfo_est, 2 * 64 * 256 * 64);
        let ratio = complexity_counts(&cfg, 500, 128, 32).training_ratio(&cfg, 500);
        assert!((ratio - 7.2).abs() <= 0.5, "{ratio}");
    }

    proptest! {
        #[test]
        fn wait_matches_enumeration(n_ue in 1usize..=20, k_r in 1usize..=5) {
            let cfg = FrameConfig::default();
            let t_r = SystemModel::period_for_slots(k_r, &cfg);
            let s = SystemModel { n_ue, csi_rs_period: t_r, ..Default::default() };
            prop_assert_eq!(s.slots_per_frame(&cfg), k_r);
            let got = s.mean_csi_rs_wait(&cfg).unwrap();
            let want = enumerate_wait(n_ue, k_r, cfg.ss_period, t_r);
            prop_assert!((got - want).abs() <= 1e-12 * want.max(1e-3));
        }
    }
}
