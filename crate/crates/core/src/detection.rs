//! PSS correlation and energy detectors.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::config::FrameConfig;
use crate::error::{Error, Result};
use crate::waveform::PssSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMode {
    /// Genie timing: windows start at the true burst positions.
    Pt,
    /// Unknown timing: search over the offset window.
    Nt,
    /// Directional benchmark: strongest single correlation peak.
    Dia,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub decision: Hypothesis,
    pub statistic: f64,
    pub threshold: f64,
    /// Timing estimate, present only for a positive NT decision.
    pub eps_t_hat: Option<usize>,
    /// 1-based burst of the strongest peak, present only for a positive DIA decision.
    pub burst_hat: Option<usize>,
    pub mode: DetectionMode,
}

/// Overlap-save FFT correlator against a fixed PSS.
pub struct Correlator {
    p: usize,
    fft_len: usize,
    h_freq: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Correlator {
    pub fn new(pss: &PssSequence) -> Self {
        let p = pss.len();
        let fft_len = (8 * p).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(fft_len);
        let inv = planner.plan_fft_inverse(fft_len);
        // Correlation is convolution with the conjugated, reversed sequence.
        let mut h = vec![Complex64::new(0.0, 0.0); fft_len];
        for k in 0..p {
            h[k] = pss.time[p - 1 - k].conj() / (fft_len * p) as f64;
        }
        fwd.process(&mut h);
        Correlator { p, fft_len, h_freq: h, fwd, inv }
    }

    /// `c[n] = (1/P) sum_k conj(s[k]) y[n + k]` for `n = 0..=len(y)-P`.
    pub fn correlate(&self, y: &[Complex64]) -> Vec<Complex64> {
        if y.len() < self.p {
            return Vec::new();
        }
        let out_len = y.len() - self.p + 1;
        let step = self.fft_len - self.p + 1;
        let mut out = Vec::with_capacity(out_len);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_len];
        let mut start = 0;
        while start < out_len {
            let end = (start + self.fft_len).min(y.len());
            buf[..end - start].copy_from_slice(&y[start..end]);
            buf[end - start..].fill(Complex64::new(0.0, 0.0));
            self.fwd.process(&mut buf);
            for (b, h) in buf.iter_mut().zip(&self.h_freq) {
                *b *= h;
            }
            self.inv.process(&mut buf);
            let take = step.min(out_len - start);
            out.extend_from_slice(&buf[self.p - 1..self.p - 1 + take]);
            start += step;
        }
        out
    }
}

pub fn pss_correlate(y: &[Complex64], pss: &PssSequence) -> Vec<Complex64> {
    Correlator::new(pss).correlate(y)
}

fn energies(corr: &[Complex64]) -> Vec<f64> {
    corr.iter().map(|c| c.norm_sqr()).collect()
}

/// Prefix sums of `|corr|^2` with a leading zero.
fn prefix(corr: &[Complex64]) -> Vec<f64> {
    let mut s = Vec::with_capacity(corr.len() + 1);
    s.push(0.0);
    let mut acc = 0.0;
    for e in energies(corr) {
        acc += e;
        s.push(acc);
    }
    s
}

fn window_from_prefix(s: &[f64], cfg: &FrameConfig, n: usize) -> Result<f64> {
    let mut acc = 0.0;
    for m in 0..cfg.bursts {
        let a = cfg.cp_len + n + m * cfg.burst_len;
        let b = a + cfg.max_delay_taps;
        if b >= s.len() {
            return Err(Error::CaptureTooShort { need: b + cfg.pss_len - 1, have: s.len() + cfg.pss_len - 2 });
        }
        acc += s[b] - s[a];
    }
    Ok(acc / cfg.bursts as f64)
}

/// `(1/M) sum_m sum_{k<N_c} |c[N_CP + n + k + m N_B]|^2`.
pub fn window_energy(corr: &[Complex64], cfg: &FrameConfig, n: usize) -> Result<f64> {
    window_from_prefix(&prefix(corr), cfg, n)
}

fn decide(statistic: f64, threshold: f64) -> Hypothesis {
    if statistic >= threshold {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    }
}

/// Energy detector with known timing.
pub fn detect_pt(corr: &[Complex64], cfg: &FrameConfig, eta: f64) -> Result<DetectionResult> {
    let statistic = window_energy(corr, cfg, 0)?;
    Ok(DetectionResult {
        decision: decide(statistic, eta),
        statistic,
        threshold: eta,
        eps_t_hat: None,
        burst_hat: None,
        mode: DetectionMode::Pt,
    })
}

/// Energy detector maximized over the timing window; ties go to the
/// earliest offset.
pub fn detect_nt(corr: &[Complex64], cfg: &FrameConfig, eta: f64) -> Result<DetectionResult> {
    let s = prefix(corr);
    let mut best = (0, f64::NEG_INFINITY);
    for n in 0..cfg.eps_t_max.max(1) {
        let e = window_from_prefix(&s, cfg, n)?;
        if e > best.1 {
            best = (n, e);
        }
    }
    let decision = decide(best.1, eta);
    Ok(DetectionResult {
        decision,
        statistic: best.1,
        threshold: eta,
        eps_t_hat: (decision == Hypothesis::H1).then_some(best.0),
        burst_hat: None,
        mode: DetectionMode::Nt,
    })
}

/// Peak detector for directional sounding.
pub fn detect_dia(corr: &[Complex64], cfg: &FrameConfig, eta: f64) -> Result<DetectionResult> {
    if corr.is_empty() {
        return Err(Error::CaptureTooShort { need: cfg.pss_len, have: 0 });
    }
    let (n_peak, statistic) =
        energies(corr).into_iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (n, e)| if e > best.1 { (n, e) } else { best });
    let decision = decide(statistic, eta);
    let burst = (n_peak.saturating_sub(cfg.cp_len) / cfg.burst_len).min(cfg.bursts - 1) + 1;
    Ok(DetectionResult {
        decision,
        statistic,
        threshold: eta,
        eps_t_hat: None,
        burst_hat: (decision == Hypothesis::H1).then_some(burst),
        mode: DetectionMode::Dia,
    })
}

pub fn detect(mode: DetectionMode, corr: &[Complex64], cfg: &FrameConfig, eta: f64) -> Result<DetectionResult> {
    match mode {
        DetectionMode::Pt => detect_pt(corr, cfg, eta),
        DetectionMode::Nt => detect_nt(corr, cfg, eta),
        DetectionMode::Dia => detect_dia(corr, cfg, eta),
    }
}

/// A timing estimate is usable when its `N_c`-sample window holds every
/// path tap `eps_T + d_l`.
pub fn timing_correct(eps_t_hat: usize, eps_t: usize, taps: &[usize], cfg: &FrameConfig) -> bool {
    taps.iter().all(|&d| {
        let t = eps_t + d;
        t >= eps_t_hat && t < eps_t_hat + cfg.max_delay_taps
    })
}
