//! Sparse multipath MIMO channel, array responses and received-signal
//! synthesis.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::config::FrameConfig;
use crate::dsp::UnitaryDft;
use crate::error::{Error, Result};
use crate::waveform::{delayed_pss, PssSequence};

/// Half-wavelength ULA response `[a(psi)]_k = exp(j pi k sin psi)`.
pub fn steering(n: usize, angle: f64) -> Vec<Complex64> {
    let s = angle.sin();
    (0..n).map(|k| Complex64::from_polar(1.0, PI * k as f64 * s)).collect()
}

/// d/dpsi of `steering`.
pub fn steering_deriv(n: usize, angle: f64) -> Vec<Complex64> {
    let c = PI * angle.cos();
    steering(n, angle).into_iter().enumerate().map(|(k, a)| a * Complex64::new(0.0, c * k as f64)).collect()
}

/// Unit-norm steering beam.
pub fn steering_beam(n: usize, angle: f64) -> Vec<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    steering(n, angle).into_iter().map(|a| a * scale).collect()
}

/// `w^H a`
pub fn combine(w: &[Complex64], a: &[Complex64]) -> Complex64 {
    w.iter().zip(a).map(|(w, a)| w.conj() * a).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub gain: Complex64,
    /// Angle of departure at the BS, radians.
    pub aod: f64,
    /// Angle of arrival at the UE, radians.
    pub aoa: f64,
    /// Delay in seconds.
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub paths: Vec<Path>,
    pub n_tx: usize,
    pub n_rx: usize,
    /// Per-element noise power.
    pub noise_power: f64,
}

impl ChannelRealization {
    pub fn new(paths: Vec<Path>, n_tx: usize, n_rx: usize, noise_power: f64, cfg: &FrameConfig) -> Result<Self> {
        let chan = ChannelRealization { paths, n_tx, n_rx, noise_power };
        chan.validate(cfg)?;
        Ok(chan)
    }

    pub fn validate(&self, cfg: &FrameConfig) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.paths.is_empty() {
            return bad("channel needs at least one path".into());
        }
        if self.n_tx == 0 || self.n_rx == 0 {
            return bad("array sizes must be positive".into());
        }
        let max_delay = cfg.max_delay_taps as f64 * cfg.sample_period;
        for (l, p) in self.paths.iter().enumerate() {
            if !(0.0..max_delay).contains(&p.delay) {
                return bad(format!("path {l} delay {} outside [0, N_c T_s)", p.delay));
            }
            if !p.aod.is_finite() || !p.aoa.is_finite() || !p.gain.is_finite() {
                return bad(format!("path {l} has non-finite parameters"));
            }
        }
        if !(self.noise_power >= 0.0) {
            return bad("noise power must be non-negative".into());
        }
        Ok(())
    }

    /// Total path power `sigma_g^2`.
    pub fn path_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }

    pub fn snr(&self) -> f64 {
        self.path_power() / self.noise_power
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayModel {
    /// Distinct integer taps in `0..N_c`.
    IntegerTaps,
    /// Uniform on `[0, N_c T_s)`.
    Continuous,
}

/// Random path parameters for Monte Carlo trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDraw {
    pub n_paths: usize,
    pub delay_model: DelayModel,
    /// Relative path powers in dB. Empty means equal power.
    #[serde(default)]
    pub powers_db: Vec<f64>,
    /// AoA/AoD are uniform on `(-max_angle, max_angle)`.
    #[serde(default = "half_pi")]
    pub max_angle: f64,
}

fn half_pi() -> f64 {
    PI / 2.0
}

impl Default for ChannelDraw {
    fn default() -> Self {
        ChannelDraw { n_paths: 2, delay_model: DelayModel::IntegerTaps, powers_db: Vec::new(), max_angle: PI / 2.0 }
    }
}

impl ChannelDraw {
    pub fn los(max_angle: f64) -> Self {
        ChannelDraw { n_paths: 1, delay_model: DelayModel::Continuous, powers_db: Vec::new(), max_angle }
    }
}

fn uniform_angle(rng: &mut impl Rng, max: f64) -> f64 {
    // Open interval.
    loop {
        let a = rng.random_range(-max..max);
        if a > -max {
            return a;
        }
    }
}

impl ChannelDraw {
    pub fn draw(
        &self,
        cfg: &FrameConfig,
        n_tx: usize,
        n_rx: usize,
        path_power: f64,
        noise_power: f64,
        rng: &mut impl Rng,
    ) -> Result<ChannelRealization> {
        let l = self.n_paths;
        if l == 0 {
            return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
        }
        if !(self.max_angle > 0.0 && self.max_angle <= PI / 2.0) {
            return Err(Error::InvalidArgument(format!("max_angle {} outside (0, pi/2]", self.max_angle)));
        }
        if !self.powers_db.is_empty() && self.powers_db.len() != l {
            return Err(Error::InvalidArgument("powers_db must list one entry per path".into()));
        }
        let delays: Vec<f64> = match self.delay_model {
            DelayModel::IntegerTaps => {
                if l > cfg.max_delay_taps {
                    return Err(Error::InvalidArgument(format!("{l} distinct integer taps do not fit in N_c={}", cfg.max_delay_taps)));
                }
                rand::seq::index::sample(rng, cfg.max_delay_taps, l).into_iter().map(|d| d as f64 * cfg.sample_period).collect()
            }
            DelayModel::Continuous => {
                let max = cfg.max_delay_taps as f64 * cfg.sample_period;
                (0..l).map(|_| rng.random_range(0.0..max)).collect()
            }
        };
        let weights: Vec<f64> =
            if self.powers_db.is_empty() { vec![1.0; l] } else { self.powers_db.iter().map(|db| 10f64.powf(db / 10.0)).collect() };
        let total: f64 = weights.iter().sum();
        let paths = delays
            .into_iter()
            .zip(weights)
            .map(|(delay, w)| {
                let phase = rng.random_range(0.0..2.0 * PI);
                Path {
                    gain: Complex64::from_polar((path_power * w / total).sqrt(), phase),
                    aod: uniform_angle(rng, self.max_angle),
                    aoa: uniform_angle(rng, self.max_angle),
                    delay,
                }
            })
            .collect();
        ChannelRealization::new(paths, n_tx, n_rx, noise_power, cfg)
    }
}

/// Timing and frequency offsets of the UE relative to the BS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncState {
    /// Timing offset in samples.
    pub eps_t: usize,
    /// Normalized CFO in radians per sample.
    pub eps_f: f64,
}

impl SyncState {
    pub fn new(eps_t: usize, eps_f: f64, cfg: &FrameConfig) -> Result<Self> {
        if eps_t > cfg.eps_t_max {
            return Err(Error::InvalidArgument(format!("timing offset {eps_t} exceeds eps_T_max={}", cfg.eps_t_max)));
        }
        Ok(SyncState { eps_t, eps_f })
    }

    pub fn perfect() -> Self {
        SyncState { eps_t: 0, eps_f: 0.0 }
    }
}

/// `eps_F = 2 pi T_s df`.
pub fn cfo_from_hz(df: f64, cfg: &FrameConfig) -> f64 {
    2.0 * PI * cfg.sample_period * df
}

/// Normalized CFO of an oscillator offset given in ppm of the carrier.
pub fn cfo_from_ppm(ppm: f64, carrier_hz: f64, cfg: &FrameConfig) -> f64 {
    cfo_from_hz(ppm * 1e-6 * carrier_hz, cfg)
}

/// `diag(e^{j eps p})`, the within-symbol CFO ramp.
pub fn cfo_phases(eps_f: f64, len: usize) -> Vec<Complex64> {
    (0..len).map(|p| Complex64::from_polar(1.0, eps_f * p as f64)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RxCapture {
    pub samples: Vec<Complex64>,
    pub sync: SyncState,
    pub signal_present: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SynthOptions {
    /// Wiener phase-noise increment variance (rad^2 per sample).
    pub phase_noise_var: Option<f64>,
    /// Generate noise only (the H0 hypothesis).
    pub noise_only: bool,
}

fn complex_normal(rng: &mut impl Rng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

fn check_codebooks(cfg: &FrameConfig, chan: &ChannelRealization, tx: &Codebook, rx: &Codebook) -> Result<()> {
    for (cb, n) in [(tx, chan.n_tx), (rx, chan.n_rx)] {
        if cb.len() != cfg.bursts {
            return Err(Error::CodebookSize { expected: cfg.bursts, got: cb.len() });
        }
        if cb.antennas() != n {
            return Err(Error::InvalidArgument(format!("codebook has {} antennas, array has {n}", cb.antennas())));
        }
    }
    Ok(())
}

/// Synthesizes the UE capture for one SS period.
///
/// Each path's burst block is the periodic extension of `F^H(f(tau) o s)`
/// over `N_CP + P` samples, so after CP removal every burst equals the
/// frequency-domain model exactly, including fractional delays.
#[allow(clippy::too_many_arguments)]
pub fn synth_rx(
    cfg: &FrameConfig,
    pss: &PssSequence,
    chan: &ChannelRealization,
    tx: &Codebook,
    rx: &Codebook,
    sync: SyncState,
    opts: SynthOptions,
    rng: &mut impl Rng,
) -> Result<RxCapture> {
    cfg.validate()?;
    chan.validate(cfg)?;
    check_codebooks(cfg, chan, tx, rx)?;
    let len = cfg.capture_len();
    let mut y = vec![Complex64::new(0.0, 0.0); len];

    if !opts.noise_only {
        let dft = UnitaryDft::new(cfg.pss_len);
        let n_sym = cfg.symbol_len();
        let p_len = cfg.pss_len;
        let phase_noise = opts.phase_noise_var.map(|var| {
            let sd = var.sqrt();
            let mut psi = 0.0;
            (0..len)
                .map(|_| {
                    let v = psi;
                    let z: f64 = StandardNormal.sample(rng);
                    psi += sd * z;
                    v
                })
                .collect::<Vec<f64>>()
        });
        for path in &chan.paths {
            let a_tx = steering(chan.n_tx, path.aod);
            let a_rx = steering(chan.n_rx, path.aoa);
            let tx_resp: Vec<Complex64> = tx.beams.iter().map(|v| combine(&a_tx, v)).collect();
            let rx_resp: Vec<Complex64> = rx.beams.iter().map(|w| combine(w, &a_rx)).collect();
            let u = delayed_pss(path.delay, cfg, pss, &dft);
            let t = path.delay / cfg.sample_period;
            let start = if (t - t.round()).abs() < 1e-9 { t.round() } else { t.ceil() } as usize;
            for m in 0..cfg.bursts {
                let base = sync.eps_t + m * cfg.burst_len + start;
                let coef = path.gain * tx_resp[m];
                for j in 0..n_sym {
                    let n = base + j;
                    if n >= len {
                        break;
                    }
                    let idx = (j + start + p_len - cfg.cp_len % p_len) % p_len;
                    let ue_beam = (n / cfg.burst_len) % cfg.bursts;
                    let mut phase = sync.eps_f * n as f64;
                    if let Some(psi) = &phase_noise {
                        phase += psi[n];
                    }
                    y[n] += Complex64::from_polar(1.0, phase) * coef * rx_resp[ue_beam] * u[idx];
                }
            }
        }
    }

    let rx_norms: Vec<f64> = rx.beams.iter().map(|w| w.iter().map(|x| x.norm_sqr()).sum()).collect();
    for (n, v) in y.iter_mut().enumerate() {
        let ue_beam = (n / cfg.burst_len) % cfg.bursts;
        *v += complex_normal(rng, chan.noise_power * rx_norms[ue_beam]);
    }
    Ok(RxCapture { samples: y, sync, signal_present: !opts.noise_only })
}

/// Band-limited interpolation kernel `p_c` evaluated at `x` samples, the
/// periodic sinc consistent with the frequency-domain delay model.
pub fn pulse(x: f64, period: usize) -> Complex64 {
    let p = period as f64;
    (0..period).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x / p)).sum::<Complex64>() / p
}

/// Time-domain tap matrices `H[d]`, `d = 0..n_taps`.
pub fn channel_taps(chan: &ChannelRealization, cfg: &FrameConfig, n_taps: usize) -> Vec<DMatrix<Complex64>> {
    let arrays: Vec<(DMatrix<Complex64>, f64, Complex64)> = chan
        .paths
        .iter()
        .map(|p| {
            let a_rx = DMatrix::from_column_slice(chan.n_rx, 1, &steering(chan.n_rx, p.aoa));
            let a_tx = DMatrix::from_column_slice(chan.n_tx, 1, &steering(chan.n_tx, p.aod));
            (a_rx * a_tx.adjoint(), p.delay / cfg.sample_period, p.gain)
        })
        .collect();
    (0..n_taps)
        .map(|d| {
            let mut h = DMatrix::zeros(chan.n_rx, chan.n_tx);
            for (outer, t, g) in &arrays {
                h += outer * (g * pulse(d as f64 - t, cfg.pss_len));
            }
            h
        })
        .collect()
}

/// Noiseless capture built directly from the tap form of the channel:
/// `y[n] = e^{j eps n} sum_d w[n]^H H[d] v[n-d-eps_T] s[n-d-eps_T]`.
/// Only the first `N_c` taps are used, so it agrees with [`synth_rx`] for
/// on-sample delays.
pub fn synth_rx_taps(
    cfg: &FrameConfig,
    stream: &[Complex64],
    chan: &ChannelRealization,
    tx: &Codebook,
    rx: &Codebook,
    sync: SyncState,
) -> Result<Vec<Complex64>> {
    check_codebooks(cfg, chan, tx, rx)?;
    let taps = channel_taps(chan, cfg, cfg.max_delay_taps);
    let len = cfg.capture_len();
    let mut y = vec![Complex64::new(0.0, 0.0); len];
    for (n, out) in y.iter_mut().enumerate() {
        let w = DMatrix::from_column_slice(chan.n_rx, 1, &rx.beams[(n / cfg.burst_len) % cfg.bursts]);
        let mut acc = Complex64::new(0.0, 0.0);
        for (d, h) in taps.iter().enumerate() {
            let Some(k) = n.checked_sub(d + sync.eps_t) else { continue };
            if k >= stream.len() {
                continue;
            }
            let v = DMatrix::from_column_slice(chan.n_tx, 1, &tx.beams[k / cfg.burst_len]);
            acc += (w.adjoint() * h * v)[(0, 0)] * stream[k];
        }
        *out = Complex64::from_polar(1.0, sync.eps_f * n as f64) * acc;
    }
    Ok(y)
}

/// Thermal noise density including a 4 dB noise figure, dBm/Hz.
pub const NOISE_PSD_DBM_HZ: f64 = -170.0;

/// Post-beamforming SNR in dB of a data link using beams `w`, `v`, transmit
/// power `p_out` (W) and bandwidth `b_tot` (Hz). The channel gain is averaged
/// over subcarriers, i.e. summed over all `P` circular taps.
pub fn post_bf_snr(chan: &ChannelRealization, cfg: &FrameConfig, w: &[Complex64], v: &[Complex64], p_out: f64, b_tot: f64) -> f64 {
    let w = DMatrix::from_column_slice(chan.n_rx, 1, w);
    let v = DMatrix::from_column_slice(chan.n_tx, 1, v);
    let gain: f64 = channel_taps(chan, cfg, cfg.pss_len).iter().map(|h| (w.adjoint() * h * &v)[(0, 0)].norm_sqr()).sum();
    let noise_w = 10f64.powf((NOISE_PSD_DBM_HZ + 10.0 * b_tot.log10()) / 10.0) * 1e-3;
    10.0 * (p_out * gain / noise_w).log10()
}
