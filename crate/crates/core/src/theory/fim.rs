//! Fisher information and CRLB of the single-path training model.
//!
//! Parameters are ordered `[eps_F, theta (AoD), phi (AoA), tau, alpha, beta]`
//! with `g = alpha + j beta`. The entries are assembled from per-burst beam
//! factors and waveform sums rather than by differentiating the full model.

use nalgebra::{Matrix6, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{combine, steering, steering_deriv};
use crate::codebook::Codebook;
use crate::config::FrameConfig;
use crate::dsp::UnitaryDft;
use crate::error::{Error, Result};
use crate::waveform::{delay_response, delay_response_deriv, PssSequence};

pub const EPS_F: usize = 0;
pub const AOD: usize = 1;
pub const AOA: usize = 2;
pub const DELAY: usize = 3;
pub const GAIN_RE: usize = 4;
pub const GAIN_IM: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosParams {
    pub eps_f: f64,
    pub aod: f64,
    pub aoa: f64,
    pub delay: f64,
    pub gain: Complex64,
}

impl LosParams {
    pub fn to_array(&self) -> [f64; 6] {
        [self.eps_f, self.aod, self.aoa, self.delay, self.gain.re, self.gain.im]
    }

    pub fn from_array(x: &[f64; 6]) -> Self {
        LosParams { eps_f: x[0], aod: x[1], aoa: x[2], delay: x[3], gain: Complex64::new(x[4], x[5]) }
    }
}

pub struct FimInputs<'a> {
    pub cfg: &'a FrameConfig,
    pub pss: &'a PssSequence,
    pub tx: &'a Codebook,
    pub rx: &'a Codebook,
    pub params: LosParams,
    pub noise_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FimResult {
    /// `Re sum_m (d_x x_m)^H (d_y x_m)`.
    pub phi: Matrix6<f64>,
    /// `J = (2 / sigma^2) Phi`.
    pub info: Matrix6<f64>,
    pub inverse: Matrix6<f64>,
}

impl FimResult {
    pub fn crlb_aod(&self) -> f64 {
        self.inverse[(AOD, AOD)]
    }

    pub fn crlb_aoa(&self) -> f64 {
        self.inverse[(AOA, AOA)]
    }
}

/// Waveform sums shared by all bursts.
struct WaveformSums {
    /// `sum_p |u_p|^2`
    energy: f64,
    /// `sum_p |du_p|^2`
    deriv_energy: f64,
    /// `sum_p conj(u_p) du_p`
    cross: Complex64,
    /// `sum_p p |u_p|^2`, `sum_p p^2 |u_p|^2`, `sum_p p conj(u_p) du_p`
    p1: f64,
    p2: f64,
    p_cross: Complex64,
}

impl WaveformSums {
    /// `C_dq,m = sum_p (m N_B + p) |u_p|^2`
    fn c_dq(&self, off: f64) -> f64 {
        off * self.energy + self.p1
    }

    /// `C_d2q,m = sum_p (m N_B + p)^2 |u_p|^2`
    fn c_d2q(&self, off: f64) -> f64 {
        off * off * self.energy + 2.0 * off * self.p1 + self.p2
    }

    /// `sum_p (m N_B + p) conj(u_p) du_p`
    fn c_dtau(&self, off: f64) -> Complex64 {
        self.cross * off + self.p_cross
    }
}

fn waveform_sums(cfg: &FrameConfig, pss: &PssSequence, tau: f64) -> WaveformSums {
    let dft = UnitaryDft::new(cfg.pss_len);
    let mix = |f: Vec<Complex64>| -> Vec<Complex64> { dft.inverse(&f.iter().zip(&pss.freq).map(|(a, b)| a * b).collect::<Vec<_>>()) };
    let u = mix(delay_response(tau, cfg));
    let du = mix(delay_response_deriv(tau, cfg));
    let mut s = WaveformSums {
        energy: 0.0,
        deriv_energy: 0.0,
        cross: Complex64::new(0.0, 0.0),
        p1: 0.0,
        p2: 0.0,
        p_cross: Complex64::new(0.0, 0.0),
    };
    for (p, (a, d)) in u.iter().zip(&du).enumerate() {
        let p = p as f64;
        s.energy += a.norm_sqr();
        s.deriv_energy += d.norm_sqr();
        s.cross += a.conj() * d;
        s.p1 += p * a.norm_sqr();
        s.p2 += p * p * a.norm_sqr();
        s.p_cross += a.conj() * d * p;
    }
    s
}

/// Computes `Phi`, `J` and `J^{-1}` for one parameter point.
pub fn fim(input: &FimInputs<'_>) -> Result<FimResult> {
    let FimInputs { cfg, pss, tx, rx, params, noise_power } = *input;
    if tx.len() != cfg.bursts || rx.len() != cfg.bursts {
        return Err(Error::CodebookSize { expected: cfg.bursts, got: tx.len().min(rx.len()) });
    }
    if !(noise_power > 0.0) {
        return Err(Error::InvalidArgument("noise power must be positive".into()));
    }
    let (n_tx, n_rx) = (tx.antennas(), rx.antennas());
    let a_tx = steering(n_tx, params.aod);
    let da_tx = steering_deriv(n_tx, params.aod);
    let a_rx = steering(n_rx, params.aoa);
    let da_rx = steering_deriv(n_rx, params.aoa);
    let w = waveform_sums(cfg, pss, params.delay);
    let g = params.gain;
    let g2 = g.norm_sqr();
    let j = Complex64::new(0.0, 1.0);

    let mut phi = Matrix6::<f64>::zeros();
    for m in 0..cfg.bursts {
        let off = (m * cfg.burst_len) as f64;
        let rot = Complex64::from_polar(1.0, params.eps_f * off);
        let r = combine(&rx.beams[m], &a_rx);
        let dr = combine(&rx.beams[m], &da_rx);
        let t = combine(&a_tx, &tx.beams[m]);
        let dt = combine(&da_tx, &tx.beams[m]);
        let b = rot * r * t;
        let b_th = rot * r * dt;
        let b_ph = rot * dr * t;
        let bb = b.norm_sqr();

        let c1 = w.c_dq(off);
        let c2 = w.c_d2q(off);
        let ct = w.c_dtau(off);
        let e = w.energy;

        let mut add = |x: usize, y: usize, v: f64| phi[(x, y)] += v;
        add(EPS_F, EPS_F, g2 * bb * c2);
        add(EPS_F, AOD, (-j * g2 * b.conj() * b_th * c1).re);
        add(EPS_F, AOA, (-j * g2 * b.conj() * b_ph * c1).re);
        add(EPS_F, DELAY, (-j * g2 * bb * ct).re);
        add(EPS_F, GAIN_RE, (-j * g.conj() * bb * c1).re);
        add(EPS_F, GAIN_IM, (g.conj() * bb * c1).re);

        add(AOD, AOD, g2 * b_th.norm_sqr() * e);
        add(AOD, AOA, (g2 * b_th.conj() * b_ph).re * e);
        add(AOD, DELAY, (g2 * b_th.conj() * b * w.cross).re);
        add(AOD, GAIN_RE, (g.conj() * b_th.conj() * b).re * e);
        add(AOD, GAIN_IM, (j * g.conj() * b_th.conj() * b).re * e);

        add(AOA, AOA, g2 * b_ph.norm_sqr() * e);
        add(AOA, DELAY, (g2 * b_ph.conj() * b * w.cross).re);
        add(AOA, GAIN_RE, (g.conj() * b_ph.conj() * b).re * e);
        add(AOA, GAIN_IM, (j * g.conj() * b_ph.conj() * b).re * e);

        add(DELAY, DELAY, g2 * bb * w.deriv_energy);
        add(DELAY, GAIN_RE, (g.conj() * bb * w.cross.conj()).re);
        add(DELAY, GAIN_IM, (j * g.conj() * bb * w.cross.conj()).re);

        add(GAIN_RE, GAIN_RE, bb * e);
        add(GAIN_IM, GAIN_IM, bb * e);
    }
    for x in 0..6 {
        for y in 0..x {
            phi[(x, y)] = phi[(y, x)];
        }
    }
    let info = phi * (2.0 / noise_power);
    let inverse = invert_spd(&info)?;
    Ok(FimResult { phi, info, inverse })
}

/// Inverts a symmetric positive definite matrix after equilibrating its
/// diagonal, since the delay row is many orders larger than the others.
pub fn invert_spd(m: &Matrix6<f64>) -> Result<Matrix6<f64>> {
    let mut s = Matrix6::<f64>::zeros();
    for i in 0..6 {
        let d = m[(i, i)];
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::SingularFim);
        }
        s[(i, i)] = 1.0 / d.sqrt();
    }
    let scaled = s * m * s;
    let eig = SymmetricEigen::new(scaled);
    let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo > 1e-12 * hi) {
        return Err(Error::SingularFim);
    }
    let inv = scaled.cholesky().ok_or(Error::SingularFim)?.inverse();
    Ok(s * inv * s)
}
