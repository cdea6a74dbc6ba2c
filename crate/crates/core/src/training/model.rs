//! Noiseless single-path training model and its Jacobian.
//!
//! Burst `m` (0-based) after CP removal is
//! `x_m = g e^{j eps N_B m} (w_m^H a_rx(phi)) (a_tx(theta)^H v_m) Q(eps) F^H (f(tau) o s)`,
//! stacked as `x[m P + p]`. When the UE switches combiner inside the PSS,
//! samples from `switch_at` on use the next combiner `rx_next`.

use num_complex::Complex64;

use crate::channel::{combine, steering, steering_deriv};
use crate::codebook::Codebook;
use crate::config::FrameConfig;
use crate::dsp::UnitaryDft;
use crate::theory::fim::LosParams;
use crate::waveform::{delay_response, delay_response_deriv, PssSequence};

pub struct TrainingModel<'a> {
    pub cfg: &'a FrameConfig,
    pub pss: &'a PssSequence,
    pub tx: &'a Codebook,
    pub rx: &'a Codebook,
    pub rx_next: Option<&'a Codebook>,
    pub switch_at: usize,
    dft: UnitaryDft,
}

struct Parts {
    u: Vec<Complex64>,
    du: Vec<Complex64>,
    q: Vec<Complex64>,
    b: Vec<Complex64>,
    b_aod: Vec<Complex64>,
    b_aoa: Vec<Complex64>,
    /// Same factors with the next combiner; empty without a switch.
    b2: Vec<Complex64>,
    b2_aod: Vec<Complex64>,
    b2_aoa: Vec<Complex64>,
}

impl<'a> TrainingModel<'a> {
    pub fn new(cfg: &'a FrameConfig, pss: &'a PssSequence, tx: &'a Codebook, rx: &'a Codebook) -> Self {
        TrainingModel { cfg, pss, tx, rx, rx_next: None, switch_at: cfg.pss_len, dft: UnitaryDft::new(cfg.pss_len) }
    }

    /// Combiner `rx_next[m]` applies to samples `switch_at..P` of burst `m`.
    pub fn with_switch(mut self, rx_next: &'a Codebook, switch_at: usize) -> Self {
        if switch_at < self.cfg.pss_len {
            self.rx_next = Some(rx_next);
            self.switch_at = switch_at;
        }
        self
    }

    fn waveform(&self, f: Vec<Complex64>) -> Vec<Complex64> {
        let x: Vec<Complex64> = f.iter().zip(&self.pss.freq).map(|(a, b)| a * b).collect();
        self.dft.inverse(&x)
    }

    fn parts(&self, xi: &LosParams, derivs: bool) -> Parts {
        let cfg = self.cfg;
        let (n_tx, n_rx) = (self.tx.antennas(), self.rx.antennas());
        let u = self.waveform(delay_response(xi.delay, cfg));
        let du = if derivs { self.waveform(delay_response_deriv(xi.delay, cfg)) } else { Vec::new() };
        let q = (0..cfg.pss_len).map(|p| Complex64::from_polar(1.0, xi.eps_f * p as f64)).collect();
        let a_tx = steering(n_tx, xi.aod);
        let a_rx = steering(n_rx, xi.aoa);
        let (da_tx, da_rx) = if derivs { (steering_deriv(n_tx, xi.aod), steering_deriv(n_rx, xi.aoa)) } else { (Vec::new(), Vec::new()) };
        let factors = |rx: &Codebook| {
            let mut b = Vec::with_capacity(cfg.bursts);
            let mut b_aod = Vec::new();
            let mut b_aoa = Vec::new();
            for m in 0..cfg.bursts {
                let rot = Complex64::from_polar(1.0, xi.eps_f * (m * cfg.burst_len) as f64);
                let r = combine(&rx.beams[m], &a_rx);
                let t = combine(&a_tx, &self.tx.beams[m]);
                b.push(rot * r * t);
                if derivs {
                    b_aod.push(rot * r * combine(&da_tx, &self.tx.beams[m]));
                    b_aoa.push(rot * combine(&rx.beams[m], &da_rx) * t);
                }
            }
            (b, b_aod, b_aoa)
        };
        let (b, b_aod, b_aoa) = factors(self.rx);
        let (b2, b2_aod, b2_aoa) = self.rx_next.map(factors).unwrap_or_default();
        Parts { u, du, q, b, b_aod, b_aoa, b2, b2_aod, b2_aoa }
    }

    fn second(&self, p: usize) -> bool {
        self.rx_next.is_some() && p >= self.switch_at
    }

    /// Model output `x(xi)` of length `M P`.
    pub fn evaluate(&self, xi: &LosParams) -> Vec<Complex64> {
        let Parts { u, q, b, b2, .. } = self.parts(xi, false);
        let mut out = Vec::with_capacity(self.cfg.bursts * self.cfg.pss_len);
        for m in 0..self.cfg.bursts {
            for p in 0..self.cfg.pss_len {
                let bm = if self.second(p) { b2[m] } else { b[m] };
                out.push(xi.gain * bm * q[p] * u[p]);
            }
        }
        out
    }

    /// Columns `d x / d xi_i` in the order `[eps_F, theta, phi, tau, alpha, beta]`.
    pub fn jacobian(&self, xi: &LosParams) -> [Vec<Complex64>; 6] {
        let cfg = self.cfg;
        let Parts { u, du, q, b, b_aod, b_aoa, b2, b2_aod, b2_aoa } = self.parts(xi, true);
        let g = xi.gain;
        let j = Complex64::new(0.0, 1.0);
        let n = cfg.bursts * cfg.pss_len;
        let mut cols: [Vec<Complex64>; 6] = Default::default();
        for c in cols.iter_mut() {
            c.reserve(n);
        }
        for m in 0..cfg.bursts {
            for p in 0..cfg.pss_len {
                let (bm, bt, br) = if self.second(p) { (b2[m], b2_aod[m], b2_aoa[m]) } else { (b[m], b_aod[m], b_aoa[m]) };
                let qu = q[p] * u[p];
                let x = g * bm * qu;
                cols[0].push(j * (m * cfg.burst_len + p) as f64 * x);
                cols[1].push(g * bt * qu);
                cols[2].push(g * br * qu);
                cols[3].push(g * bm * q[p] * du[p]);
                cols[4].push(bm * qu);
                cols[5].push(j * bm * qu);
            }
        }
        cols
    }
}
