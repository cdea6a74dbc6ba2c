//! Coarse estimators: burst extraction, delay, per-burst gains, CFO and
//! joint angle matching pursuit.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::FrameConfig;
use crate::dsp::inner;
use crate::error::{Error, Result};
use crate::training::dictionaries::{AngleDictionary, DelayDictionary};

/// Post-CP bursts `y_m[p] = y[eps_T_hat + N_CP + p + m N_B]`.
pub fn rearrange(y: &[Complex64], eps_t_hat: usize, cfg: &FrameConfig) -> Result<Vec<Vec<Complex64>>> {
    let start = eps_t_hat + cfg.cp_len;
    let need = start + (cfg.bursts - 1) * cfg.burst_len + cfg.pss_len;
    if y.len() < need {
        return Err(Error::CaptureTooShort { need, have: y.len() });
    }
    Ok((0..cfg.bursts)
        .map(|m| {
            let s = start + m * cfg.burst_len;
            y[s..s + cfg.pss_len].to_vec()
        })
        .collect())
}

/// Statistic maximized by the delay search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayMetric {
    /// `|<p_q, mean_m y_m>|`. Per-burst gains with unrelated phases can
    /// cancel in the average.
    Coherent,
    /// `sum_m |<p_q, y_m>|^2`, the ML statistic for unknown per-burst gains.
    #[default]
    NonCoherent,
}

/// Delay of the dominant path; returns `(q, d_q)`.
pub fn estimate_delay(bursts: &[Vec<Complex64>], dict: &DelayDictionary, metric: DelayMetric) -> (usize, f64) {
    let score: Box<dyn Fn(&[Complex64], f64) -> f64> = match metric {
        DelayMetric::Coherent => {
            let p = bursts[0].len();
            let mut mean = vec![Complex64::new(0.0, 0.0); p];
            for b in bursts {
                for (acc, v) in mean.iter_mut().zip(b) {
                    *acc += v;
                }
            }
            Box::new(move |atom, n2| inner(atom, &mean).norm() / n2)
        }
        DelayMetric::NonCoherent => Box::new(|atom, n2| bursts.iter().map(|b| inner(atom, b).norm_sqr()).sum::<f64>() / n2),
    };
    let mut best = (0, f64::NEG_INFINITY);
    for (q, (atom, &n2)) in dict.atoms.iter().zip(&dict.norms_sqr).enumerate() {
        let v = score(atom, n2);
        if v > best.1 {
            best = (q, v);
        }
    }
    (best.0, dict.grid[best.0])
}

/// Per-burst gains `g_m = <p, y_m> / ||p||^2`.
pub fn estimate_gain(bursts: &[Vec<Complex64>], atom: &[Complex64]) -> Vec<Complex64> {
    let n2: f64 = atom.iter().map(|v| v.norm_sqr()).sum();
    bursts.iter().map(|b| inner(atom, b) / n2).collect()
}

/// Frequency of a burst-rate tone from its average phase increment,
/// in radians per sample; the result lies in `(-pi/N_B, pi/N_B]`.
pub fn cfo_from_tone(tone: &[Complex64], burst_len: usize) -> Result<f64> {
    if tone.len() < 2 {
        return Err(Error::InvalidArgument("tone needs at least two bursts".into()));
    }
    let acc: Complex64 = tone.windows(2).map(|w| w[0].conj() * w[1]).sum();
    if acc.norm() == 0.0 {
        return Err(Error::ZeroTone);
    }
    Ok(acc.arg() / burst_len as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpResult {
    pub k: usize,
    pub k_rx: usize,
    pub k_tx: usize,
    pub aod: f64,
    pub aoa: f64,
    /// CFO estimate, modulo `2 pi / N_B`.
    pub eps_f: f64,
    pub score: f64,
}

/// Per-burst phase `w` maximizing `|sum_m p_m e^{-j w m}|`: zero-padded FFT
/// peak, then Newton steps on the squared magnitude.
struct ToneSearch {
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    buf: Vec<Complex64>,
}

impl ToneSearch {
    fn new(m: usize) -> Self {
        let len = (4 * m).next_power_of_two();
        let fft = rustfft::FftPlanner::new().plan_fft_forward(len);
        ToneSearch { fft, buf: vec![Complex64::new(0.0, 0.0); len] }
    }

    fn dtft(p: &[Complex64], w: f64) -> (Complex64, Complex64, Complex64) {
        let step = Complex64::from_polar(1.0, -w);
        let mut rot = Complex64::new(1.0, 0.0);
        let (mut s, mut d1, mut d2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for (m, v) in p.iter().enumerate() {
            let t = v * rot;
            let mf = m as f64;
            s += t;
            d1 += t * Complex64::new(0.0, -mf);
            d2 -= t * (mf * mf);
            rot *= step;
        }
        (s, d1, d2)
    }

    /// Returns `(w, |S(w)|)`.
    fn peak(&mut self, p: &[Complex64]) -> (f64, f64) {
        let len = self.buf.len();
        self.buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        self.buf[..p.len()].copy_from_slice(p);
        self.fft.process(&mut self.buf);
        let (bin, _) =
            self.buf.iter().enumerate().fold((0, -1.0), |best, (i, v)| if v.norm_sqr() > best.1 { (i, v.norm_sqr()) } else { best });
        let bin_w = 2.0 * PI / len as f64;
        let w0 = if bin > len / 2 { (bin as f64 - len as f64) * bin_w } else { bin as f64 * bin_w };
        let mut w = w0;
        for _ in 0..8 {
            let (s, d1, d2) = Self::dtft(p, w);
            let g = 2.0 * (s.conj() * d1).re;
            let h = 2.0 * (d1.norm_sqr() + (s.conj() * d2).re);
            if h >= 0.0 {
                break;
            }
            let next = (w - g / h).clamp(w0 - bin_w, w0 + bin_w);
            let done = (next - w).abs() < 1e-15;
            w = next;
            if done {
                break;
            }
        }
        let at = Self::dtft(p, w).0.norm();
        let at0 = Self::dtft(p, w0).0.norm();
        if at >= at0 {
            (w, at)
        } else {
            (w0, at0)
        }
    }
}

/// One step of matching pursuit over the joint angle dictionary. Each atom
/// is scored at the CFO that maximizes its correlation with the gains,
/// `max_eps |<Q(eps) a_k, g>| / ||a_k||`.
pub fn matching_pursuit(gains: &[Complex64], dict: &AngleDictionary, burst_len: usize) -> MpResult {
    let mut search = ToneSearch::new(gains.len());
    let mut prod = vec![Complex64::new(0.0, 0.0); gains.len()];
    let mut best = MpResult { k: 0, k_rx: 0, k_tx: 0, aod: 0.0, aoa: 0.0, eps_f: 0.0, score: f64::NEG_INFINITY };
    for k_rx in 0..dict.aoa_grid.len() {
        for k_tx in 0..dict.aod_grid.len() {
            let r = score(gains, dict, k_rx, k_tx, burst_len, &mut search, &mut prod);
            if r.score > best.score {
                best = r;
            }
        }
    }
    best
}

/// Score and CFO of a single atom.
pub fn score_atom(gains: &[Complex64], dict: &AngleDictionary, k_rx: usize, k_tx: usize, burst_len: usize) -> MpResult {
    let mut prod = vec![Complex64::new(0.0, 0.0); gains.len()];
    score(gains, dict, k_rx, k_tx, burst_len, &mut ToneSearch::new(gains.len()), &mut prod)
}

fn score(
    gains: &[Complex64],
    dict: &AngleDictionary,
    k_rx: usize,
    k_tx: usize,
    burst_len: usize,
    search: &mut ToneSearch,
    prod: &mut [Complex64],
) -> MpResult {
    let mut norm = 0.0;
    for (i, p) in prod.iter_mut().enumerate() {
        let b = dict.rx_resp[i][k_rx] * dict.tx_resp[i][k_tx];
        norm += b.norm_sqr();
        *p = b.conj() * gains[i];
    }
    let (w, mag) = if norm > 0.0 { search.peak(prod) } else { (0.0, 0.0) };
    MpResult {
        k: dict.map(k_rx, k_tx),
        k_rx,
        k_tx,
        aod: dict.aod_grid[k_tx],
        aoa: dict.aoa_grid[k_rx],
        eps_f: w / burst_len as f64,
        score: if norm > 0.0 { mag / norm.sqrt() } else { f64::NEG_INFINITY },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::gen_pseudorandom;
    use crate::rng::{derive_stream, Purpose};
    use crate::waveform::gen_zc;
    use proptest::prelude::*;

    #[test]
    fn tone_recovery_and_wrap() {
        let tone: Vec<Complex64> = (0..16).map(|m| Complex64::from_polar(1.0, 1024.0 * 0.002 * m as f64)).collect();
        assert!((cfo_from_tone(&tone, 1024).unwrap() - 0.002).abs() < 1e-14);
        let eps = (2.0 * std::f64::consts::PI + 0.1) / 1024.0;
        let tone: Vec<Complex64> = (0..16).map(|m| Complex64::from_polar(1.0, 1024.0 * eps * m as f64)).collect();
        assert!((cfo_from_tone(&tone, 1024).unwrap() - 0.1 / 1024.0).abs() < 1e-12);
        let flat = vec![Complex64::new(2.0, 1.0); 8];
        assert_eq!(cfo_from_tone(&flat, 1024).unwrap(), 0.0);
        assert!(matches!(cfo_from_tone(&[Complex64::new(0.0, 0.0); 4], 1024), Err(Error::ZeroTone)));
    }

    #[test]
    fn on_grid_delay_is_exact() {
        let cfg = FrameConfig::default();
        let pss = gen_zc(25, 128).unwrap();
        let dict = DelayDictionary::new(&cfg, &pss, 500);
        let g = [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.5), Complex64::new(1.0, 0.0)];
        let bursts: Vec<Vec<Complex64>> = g.iter().map(|gm| dict.atoms[250].iter().map(|v| gm * v).collect()).collect();
        let (q, tau) = estimate_delay(&bursts, &dict, DelayMetric::Coherent);
        assert_eq!(estimate_delay(&bursts, &dict, DelayMetric::NonCoherent).0, 250);
        assert_eq!(q, 250);
        assert!((tau - 2.0 * cfg.sample_period).abs() < 1e-18);
        let est = estimate_gain(&bursts, &dict.atoms[q]);
        for (a, b) in est.iter().zip(&g) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rearrange_positions() {
        let cfg = FrameConfig { bursts: 3, ..Default::default() };
        let y: Vec<Complex64> = (0..cfg.capture_len()).map(|n| Complex64::new(n as f64, 0.0)).collect();
        let b = rearrange(&y, 5, &cfg).unwrap();
        assert_eq!(b[0][0].re, 13.0);
        assert_eq!(b[2][127].re, (5 + 8 + 127 + 2 * 1024) as f64);
        assert!(rearrange(&y[..2000], 5, &cfg).is_err());
    }

    #[test]
    fn pursuit_finds_on_grid_atom_with_cfo() {
        let mut rng = derive_stream(3, Purpose::Beams, 0).rng();
        let tx = gen_pseudorandom(8, 32, &mut rng);
        let rx = gen_pseudorandom(4, 32, &mut rng);
        let dict = AngleDictionary::new(&tx, &rx, 16, 8);
        let k_true = dict.map(5, 11);
        let eps = 0.0123;
        let g = Complex64::new(0.4, -0.9);
        let gains: Vec<Complex64> =
            dict.atom(k_true).iter().enumerate().map(|(m, b)| g * b * Complex64::from_polar(1.0, eps * (m * 1024) as f64)).collect();
        let r = matching_pursuit(&gains, &dict, 1024);
        assert_eq!((r.k_rx, r.k_tx), (5, 11));
        let period = 2.0 * std::f64::consts::PI / 1024.0;
        let diff = (r.eps_f - eps).rem_euclid(period);
        assert!(diff.min(period - diff) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tone_estimate_in_principal_range(eps in -0.05f64..0.05, m in 2usize..40) {
            let tone: Vec<Complex64> = (0..m).map(|i| Complex64::from_polar(1.0, 512.0 * eps * i as f64)).collect();
            let e = cfo_from_tone(&tone, 512).unwrap();
            let lim = std::f64::consts::PI / 512.0;
            prop_assert!(e > -lim - 1e-15 && e <= lim + 1e-15);
        }
    }
}
