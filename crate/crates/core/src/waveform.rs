//! PSS generation, frame assembly and the frequency-domain delay model.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::FrameConfig;
use crate::dsp::UnitaryDft;
use crate::error::{Error, Result};

pub const DEFAULT_ZC_ROOT: u32 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PssKind {
    ZadoffChu {
        root: u32,
    },
    /// Maximum-length sequence; the length must be `2^k - 1`.
    MSequence,
}

impl Default for PssKind {
    fn default() -> Self {
        PssKind::ZadoffChu { root: DEFAULT_ZC_ROOT }
    }
}

/// Unit-modulus synchronization sequence in both domains.
#[derive(Debug, Clone)]
pub struct PssSequence {
    pub kind: PssKind,
    pub time: Vec<Complex64>,
    /// Unitary DFT of `time`.
    pub freq: Vec<Complex64>,
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zadoff-Chu sequence of length `len`. Odd lengths use `u n (n+1)`, even
/// lengths `u n^2`, so the sequence is CAZAC for any length coprime to `root`.
pub fn gen_zc(root: u32, len: usize) -> Result<PssSequence> {
    if len == 0 || root == 0 || root as usize >= len.max(2) || gcd(root as usize, len) != 1 {
        return Err(Error::InvalidRoot { root, len });
    }
    let u = root as f64;
    let c = (len % 2) as f64;
    let n_len = len as f64;
    let time: Vec<Complex64> = (0..len)
        .map(|n| {
            let n = n as f64;
            // Reduce the phase argument exactly before scaling to keep
            // precision for long sequences.
            let k = (u * n * (n + c)) % (2.0 * n_len);
            Complex64::from_polar(1.0, -PI * k / n_len)
        })
        .collect();
    Ok(finish(PssKind::ZadoffChu { root }, time))
}

/// Primitive feedback taps (exponents other than the leading one) for
/// Fibonacci LFSRs of degree 2..=12.
const PRIMITIVE_TAPS: [&[u32]; 11] = [&[1], &[1], &[1], &[2], &[1], &[1], &[4, 3, 2], &[4], &[3], &[2], &[6, 4, 1]];

/// BPSK-mapped maximum-length sequence of length `len = 2^k - 1`.
pub fn gen_msequence(len: usize) -> Result<PssSequence> {
    let k = (len + 1).trailing_zeros();
    if len < 3 || (len + 1).count_ones() != 1 || k as usize > PRIMITIVE_TAPS.len() + 1 {
        return Err(Error::InvalidArgument(format!("M-sequence length must be 2^k-1 with 2<=k<=12, got {len}")));
    }
    let taps = PRIMITIVE_TAPS[k as usize - 2];
    // x^k + x^t1 + ... + 1  ->  a[n+k] = a[n+t1] ^ ... ^ a[n]
    let mut bits = vec![0u8; len];
    bits[0] = 1;
    for n in 0..len - k as usize {
        let mut b = bits[n];
        for &t in taps.iter() {
            b ^= bits[n + t as usize];
        }
        bits[n + k as usize] = b;
    }
    let time = bits.iter().map(|&b| Complex64::new(1.0 - 2.0 * b as f64, 0.0)).collect();
    Ok(finish(PssKind::MSequence, time))
}

fn finish(kind: PssKind, time: Vec<Complex64>) -> PssSequence {
    let freq = UnitaryDft::new(time.len()).forward(&time);
    PssSequence { kind, time, freq }
}

impl PssSequence {
    pub fn generate(kind: PssKind, len: usize) -> Result<Self> {
        match kind {
            PssKind::ZadoffChu { root } => gen_zc(root, len),
            PssKind::MSequence => gen_msequence(len),
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }
}

/// Sample ranges of the CP and PSS inside each burst of the transmit stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BurstPlacement {
    pub cp: Vec<Range<usize>>,
    pub pss: Vec<Range<usize>>,
}

impl BurstPlacement {
    pub fn new(cfg: &FrameConfig) -> Self {
        let (cp, pss) = (0..cfg.bursts)
            .map(|m| {
                let base = m * cfg.burst_len;
                (base..base + cfg.cp_len, base + cfg.cp_len..base + cfg.symbol_len())
            })
            .unzip();
        BurstPlacement { cp, pss }
    }
}

/// Transmit stream of `M * N_B` samples: each burst carries CP + PSS and
/// is silent afterwards.
pub fn assemble_stream(cfg: &FrameConfig, pss: &PssSequence) -> Vec<Complex64> {
    let p = cfg.pss_len;
    assert_eq!(pss.len(), p, "PSS length must equal P");
    let mut s = vec![Complex64::new(0.0, 0.0); cfg.bursts * cfg.burst_len];
    for m in 0..cfg.bursts {
        let base = m * cfg.burst_len;
        for i in 0..cfg.cp_len {
            s[base + i] = pss.time[p - cfg.cp_len + i];
        }
        s[base + cfg.cp_len..base + cfg.symbol_len()].copy_from_slice(&pss.time);
    }
    s
}

/// Per-subcarrier response of a delay `tau` seconds:
/// `f_p = exp(-j 2 pi p tau / (P T_s))`.
pub fn delay_response(tau: f64, cfg: &FrameConfig) -> Vec<Complex64> {
    let p_len = cfg.pss_len as f64;
    let frac = tau / (p_len * cfg.sample_period);
    (0..cfg.pss_len)
        .map(|p| {
            let turns = (p as f64 * frac).rem_euclid(1.0);
            Complex64::from_polar(1.0, -2.0 * PI * turns)
        })
        .collect()
}

/// d/dtau of `delay_response`.
pub fn delay_response_deriv(tau: f64, cfg: &FrameConfig) -> Vec<Complex64> {
    let scale = -2.0 * PI / (cfg.pss_len as f64 * cfg.sample_period);
    delay_response(tau, cfg).into_iter().enumerate().map(|(p, f)| f * Complex64::new(0.0, scale * p as f64)).collect()
}

/// Received post-CP block for a single path at delay `tau`: `F^H (f(tau) o s)`.
pub fn delayed_pss(tau: f64, cfg: &FrameConfig, pss: &PssSequence, dft: &UnitaryDft) -> Vec<Complex64> {
    let f = delay_response(tau, cfg);
    let x: Vec<Complex64> = f.iter().zip(&pss.freq).map(|(a, b)| a * b).collect();
    dft.inverse(&x)
}

/// Uniform delay grid `d_q = q * N_c T_s / G_d`, `q = 0..G_d`.
pub fn delay_grid(cfg: &FrameConfig, g_d: usize) -> Vec<f64> {
    let step = cfg.max_delay_taps as f64 * cfg.sample_period / g_d as f64;
    (0..g_d).map(|q| q as f64 * step).collect()
}

/// Dictionary atom for grid point `q`.
pub fn pss_delay_atom(q: usize, g_d: usize, cfg: &FrameConfig, pss: &PssSequence) -> Vec<Complex64> {
    let step = cfg.max_delay_taps as f64 * cfg.sample_period / g_d as f64;
    delayed_pss(q as f64 * step, cfg, pss, &UnitaryDft::new(cfg.pss_len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn periodic_autocorr(x: &[Complex64], y: &[Complex64], lag: usize) -> Complex64 {
        let n = x.len();
        (0..n).map(|i| x[(i + lag) % n] * y[i].conj()).sum()
    }

    #[test]
    fn zc_is_cazac() {
        for len in [127usize, 128, 63] {
            let s = gen_zc(25, len).unwrap();
            for v in s.time.iter().chain(&s.freq) {
                assert!((v.norm() - 1.0).abs() < 1e-10);
            }
            assert!((periodic_autocorr(&s.time, &s.time, 0).norm() - len as f64).abs() < 1e-9);
            for lag in 1..len {
                assert!(periodic_autocorr(&s.time, &s.time, lag).norm() < 1e-8, "len {len} lag {lag}");
            }
        }
    }

    #[test]
    fn zc_cross_correlation_prime_length() {
        let a = gen_zc(25, 127).unwrap();
        let b = gen_zc(29, 127).unwrap();
        let bound = (127f64).sqrt() + 1e-9;
        for lag in 0..127 {
            assert!(periodic_autocorr(&a.time, &b.time, lag).norm() <= bound);
        }
    }

    #[test]
    fn zc_rejects_non_coprime_root() {
        assert!(matches!(gen_zc(64, 128), Err(Error::InvalidRoot { .. })));
        assert!(gen_zc(0, 128).is_err());
        assert!(gen_zc(2, 128).is_err());
    }

    #[test]
    fn msequence_two_level_autocorrelation() {
        for len in [7usize, 31, 127, 1023] {
            let s = gen_msequence(len).unwrap();
            assert_eq!(s.len(), len);
            for lag in 1..len {
                let r = periodic_autocorr(&s.time, &s.time, lag);
                assert!((r - c(-1.0, 0.0)).norm() < 1e-9, "len {len} lag {lag}");
            }
        }
        assert!(gen_msequence(128).is_err());
    }

    #[test]
    fn stream_layout() {
        let cfg = FrameConfig::default();
        let pss = gen_zc(25, 128).unwrap();
        let s = assemble_stream(&cfg, &pss);
        assert_eq!(s.len(), cfg.bursts * cfg.burst_len);
        let place = BurstPlacement::new(&cfg);
        assert_eq!(place.pss[0], 8..136);
        for m in [0, 1, 63] {
            for i in 0..cfg.pss_len {
                assert_eq!(s[place.pss[m].start + i], pss.time[i]);
            }
            for i in 0..cfg.cp_len {
                assert_eq!(s[place.cp[m].start + i], pss.time[cfg.pss_len - cfg.cp_len + i]);
            }
            assert_eq!(s[m * cfg.burst_len + cfg.symbol_len()], c(0.0, 0.0));
        }
        let energy: f64 = s.iter().map(|v| v.norm_sqr()).sum();
        assert!((energy - (cfg.bursts * cfg.symbol_len()) as f64).abs() < 1e-6);
    }

    #[test]
    fn delay_response_values() {
        let cfg = FrameConfig::default();
        assert!(delay_response(0.0, &cfg).iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-15));
        let wrap = delay_response(cfg.pss_len as f64 * cfg.sample_period, &cfg);
        assert!(wrap.iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-9));

        let small = FrameConfig { pss_len: 4, ..cfg };
        let f = delay_response(small.sample_period, &small);
        let expect = [c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0), c(0.0, 1.0)];
        for (a, b) in f.iter().zip(expect) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn on_sample_atom_is_circular_shift() {
        let cfg = FrameConfig::default();
        let pss = gen_zc(25, 128).unwrap();
        let g_d = 500;
        let atom0 = pss_delay_atom(0, g_d, &cfg, &pss);
        for (a, b) in atom0.iter().zip(&pss.time) {
            assert!((a - b).norm() < 1e-10);
        }
        // d_q = 2 T_s at q = 250 when N_c = 4 and G_d = 500.
        let atom = pss_delay_atom(250, g_d, &cfg, &pss);
        for n in 0..cfg.pss_len {
            let expect = pss.time[(n + cfg.pss_len - 2) % cfg.pss_len];
            assert!((atom[n] - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn delay_derivative_matches_difference() {
        let cfg = FrameConfig::default();
        let tau = 1.3 * cfg.sample_period;
        let h = 1e-6 * cfg.sample_period;
        let d = delay_response_deriv(tau, &cfg);
        let fp = delay_response(tau + h, &cfg);
        let fm = delay_response(tau - h, &cfg);
        for p in 0..cfg.pss_len {
            let fd = (fp[p] - fm[p]) / (2.0 * h);
            assert!((fd - d[p]).norm() <= 1e-6 * d[p].norm().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn delay_response_is_periodic(tau_taps in 0.0f64..64.0) {
            let cfg = FrameConfig::default();
            let tau = tau_taps * cfg.sample_period;
            let period = cfg.pss_len as f64 * cfg.sample_period;
            let a = delay_response(tau, &cfg);
            let b = delay_response(tau + period, &cfg);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).norm() < 1e-8);
            }
        }

        #[test]
        fn delayed_pss_keeps_energy(tau_taps in 0.0f64..4.0) {
            let cfg = FrameConfig::default();
            let pss = gen_zc(25, 128).unwrap();
            let u = delayed_pss(tau_taps * cfg.sample_period, &cfg, &pss, &UnitaryDft::new(128));
            let e: f64 = u.iter().map(|v| v.norm_sqr()).sum();
            prop_assert!((e - 128.0).abs() < 1e-8);
        }
    }
}
