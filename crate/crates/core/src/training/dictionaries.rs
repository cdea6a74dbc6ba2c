//! Delay and angle dictionaries for coarse estimation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::{combine, steering};
use crate::codebook::Codebook;
use crate::config::FrameConfig;
use crate::dsp::UnitaryDft;
use crate::waveform::{delay_grid, delayed_pss, PssSequence};

/// `G` angles on `(-pi/2, pi/2)` with step `pi/G`, offset by half a step
/// so neither endpoint is included.
pub fn angle_grid(g: usize) -> Vec<f64> {
    let step = PI / g as f64;
    (0..g).map(|k| -PI / 2.0 + (k as f64 + 0.5) * step).collect()
}

/// Delay candidates `d_q` and atoms `p_q = F^H (f(d_q) o s)`.
#[derive(Debug, Clone)]
pub struct DelayDictionary {
    pub grid: Vec<f64>,
    pub atoms: Vec<Vec<Complex64>>,
    pub norms_sqr: Vec<f64>,
}

impl DelayDictionary {
    pub fn new(cfg: &FrameConfig, pss: &PssSequence, g_d: usize) -> Self {
        let dft = UnitaryDft::new(cfg.pss_len);
        let grid = delay_grid(cfg, g_d);
        let atoms: Vec<Vec<Complex64>> = grid.iter().map(|&d| delayed_pss(d, cfg, pss, &dft)).collect();
        let norms_sqr = atoms.iter().map(|a| a.iter().map(|v| v.norm_sqr()).sum()).collect();
        DelayDictionary { grid, atoms, norms_sqr }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Per-burst beam responses over the angle grids. The joint atom for
/// index `k = k_rx G_T + k_tx` has entries `b[m] = rx[m][k_rx] tx[m][k_tx]`.
#[derive(Debug, Clone)]
pub struct AngleDictionary {
    pub aod_grid: Vec<f64>,
    pub aoa_grid: Vec<f64>,
    /// `a_tx(t_k)^H v_m`, indexed `[m][k_tx]`.
    pub tx_resp: Vec<Vec<Complex64>>,
    /// `w_m^H a_rx(r_k)`, indexed `[m][k_rx]`.
    pub rx_resp: Vec<Vec<Complex64>>,
}

impl AngleDictionary {
    pub fn new(tx: &Codebook, rx: &Codebook, g_t: usize, g_r: usize) -> Self {
        let aod_grid = angle_grid(g_t);
        let aoa_grid = angle_grid(g_r);
        let a_tx: Vec<Vec<Complex64>> = aod_grid.iter().map(|&t| steering(tx.antennas(), t)).collect();
        let a_rx: Vec<Vec<Complex64>> = aoa_grid.iter().map(|&r| steering(rx.antennas(), r)).collect();
        let tx_resp = tx.beams.iter().map(|v| a_tx.iter().map(|a| combine(a, v)).collect()).collect();
        let rx_resp = rx.beams.iter().map(|w| a_rx.iter().map(|a| combine(w, a)).collect()).collect();
        AngleDictionary { aod_grid, aoa_grid, tx_resp, rx_resp }
    }

    pub fn len(&self) -> usize {
        self.aod_grid.len() * self.aoa_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bursts(&self) -> usize {
        self.tx_resp.len()
    }

    /// `k -> (k_rx, k_tx)`, both 0-based.
    pub fn unmap(&self, k: usize) -> (usize, usize) {
        let g_t = self.aod_grid.len();
        (k / g_t, k % g_t)
    }

    pub fn map(&self, k_rx: usize, k_tx: usize) -> usize {
        k_rx * self.aod_grid.len() + k_tx
    }

    /// Atom `a_k` over bursts.
    pub fn atom(&self, k: usize) -> Vec<Complex64> {
        let (k_rx, k_tx) = self.unmap(k);
        (0..self.bursts()).map(|m| self.rx_resp[m][k_rx] * self.tx_resp[m][k_tx]).collect()
    }
}
