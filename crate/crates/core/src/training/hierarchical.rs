//! Directional benchmark: sector sweep followed by CSI-RS beam refinement.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::{channel_taps, steering_beam, ChannelRealization};
use crate::codebook::{burst_to_pair, sector_bounds};
use crate::config::FrameConfig;
use crate::error::{Error, Result};

fn rss(taps: &[nalgebra::DMatrix<Complex64>], w: &[Complex64], v: &[Complex64]) -> f64 {
    let w = nalgebra::DMatrix::from_column_slice(w.len(), 1, w);
    let v = nalgebra::DMatrix::from_column_slice(v.len(), 1, v);
    taps.iter().map(|h| (w.adjoint() * h * &v)[(0, 0)].norm_sqr()).sum()
}

/// Starting from the sector pair of burst `m_star` (1-based), runs
/// `n_train` CSI-RS rounds. Each round splits both angular regions into
/// `floor(sqrt(beams_per_csirs))` parts, measures the noiseless received
/// power of every sub-region pair, and keeps the best. Returns the final
/// `(aod, aoa)` region centers.
#[allow(clippy::too_many_arguments)]
pub fn hierarchical_refine(
    m_star: usize,
    m_tx: usize,
    m_rx: usize,
    chan: &ChannelRealization,
    cfg: &FrameConfig,
    n_train: usize,
    beams_per_csirs: usize,
) -> Result<(f64, f64)> {
    if m_star == 0 || m_star > m_tx * m_rx {
        return Err(Error::InvalidArgument(format!("burst index {m_star} outside 1..={}", m_tx * m_rx)));
    }
    let split = ((beams_per_csirs as f64).sqrt().floor() as usize).max(1);
    if split < 2 && n_train > 0 {
        return Err(Error::InvalidArgument("need at least 4 beams per CSI-RS to split regions".into()));
    }
    let (tx, rx) = burst_to_pair(m_star, m_tx);
    let mut tx_region = sector_bounds(tx - 1, m_tx);
    let mut rx_region = sector_bounds(rx - 1, m_rx);
    let taps = channel_taps(chan, cfg, cfg.pss_len);
    let parts = |(lo, hi): (f64, f64)| -> Vec<(f64, f64)> {
        let w = (hi - lo) / split as f64;
        (0..split).map(|i| (lo + i as f64 * w, lo + (i + 1) as f64 * w)).collect()
    };
    let center = |(lo, hi): (f64, f64)| 0.5 * (lo + hi);
    for _ in 0..n_train {
        let mut best = (f64::NEG_INFINITY, tx_region, rx_region);
        for t in parts(tx_region) {
            let v = steering_beam(chan.n_tx, center(t));
            for r in parts(rx_region) {
                let w = steering_beam(chan.n_rx, center(r));
                let p = rss(&taps, &w, &v);
                if p > best.0 {
                    best = (p, t, r);
                }
            }
        }
        tx_region = best.1;
        rx_region = best.2;
    }
    debug_assert!(center(tx_region).abs() < PI / 2.0);
    Ok((center(tx_region), center(rx_region)))
}
