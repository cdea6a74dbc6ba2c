//! End-to-end discovery and training from one SS-period capture.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::steering_beam;
use crate::codebook::Codebook;
use crate::config::FrameConfig;
use crate::detection::{detect_nt, pss_correlate, DetectionResult, Hypothesis};
use crate::error::Result;
use crate::theory::fim::LosParams;
use crate::training::dictionaries::{AngleDictionary, DelayDictionary};
use crate::training::estimate::{estimate_delay, estimate_gain, matching_pursuit, rearrange, score_atom, DelayMetric, MpResult};
use crate::training::model::TrainingModel;
use crate::training::refine::{refine, RefineOptions, TrainingEstimate};
use crate::waveform::PssSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Delay grid size `G_d`.
    pub g_d: usize,
    /// Angle grid sizes as multiples of the array sizes (`G = oversampling * N`).
    pub grid_oversampling: usize,
    pub delay_metric: DelayMetric,
    pub refine: RefineOptions,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig { g_d: 500, grid_oversampling: 2, delay_metric: DelayMetric::NonCoherent, refine: RefineOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Algorithm1Output {
    pub detection: DetectionResult,
    pub coarse: Option<MpResult>,
    pub estimate: Option<TrainingEstimate>,
    pub w_star: Option<Vec<Complex64>>,
    pub v_star: Option<Vec<Complex64>>,
}

/// Grid indices mirrored about broadside when `k` lies in the outer two
/// cells: near endfire `theta` and `-theta` give almost identical responses
/// and the coarse pick can land on the wrong side.
fn endfire_alternatives(k: usize, g: usize) -> Vec<usize> {
    if k < 2 || k + 2 >= g {
        vec![k, g - 1 - k]
    } else {
        vec![k]
    }
}

/// Coarse estimate plus refinement for bursts cut at timing `eps_t_hat`;
/// `rx` is the UE combiner codebook in clock order. The dictionaries use the
/// combiner covering most of each PSS, the refinement the exact schedule.
/// Near endfire the refinement also starts from the mirrored atom and the
/// lower residual wins.
#[allow(clippy::too_many_arguments)]
pub fn train(
    bursts: &[Vec<Complex64>],
    cfg: &FrameConfig,
    pss: &PssSequence,
    tx: &Codebook,
    rx: &Codebook,
    eps_t_hat: usize,
    delays: &DelayDictionary,
    tcfg: &TrainingConfig,
) -> (MpResult, TrainingEstimate) {
    let majority = aligned_rx(rx, eps_t_hat, cfg);
    let angles = AngleDictionary::new(tx, &majority, tcfg.grid_oversampling * tx.antennas(), tcfg.grid_oversampling * rx.antennas());
    let (q, delay) = estimate_delay(bursts, delays, tcfg.delay_metric);
    let gains = estimate_gain(bursts, &delays.atoms[q]);
    let mp = matching_pursuit(&gains, &angles, cfg.burst_len);
    let (first, next, switch_at) = combiner_schedule(rx, eps_t_hat, cfg);
    let model = TrainingModel::new(cfg, pss, tx, &first).with_switch(&next, switch_at);
    let y: Vec<Complex64> = bursts.iter().flatten().copied().collect();
    let res = |e: &TrainingEstimate| e.residual_trace.last().copied().unwrap_or(f64::INFINITY);
    let mut best: Option<TrainingEstimate> = None;
    for k_rx in endfire_alternatives(mp.k_rx, angles.aoa_grid.len()) {
        for k_tx in endfire_alternatives(mp.k_tx, angles.aod_grid.len()) {
            let start = if (k_rx, k_tx) == (mp.k_rx, mp.k_tx) { mp } else { score_atom(&gains, &angles, k_rx, k_tx, cfg.burst_len) };
            let coarse = LosParams { eps_f: start.eps_f, aod: start.aod, aoa: start.aoa, delay, gain: Complex64::new(1.0, 0.0) };
            let est = refine(&model, &y, coarse, &tcfg.refine);
            if best.as_ref().is_none_or(|b| res(&est) < res(b)) {
                best = Some(est);
            }
        }
    }
    (mp, best.expect("at least one start"))
}

fn shifted(rx: &Codebook, shift: usize) -> Codebook {
    let mut out = rx.clone();
    if shift > 0 {
        let m = rx.len();
        out.beams = (0..m).map(|i| rx.beams[(i + shift) % m].clone()).collect();
    }
    out
}

/// Combiner seen by most of each received PSS: with a timing offset the UE
/// may already have advanced to a later beam when burst `m` arrives.
pub fn aligned_rx(rx: &Codebook, eps_t_hat: usize, cfg: &FrameConfig) -> Codebook {
    shifted(rx, (eps_t_hat + cfg.cp_len + cfg.pss_len / 2) / cfg.burst_len)
}

/// Exact combiner schedule of the received PSS blocks: `first` up to sample
/// `switch_at`, `next` after it (`switch_at == P` when no switch falls
/// inside the PSS).
pub fn combiner_schedule(rx: &Codebook, eps_t_hat: usize, cfg: &FrameConfig) -> (Codebook, Codebook, usize) {
    let start = eps_t_hat + cfg.cp_len;
    let shift = start / cfg.burst_len;
    let switch_at = (cfg.burst_len - start % cfg.burst_len).min(cfg.pss_len);
    (shifted(rx, shift), shifted(rx, shift + 1), switch_at)
}

/// Detection with unknown timing, then training on the same capture.
#[allow(clippy::too_many_arguments)]
pub fn run_algorithm1(
    y: &[Complex64],
    cfg: &FrameConfig,
    pss: &PssSequence,
    tx: &Codebook,
    rx: &Codebook,
    delays: &DelayDictionary,
    eta: f64,
    tcfg: &TrainingConfig,
) -> Result<Algorithm1Output> {
    let corr = pss_correlate(y, pss);
    let detection = detect_nt(&corr, cfg, eta)?;
    let (Hypothesis::H1, Some(eps_t_hat)) = (detection.decision, detection.eps_t_hat) else {
        return Ok(Algorithm1Output { detection, coarse: None, estimate: None, w_star: None, v_star: None });
    };
    let bursts = rearrange(y, eps_t_hat, cfg)?;
    let (mp, est) = train(&bursts, cfg, pss, tx, rx, eps_t_hat, delays, tcfg);
    let w_star = steering_beam(rx.antennas(), est.aoa);
    let v_star = steering_beam(tx.antennas(), est.aod);
    Ok(Algorithm1Output { detection, coarse: Some(mp), estimate: Some(est), w_star: Some(w_star), v_star: Some(v_star) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{synth_rx, ChannelRealization, Path, SyncState, SynthOptions};
    use crate::codebook::gen_pseudorandom;
    use crate::dsp::{inner, norm_sqr};
    use crate::rng::{derive_stream, Purpose};
    use crate::waveform::gen_zc;

    #[test]
    fn schedule_without_switch() {
        let cfg = FrameConfig::default();
        let mut rng = derive_stream(3, Purpose::Beams, 0).rng();
        let rx = gen_pseudorandom(4, cfg.bursts, &mut rng);
        let (first, _, at) = combiner_schedule(&rx, 170, &cfg);
        assert_eq!(at, cfg.pss_len);
        assert_eq!(first, aligned_rx(&rx, 170, &cfg));
        let (first, next, at) = combiner_schedule(&rx, 934, &cfg);
        assert_eq!(at, 1024 - 942);
        assert_eq!(first.beams[0], rx.beams[0]);
        assert_eq!(next.beams[0], rx.beams[1]);
        assert_eq!(next.beams[cfg.bursts - 1], rx.beams[0]);
    }

    #[test]
    fn switched_model_matches_capture() {
        let cfg = FrameConfig { bursts: 16, ..Default::default() };
        let pss = gen_zc(25, 128).unwrap();
        let mut rng = derive_stream(4, Purpose::Beams, 0).rng();
        let tx = gen_pseudorandom(8, cfg.bursts, &mut rng);
        let rx = gen_pseudorandom(4, cfg.bursts, &mut rng);
        let truth = LosParams { eps_f: 0.004, aod: 0.3, aoa: -0.5, delay: 0.36 * cfg.sample_period, gain: Complex64::new(0.6, 0.8) };
        let path = Path { gain: truth.gain, aod: truth.aod, aoa: truth.aoa, delay: truth.delay };
        let chan = ChannelRealization::new(vec![path], 8, 4, 0.0, &cfg).unwrap();
        let eps_t = 934;
        let sync = SyncState::new(eps_t, truth.eps_f, &cfg).unwrap();
        let cap = synth_rx(&cfg, &pss, &chan, &tx, &rx, sync, SynthOptions::default(), &mut rng).unwrap();
        let y: Vec<Complex64> = rearrange(&cap.samples, eps_t, &cfg).unwrap().concat();
        let fit = |model: &TrainingModel<'_>| {
            let x = model.evaluate(&LosParams { gain: Complex64::new(1.0, 0.0), ..truth });
            let proj = inner(&x, &y);
            (norm_sqr(&y) - proj.norm_sqr() / norm_sqr(&x)) / norm_sqr(&y)
        };
        let (first, next, at) = combiner_schedule(&rx, eps_t, &cfg);
        assert!(fit(&TrainingModel::new(&cfg, &pss, &tx, &first).with_switch(&next, at)) < 1e-20);
        let majority = aligned_rx(&rx, eps_t, &cfg);
        assert!(fit(&TrainingModel::new(&cfg, &pss, &tx, &majority)) > 1e-2);
    }
}
