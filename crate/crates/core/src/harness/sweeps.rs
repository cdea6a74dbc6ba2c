//! Monte Carlo sweeps. Every trial draws from its own keyed RNG streams and
//! results are gathered in trial order, so output does not depend on the
//! number of worker threads.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{cfo_from_ppm, synth_rx, ChannelDraw, ChannelRealization, Path, SyncState, SynthOptions};
use crate::codebook::{gen_pseudorandom, gen_sector, scheduled_sectors, Codebook};
use crate::detection::{detect, timing_correct, Correlator, DetectionMode, Hypothesis};
use crate::error::Result;
use crate::harness::output::{wilson_interval, ResultRow};
use crate::harness::scenario::{DiscoveryCase, Scenario, TrainingArray};
use crate::rng::{derive_stream, Purpose};
use crate::theory::fim::{fim, FimInputs, LosParams};
use crate::theory::system::SystemModel;
use crate::theory::DetectionTheory;
use crate::training::estimate::rearrange;
use crate::training::pipeline::{aligned_rx, train};
use crate::training::DelayDictionary;
use crate::waveform::PssSequence;

fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Stream key for trial `t` of point `point` in case `case`. Array sizes in
/// training sweeps share streams (common random numbers).
fn key(case: usize, point: usize, t: usize) -> u64 {
    ((case as u64) << 48) | ((point as u64) << 32) | t as u64
}

fn noise_only_channel(sc: &Scenario, n_tx: usize, n_rx: usize) -> Result<ChannelRealization> {
    let p = Path { gain: Complex64::new(0.0, 0.0), aod: 0.0, aoa: 0.0, delay: 0.0 };
    ChannelRealization::new(vec![p], n_tx, n_rx, 1.0, &sc.frame)
}

fn codebooks(sc: &Scenario, mode: DetectionMode, k: u64) -> Result<(Codebook, Codebook)> {
    if mode == DetectionMode::Dia {
        scheduled_sectors(&gen_sector(sc.n_tx, sc.m_tx), &gen_sector(sc.n_rx, sc.m_rx), sc.frame.bursts)
    } else {
        let mut rng = derive_stream(sc.master_seed, Purpose::Beams, k).rng();
        let tx = gen_pseudorandom(sc.n_tx, sc.frame.bursts, &mut rng);
        let rx = gen_pseudorandom(sc.n_rx, sc.frame.bursts, &mut rng);
        Ok((tx, rx))
    }
}

/// Detector statistic threshold for a case: closed form for PT/NT,
/// `dia_eta` for the directional detector.
pub fn case_threshold(sc: &Scenario, mode: DetectionMode, dia_eta: Option<f64>) -> Result<f64> {
    match mode {
        DetectionMode::Dia => dia_eta.ok_or_else(|| crate::Error::InvalidArgument("DIA threshold not calibrated".into())),
        _ => {
            let t = DetectionTheory { gumbel_scale: sc.gumbel_scale, ..DetectionTheory::new(sc.frame.clone(), mode, sc.p_fa) };
            t.threshold(1.0)
        }
    }
}

/// Statistic of a noise-only capture.
fn noise_statistic(sc: &Scenario, corr: &Correlator, pss: &PssSequence, mode: DetectionMode, k: u64) -> Result<f64> {
    let (tx, rx) = codebooks(sc, mode, k)?;
    let chan = noise_only_channel(sc, sc.n_tx, sc.n_rx)?;
    let mut rng = derive_stream(sc.master_seed, Purpose::Calibration, k).rng();
    let opts = SynthOptions { noise_only: true, ..Default::default() };
    let cap = synth_rx(&sc.frame, pss, &chan, &tx, &rx, SyncState::perfect(), opts, &mut rng)?;
    let c = corr.correlate(&cap.samples);
    Ok(detect(mode, &c, &sc.frame, f64::INFINITY)?.statistic)
}

fn noise_statistics(sc: &Scenario, mode: DetectionMode, trials: usize, stream: usize) -> Result<Vec<f64>> {
    let pss = PssSequence::generate(sc.pss, sc.frame.pss_len)?;
    let corr = Correlator::new(&pss);
    (0..trials).into_par_iter().map(|t| noise_statistic(sc, &corr, &pss, mode, key(stream, 0, t))).collect()
}

/// Empirical false-alarm rate of `mode` at threshold `eta`.
pub fn false_alarm_rate(sc: &Scenario, mode: DetectionMode, trials: usize, eta: f64) -> Result<f64> {
    let stream = 1 + mode as usize;
    let stats = noise_statistics(sc, mode, trials, stream)?;
    Ok(stats.iter().filter(|&&s| s >= eta).count() as f64 / trials as f64)
}

/// Noise-only quantile threshold for the directional peak detector.
pub fn calibrate_dia_threshold(sc: &Scenario, trials: usize) -> Result<f64> {
    let mut stats = noise_statistics(sc, DetectionMode::Dia, trials, 200)?;
    stats.sort_by(f64::total_cmp);
    let idx = (((1.0 - sc.p_fa) * trials as f64).ceil() as usize).clamp(1, trials) - 1;
    Ok(stats[idx])
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryPoint {
    pub trials: usize,
    pub misses: usize,
    /// Misses counting a wrong timing estimate as a miss (NT only).
    pub timing_misses: usize,
    pub theory: Option<f64>,
}

impl DiscoveryPoint {
    pub fn pmd(&self) -> f64 {
        self.misses as f64 / self.trials as f64
    }
}

/// Miss-detection rate of one case at one SNR.
pub fn discovery_point(
    sc: &Scenario,
    case: &DiscoveryCase,
    case_idx: usize,
    snr_db: f64,
    point: usize,
    eta: f64,
) -> Result<DiscoveryPoint> {
    let cfg = &sc.frame;
    let pss = PssSequence::generate(sc.pss, cfg.pss_len)?;
    let corr = Correlator::new(&pss);
    let snr = db_to_lin(snr_db);
    let eps_f = cfo_from_ppm(case.cfo_ppm, sc.carrier_hz, cfg);
    let sync = SyncState::new(case.eps_t, eps_f, cfg)?;

    let outcomes: Vec<(bool, bool)> = (0..sc.trials)
        .into_par_iter()
        .map(|t| -> Result<(bool, bool)> {
            let k = key(10 + case_idx, point, t);
            let (tx, rx) = codebooks(sc, case.mode, k)?;
            let mut crng = derive_stream(sc.master_seed, Purpose::Channel, k).rng();
            let chan = sc.channel.draw(cfg, sc.n_tx, sc.n_rx, snr, 1.0, &mut crng)?;
            let mut nrng = derive_stream(sc.master_seed, Purpose::Noise, k).rng();
            let cap = synth_rx(cfg, &pss, &chan, &tx, &rx, sync, SynthOptions::default(), &mut nrng)?;
            let c = corr.correlate(&cap.samples);
            let view = if case.mode == DetectionMode::Pt { &c[case.eps_t..] } else { &c[..] };
            let det = detect(case.mode, view, cfg, eta)?;
            let miss = det.decision == Hypothesis::H0;
            let timing_miss = miss
                || det.eps_t_hat.is_some_and(|e| {
                    let taps: Vec<usize> = chan.paths.iter().map(|p| (p.delay / cfg.sample_period).round() as usize).collect();
                    !timing_correct(e, case.eps_t, &taps, cfg)
                });
            Ok((miss, timing_miss))
        })
        .collect::<Result<_>>()?;

    let theory = match case.mode {
        DetectionMode::Dia => None,
        mode => {
            let t = DetectionTheory {
                snr,
                eps_t: case.eps_t,
                eps_f,
                gumbel_scale: sc.gumbel_scale,
                ..DetectionTheory::new(cfg.clone(), mode, sc.p_fa)
            };
            Some(t.pmd()?)
        }
    };
    Ok(DiscoveryPoint {
        trials: sc.trials,
        misses: outcomes.iter().filter(|o| o.0).count(),
        timing_misses: outcomes.iter().filter(|o| o.1).count(),
        theory,
    })
}

fn rate_row(sweep: f64, metric: String, count: usize, trials: usize, theory: Option<f64>) -> ResultRow {
    let p = count as f64 / trials as f64;
    let (lo, hi) = wilson_interval(p, trials);
    ResultRow { sweep, metric, sim: Some(p), theory, trials, ci95: Some(0.5 * (hi - lo)) }
}

/// Miss-detection probability versus SNR for every discovery case.
pub fn run_discovery_sweep(sc: &Scenario) -> Result<Vec<ResultRow>> {
    sc.validate()?;
    let dia_eta = if sc.discovery.iter().any(|c| c.mode == DetectionMode::Dia) {
        Some(calibrate_dia_threshold(sc, sc.trials.max(1000))?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for (ci, case) in sc.discovery.iter().enumerate() {
        let eta = case_threshold(sc, case.mode, dia_eta)?;
        for (pi, &snr_db) in sc.snr_db.iter().enumerate() {
            let pt = discovery_point(sc, case, ci, snr_db, pi, eta)?;
            rows.push(rate_row(snr_db, format!("pmd_{}", case.label), pt.misses, pt.trials, pt.theory));
            if case.mode == DetectionMode::Nt {
                rows.push(rate_row(snr_db, format!("pmd_timing_{}", case.label), pt.timing_misses, pt.trials, pt.theory));
            }
        }
    }
    Ok(rows)
}

/// Per-trial errors and bounds at one training SNR.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingPoint {
    pub err_aod: Vec<f64>,
    pub err_aoa: Vec<f64>,
    pub err_aod_coarse: Vec<f64>,
    pub err_aoa_coarse: Vec<f64>,
    pub crlb_aod: Vec<f64>,
    pub crlb_aoa: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn mse(err: &[f64]) -> f64 {
    err.iter().map(|e| e * e).sum::<f64>() / err.len() as f64
}

/// 95% half-width of an RMSE estimate by the delta method.
fn rmse_ci(err: &[f64]) -> f64 {
    let sq: Vec<f64> = err.iter().map(|e| e * e).collect();
    let m = mean(&sq);
    let var = sq.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (sq.len().max(2) - 1) as f64;
    1.96 * (var / sq.len() as f64).sqrt() / (2.0 * m.sqrt()).max(f64::MIN_POSITIVE)
}

impl TrainingPoint {
    pub fn trials(&self) -> usize {
        self.err_aod.len()
    }

    pub fn mean_crlb_aod(&self) -> f64 {
        mean(&self.crlb_aod)
    }

    pub fn mean_crlb_aoa(&self) -> f64 {
        mean(&self.crlb_aoa)
    }
}

/// Single-path training accuracy with timing known and a CFO of
/// `training_cfo_ppm` with random sign.
pub fn training_point(sc: &Scenario, array: TrainingArray, snr_db: f64, point: usize) -> Result<TrainingPoint> {
    let cfg = &sc.frame;
    let pss = PssSequence::generate(sc.pss, cfg.pss_len)?;
    let delays = DelayDictionary::new(cfg, &pss, sc.training.g_d);
    let snr = db_to_lin(snr_db);
    let bound = sc.cfo_bound();
    let mut tcfg = sc.training.clone();
    if tcfg.refine.cfo_bound.is_none() {
        tcfg.refine.cfo_bound = Some(bound);
    }
    let los = ChannelDraw::los(sc.training_max_angle);
    let cfo = cfo_from_ppm(sc.training_cfo_ppm, sc.carrier_hz, cfg);

    let per_trial: Vec<[f64; 6]> = (0..sc.trials)
        .into_par_iter()
        .map(|t| -> Result<[f64; 6]> {
            let k = key(100, point, t);
            let mut brng = derive_stream(sc.master_seed, Purpose::Beams, k).rng();
            let tx = gen_pseudorandom(array.n_tx, cfg.bursts, &mut brng);
            let rx = gen_pseudorandom(array.n_rx, cfg.bursts, &mut brng);
            let mut crng = derive_stream(sc.master_seed, Purpose::Channel, k).rng();
            let chan = los.draw(cfg, array.n_tx, array.n_rx, snr, 1.0, &mut crng)?;
            let eps_f = if derive_stream(sc.master_seed, Purpose::Sync, k).rng().random::<bool>() { cfo } else { -cfo };
            let sync = SyncState::new(sc.training_eps_t, eps_f, cfg)?;
            let mut nrng = derive_stream(sc.master_seed, Purpose::Noise, k).rng();
            let cap = synth_rx(cfg, &pss, &chan, &tx, &rx, sync, SynthOptions::default(), &mut nrng)?;
            let bursts = rearrange(&cap.samples, sync.eps_t, cfg)?;
            let (mp, est) = train(&bursts, cfg, &pss, &tx, &rx, sync.eps_t, &delays, &tcfg);
            let rx = aligned_rx(&rx, sync.eps_t, cfg);
            let path = chan.paths[0];
            let params = LosParams { eps_f, aod: path.aod, aoa: path.aoa, delay: path.delay, gain: path.gain };
            let bound = fim(&FimInputs { cfg, pss: &pss, tx: &tx, rx: &rx, params, noise_power: 1.0 })?;
            Ok([est.aod - path.aod, est.aoa - path.aoa, mp.aod - path.aod, mp.aoa - path.aoa, bound.crlb_aod(), bound.crlb_aoa()])
        })
        .collect::<Result<_>>()?;

    let col = |i: usize| per_trial.iter().map(|r| r[i]).collect::<Vec<f64>>();
    Ok(TrainingPoint {
        err_aod: col(0),
        err_aoa: col(1),
        err_aod_coarse: col(2),
        err_aoa_coarse: col(3),
        crlb_aod: col(4),
        crlb_aoa: col(5),
    })
}

fn rmse_row(sweep: f64, metric: String, err: &[f64], crlb: f64) -> ResultRow {
    ResultRow { sweep, metric, sim: Some(mse(err).sqrt()), theory: Some(crlb.sqrt()), trials: err.len(), ci95: Some(rmse_ci(err)) }
}

/// AoD/AoA RMSE of the coarse and refined estimates against the CRLB.
pub fn run_training_sweep(sc: &Scenario) -> Result<Vec<ResultRow>> {
    sc.validate()?;
    let mut rows = Vec::new();
    for &array in &sc.training_arrays {
        let tag = format!("{}x{}", array.n_tx, array.n_rx);
        for (pi, &snr_db) in sc.training_snr_db.iter().enumerate() {
            let pt = training_point(sc, array, snr_db, pi)?;
            let (ca, cr) = (pt.mean_crlb_aod(), pt.mean_crlb_aoa());
            rows.push(rmse_row(snr_db, format!("rmse_aod_{tag}"), &pt.err_aod, ca));
            rows.push(rmse_row(snr_db, format!("rmse_aoa_{tag}"), &pt.err_aoa, cr));
            rows.push(rmse_row(snr_db, format!("rmse_aod_coarse_{tag}"), &pt.err_aod_coarse, ca));
            rows.push(rmse_row(snr_db, format!("rmse_aoa_coarse_{tag}"), &pt.err_aoa_coarse, cr));
        }
    }
    Ok(rows)
}

/// Square root of the mean CRLB over random beams and LOS geometries.
pub fn crlb_sweep(sc: &Scenario) -> Result<Vec<ResultRow>> {
    sc.validate()?;
    let cfg = &sc.frame;
    let pss = PssSequence::generate(sc.pss, cfg.pss_len)?;
    let los = ChannelDraw::los(sc.training_max_angle);
    let cfo = cfo_from_ppm(sc.training_cfo_ppm, sc.carrier_hz, cfg);
    let mut rows = Vec::new();
    for &array in &sc.training_arrays {
        let tag = format!("{}x{}", array.n_tx, array.n_rx);
        for (pi, &snr_db) in sc.training_snr_db.iter().enumerate() {
            let snr = db_to_lin(snr_db);
            let vals: Vec<(f64, f64)> = (0..sc.trials)
                .into_par_iter()
                .map(|t| -> Result<(f64, f64)> {
                    let k = key(101, pi, t);
                    let mut brng = derive_stream(sc.master_seed, Purpose::Beams, k).rng();
                    let tx = gen_pseudorandom(array.n_tx, cfg.bursts, &mut brng);
                    let rx = gen_pseudorandom(array.n_rx, cfg.bursts, &mut brng);
                    let mut crng = derive_stream(sc.master_seed, Purpose::Channel, k).rng();
                    let path = los.draw(cfg, array.n_tx, array.n_rx, snr, 1.0, &mut crng)?.paths[0];
                    let eps_f = if derive_stream(sc.master_seed, Purpose::Sync, k).rng().random::<bool>() { cfo } else { -cfo };
                    let params = LosParams { eps_f, aod: path.aod, aoa: path.aoa, delay: path.delay, gain: path.gain };
                    let r = fim(&FimInputs { cfg, pss: &pss, tx: &tx, rx: &rx, params, noise_power: 1.0 })?;
                    Ok((r.crlb_aod(), r.crlb_aoa()))
                })
                .collect::<Result<_>>()?;
            let n = vals.len() as f64;
            for (name, v) in [("aod", vals.iter().map(|v| v.0).sum::<f64>() / n), ("aoa", vals.iter().map(|v| v.1).sum::<f64>() / n)] {
                let mut row = ResultRow::new(snr_db, format!("crlb_{name}_{tag}"));
                row.theory = Some(v.sqrt());
                row.trials = vals.len();
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Mean access latency by explicit scheduling: UEs are granted CSI-RS slots
/// in order, `K_R` per SS period, and each needs `n_train` grants.
pub fn enumerated_latency(n_ue: usize, k_r: usize, t_ss: f64, t_r: f64, n_train: usize, p_md: f64) -> f64 {
    let discovery = t_ss * p_md / (1.0 - p_md);
    if n_train == 0 || n_ue == 0 {
        return discovery;
    }
    let mut total = 0.0;
    for ue in 0..n_ue {
        let frame = ue / k_r;
        let slot = ue % k_r + 1;
        total += frame as f64 * t_ss + slot as f64 * t_r;
    }
    discovery + n_train as f64 * total / n_ue as f64
}

/// Latency of both schemes and the shared overhead over the `(N_UE, K_R)` grid.
pub fn latency_overhead_sweep(sc: &Scenario) -> Result<Vec<ResultRow>> {
    sc.validate()?;
    let cfg = &sc.frame;
    let s = &sc.system;
    let mut rows = Vec::new();
    for &k_r in &s.k_r {
        let period = SystemModel::period_for_slots(k_r, cfg);
        let base = SystemModel {
            n_ue: 1,
            csi_rs_period: period,
            csi_rs_duration: s.csi_rs_duration,
            n_train: 0,
            b_ia: s.b_ia,
            b_tot: s.b_tot,
            p_md: s.p_md,
        };
        let mut oh = ResultRow::new(k_r as f64, "overhead_pct");
        oh.theory = Some(base.overhead(cfg));
        rows.push(oh);
        for &n_ue in &s.n_ue {
            let point = |n_train: usize| -> Result<(f64, f64)> {
                let m = SystemModel { n_ue, n_train, ..base.clone() };
                let formula = m.latency(cfg)?;
                let sim = enumerated_latency(n_ue, k_r, cfg.ss_period, period, n_train, s.p_md);
                Ok((sim, formula))
            };
            let (cia_sim, cia) = point(0)?;
            let mut r = ResultRow::new(n_ue as f64, format!("latency_ms_cia_kr{k_r}"));
            r.sim = Some(cia_sim * 1e3);
            r.theory = Some(cia * 1e3);
            rows.push(r);
            for &n_train in &s.dia_n_train {
                let (sim, th) = point(n_train)?;
                let mut r = ResultRow::new(n_ue as f64, format!("latency_ms_dia{n_train}_kr{k_r}"));
                r.sim = Some(sim * 1e3);
                r.theory = Some(th * 1e3);
                rows.push(r);
                let mut q = ResultRow::new(n_ue as f64, format!("latency_ratio_dia{n_train}_kr{k_r}"));
                q.sim = Some(sim / cia_sim);
                q.theory = Some(th / cia);
                rows.push(q);
            }
        }
    }
    Ok(rows)
}
