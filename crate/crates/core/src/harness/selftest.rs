//! Quick internal consistency checks, each computed by a second route.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{combine, steering, synth_rx, ChannelRealization, Path, SyncState, SynthOptions};
use crate::codebook::gen_pseudorandom;
use crate::detection::{pss_correlate, DetectionMode};
use crate::error::Result;
use crate::harness::scenario::Scenario;
use crate::harness::sweeps::{enumerated_latency, false_alarm_rate};
use crate::rng::{derive_stream, Purpose};
use crate::theory::fim::{fim, FimInputs, LosParams};
use crate::theory::system::{complexity_counts, SystemModel};
use crate::theory::{kappa, q_function, DetectionTheory};
use crate::training::model::TrainingModel;
use crate::training::pipeline::run_algorithm1;
use crate::training::{AngleDictionary, DelayDictionary};
use crate::waveform::{pss_delay_atom, PssSequence};
use crate::FrameConfig;

/// Extreme-value scale constant the NT check expects.
const NT_SCALE_REF: f64 = 0.7797;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelftestOptions {
    /// Overrides the scenario's NT scale constant.
    pub gumbel_scale: Option<f64>,
    /// Perturbs one dictionary entry before the consistency check.
    pub corrupt_dictionary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.into(), passed, detail });
    }
}

/// Inverse Gaussian tail by bisection on `q_function`.
fn q_inv_bisect(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q_function(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn selftest(sc: &Scenario, opts: &SelftestOptions) -> Result<SelftestReport> {
    let mut rep = SelftestReport::default();
    let cfg = &sc.frame;

    let v = sc.validate();
    rep.push("config", v.is_ok(), v.err().map_or_else(|| "valid".into(), |e| e.to_string()));
    if !rep.passed() {
        return Ok(rep);
    }

    let pss = PssSequence::generate(sc.pss, cfg.pss_len)?;
    let dev = pss.time.iter().chain(&pss.freq).map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max);
    rep.push("pss_unit_modulus", dev < 1e-9, format!("max deviation {dev:.2e}"));

    let mut rng = derive_stream(sc.master_seed, Purpose::Noise, 1 << 55).rng();
    let y: Vec<Complex64> = (0..4 * cfg.pss_len)
        .map(|_| Complex64::new(rand::Rng::random::<f64>(&mut rng) - 0.5, rand::Rng::random::<f64>(&mut rng) - 0.5))
        .collect();
    let fast = pss_correlate(&y, &pss);
    let p = cfg.pss_len;
    let direct: Vec<Complex64> =
        (0..=y.len() - p).map(|n| (0..p).map(|k| pss.time[k].conj() * y[n + k]).sum::<Complex64>() / p as f64).collect();
    let err = max_abs_diff(&fast, &direct);
    rep.push("correlator_fft_vs_direct", err < 1e-10, format!("max error {err:.2e}"));

    let shift = 3;
    let atom = pss_delay_atom(shift, cfg.max_delay_taps, cfg, &pss);
    let rolled: Vec<Complex64> = (0..p).map(|n| pss.time[(n + p - shift) % p]).collect();
    let err = max_abs_diff(&atom, &rolled);
    rep.push("delay_atom_integer_shift", err < 1e-9, format!("max error {err:.2e}"));

    let scale = opts.gumbel_scale.unwrap_or(sc.gumbel_scale);
    let theory = DetectionTheory { gumbel_scale: scale, ..DetectionTheory::new(cfg.clone(), DetectionMode::Nt, sc.p_fa) };
    let xi = theory.xi()?;
    let q = q_inv_bisect(1.0 / cfg.eps_t_max.max(2) as f64);
    let xi_ref = q - NT_SCALE_REF * (-(1.0 - sc.p_fa).ln()).ln() / q;
    rep.push("nt_threshold_factor", (xi - xi_ref).abs() < 1e-3, format!("xi {xi:.6} reference {xi_ref:.6}"));

    let pt = DetectionTheory::new(cfg.clone(), DetectionMode::Pt, sc.p_fa);
    let eta = pt.threshold(1.0)?;
    let fa = false_alarm_rate(sc, DetectionMode::Pt, 1000, eta)?;
    rep.push("pt_false_alarm", (0.002..=0.025).contains(&fa), format!("empirical {fa:.4} over 1000 trials"));

    let k0 = kappa(0, 0.0, cfg);
    // Combiner switch halfway through the PSS: two equal halves add in power.
    let split_at = cfg.burst_len - cfg.pss_len / 2;
    let k_half = kappa(split_at, 0.0, cfg);
    let small = kappa(split_at, 1e-9, cfg);
    let ok = (k0 - 1.0).abs() < 1e-12 && (k_half - 0.5).abs() < 1e-12 && (small - k_half).abs() < 1e-6;
    rep.push("kappa", ok, format!("kappa(0,0) {k0:.6}, split {k_half:.6}, near-zero CFO {small:.6}"));

    let s = &sc.system;
    let mut worst: f64 = 0.0;
    for &k_r in &s.k_r {
        let period = SystemModel::period_for_slots(k_r, cfg);
        for &n_ue in &s.n_ue {
            for n_train in [1usize, 2] {
                let m = SystemModel {
                    n_ue,
                    csi_rs_period: period,
                    csi_rs_duration: s.csi_rs_duration,
                    n_train,
                    b_ia: s.b_ia,
                    b_tot: s.b_tot,
                    p_md: s.p_md,
                };
                let f = m.latency(cfg)?;
                let e = enumerated_latency(n_ue, k_r, cfg.ss_period, period, n_train, s.p_md);
                worst = worst.max((f - e).abs() / e);
            }
        }
    }
    rep.push("latency_vs_enumeration", worst < 1e-9, format!("max relative error {worst:.2e}"));

    let c = complexity_counts(cfg, 500, 128, 32);
    let ratio = c.training_ratio(cfg, 500);
    rep.push("complexity_ratio", (6.7..=7.7).contains(&ratio), format!("ratio {ratio:.3}"));

    let (n_tx, n_rx) = (8, 4);
    let mut brng = derive_stream(sc.master_seed, Purpose::Beams, 1 << 55).rng();
    let tx = gen_pseudorandom(n_tx, cfg.bursts, &mut brng);
    let rx = gen_pseudorandom(n_rx, cfg.bursts, &mut brng);
    let mut dict = AngleDictionary::new(&tx, &rx, 2 * n_tx, 2 * n_rx);
    if opts.corrupt_dictionary {
        dict.tx_resp[0][1] += Complex64::new(0.5, 0.0);
    }
    let mut worst: f64 = 0.0;
    for k_rx in 0..dict.aoa_grid.len() {
        for k_tx in 0..dict.aod_grid.len() {
            let a = dict.atom(dict.map(k_rx, k_tx));
            let at = steering(n_tx, dict.aod_grid[k_tx]);
            let ar = steering(n_rx, dict.aoa_grid[k_rx]);
            let want: Vec<Complex64> = (0..cfg.bursts).map(|m| combine(&rx.beams[m], &ar) * combine(&at, &tx.beams[m])).collect();
            worst = worst.max(max_abs_diff(&a, &want));
        }
    }
    rep.push("dictionary_consistency", worst < 1e-9, format!("max error {worst:.2e}"));

    let params = LosParams { eps_f: 3e-4, aod: 0.3, aoa: -0.4, delay: 1.3 * cfg.sample_period, gain: Complex64::new(0.8, 0.6) };
    rep.checks.push(fim_check(cfg, &pss, &tx, &rx, params)?);

    rep.checks.push(noiseless_training(sc, &pss, params)?);
    Ok(rep)
}

/// Analytic FIM against central differences of the signal model.
fn fim_check(
    cfg: &FrameConfig,
    pss: &PssSequence,
    tx: &crate::codebook::Codebook,
    rx: &crate::codebook::Codebook,
    params: LosParams,
) -> Result<Check> {
    let model = TrainingModel::new(cfg, pss, tx, rx);
    let steps = [1e-6 / (cfg.bursts * cfg.burst_len) as f64, 1e-6, 1e-6, 1e-6 * cfg.sample_period, 1e-6, 1e-6];
    let base = params.to_array();
    let cols: Vec<Vec<Complex64>> = (0..6)
        .map(|i| {
            let (mut hi, mut lo) = (base, base);
            hi[i] += steps[i];
            lo[i] -= steps[i];
            let (a, b) = (model.evaluate(&LosParams::from_array(&hi)), model.evaluate(&LosParams::from_array(&lo)));
            a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * steps[i])).collect()
        })
        .collect();
    let r = fim(&FimInputs { cfg, pss, tx, rx, params, noise_power: 1.0 })?;
    let mut worst: f64 = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            let fd: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| (a.conj() * b).re).sum();
            let scale = (r.phi[(i, i)] * r.phi[(j, j)]).sqrt().max(f64::MIN_POSITIVE);
            worst = worst.max((fd - r.phi[(i, j)]).abs() / scale);
        }
    }
    Ok(Check { name: "fim_vs_finite_difference".into(), passed: worst < 1e-4, detail: format!("max relative error {worst:.2e}") })
}

/// Detection and training on a practically noiseless single-path capture.
fn noiseless_training(sc: &Scenario, pss: &PssSequence, params: LosParams) -> Result<Check> {
    let cfg = &sc.frame;
    let (n_tx, n_rx) = (16, 8);
    let mut brng = derive_stream(sc.master_seed, Purpose::Beams, (1 << 55) + 1).rng();
    let tx = gen_pseudorandom(n_tx, cfg.bursts, &mut brng);
    let rx = gen_pseudorandom(n_rx, cfg.bursts, &mut brng);
    let noise = 1e-10;
    let path = Path { gain: params.gain, aod: params.aod, aoa: params.aoa, delay: params.delay };
    let chan = ChannelRealization::new(vec![path], n_tx, n_rx, noise, cfg)?;
    let eps_t = 170.min(cfg.eps_t_max.saturating_sub(1));
    let sync = SyncState::new(eps_t, params.eps_f, cfg)?;
    let mut nrng = derive_stream(sc.master_seed, Purpose::Noise, (1 << 55) + 1).rng();
    let cap = synth_rx(cfg, pss, &chan, &tx, &rx, sync, SynthOptions::default(), &mut nrng)?;
    let delays = DelayDictionary::new(cfg, pss, sc.training.g_d);
    let eta = DetectionTheory::new(cfg.clone(), DetectionMode::Nt, sc.p_fa).threshold(noise)?;
    let mut tcfg = sc.training.clone();
    tcfg.refine.cfo_bound.get_or_insert(sc.cfo_bound());
    let out = run_algorithm1(&cap.samples, cfg, pss, &tx, &rx, &delays, eta, &tcfg)?;
    let Some(est) = out.estimate else {
        return Ok(Check { name: "noiseless_training".into(), passed: false, detail: "no detection".into() });
    };
    let (ea, eb) = ((est.aod - params.aod).abs(), (est.aoa - params.aoa).abs());
    Ok(Check {
        name: "noiseless_training".into(),
        passed: ea < 1e-4 && eb < 1e-4,
        detail: format!("AoD error {ea:.2e}, AoA error {eb:.2e}, timing {:?}", out.detection.eps_t_hat),
    })
}
