//! Local refinement of the coarse estimate.
//!
//! The gain enters linearly, so it is re-solved by least squares at every
//! point and the remaining parameters `[eps_F, theta, phi, tau]` take
//! Gauss-Newton steps on the gain-profiled residual with backtracking.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{inner, norm_sqr};
use crate::theory::fim::LosParams;
use crate::training::model::TrainingModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub max_iter: usize,
    /// Stop when an iteration lowers the residual by less than this fraction.
    pub rel_tol: f64,
    /// Stop when the residual falls below `eps0_rel * ||y||^2`.
    pub eps0_rel: f64,
    pub max_halvings: usize,
    /// Largest plausible `|eps_F|`; the coarse CFO is only known modulo
    /// `2 pi / N_B`, so every branch inside this bound is tried.
    pub cfo_bound: Option<f64>,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { max_iter: 100, rel_tol: 1e-9, eps0_rel: 1e-12, max_halvings: 10, cfo_bound: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingEstimate {
    pub aod: f64,
    pub aoa: f64,
    /// Seconds.
    pub delay: f64,
    pub gain: Complex64,
    /// Radians per sample.
    pub eps_f: f64,
    /// False when refinement could not improve on the coarse estimate.
    pub refined: bool,
    pub iterations: usize,
    /// Squared residual norm after the coarse stage and each iteration.
    pub residual_trace: Vec<f64>,
}

impl TrainingEstimate {
    pub fn params(&self) -> LosParams {
        LosParams { eps_f: self.eps_f, aod: self.aod, aoa: self.aoa, delay: self.delay, gain: self.gain }
    }
}

struct Profile {
    xi: LosParams,
    unit: Vec<Complex64>,
    unit_norm: f64,
    residual: f64,
}

fn profile(model: &TrainingModel<'_>, y: &[Complex64], y_norm: f64, mut xi: LosParams) -> Profile {
    xi.gain = Complex64::new(1.0, 0.0);
    let unit = model.evaluate(&xi);
    let unit_norm = norm_sqr(&unit);
    let proj = inner(&unit, y);
    if unit_norm > 0.0 {
        xi.gain = proj / unit_norm;
    } else {
        xi.gain = Complex64::new(0.0, 0.0);
    }
    let residual = if unit_norm > 0.0 { (y_norm - proj.norm_sqr() / unit_norm).max(0.0) } else { y_norm };
    Profile { xi, unit, unit_norm, residual }
}

fn shifted(xi: &LosParams, d: &Vector4<f64>, mu: f64, delay_max: f64) -> LosParams {
    LosParams {
        eps_f: xi.eps_f + mu * d[0],
        aod: (xi.aod + mu * d[1]).clamp(-FRAC_PI_2, FRAC_PI_2),
        aoa: (xi.aoa + mu * d[2]).clamp(-FRAC_PI_2, FRAC_PI_2),
        delay: (xi.delay + mu * d[3]).clamp(0.0, delay_max),
        gain: xi.gain,
    }
}

/// Gauss-Newton direction for the profiled residual.
fn direction(model: &TrainingModel<'_>, y: &[Complex64], p: &Profile) -> Option<Vector4<f64>> {
    let cols = model.jacobian(&p.xi);
    let e: Vec<Complex64> = y.iter().zip(&p.unit).map(|(a, c)| a - p.xi.gain * c).collect();
    // Remove the component each column shares with the gain direction.
    let perp: Vec<Vec<Complex64>> = cols[..4]
        .iter()
        .map(|d| {
            let a = inner(&p.unit, d) / p.unit_norm;
            d.iter().zip(&p.unit).map(|(dv, c)| dv - a * c).collect()
        })
        .collect();
    let mut a = Matrix4::<f64>::zeros();
    let mut b = Vector4::<f64>::zeros();
    for i in 0..4 {
        b[i] = inner(&perp[i], &e).re;
        for j in i..4 {
            let v = inner(&perp[i], &perp[j]).re;
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let s = Vector4::from_fn(|i, _| {
        let d = a[(i, i)];
        if d > 0.0 {
            1.0 / d.sqrt()
        } else {
            0.0
        }
    });
    let scaled = Matrix4::from_fn(|i, j| a[(i, j)] * s[i] * s[j]);
    let rhs = b.component_mul(&s);
    let sol = scaled.cholesky().map(|c| c.solve(&rhs)).or_else(|| scaled.try_inverse().map(|inv| inv * rhs))?;
    let step = sol.component_mul(&s);
    step.iter().all(|v| v.is_finite()).then_some(step)
}

fn estimate(p: &Profile, refined: bool, iterations: usize, trace: Vec<f64>) -> TrainingEstimate {
    TrainingEstimate {
        aod: p.xi.aod,
        aoa: p.xi.aoa,
        delay: p.xi.delay,
        gain: p.xi.gain,
        eps_f: p.xi.eps_f,
        refined,
        iterations,
        residual_trace: trace,
    }
}

/// Gauss-Newton with backtracking from `cur`; returns the final point, the
/// accepted iteration count and the residual after each iteration.
fn descend(model: &TrainingModel<'_>, y: &[Complex64], y_norm: f64, mut cur: Profile, opts: &RefineOptions) -> (Profile, usize, Vec<f64>) {
    let cfg = model.cfg;
    let delay_max = cfg.max_delay_taps as f64 * cfg.sample_period;
    let mut trace = vec![cur.residual];
    let floor = opts.eps0_rel * y_norm;
    let mut iterations = 0;
    while iterations < opts.max_iter && cur.residual > floor {
        let Some(d) = direction(model, y, &cur) else { break };
        let mut mu = 1.0;
        let mut next = None;
        for _ in 0..=opts.max_halvings {
            let cand = profile(model, y, y_norm, shifted(&cur.xi, &d, mu, delay_max));
            if cand.residual < cur.residual {
                next = Some(cand);
                break;
            }
            mu *= 0.5;
        }
        let Some(next) = next else { break };
        iterations += 1;
        let gain = (cur.residual - next.residual) / cur.residual.max(f64::MIN_POSITIVE);
        cur = next;
        trace.push(cur.residual);
        if gain < opts.rel_tol {
            break;
        }
    }
    (cur, iterations, trace)
}

/// CFO branches `eps + q 2 pi / N_B` (q != 0) reachable within `bound`,
/// with half a period of slack so an offset right at the bound stays
/// reachable when `eps` is slightly off.
fn branches(eps: f64, bound: f64, burst_len: usize) -> Vec<f64> {
    let period = 2.0 * PI / burst_len as f64;
    let reach = bound + 0.5 * period;
    let lo = ((-reach - eps) / period).ceil() as i64;
    let hi = ((reach - eps) / period).floor() as i64;
    (lo..=hi).filter(|&q| q != 0).map(|q| eps + q as f64 * period).collect()
}

/// Refines `coarse` against the stacked bursts `y` (length `M P`). The
/// coarse CFO is only known modulo `2 pi / N_B`; with a bound set the start
/// uses the branch with the lowest residual at the coarse point.
pub fn refine(model: &TrainingModel<'_>, y: &[Complex64], coarse: LosParams, opts: &RefineOptions) -> TrainingEstimate {
    let y_norm = norm_sqr(y);
    let coarse_profile = profile(model, y, y_norm, coarse);
    let start = match opts.cfo_bound {
        Some(bound) => branches(coarse.eps_f, bound, model.cfg.burst_len)
            .into_iter()
            .map(|eps_f| profile(model, y, y_norm, LosParams { eps_f, ..coarse }))
            .fold(profile(model, y, y_norm, coarse), |best, p| if p.residual < best.residual { p } else { best }),
        None => profile(model, y, y_norm, coarse),
    };
    let (cur, iterations, trace) = descend(model, y, y_norm, start, opts);
    let finite = [cur.xi.eps_f, cur.xi.aod, cur.xi.aoa, cur.xi.delay, cur.xi.gain.re, cur.xi.gain.im].iter().all(|v| v.is_finite());
    if !finite || cur.residual > coarse_profile.residual {
        return estimate(&coarse_profile, false, 0, vec![coarse_profile.residual]);
    }
    estimate(&cur, true, iterations, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::gen_pseudorandom;
    use crate::config::FrameConfig;
    use crate::rng::{derive_stream, Purpose};
    use crate::waveform::gen_zc;

    #[test]
    fn converges_from_nearby_start_noiseless() {
        let cfg = FrameConfig { bursts: 32, ..Default::default() };
        let pss = gen_zc(25, 128).unwrap();
        let mut rng = derive_stream(21, Purpose::Beams, 0).rng();
        let tx = gen_pseudorandom(16, 32, &mut rng);
        let rx = gen_pseudorandom(8, 32, &mut rng);
        let model = TrainingModel::new(&cfg, &pss, &tx, &rx);
        let truth = LosParams { eps_f: 0.0021, aod: 0.41, aoa: -0.33, delay: 1.7 * cfg.sample_period, gain: Complex64::new(0.5, 0.7) };
        let y = model.evaluate(&truth);
        let start = LosParams { eps_f: 0.0020, aod: 0.40, aoa: -0.30, delay: 1.6 * cfg.sample_period, gain: Complex64::new(1.0, 0.0) };
        let est = refine(&model, &y, start, &RefineOptions::default());
        assert!(est.refined);
        assert!((est.aod - truth.aod).abs() < 1e-7, "{est:?}");
        assert!((est.aoa - truth.aoa).abs() < 1e-7);
        assert!((est.eps_f - truth.eps_f).abs() < 1e-10);
        assert!((est.delay - truth.delay).abs() < 1e-6 * cfg.sample_period);
        assert!(est.residual_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn picks_cfo_branch() {
        let cfg = FrameConfig { bursts: 32, ..Default::default() };
        let pss = gen_zc(25, 128).unwrap();
        let mut rng = derive_stream(22, Purpose::Beams, 0).rng();
        let tx = gen_pseudorandom(16, 32, &mut rng);
        let rx = gen_pseudorandom(8, 32, &mut rng);
        let model = TrainingModel::new(&cfg, &pss, &tx, &rx);
        let eps = 0.0149;
        let truth = LosParams { eps_f: eps, aod: -0.2, aoa: 0.6, delay: 0.5 * cfg.sample_period, gain: Complex64::new(1.0, -0.2) };
        let y = model.evaluate(&truth);
        let period = 2.0 * PI / 1024.0;
        let aliased = eps - 2.0 * period;
        let opts = RefineOptions { cfo_bound: Some(0.0153), ..Default::default() };
        let est = refine(&model, &y, LosParams { eps_f: aliased, ..truth }, &opts);
        assert!((est.eps_f - eps).abs() < 1e-9, "{}", est.eps_f);
    }
}
