use compressive_ia::config::FrameConfig;
use compressive_ia::detection::DetectionMode;
use compressive_ia::detection::{detect, Correlator};
use compressive_ia::harness::sweeps::{case_threshold, false_alarm_rate};
use compressive_ia::harness::Scenario;
use compressive_ia::waveform::gen_zc;
use compressive_ia::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn awgn_correlation_variance_is_sigma2_over_p() {
    let pss = gen_zc(25, 128).unwrap();
    let corr = Correlator::new(&pss);
    let sigma2 = 2.5;
    let normal = Normal::new(0.0, (sigma2 / 2.0f64).sqrt()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let y: Vec<Complex64> = (0..200_000).map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng))).collect();
    let c = corr.correlate(&y);
    // Lags P apart see disjoint noise, so subsample to keep the estimate honest.
    let e: Vec<f64> = c.iter().step_by(128).map(|v| v.norm_sqr()).collect();
    let var = e.iter().sum::<f64>() / e.len() as f64;
    let want = sigma2 / 128.0;
    assert!((var / want - 1.0).abs() < 0.03, "{var} vs {want}");
}

#[test]
fn pt_false_alarm_tracks_target() {
    let sc = Scenario { n_tx: 16, n_rx: 4, ..Scenario::default() };
    let eta = case_threshold(&sc, DetectionMode::Pt, None).unwrap();
    let fa = false_alarm_rate(&sc, DetectionMode::Pt, 3000, eta).unwrap();
    assert!((fa - sc.p_fa).abs() < 0.006, "{fa}");
}

#[test]
fn detector_rejects_short_capture() {
    let cfg = FrameConfig::default();
    let corr = vec![Complex64::new(0.0, 0.0); 10];
    assert!(detect(DetectionMode::Nt, &corr, &cfg, 1.0).is_err());
}
