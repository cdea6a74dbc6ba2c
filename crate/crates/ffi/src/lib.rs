//! C ABI over `compressive_ia`.
//!
//! Objects cross the boundary as opaque handles created by `cia_*_new` style
//! functions and released with the matching `cia_*_free`. Every fallible
//! call returns a [`CiaStatus`]; on failure the message is available from
//! [`cia_last_error`] on the same thread until the next failing call.
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the access implied by their
//! type (buffers for the stated length); handles must come from this library
//! and not be used after being freed. Null is always reported, never read.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use compressive_ia::channel::{cfo_from_ppm, synth_rx, ChannelRealization, Path, SyncState, SynthOptions};
use compressive_ia::codebook::{gen_pseudorandom, gen_sector, Codebook};
use compressive_ia::detection::DetectionMode;
use compressive_ia::harness::Scenario;
use compressive_ia::rng::{derive_stream, Purpose};
use compressive_ia::theory::{fim, kappa, DetectionTheory, FimInputs, LosParams};
use compressive_ia::training::{run_algorithm1, DelayDictionary};
use compressive_ia::waveform::PssSequence;
use compressive_ia::{Complex64, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    /// Singular information matrix, zero tone or a diverging latency.
    Numerical = 4,
    Io = 5,
    BufferTooSmall = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiaMode {
    Pt = 0,
    Nt = 1,
    Dia = 2,
}

impl From<CiaMode> for DetectionMode {
    fn from(m: CiaMode) -> Self {
        match m {
            CiaMode::Pt => DetectionMode::Pt,
            CiaMode::Nt => DetectionMode::Nt,
            CiaMode::Dia => DetectionMode::Dia,
        }
    }
}

/// Single-path parameters. `eps_f` in radians per sample, angles in
/// radians, `delay` in seconds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiaLosParams {
    pub eps_f: f64,
    pub aod: f64,
    pub aoa: f64,
    pub delay: f64,
    pub gain_re: f64,
    pub gain_im: f64,
}

impl From<CiaLosParams> for LosParams {
    fn from(p: CiaLosParams) -> Self {
        LosParams { eps_f: p.eps_f, aod: p.aod, aoa: p.aoa, delay: p.delay, gain: Complex64::new(p.gain_re, p.gain_im) }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CiaTrainingResult {
    /// 1 when the cell was detected and the remaining fields are set.
    pub detected: i32,
    pub eps_t_hat: u64,
    pub statistic: f64,
    pub aod: f64,
    pub aoa: f64,
    pub delay: f64,
    pub eps_f: f64,
    pub gain_re: f64,
    pub gain_im: f64,
}

/// Opaque scenario (frame constants, arrays, thresholds, seed).
pub struct CiaScenario(Scenario);

/// Opaque codebook: one unit-norm beam per burst.
pub struct CiaCodebook(Codebook);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CiaStatus {
    match e {
        Error::InvalidConfig(_) | Error::TomlDe(_) | Error::TomlSer(_) => CiaStatus::InvalidConfig,
        Error::SingularFim | Error::ZeroTone | Error::LatencyDiverges | Error::NoCsiRs => CiaStatus::Numerical,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => CiaStatus::Io,
        _ => CiaStatus::InvalidArgument,
    }
}

struct Fail(CiaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CiaStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CiaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CiaStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            CiaStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cia_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cia_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn cia_scenario_new_default(out_scenario: *mut *mut CiaScenario) -> CiaStatus {
    guard(|| {
        let o = unsafe { out(out_scenario, "out_scenario") }?;
        *o = Box::into_raw(Box::new(CiaScenario(Scenario::default())));
        Ok(())
    })
}

/// Parses a scenario from TOML text; unspecified keys take defaults.
#[no_mangle]
pub unsafe extern "C" fn cia_scenario_from_toml(toml: *const c_char, out_scenario: *mut *mut CiaScenario) -> CiaStatus {
    guard(|| {
        let o = unsafe { out(out_scenario, "out_scenario") }?;
        if toml.is_null() {
            return Err(null("toml"));
        }
        let text =
            unsafe { CStr::from_ptr(toml) }.to_str().map_err(|_| Fail(CiaStatus::InvalidArgument, "toml is not valid UTF-8".into()))?;
        let sc = Scenario::from_toml_str(text)?;
        *o = Box::into_raw(Box::new(CiaScenario(sc)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cia_scenario_free(scenario: *mut CiaScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn cia_scenario_set_seed(scenario: *mut CiaScenario, seed: u64) -> CiaStatus {
    guard(|| {
        unsafe { out(scenario, "scenario") }?.0.master_seed = seed;
        Ok(())
    })
}

/// Samples in one SS-period capture for this scenario.
#[no_mangle]
pub unsafe extern "C" fn cia_scenario_capture_len(scenario: *const CiaScenario, out_len: *mut u64) -> CiaStatus {
    guard(|| {
        let sc = unsafe { deref(scenario, "scenario") }?;
        *unsafe { out(out_len, "out_len") }? = sc.0.frame.capture_len() as u64;
        Ok(())
    })
}

/// Normalized CFO (radians per sample) of `ppm` at the scenario carrier.
#[no_mangle]
pub unsafe extern "C" fn cia_cfo_from_ppm(scenario: *const CiaScenario, ppm: f64, out_eps_f: *mut f64) -> CiaStatus {
    guard(|| {
        let sc = &unsafe { deref(scenario, "scenario") }?.0;
        *unsafe { out(out_eps_f, "out_eps_f") }? = cfo_from_ppm(ppm, sc.carrier_hz, &sc.frame);
        Ok(())
    })
}

/// Pseudorandom codebook of `bursts` beams for `antennas` elements, drawn
/// from the scenario seed and `stream`.
#[no_mangle]
pub unsafe extern "C" fn cia_codebook_pseudorandom(
    scenario: *const CiaScenario,
    antennas: u64,
    stream: u64,
    out_codebook: *mut *mut CiaCodebook,
) -> CiaStatus {
    guard(|| {
        let sc = &unsafe { deref(scenario, "scenario") }?.0;
        let o = unsafe { out(out_codebook, "out_codebook") }?;
        if antennas == 0 {
            return Err(Fail(CiaStatus::InvalidArgument, "antennas must be positive".into()));
        }
        if stream >= 1 << 56 {
            return Err(Fail(CiaStatus::InvalidArgument, "stream must be below 2^56".into()));
        }
        let mut rng = derive_stream(sc.master_seed, Purpose::Beams, stream).rng();
        let cb = gen_pseudorandom(antennas as usize, sc.frame.bursts, &mut rng);
        *o = Box::into_raw(Box::new(CiaCodebook(cb)));
        Ok(())
    })
}

/// Sector codebook with `sectors` beams covering (-pi/2, pi/2).
#[no_mangle]
pub unsafe extern "C" fn cia_codebook_sector(antennas: u64, sectors: u64, out_codebook: *mut *mut CiaCodebook) -> CiaStatus {
    guard(|| {
        let o = unsafe { out(out_codebook, "out_codebook") }?;
        if antennas == 0 || sectors == 0 {
            return Err(Fail(CiaStatus::InvalidArgument, "antennas and sectors must be positive".into()));
        }
        *o = Box::into_raw(Box::new(CiaCodebook(gen_sector(antennas as usize, sectors as usize))));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cia_codebook_free(codebook: *mut CiaCodebook) {
    if !codebook.is_null() {
        drop(unsafe { Box::from_raw(codebook) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn cia_codebook_shape(codebook: *const CiaCodebook, out_beams: *mut u64, out_antennas: *mut u64) -> CiaStatus {
    guard(|| {
        let cb = &unsafe { deref(codebook, "codebook") }?.0;
        *unsafe { out(out_beams, "out_beams") }? = cb.len() as u64;
        *unsafe { out(out_antennas, "out_antennas") }? = cb.antennas() as u64;
        Ok(())
    })
}

/// Copies beam `index` as interleaved `re, im` pairs into `buf`
/// (`2 * antennas` doubles).
#[no_mangle]
pub unsafe extern "C" fn cia_codebook_beam(codebook: *const CiaCodebook, index: u64, buf: *mut f64, buf_len: u64) -> CiaStatus {
    guard(|| {
        let cb = &unsafe { deref(codebook, "codebook") }?.0;
        let beam = cb
            .beams
            .get(index as usize)
            .ok_or_else(|| Fail(CiaStatus::InvalidArgument, format!("beam {index} out of range ({} beams)", cb.len())))?;
        let dst = unsafe { out_slice(buf, buf_len, 2 * beam.len()) }?;
        for (d, c) in dst.chunks_exact_mut(2).zip(beam) {
            d[0] = c.re;
            d[1] = c.im;
        }
        Ok(())
    })
}

unsafe fn out_slice<'a>(buf: *mut f64, len: u64, need: usize) -> Result<&'a mut [f64], Fail> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if (len as usize) < need {
        return Err(Fail(CiaStatus::BufferTooSmall, format!("buffer holds {len} doubles, need {need}")));
    }
    Ok(unsafe { std::slice::from_raw_parts_mut(buf, need) })
}

/// SNR degradation factor for timing offset `eps_t` and CFO `eps_f`.
#[no_mangle]
pub unsafe extern "C" fn cia_kappa(scenario: *const CiaScenario, eps_t: u64, eps_f: f64, out_kappa: *mut f64) -> CiaStatus {
    guard(|| {
        let sc = &unsafe { deref(scenario, "scenario") }?.0;
        *unsafe { out(out_kappa, "out_kappa") }? = kappa(eps_t as usize, eps_f, &sc.frame);
        Ok(())
    })
}

fn theory(sc: &Scenario, mode: CiaMode, snr_db: f64, eps_t: u64, eps_f: f64) -> DetectionTheory {
    DetectionTheory {
        snr: 10f64.powf(snr_db / 10.0),
        eps_t: eps_t as usize,
        eps_f,
        gumbel_scale: sc.gumbel_scale,
        ..DetectionTheory::new(sc.frame.clone(), mode.into(), sc.p_fa)
    }
}

/// Detection threshold at the scenario's false-alarm target.
#[no_mangle]
pub unsafe extern "C" fn cia_threshold(scenario: *const CiaScenario, mode: CiaMode, noise_power: f64, out_eta: *mut f64) -> CiaStatus {
    guard(|| {
        let sc = &unsafe { deref(scenario, "scenario") }?.0;
        *unsafe { out(out_eta, "out_eta") }? = theory(sc, mode, 0.0, 0, 0.0).threshold(noise_power)?;
        Ok(())
    })
}

/// Predicted miss-detection probability.
#[no_mangle]
pub unsafe extern "C" fn cia_predicted_pmd(
    scenario: *const CiaScenario,
    mode: CiaMode,
    snr_db: f64,
    eps_t: u64,
    eps_f: f64,
    out_pmd: *mut f64,
) -> CiaStatus {
    guard(|| {
        let sc = &unsafe { deref(scenario, "scenario") }?.0;
        *unsafe { out(out_pmd, "out_pmd") }? = theory(sc, mode, snr_db, eps_t, eps_f).pmd()?;
        Ok(())
    })
}

/// CRLB of AoD and AoA for one parameter point and beam pair.
#[no_mangle]
pub unsafe extern "C" fn cia_crlb(
    scenario: *const CiaScenario,
    tx: *const CiaCodebook,
    rx: *const CiaCodebook,
    params: *const CiaLosParams,
    noise_power: f64,
    out_aod: *mut f64,
    out_aoa: *mut f64,
) -> CiaStatus {
    guard(|| {
        let sc = &unsafe { deref(scenario, "scenario") }?.0;
        let (tx, rx) = (&unsafe { deref(tx, "tx") }?.0, &unsafe { deref(rx, "rx") }?.0);
        let params = LosParams::from(*unsafe { deref(params, "params") }?);
        let pss = PssSequence::generate(sc.pss, sc.frame.pss_len)?;
        let r = fim(&FimInputs { cfg: &sc.frame, pss: &pss, tx, rx, params, noise_power })?;
        *unsafe { out(out_aod, "out_aod") }? = r.crlb_aod();
        *unsafe { out(out_aoa, "out_aoa") }? = r.crlb_aoa();
        Ok(())
    })
}

/// Synthesizes one single-path capture into `buf` as interleaved `re, im`
/// pairs (`2 * capture_len` doubles). Noise comes from the scenario seed
/// and `stream`.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn cia_synth_los(
    scenario: *const CiaScenario,
    tx: *const CiaCodebook,
    rx: *const CiaCodebook,
    params: *const CiaLosParams,
    eps_t: u64,
    noise_power: f64,
    stream: u64,
    buf: *mut f64,
    buf_len: u64,
) -> CiaStatus {
    guard(|| {
        let sc = &unsafe { deref(scenario, "scenario") }?.0;
        let (tx, rx) = (&unsafe { deref(tx, "tx") }?.0, &unsafe { deref(rx, "rx") }?.0);
        let p = *unsafe { deref(params, "params") }?;
        if stream >= 1 << 56 {
            return Err(Fail(CiaStatus::InvalidArgument, "stream must be below 2^56".into()));
        }
        let cfg = &sc.frame;
        let dst = unsafe { out_slice(buf, buf_len, 2 * cfg.capture_len()) }?;
        let pss = PssSequence::generate(sc.pss, cfg.pss_len)?;
        let path = Path { gain: Complex64::new(p.gain_re, p.gain_im), aod: p.aod, aoa: p.aoa, delay: p.delay };
        let chan = ChannelRealization::new(vec![path], tx.antennas(), rx.antennas(), noise_power, cfg)?;
        let sync = SyncState::new(eps_t as usize, p.eps_f, cfg)?;
        let mut rng = derive_stream(sc.master_seed, Purpose::Noise, stream).rng();
        let cap = synth_rx(cfg, &pss, &chan, tx, rx, sync, SynthOptions::default(), &mut rng)?;
        for (d, c) in dst.chunks_exact_mut(2).zip(&cap.samples) {
            d[0] = c.re;
            d[1] = c.im;
        }
        Ok(())
    })
}

/// Detection with unknown timing followed by beam training on the same
/// capture (`samples` holds `2 * n` interleaved doubles).
#[no_mangle]
pub unsafe extern "C" fn cia_run_algorithm1(
    scenario: *const CiaScenario,
    tx: *const CiaCodebook,
    rx: *const CiaCodebook,
    samples: *const f64,
    n: u64,
    noise_power: f64,
    out_result: *mut CiaTrainingResult,
) -> CiaStatus {
    guard(|| {
        let sc = &unsafe { deref(scenario, "scenario") }?.0;
        let (tx, rx) = (&unsafe { deref(tx, "tx") }?.0, &unsafe { deref(rx, "rx") }?.0);
        let res = unsafe { out(out_result, "out_result") }?;
        if samples.is_null() {
            return Err(null("samples"));
        }
        let raw = unsafe { std::slice::from_raw_parts(samples, 2 * n as usize) };
        let y: Vec<Complex64> = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let cfg = &sc.frame;
        let pss = PssSequence::generate(sc.pss, cfg.pss_len)?;
        let delays = DelayDictionary::new(cfg, &pss, sc.training.g_d);
        let eta = theory(sc, CiaMode::Nt, 0.0, 0, 0.0).threshold(noise_power)?;
        let mut tcfg = sc.training.clone();
        tcfg.refine.cfo_bound.get_or_insert(sc.cfo_bound());
        let o = run_algorithm1(&y, cfg, &pss, tx, rx, &delays, eta, &tcfg)?;
        *res = CiaTrainingResult { statistic: o.detection.statistic, ..Default::default() };
        if let (Some(e), Some(t)) = (o.estimate, o.detection.eps_t_hat) {
            *res = CiaTrainingResult {
                detected: 1,
                eps_t_hat: t as u64,
                statistic: o.detection.statistic,
                aod: e.aod,
                aoa: e.aoa,
                delay: e.delay,
                eps_f: e.eps_f,
                gain_re: e.gain.re,
                gain_im: e.gain.im,
            };
        }
        Ok(())
    })
}
