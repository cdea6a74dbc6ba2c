use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use compressive_ia::harness::{
    crlb_sweep, latency_overhead_sweep, run_discovery_sweep, run_training_sweep, selftest, write_outputs, ResultRow, Scenario,
    SelftestOptions,
};

#[derive(Parser)]
#[command(name = "cia", version, about = "Compressive initial access simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV (a JSON sidecar is written next to it).
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// SNR grid in dB as `lo:step:hi`.
    #[arg(long)]
    snr: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Miss-detection probability versus SNR.
    DiscoverSweep(Common),
    /// Angle RMSE of the training stage versus the CRLB.
    TrainingSweep(Common),
    /// Access latency and CSI-RS overhead.
    LatencyOverhead(Common),
    /// CRLB of the angle estimates.
    Crlb(Common),
    /// Internal consistency checks.
    Selftest {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the NT threshold scale constant.
        #[arg(long)]
        gumbel_scale: Option<f64>,
        #[arg(long)]
        corrupt_dictionary: bool,
    },
}

fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<f64> =
        s.split(':').map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad SNR grid `{s}`: {e}"))).collect::<Result<_, _>>()?;
    let [lo, step, hi] = parts[..] else {
        return Err(format!("SNR grid `{s}` must be lo:step:hi"));
    };
    if !(step > 0.0) || hi < lo {
        return Err(format!("SNR grid `{s}` is empty"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + step * i as f64).collect())
}

fn load(config: &Option<PathBuf>) -> Result<Scenario, String> {
    match config {
        Some(p) => Scenario::from_path(p).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(Scenario::default()),
    }
}

fn scenario(c: &Common, training: bool) -> Result<Scenario, String> {
    let mut sc = load(&c.config)?;
    if let Some(s) = c.seed {
        sc.master_seed = s;
    }
    if let Some(t) = c.trials {
        sc.trials = t;
    }
    if let Some(g) = &c.snr {
        let grid = parse_grid(g)?;
        if training {
            sc.training_snr_db = grid;
        } else {
            sc.snr_db = grid;
        }
    }
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    sc.validate().map_err(|e| e.to_string())?;
    Ok(sc)
}

fn run_sweep(name: &str, c: &Common, training: bool, f: fn(&Scenario) -> compressive_ia::Result<Vec<ResultRow>>) -> Result<(), String> {
    let sc = scenario(c, training)?;
    let rows = f(&sc).map_err(|e| e.to_string())?;
    let meta = json!({
        "sweep": name,
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": sc,
    });
    let sidecar = write_outputs(&c.out, &rows, &meta).map_err(|e| e.to_string())?;
    eprintln!("wrote {} rows to {} ({})", rows.len(), c.out.display(), sidecar.display());
    Ok(())
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.cmd {
        Cmd::DiscoverSweep(c) => run_sweep("discover", &c, false, run_discovery_sweep).map(|_| true),
        Cmd::TrainingSweep(c) => run_sweep("training", &c, true, run_training_sweep).map(|_| true),
        Cmd::LatencyOverhead(c) => run_sweep("latency-overhead", &c, false, latency_overhead_sweep).map(|_| true),
        Cmd::Crlb(c) => run_sweep("crlb", &c, true, crlb_sweep).map(|_| true),
        Cmd::Selftest { config, gumbel_scale, corrupt_dictionary } => {
            let sc = load(&config)?;
            let rep = selftest(&sc, &SelftestOptions { gumbel_scale, corrupt_dictionary }).map_err(|e| e.to_string())?;
            for c in &rep.checks {
                println!("{} {:<28} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(rep.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
