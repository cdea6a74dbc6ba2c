//! Result rows, CSV and JSON sidecar output.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One line of a sweep result. Columns that do not apply are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep: f64,
    pub metric: String,
    pub sim: Option<f64>,
    pub theory: Option<f64>,
    pub trials: usize,
    pub ci95: Option<f64>,
}

impl ResultRow {
    pub fn new(sweep: f64, metric: impl Into<String>) -> Self {
        ResultRow { sweep, metric: metric.into(), sim: None, theory: None, trials: 0, ci95: None }
    }
}

/// 95% Wilson score interval for an observed rate `p_hat` over `n` trials.
pub fn wilson_interval(p_hat: f64, n: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let z2 = z * z;
    let den = 1.0 + z2 / n;
    let center = (p_hat + z2 / (2.0 * n)) / den;
    let half = z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / den;
    let lo = if p_hat <= 0.0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if p_hat >= 1.0 { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut p = csv_path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

/// Writes `rows` to `csv_path` and the run description to `<csv_path>.json`.
pub fn write_outputs<T: Serialize>(csv_path: &Path, rows: &[ResultRow], meta: &T) -> Result<PathBuf> {
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_csv(rows, File::create(csv_path)?)?;
    let side = sidecar_path(csv_path);
    let mut f = File::create(&side)?;
    serde_json::to_writer_pretty(&mut f, meta)?;
    f.write_all(b"\n")?;
    Ok(side)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(0.1, 2000);
        assert!(lo < 0.1 && hi > 0.1);
        assert!((hi - lo - 0.0264).abs() < 0.001);
        let (lo, hi) = wilson_interval(0.0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }

    #[test]
    fn csv_header_and_empty_cells() {
        let mut r = ResultRow::new(-5.0, "pmd_pt");
        r.sim = Some(0.25);
        r.trials = 10;
        let mut buf = Vec::new();
        write_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "sweep,metric,sim,theory,trials,ci95\n-5.0,pmd_pt,0.25,,10,\n");
    }
}
