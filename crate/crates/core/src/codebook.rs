//! Sounding-beam codebooks.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{steering, steering_beam};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookKind {
    Pseudorandom,
    Sector,
    Steering,
}

/// One unit-norm beam per burst (or per sector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub kind: CodebookKind,
    pub beams: Vec<Vec<Complex64>>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    /// Array size `N`.
    pub fn antennas(&self) -> usize {
        self.beams.first().map_or(0, Vec::len)
    }

    /// Writes one beam per row as `re,im` pairs.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for beam in &self.beams {
            let row: Vec<String> = beam.iter().flat_map(|c| [c.re.to_string(), c.im.to_string()]).collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, kind: CodebookKind) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
        let mut beams = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() % 2 != 0 {
                return Err(Error::InvalidArgument("codebook row needs re,im pairs".into()));
            }
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad number '{s}': {e}"))))
                .collect::<Result<_>>()?;
            beams.push(vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
        }
        Ok(Codebook { kind, beams })
    }
}

/// `M` beams of `N` entries drawn i.i.d. from `{1, j, -1, -j} / sqrt(N)`.
pub fn gen_pseudorandom(n: usize, m: usize, rng: &mut impl Rng) -> Codebook {
    let scale = 1.0 / (n as f64).sqrt();
    let alphabet = [Complex64::new(scale, 0.0), Complex64::new(0.0, scale), Complex64::new(-scale, 0.0), Complex64::new(0.0, -scale)];
    let beams = (0..m).map(|_| (0..n).map(|_| alphabet[rng.random_range(0..4)]).collect()).collect();
    Codebook { kind: CodebookKind::Pseudorandom, beams }
}

/// Angular limits of sector `m` out of `m_sectors` covering (-pi/2, pi/2).
pub fn sector_bounds(m: usize, m_sectors: usize) -> (f64, f64) {
    let width = PI / m_sectors as f64;
    let lo = -PI / 2.0 + m as f64 * width;
    (lo, lo + width)
}

/// Sector beams: each is a sum of steering vectors whose spatial
/// frequencies `sin(psi)` tile the sector at the array's resolution `2/N`.
pub fn gen_sector(n: usize, m_sectors: usize) -> Codebook {
    let beams = (0..m_sectors)
        .map(|m| {
            let (lo, hi) = sector_bounds(m, m_sectors);
            let (u_lo, u_hi) = (lo.sin(), hi.sin());
            let count = (((u_hi - u_lo) * n as f64 / 2.0).ceil() as usize).max(1);
            let du = (u_hi - u_lo) / count as f64;
            let mut w = vec![Complex64::new(0.0, 0.0); n];
            for s in 0..count {
                let u = u_lo + (s as f64 + 0.5) * du;
                for (acc, a) in w.iter_mut().zip(steering(n, u.asin())) {
                    *acc += a;
                }
            }
            let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            w.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    Codebook { kind: CodebookKind::Sector, beams }
}

pub fn gen_steering(n: usize, angles: &[f64]) -> Codebook {
    Codebook { kind: CodebookKind::Steering, beams: angles.iter().map(|&a| steering_beam(n, a)).collect() }
}

/// 1-based `(tx, rx)` sector indices used in burst `m` (1-based); the TX
/// index runs fastest.
pub fn burst_to_pair(m: usize, m_tx: usize) -> (usize, usize) {
    let rx = (m - 1) / m_tx + 1;
    let tx = m - (rx - 1) * m_tx;
    (tx, rx)
}

/// Per-burst `(tx, rx)` sector indices, 1-based, for `M = M_tx * M_rx` bursts.
pub fn pair_schedule(m_tx: usize, m_rx: usize, bursts: usize) -> Result<Vec<(usize, usize)>> {
    if m_tx * m_rx != bursts {
        return Err(Error::InvalidArgument(format!("sector counts {m_tx}x{m_rx} do not match {bursts} bursts")));
    }
    Ok((1..=bursts).map(|m| burst_to_pair(m, m_tx)).collect())
}

/// Expands sector codebooks into per-burst TX and RX codebooks following
/// [`pair_schedule`].
pub fn scheduled_sectors(tx: &Codebook, rx: &Codebook, bursts: usize) -> Result<(Codebook, Codebook)> {
    let sched = pair_schedule(tx.len(), rx.len(), bursts)?;
    let pick = |cb: &Codebook, idx: &dyn Fn(&(usize, usize)) -> usize| Codebook {
        kind: CodebookKind::Sector,
        beams: sched.iter().map(|p| cb.beams[idx(p) - 1].clone()).collect(),
    };
    Ok((pick(tx, &|p| p.0), pick(rx, &|p| p.1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::combine;
    use crate::rng::{derive_stream, Purpose};

    fn norm2(b: &[Complex64]) -> f64 {
        b.iter().map(|x| x.norm_sqr()).sum()
    }

    #[test]
    fn pseudorandom_alphabet_and_norm() {
        let mut rng = derive_stream(1, Purpose::Beams, 0).rng();
        let cb = gen_pseudorandom(64, 10, &mut rng);
        assert_eq!(cb.len(), 10);
        let s = 1.0 / 8.0;
        for beam in &cb.beams {
            assert!((norm2(beam) - 1.0).abs() < 1e-12);
            let mut seen = [false; 4];
            for x in beam {
                let k = [Complex64::new(s, 0.0), Complex64::new(0.0, s), Complex64::new(-s, 0.0), Complex64::new(0.0, -s)]
                    .iter()
                    .position(|a| a == x)
                    .expect("entry outside alphabet");
                seen[k] = true;
            }
            assert!(seen.iter().all(|&v| v));
        }
    }

    #[test]
    fn pseudorandom_is_quasi_omni() {
        let mut rng = derive_stream(2, Purpose::Beams, 0).rng();
        let cb = gen_pseudorandom(32, 10_000, &mut rng);
        let a = steering(32, -0.8);
        let mean = cb.beams.iter().map(|b| combine(b, &a).norm_sqr()).sum::<f64>() / cb.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn sector_beams_are_directional() {
        let (n, ms) = (128, 16);
        let cb = gen_sector(n, ms);
        let angles: Vec<f64> = (0..4000).map(|i| -PI / 2.0 + (i as f64 + 0.5) * PI / 4000.0).collect();
        for (m, beam) in cb.beams.iter().enumerate() {
            assert!((norm2(beam) - 1.0).abs() < 1e-12);
            let (lo, hi) = sector_bounds(m, ms);
            let (mut gin, mut nin, mut gout, mut nout) = (0.0, 0, 0.0, 0);
            for &a in &angles {
                let g = combine(beam, &steering(n, a)).norm_sqr();
                if a >= lo && a < hi {
                    gin += g;
                    nin += 1;
                } else {
                    gout += g;
                    nout += 1;
                }
            }
            let ratio_db = 10.0 * ((gin / nin as f64) / (gout / nout as f64)).log10();
            assert!(ratio_db >= 10.0, "sector {m}: {ratio_db} dB");
        }
    }

    #[test]
    fn sectors_cover_visible_range() {
        let ms = 16;
        assert!((sector_bounds(0, ms).0 + PI / 2.0).abs() < 1e-15);
        assert!((sector_bounds(ms - 1, ms).1 - PI / 2.0).abs() < 1e-12);
        for m in 1..ms {
            assert!((sector_bounds(m, ms).0 - sector_bounds(m - 1, ms).1).abs() < 1e-15);
        }
    }

    #[test]
    fn schedule_inverse() {
        assert_eq!(burst_to_pair(1, 16), (1, 1));
        assert_eq!(burst_to_pair(17, 16), (1, 2));
        let sched = pair_schedule(16, 4, 64).unwrap();
        assert_eq!(sched[15], (16, 1));
        assert_eq!(sched[63], (16, 4));
        for (i, &p) in sched.iter().enumerate() {
            assert_eq!(burst_to_pair(i + 1, 16), p);
            assert_eq!((p.1 - 1) * 16 + p.0, i + 1);
        }
        assert!(pair_schedule(16, 4, 60).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut rng = derive_stream(9, Purpose::Beams, 0).rng();
        let cb = gen_pseudorandom(4, 3, &mut rng);
        let mut buf = Vec::new();
        cb.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 8);
        let back = Codebook::read_csv(buf.as_slice(), CodebookKind::Pseudorandom).unwrap();
        assert_eq!(back, cb);
    }

    #[test]
    fn steering_codebook_unit_norm() {
        let cb = gen_steering(16, &[0.1, -0.5]);
        assert_eq!(cb.kind, CodebookKind::Steering);
        for b in &cb.beams {
            assert!((norm2(b) - 1.0).abs() < 1e-12);
        }
    }
}
