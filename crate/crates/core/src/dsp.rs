//! Small FFT helpers on top of rustfft.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Unitary DFT pair of fixed length: `forward` is F, `inverse` is F^H.
#[derive(Clone)]
pub struct UnitaryDft {
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for UnitaryDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryDft").field("len", &self.len).finish()
    }
}

impl UnitaryDft {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        UnitaryDft { len, fwd: planner.plan_fft_forward(len), inv: planner.plan_fft_inverse(len) }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.run(&self.fwd, x)
    }

    pub fn inverse(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.run(&self.inv, x)
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.len);
        let mut buf = x.to_vec();
        plan.process(&mut buf);
        let scale = 1.0 / (self.len as f64).sqrt();
        for v in &mut buf {
            *v *= scale;
        }
        buf
    }
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}
