//! Unitary multicarrier transform and guard insertion.
//!
//! Both directions carry the 1/√M normalization, so modulate/demodulate form
//! an exact unitary pair (Parseval holds) and per-carrier symbol energy is
//! preserved into the time domain. The 3780-point size factors as
//! 2²·3³·5·7, which the mixed-radix FFT backend handles natively.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::{pn::PnHeader, ModemError};
use crate::Cplx;

/// Cached transform plans for one block size.
pub struct OfdmTransform {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl OfdmTransform {
    pub fn new(size: usize) -> Self {
        assert!(size > 0, "transform size must be positive");
        let mut planner = FftPlanner::new();
        OfdmTransform {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
            scale: 1.0 / (size as f64).sqrt(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Frequency → time: the conjugate-transpose of the unitary DFT.
    pub fn modulate(&self, freq: &[Cplx]) -> Vec<Cplx> {
        self.run(&*self.inverse, freq)
    }

    /// Time → frequency: the unitary DFT itself.
    pub fn demodulate(&self, time: &[Cplx]) -> Vec<Cplx> {
        self.run(&*self.forward, time)
    }

    fn run(&self, fft: &dyn Fft<f64>, input: &[Cplx]) -> Vec<Cplx> {
        assert_eq!(input.len(), self.size, "block length mismatch");
        let mut buf = input.to_vec();
        fft.process(&mut buf);
        for v in &mut buf {
            *v *= self.scale;
        }
        buf
    }
}

/// Prefix the block with a copy of its own last `d` samples.
pub fn add_cp(time: &[Cplx], d: usize) -> Result<Vec<Cplx>, ModemError> {
    let m = time.len();
    if d == 0 || d > m {
        return Err(ModemError::GuardLength { d, m });
    }
    let mut out = Vec::with_capacity(m + d);
    out.extend_from_slice(&time[m - d..]);
    out.extend_from_slice(time);
    Ok(out)
}

/// Append the PN guard after the block body (zero padding filled by the
/// known sequence).
pub fn add_tds_header(body: &[Cplx], pn: &PnHeader) -> Vec<Cplx> {
    let mut out = Vec::with_capacity(body.len() + pn.len());
    out.extend_from_slice(body);
    out.extend_from_slice(&pn.chips);
    out
}
