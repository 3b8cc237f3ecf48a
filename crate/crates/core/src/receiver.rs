//! Demodulation paths under perfect channel knowledge: CP removal with
//! one-tap ZF equalization, and PN subtraction + overlap-add for the
//! PN-guarded frames.
//!
//! Index conventions for the PN path. The transmitted stream is
//! `[pn, body_0, pn, body_1, pn, …]` — every body has the known guard on
//! both sides. The receive window for block i covers `[body_i; pn]`
//! (M+D samples); `rx_next_head` is the following D samples. Three known
//! contributions are removed before overlap-add:
//!
//! * the *preceding* guard's channel tail, `conv(pn, h)[D..D+L−1)`, which
//!   spills into the window head;
//! * the in-window guard itself, `conv(pn, h)[0..D)`, under the tail region;
//! * that guard's own tail, which spills into `rx_next_head`.
//!
//! What remains is the body's plain linear convolution (plus noise), so
//! folding the tail back onto the head restores circularity and the CP
//! equalizer applies unchanged. When the channel memory exceeds D, the fold
//! reaches into `rx_next_head`, which still contains the *next* body's
//! leading edge — genuine, unremovable interference; callers see it via the
//! `ibi_risk` flag and as residual errors.

use thiserror::Error;

use crate::modem::ofdm::OfdmTransform;
use crate::modem::pn::PnHeader;
use crate::Cplx;

#[derive(Debug, Error, PartialEq)]
pub enum ReceiverError {
    #[error("received block has {got} samples, expected {want}")]
    BlockLength { got: usize, want: usize },
    #[error("channel state has no taps")]
    EmptyChannel,
    #[error("channel ({l} taps) longer than the transform ({m})")]
    ChannelTooLong { l: usize, m: usize },
}

/// Perfect channel knowledge: time taps plus the per-bin fading factors
/// √M·(F_M h)_k they diagonalize to.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStateInfo {
    pub h: Vec<Cplx>,
    pub freq: Vec<Cplx>,
    /// ZF singularity threshold: 1e−6 × the strongest bin.
    pub epsilon: f64,
}

impl ChannelStateInfo {
    pub fn new(h: &[Cplx], ofdm: &OfdmTransform) -> Result<Self, ReceiverError> {
        if h.is_empty() {
            return Err(ReceiverError::EmptyChannel);
        }
        let m = ofdm.size();
        if h.len() > m {
            return Err(ReceiverError::ChannelTooLong { l: h.len(), m });
        }
        let mut padded = vec![Cplx::new(0.0, 0.0); m];
        padded[..h.len()].copy_from_slice(h);
        let scale = (m as f64).sqrt();
        let freq: Vec<Cplx> = ofdm
            .demodulate(&padded)
            .into_iter()
            .map(|v| v * scale)
            .collect();
        let peak = freq.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        Ok(ChannelStateInfo {
            h: h.to_vec(),
            freq,
            epsilon: 1e-6 * peak,
        })
    }
}

/// Equalizer output: one symbol per bin plus per-bin erasure marks and the
/// receive-path health flags.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizedBlock {
    pub symbols: Vec<Cplx>,
    pub erased: Vec<bool>,
    /// Set when the guard is shorter than the channel: interference from the
    /// neighboring block cannot be fully removed.
    pub ibi_risk: bool,
    /// Mean power left in the guard region after PN subtraction, where the
    /// noiseless expectation is zero (PN path only). Values far above the
    /// noise level indicate a CSI or indexing bug.
    pub pn_residual: Option<f64>,
}

/// Per-bin zero-forcing division; bins under the singularity threshold come
/// out as zero with the erasure mark set.
pub fn zf_equalize(freq: &[Cplx], csi: &ChannelStateInfo) -> EqualizedBlock {
    debug_assert_eq!(freq.len(), csi.freq.len());
    let mut symbols = Vec::with_capacity(freq.len());
    let mut erased = Vec::with_capacity(freq.len());
    for (y, gain) in freq.iter().zip(&csi.freq) {
        if gain.norm() < csi.epsilon {
            symbols.push(Cplx::new(0.0, 0.0));
            erased.push(true);
        } else {
            symbols.push(y / gain);
            erased.push(false);
        }
    }
    EqualizedBlock {
        symbols,
        erased,
        ibi_risk: false,
        pn_residual: None,
    }
}

/// CP path: drop the prefix, transform, divide out the fading factors.
pub fn cp_receive(
    rx: &[Cplx],
    csi: &ChannelStateInfo,
    ofdm: &OfdmTransform,
) -> Result<EqualizedBlock, ReceiverError> {
    let m = ofdm.size();
    if rx.len() <= m {
        return Err(ReceiverError::BlockLength {
            got: rx.len(),
            want: m + 1,
        });
    }
    let d = rx.len() - m;
    let freq = ofdm.demodulate(&rx[d..]);
    let mut eq = zf_equalize(&freq, csi);
    eq.ibi_risk = d < csi.h.len();
    Ok(eq)
}

/// PN subtraction and overlap-add; returns the circularized M-sample time
/// block and the guard-region residual power. Exposed separately from
/// `tds_receive` so time-domain properties (noise folding) are testable.
pub fn pn_subtract_and_ola(
    rx: &[Cplx],
    rx_next_head: &[Cplx],
    csi: &ChannelStateInfo,
    pn: &PnHeader,
) -> Result<(Vec<Cplx>, Option<f64>), ReceiverError> {
    let d = pn.len();
    let l = csi.h.len();
    if rx.len() <= d {
        return Err(ReceiverError::BlockLength {
            got: rx.len(),
            want: d + 1,
        });
    }
    let m = rx.len() - d;
    if rx_next_head.len() != d {
        return Err(ReceiverError::BlockLength {
            got: rx_next_head.len(),
            want: d,
        });
    }

    // Linear convolution of the known guard with the known channel.
    let mut pn_conv = vec![Cplx::new(0.0, 0.0); d + l - 1];
    for (i, &chip) in pn.chips.iter().enumerate() {
        for (j, &tap) in csi.h.iter().enumerate() {
            pn_conv[i + j] += chip * tap;
        }
    }

    let mut w: Vec<Cplx> = rx.to_vec();
    // Preceding guard's tail under the window head.
    for j in 0..(l - 1).min(m + d) {
        w[j] -= pn_conv[d + j];
    }
    // The in-window guard under the tail region.
    for j in 0..d {
        w[m + j] -= pn_conv[j];
    }
    // Residual check where nothing but the guard (and noise) lived.
    let quiet = &w[(m + l - 1).min(m + d)..];
    let pn_residual = if quiet.is_empty() {
        None
    } else {
        Some(quiet.iter().map(|v| v.norm_sqr()).sum::<f64>() / quiet.len() as f64)
    };

    // Clean the spill into the next block's head, needed when l − 1 > d.
    let mut next: Vec<Cplx> = rx_next_head.to_vec();
    for j in 0..(l - 1).min(d) {
        next[j] -= pn_conv[d + j];
    }

    // Overlap-add: fold everything past the body back onto its start.
    let mut body = w[..m].to_vec();
    for j in 0..d {
        body[j] += w[m + j];
    }
    if l - 1 > d {
        for j in d..(l - 1).min(m + d) {
            body[j] += next[j - d];
        }
    }
    Ok((body, pn_residual))
}

/// PN path: subtraction + overlap-add, then the common transform/equalize.
pub fn tds_receive(
    rx: &[Cplx],
    rx_next_head: &[Cplx],
    csi: &ChannelStateInfo,
    pn: &PnHeader,
    ofdm: &OfdmTransform,
) -> Result<EqualizedBlock, ReceiverError> {
    let (body, pn_residual) = pn_subtract_and_ola(rx, rx_next_head, csi, pn)?;
    if body.len() != ofdm.size() {
        return Err(ReceiverError::BlockLength {
            got: body.len(),
            want: ofdm.size(),
        });
    }
    let freq = ofdm.demodulate(&body);
    let mut eq = zf_equalize(&freq, csi);
    eq.ibi_risk = pn.len() < csi.h.len();
    eq.pn_residual = pn_residual;
    Ok(eq)
}
