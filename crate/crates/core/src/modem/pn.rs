//! Maximal-length sequences and the PN guard headers built from them.
//!
//! The two guard lengths come from m-sequences cyclically extended to the
//! frame-header size: 420 samples from the 255-chip degree-8 sequence,
//! 945 from the 511-chip degree-9 sequence. Chips are mapped to ±√2 so the
//! guard carries twice the power of a unit-energy data sample.

use super::ModemError;
use crate::Cplx;

/// Guard lengths paired with the 1/9 and 1/4 guard fractions of the
/// 3780-carrier block.
pub const PN_SHORT: usize = 420;
pub const PN_LONG: usize = 945;

/// Amplitude of each chip; |chip|² = 2.
pub const PN_CHIP_AMPLITUDE: f64 = std::f64::consts::SQRT_2;

/// A PN guard: ±√2 chips plus the underlying period for correlation work.
#[derive(Debug, Clone, PartialEq)]
pub struct PnHeader {
    pub chips: Vec<Cplx>,
    /// Period of the underlying m-sequence (255 or 511).
    pub period: usize,
}

impl PnHeader {
    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }
}

/// Maximal-length LFSR sequence of period 2^degree − 1.
///
/// `mid_taps` are the exponents of the feedback polynomial between the
/// constant term and x^degree, so the sequence obeys
/// a[n] = a[n−degree] ⊕ (⊕_e a[n−degree+e]). The register starts all-ones.
pub fn m_sequence(degree: usize, mid_taps: &[usize]) -> Vec<u8> {
    assert!(degree >= 2 && degree < 32);
    let period = (1usize << degree) - 1;
    let mut seq = vec![1u8; degree];
    for n in degree..period {
        let mut bit = seq[n - degree];
        for &e in mid_taps {
            debug_assert!(e > 0 && e < degree);
            bit ^= seq[n - degree + e];
        }
        seq.push(bit);
    }
    seq
}

/// Degree-8 generator x⁸+x⁴+x³+x²+1 (same primitive polynomial the byte
/// field of the outer code is built on).
pub fn m_sequence_deg8() -> Vec<u8> {
    m_sequence(8, &[2, 3, 4])
}

/// Degree-9 generator x⁹+x⁵+1.
pub fn m_sequence_deg9() -> Vec<u8> {
    m_sequence(9, &[5])
}

/// Degree-11 generator x¹¹+x²+1, used for per-carrier reference signs.
pub fn m_sequence_deg11() -> Vec<u8> {
    m_sequence(11, &[2])
}

/// Build the guard header for one of the two supported lengths.
pub fn pn_generate(length: usize) -> Result<PnHeader, ModemError> {
    let seq = match length {
        PN_SHORT => m_sequence_deg8(),
        PN_LONG => m_sequence_deg9(),
        other => return Err(ModemError::PnLength(other)),
    };
    let period = seq.len();
    let chips = (0..length)
        .map(|i| {
            let bit = seq[i % period];
            Cplx::new((1.0 - 2.0 * bit as f64) * PN_CHIP_AMPLITUDE, 0.0)
        })
        .collect();
    Ok(PnHeader { chips, period })
}
