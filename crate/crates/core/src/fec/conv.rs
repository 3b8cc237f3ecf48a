//! Rate-1/2 convolutional mother code (171,133 octal, K = 7) with the
//! standard DVB puncturing ladder to rates 2/3, 3/4, 5/6 and 7/8.
//!
//! The encoder starts from the all-zero state and appends six zero flush
//! bits so the trellis ends in state zero; the flush bits pass through
//! the same puncturing as payload. Punctured streams carry X/Y outputs
//! serialized X-first within each pattern column.

use super::FecError;
use crate::sysconfig::ConvRate;

pub const CONSTRAINT: usize = 7;
pub const FLUSH_BITS: usize = CONSTRAINT - 1;
/// Generator taps, bit 6 = current input (171 octal and 133 octal).
pub const G1: u8 = 0o171;
pub const G2: u8 = 0o133;

/// Puncture masks per rate: (input period, keep-X per column, keep-Y per column).
pub fn puncture_pattern(rate: ConvRate) -> (usize, &'static [bool], &'static [bool]) {
    match rate {
        ConvRate::R1_2 => (1, &[true], &[true]),
        ConvRate::R2_3 => (2, &[true, false], &[true, true]),
        ConvRate::R3_4 => (3, &[true, false, true], &[true, true, false]),
        ConvRate::R5_6 => (
            5,
            &[true, false, true, false, true],
            &[true, true, false, true, false],
        ),
        ConvRate::R7_8 => (
            7,
            &[true, false, false, false, true, false, true],
            &[true, true, true, true, false, true, false],
        ),
    }
}

/// Mother-code output pair for one input bit given the 6-bit state
/// (most recent previous bit in the high position).
#[inline]
pub fn mother_outputs(state: u8, input: u8) -> (u8, u8) {
    let reg = (input << 6) | state;
    let x = (reg & G1).count_ones() as u8 & 1;
    let y = (reg & G2).count_ones() as u8 & 1;
    (x, y)
}

#[inline]
pub fn next_state(state: u8, input: u8) -> u8 {
    (state >> 1) | (input << 5)
}

/// Encode `bits` (values 0/1), terminate with zero flush bits, puncture.
/// The padded length must be a whole number of puncture periods.
pub fn conv_encode(bits: &[u8], rate: ConvRate) -> Result<Vec<u8>, FecError> {
    let (period, keep_x, keep_y) = puncture_pattern(rate);
    let total = bits.len() + FLUSH_BITS;
    if total % period != 0 {
        return Err(FecError::PunctureAlignment {
            len: bits.len(),
            flush: FLUSH_BITS,
            period,
        });
    }
    let mut out = Vec::with_capacity(total * 2);
    let mut state = 0u8;
    let mut col = 0usize;
    for i in 0..total {
        let b = if i < bits.len() { bits[i] & 1 } else { 0 };
        let (x, y) = mother_outputs(state, b);
        state = next_state(state, b);
        if keep_x[col] {
            out.push(x);
        }
        if keep_y[col] {
            out.push(y);
        }
        col = (col + 1) % period;
    }
    Ok(out)
}

/// Number of punctured bits produced per `period` input bits.
pub fn coded_bits_per_period(rate: ConvRate) -> usize {
    let (_, kx, ky) = puncture_pattern(rate);
    kx.iter().filter(|&&k| k).count() + ky.iter().filter(|&&k| k).count()
}

/// Expand a punctured LLR stream back to the mother-code lattice:
/// two LLRs per trellis step, zeros where the puncturer dropped a bit.
/// `n_input_bits` counts payload plus flush bits.
pub fn depuncture(llrs: &[f64], rate: ConvRate, n_input_bits: usize) -> Result<Vec<f64>, FecError> {
    let (period, keep_x, keep_y) = puncture_pattern(rate);
    if n_input_bits % period != 0 {
        return Err(FecError::PunctureAlignment {
            len: n_input_bits,
            flush: 0,
            period,
        });
    }
    let expect = n_input_bits / period * coded_bits_per_period(rate);
    if llrs.len() != expect {
        return Err(FecError::Length {
            what: "punctured LLR stream",
            got: llrs.len(),
            want: expect,
        });
    }
    let mut out = Vec::with_capacity(n_input_bits * 2);
    let mut it = llrs.iter();
    let mut col = 0usize;
    for _ in 0..n_input_bits {
        out.push(if keep_x[col] { *it.next().unwrap() } else { 0.0 });
        out.push(if keep_y[col] { *it.next().unwrap() } else { 0.0 });
        col = (col + 1) % period;
    }
    Ok(out)
}
