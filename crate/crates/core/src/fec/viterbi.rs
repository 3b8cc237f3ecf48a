//! Soft-decision Viterbi decoder for the punctured convolutional code.
//!
//! Branch metrics are LLR correlations (positive LLR favours bit 0), so
//! the survivor with the highest path metric is the maximum-likelihood
//! message for Gaussian channels. Depunctured positions contribute zero
//! and act as erasures. The trellis starts and ends in state zero.

use super::conv::{depuncture, mother_outputs, next_state, FLUSH_BITS};
use super::FecError;
use crate::sysconfig::ConvRate;

const STATES: usize = 64;

/// Decode a punctured LLR stream into `n_payload_bits` message bits.
pub fn viterbi_decode(
    llrs: &[f64],
    rate: ConvRate,
    n_payload_bits: usize,
) -> Result<Vec<u8>, FecError> {
    let total = n_payload_bits + FLUSH_BITS;
    let full = depuncture(llrs, rate, total)?;

    // Forward pass. Unreachable states carry -inf until populated.
    // A destination state encodes the six most recent inputs, so the
    // input bit of a branch is the destination's top bit; what the
    // traceback needs recorded is the survivor's shifted-out oldest bit.
    let mut metric = vec![f64::NEG_INFINITY; STATES];
    metric[0] = 0.0;
    let mut decisions = vec![0u64; total]; // bit s: oldest bit of survivor into s
    let mut next = vec![f64::NEG_INFINITY; STATES];
    for step in 0..total {
        let lx = full[2 * step];
        let ly = full[2 * step + 1];
        next.iter_mut().for_each(|m| *m = f64::NEG_INFINITY);
        let mut dec = 0u64;
        for s in 0..STATES as u8 {
            let m = metric[s as usize];
            if m == f64::NEG_INFINITY {
                continue;
            }
            for input in 0..2u8 {
                let (x, y) = mother_outputs(s, input);
                let gain = (if x == 0 { lx } else { -lx }) + (if y == 0 { ly } else { -ly });
                let ns = next_state(s, input) as usize;
                let cand = m + gain;
                if cand > next[ns] {
                    next[ns] = cand;
                    if s & 1 == 1 {
                        dec |= 1 << ns;
                    } else {
                        dec &= !(1 << ns);
                    }
                }
            }
        }
        decisions[step] = dec;
        std::mem::swap(&mut metric, &mut next);
    }
    if metric[0] == f64::NEG_INFINITY {
        return Err(FecError::DecodeFailure("terminated state unreachable"));
    }

    // Traceback from the zero state (trellis is terminated). The input
    // at each step is the post-step state's top bit; the predecessor is
    // the state shifted back with the recorded oldest bit restored.
    let mut bits = vec![0u8; total];
    let mut state = 0u8;
    for step in (0..total).rev() {
        bits[step] = state >> 5;
        let oldest = ((decisions[step] >> state) & 1) as u8;
        state = ((state << 1) & 0x3F) | oldest;
    }
    bits.truncate(n_payload_bits);
    Ok(bits)
}
