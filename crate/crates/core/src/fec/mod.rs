//! Channel coding for both chains.
//!
//! The CP-OFDM chain uses the classic concatenation: byte-oriented
//! Reed-Solomon outer code, convolutional byte interleaver, punctured
//! rate-1/2 convolutional inner code with soft Viterbi decoding, and
//! per-block bit/symbol interleaving. The PN-guarded chain pairs a
//! single-error-correcting BCH outer code with quasi-cyclic LDPC inner
//! codes, a deep convolutional time interleaver on constellation symbols,
//! and a pseudo-random frequency interleaver.

pub mod bch;
pub mod conv;
pub mod gf256;
pub mod interleave;
pub mod ldpc;
pub mod rs;
pub mod viterbi;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FecError {
    #[error("{what}: got {got}, expected {want}")]
    Length {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("input length {len} (plus {flush} flush bits) does not align to the {period}-bit puncture period")]
    PunctureAlignment {
        len: usize,
        flush: usize,
        period: usize,
    },
    #[error("decode failure: {0}")]
    DecodeFailure(&'static str),
    #[error("malformed matrix file: {0}")]
    MatrixFile(String),
    #[error("malformed permutation file: {0}")]
    PermutationFile(String),
}
