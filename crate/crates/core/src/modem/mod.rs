//! QAM mapping, the unitary multicarrier transform, guard insertion and
//! carrier framing for both transmit chains.

pub mod carriers;
pub mod framing;
pub mod ofdm;
pub mod pn;
pub mod qam;

use crate::Cplx;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModemError {
    #[error("bit count {0} is not a multiple of {1} bits/symbol")]
    BitCount(usize, usize),
    #[error("length mismatch: {what} has {got}, expected {want}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("noise variance must be positive, got {0}")]
    NoiseVariance(f64),
    #[error("guard length {d} out of range for block size {m}")]
    GuardLength { d: usize, m: usize },
    #[error("no PN header defined for length {0}")]
    PnLength(usize),
    #[error("malformed carrier-plan file: {0}")]
    PlanFile(String),
}

/// Which domain a block of samples lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Time,
    Frequency,
}

/// A fixed-length block of complex baseband samples with its domain and
/// position in the block stream.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBlock {
    pub domain: Domain,
    pub index: u64,
    pub samples: Vec<Cplx>,
}

impl IqBlock {
    pub fn time(index: u64, samples: Vec<Cplx>) -> Self {
        IqBlock {
            domain: Domain::Time,
            index,
            samples,
        }
    }

    pub fn freq(index: u64, samples: Vec<Cplx>) -> Self {
        IqBlock {
            domain: Domain::Frequency,
            index,
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}
