//! Baseband simulation of two terrestrial digital-TV physical layers.
//!
//! The library models the full chain — outer/inner channel coding,
//! interleaving, QAM mapping, multicarrier modulation with either a cyclic
//! prefix (DVB-T style) or a PN-sequence guard interval (DTMB style),
//! multipath channels, and the matching receivers — precisely enough to
//! compare the two guard-interval strategies in overhead, net bitrate and
//! bit-error-rate terms.
//!
//! Everything is deterministic given a seed: the same configuration and seed
//! produce the same waveform, the same noise, and the same BER counts
//! regardless of worker count.

pub mod channel;
pub mod fec;
pub mod harness;
pub mod modem;
pub mod receiver;
pub mod sysconfig;
pub mod verify;

/// Complex baseband sample type used throughout.
pub type Cplx = num_complex::Complex64;
