//! Shortened binary BCH (762,752), t = 1.
//!
//! Generator g(x) = x^10 + x^3 + 1, primitive over GF(2), so the mother
//! code is the (1023,1013) Hamming-distance-3 code. Shortening to 762
//! bits leaves 261 codeword positions that can never carry transmitted
//! bits; a syndrome pointing there is reported as a decode failure,
//! which gives the code a little detection capability beyond t = 1.

use super::FecError;

pub use crate::sysconfig::{BCH_K, BCH_N};

const PARITY: usize = 10;
/// g(x) bits, bit i = coefficient of x^i.
const GEN: u16 = (1 << 10) | (1 << 3) | 1;
const MOTHER_N: usize = 1023;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BchStatus {
    Clean,
    CorrectedOne,
    Failed,
}

/// Systematic encode: 752 message bits followed by 10 parity bits.
/// Bit i of the message is the coefficient of x^(761-i).
pub fn bch_encode(bits: &[u8]) -> Result<Vec<u8>, FecError> {
    if bits.len() != BCH_K {
        return Err(FecError::Length {
            what: "BCH message bits",
            got: bits.len(),
            want: BCH_K,
        });
    }
    let mut rem: u16 = 0;
    for &b in bits {
        let fb = ((rem >> (PARITY - 1)) & 1) ^ (b as u16 & 1);
        rem = (rem << 1) & 0x3FF;
        if fb != 0 {
            rem ^= GEN & 0x3FF;
        }
    }
    let mut out = Vec::with_capacity(BCH_N);
    out.extend_from_slice(bits);
    for i in (0..PARITY).rev() {
        out.push(((rem >> i) & 1) as u8);
    }
    Ok(out)
}

/// x^e mod g(x) for e in 0..1023, used to match a syndrome to an error
/// position. Built once; g primitive makes all 1023 values distinct.
fn syndrome_table() -> &'static [u16; MOTHER_N] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<[u16; MOTHER_N]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0u16; MOTHER_N];
        let mut v: u16 = 1;
        for e in 0..MOTHER_N {
            t[e] = v;
            v <<= 1;
            if v & (1 << PARITY) != 0 {
                v ^= GEN;
            }
        }
        t
    })
}

/// Decode one 762-bit word in place of a copy; returns the message bits
/// and what happened.
pub fn bch_decode(word: &[u8]) -> Result<(Vec<u8>, BchStatus), FecError> {
    if word.len() != BCH_N {
        return Err(FecError::Length {
            what: "BCH codeword bits",
            got: word.len(),
            want: BCH_N,
        });
    }
    // Syndrome = r(x) mod g(x); word bit i is the coefficient of x^(761-i).
    // (Plain polynomial reduction: the encoder's register computes
    // r(x)*x^10 mod g, which would shift every located position by 10.)
    let mut s: u16 = 0;
    for &b in word {
        s = (s << 1) ^ (b as u16 & 1);
        if s & (1 << PARITY) != 0 {
            s ^= GEN;
        }
    }
    if s == 0 {
        return Ok((word[..BCH_K].to_vec(), BchStatus::Clean));
    }
    let table = syndrome_table();
    let pos = table.iter().position(|&v| v == s);
    match pos {
        Some(e) if e < BCH_N => {
            let mut fixed = word.to_vec();
            fixed[BCH_N - 1 - e] ^= 1;
            Ok((fixed[..BCH_K].to_vec(), BchStatus::CorrectedOne))
        }
        _ => Ok((word[..BCH_K].to_vec(), BchStatus::Failed)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_bits(rng: &mut impl Rng) -> Vec<u8> {
        (0..BCH_K).map(|_| rng.gen_range(0..2u8)).collect()
    }

    #[test]
    fn clean_words_pass_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let msg = random_bits(&mut rng);
            let cw = bch_encode(&msg).unwrap();
            assert_eq!(cw.len(), BCH_N);
            let (dec, status) = bch_decode(&cw).unwrap();
            assert_eq!(status, BchStatus::Clean);
            assert_eq!(dec, msg);
        }
    }

    #[test]
    fn corrects_every_single_bit_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let msg = random_bits(&mut rng);
        let cw = bch_encode(&msg).unwrap();
        for p in 0..BCH_N {
            let mut bad = cw.clone();
            bad[p] ^= 1;
            let (dec, status) = bch_decode(&bad).unwrap();
            assert_eq!(status, BchStatus::CorrectedOne, "position {p}");
            assert_eq!(dec, msg);
        }
    }

    #[test]
    fn two_flips_never_return_the_original() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..1000 {
            let msg = random_bits(&mut rng);
            let cw = bch_encode(&msg).unwrap();
            let p1 = rng.gen_range(0..BCH_N);
            let mut p2 = rng.gen_range(0..BCH_N);
            while p2 == p1 {
                p2 = rng.gen_range(0..BCH_N);
            }
            let mut bad = cw.clone();
            bad[p1] ^= 1;
            bad[p2] ^= 1;
            let (dec, status) = bch_decode(&bad).unwrap();
            // A double error must never look like a clean word, and a
            // claimed single-bit fix must never reproduce the original
            // message (that would be a silently repaired double error).
            assert_ne!(status, BchStatus::Clean);
            if status == BchStatus::CorrectedOne {
                assert_ne!(dec, msg);
            }
        }
    }

    #[test]
    fn syndromes_are_distinct() {
        let t = super::syndrome_table();
        let mut seen = std::collections::HashSet::new();
        for &v in t.iter() {
            assert!(v != 0);
            assert!(seen.insert(v), "syndrome collision: generator not primitive");
        }
    }

    #[test]
    fn generator_divides_codewords() {
        // Encode, then long-divide the whole codeword by g(x): remainder 0.
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let cw = bch_encode(&random_bits(&mut rng)).unwrap();
        let mut s: u16 = 0;
        for &b in &cw {
            let fb = ((s >> (PARITY - 1)) & 1) ^ (b as u16 & 1);
            s = (s << 1) & 0x3FF;
            if fb != 0 {
                s ^= GEN & 0x3FF;
            }
        }
        assert_eq!(s, 0);
    }
}
