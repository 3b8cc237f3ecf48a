//! Gray-labeled square constellations, normalized to unit average energy.
//!
//! Bit order within a symbol is all I-axis bits followed by all Q-axis bits,
//! most significant first on each axis. Soft output is max-log per bit; on a
//! square Gray constellation each bit depends on one axis only, so the
//! per-axis minimization equals the full two-dimensional search exactly.

use super::ModemError;
use crate::sysconfig::Constellation;
use crate::Cplx;

/// Axis level lookup, indexed by the raw (non-Gray-decoded) axis bits.
/// Orderings are binary-reflected Gray: walking the levels from +max to −max
/// flips one bit at a time.
const AXIS_2: [f64; 2] = [1.0, -1.0];
const AXIS_4: [f64; 4] = [3.0, 1.0, -3.0, -1.0];
const AXIS_8: [f64; 8] = [7.0, 5.0, 1.0, 3.0, -7.0, -5.0, -1.0, -3.0];

fn axis_levels(c: Constellation) -> &'static [f64] {
    match c {
        Constellation::Qpsk => &AXIS_2,
        Constellation::Qam16 => &AXIS_4,
        Constellation::Qam64 => &AXIS_8,
    }
}

/// 1/√2, 1/√10, 1/√42: the usual unit-average-energy normalizers.
pub fn amplitude_scale(c: Constellation) -> f64 {
    let levels = axis_levels(c);
    let mean_sq: f64 = levels.iter().map(|l| l * l).sum::<f64>() / levels.len() as f64;
    1.0 / (2.0 * mean_sq).sqrt()
}

fn bits_per_axis(c: Constellation) -> usize {
    c.bits_per_symbol() / 2
}

fn axis_value(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

/// Map 0/1 bits onto constellation symbols.
pub fn qam_map(bits: &[u8], c: Constellation) -> Result<Vec<Cplx>, ModemError> {
    let bps = c.bits_per_symbol();
    if bits.len() % bps != 0 {
        return Err(ModemError::BitCount(bits.len(), bps));
    }
    let levels = axis_levels(c);
    let scale = amplitude_scale(c);
    let half = bits_per_axis(c);
    let out = bits
        .chunks_exact(bps)
        .map(|chunk| {
            let i = levels[axis_value(&chunk[..half])];
            let q = levels[axis_value(&chunk[half..])];
            Cplx::new(i * scale, q * scale)
        })
        .collect();
    Ok(out)
}

fn nearest_level(y: f64, levels: &[f64], scale: f64) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (idx, &l) in levels.iter().enumerate() {
        let d = (y - l * scale).powi(2);
        if d < best_d {
            best_d = d;
            best = idx;
        }
    }
    best
}

fn push_axis_bits(out: &mut Vec<u8>, idx: usize, nbits: usize) {
    for k in (0..nbits).rev() {
        out.push(((idx >> k) & 1) as u8);
    }
}

/// Nearest-point hard decision; exact inverse of `qam_map` on clean symbols.
pub fn qam_demap_hard(symbols: &[Cplx], c: Constellation) -> Vec<u8> {
    let levels = axis_levels(c);
    let scale = amplitude_scale(c);
    let half = bits_per_axis(c);
    let mut out = Vec::with_capacity(symbols.len() * c.bits_per_symbol());
    for s in symbols {
        let i_idx = nearest_level(s.re, levels, scale);
        let q_idx = nearest_level(s.im, levels, scale);
        push_axis_bits(&mut out, i_idx, half);
        push_axis_bits(&mut out, q_idx, half);
    }
    out
}

/// Max-log LLRs for one axis coordinate, appended to `out`.
///
/// Positive LLR means "bit 0 more likely". `weight` carries the per-carrier
/// reliability |H|²/σ², which undoes the noise enhancement a zero-forcing
/// equalizer left in `y`.
fn axis_llrs(y: f64, weight: f64, levels: &[f64], scale: f64, nbits: usize, out: &mut Vec<f64>) {
    for bit in 0..nbits {
        let shift = nbits - 1 - bit;
        let mut min0 = f64::INFINITY;
        let mut min1 = f64::INFINITY;
        for (idx, &l) in levels.iter().enumerate() {
            let d = (y - l * scale).powi(2);
            if (idx >> shift) & 1 == 0 {
                min0 = min0.min(d);
            } else {
                min1 = min1.min(d);
            }
        }
        out.push(weight * (min1 - min0));
    }
}

/// Per-bit max-log LLRs from equalized symbols.
///
/// `gains` are the raw channel gains of the carriers the symbols came from;
/// a zero gain (erased carrier) produces zero LLRs for that symbol.
pub fn qam_demap_soft(
    eq_symbols: &[Cplx],
    gains: &[Cplx],
    noise_var: f64,
    c: Constellation,
) -> Result<Vec<f64>, ModemError> {
    if !(noise_var > 0.0) {
        return Err(ModemError::NoiseVariance(noise_var));
    }
    if eq_symbols.len() != gains.len() {
        return Err(ModemError::LengthMismatch {
            what: "channel gains",
            got: gains.len(),
            want: eq_symbols.len(),
        });
    }
    let levels = axis_levels(c);
    let scale = amplitude_scale(c);
    let half = bits_per_axis(c);
    let mut out = Vec::with_capacity(eq_symbols.len() * c.bits_per_symbol());
    for (s, g) in eq_symbols.iter().zip(gains) {
        let w = g.norm_sqr() / noise_var;
        axis_llrs(s.re, w, levels, scale, half, &mut out);
        axis_llrs(s.im, w, levels, scale, half, &mut out);
    }
    Ok(out)
}

/// All constellation points with their bit labels, in label order.
/// Used by oracle tests and kept here so the labeling stays in one place.
pub fn enumerate_points(c: Constellation) -> Vec<(Vec<u8>, Cplx)> {
    let bps = c.bits_per_symbol();
    (0..1usize << bps)
        .map(|v| {
            let bits: Vec<u8> = (0..bps).rev().map(|k| ((v >> k) & 1) as u8).collect();
            let sym = qam_map(&bits, c).unwrap()[0];
            (bits, sym)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const ALL: [Constellation; 3] = [
        Constellation::Qpsk,
        Constellation::Qam16,
        Constellation::Qam64,
    ];

    #[test]
    fn unit_average_energy() {
        for c in ALL {
            let mean: f64 = enumerate_points(c)
                .iter()
                .map(|(_, s)| s.norm_sqr())
                .sum::<f64>()
                / (1 << c.bits_per_symbol()) as f64;
            assert!((mean - 1.0).abs() < 1e-12, "{c:?}: {mean}");
        }
    }

    #[test]
    fn gray_labels_differ_by_one_bit_between_neighbors() {
        // Sort points on each axis; adjacent levels must differ in exactly
        // one bit of the corresponding axis label.
        for c in [Constellation::Qam16, Constellation::Qam64] {
            let levels = axis_levels(c);
            let mut order: Vec<usize> = (0..levels.len()).collect();
            order.sort_by(|&a, &b| levels[a].partial_cmp(&levels[b]).unwrap());
            for pair in order.windows(2) {
                let diff = (pair[0] ^ pair[1]).count_ones();
                assert_eq!(diff, 1, "{c:?}: labels {pair:?}");
            }
        }
    }

    #[test]
    fn map_demap_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9a_1);
        for c in ALL {
            let bits: Vec<u8> = (0..100_000 - 100_000 % c.bits_per_symbol())
                .map(|_| rng.gen_range(0..2u8))
                .collect();
            let syms = qam_map(&bits, c).unwrap();
            assert_eq!(qam_demap_hard(&syms, c), bits, "{c:?}");
        }
    }

    #[test]
    fn soft_sign_matches_hard_decision_on_clean_symbols() {
        let gains = vec![Cplx::new(1.0, 0.0)];
        for c in ALL {
            for (bits, sym) in enumerate_points(c) {
                let llrs = qam_demap_soft(&[sym], &gains, 0.5, c).unwrap();
                for (b, l) in bits.iter().zip(&llrs) {
                    let hard = if *l > 0.0 { 0u8 } else { 1u8 };
                    assert_eq!(hard, *b, "{c:?} bits {bits:?} llrs {llrs:?}");
                }
            }
        }
    }

    #[test]
    fn qpsk_first_quadrant_gives_positive_llrs() {
        let s = Cplx::new(1.0, 1.0) / 2f64.sqrt();
        let llrs = qam_demap_soft(&[s], &[Cplx::new(1.0, 0.0)], 1.0, Constellation::Qpsk).unwrap();
        assert!(llrs.iter().all(|&l| l > 0.0), "{llrs:?}");
    }

    #[test]
    fn llr_scales_inversely_with_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9a_2);
        let y = vec![Cplx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)];
        let g = vec![Cplx::new(0.8, -0.3)];
        let a = qam_demap_soft(&y, &g, 1.0, Constellation::Qam16).unwrap();
        let b = qam_demap_soft(&y, &g, 0.5, Constellation::Qam16).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_gain_erases_llrs() {
        let y = vec![Cplx::new(0.3, -1.2)];
        let llrs =
            qam_demap_soft(&y, &[Cplx::new(0.0, 0.0)], 1.0, Constellation::Qam64).unwrap();
        assert!(llrs.iter().all(|&l| l == 0.0));
    }

    /// Brute-force max-log over the full constellation; per-axis output must
    /// match it exactly (square Gray constellations decompose).
    fn full_search_llrs(y: Cplx, w: f64, c: Constellation) -> Vec<f64> {
        let points = enumerate_points(c);
        let bps = c.bits_per_symbol();
        (0..bps)
            .map(|i| {
                let mut min0 = f64::INFINITY;
                let mut min1 = f64::INFINITY;
                for (bits, s) in &points {
                    let d = (y - s).norm_sqr();
                    if bits[i] == 0 {
                        min0 = min0.min(d);
                    } else {
                        min1 = min1.min(d);
                    }
                }
                w * (min1 - min0)
            })
            .collect()
    }

    #[test]
    fn soft_demap_matches_full_search_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9a_3);
        for c in ALL {
            for _ in 0..10_000 {
                let y = Cplx::new(rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0);
                let g = Cplx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                let nv = 0.1 + rng.gen::<f64>();
                let got = qam_demap_soft(&[y], &[g], nv, c).unwrap();
                let want = full_search_llrs(y, g.norm_sqr() / nv, c);
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).abs() < 1e-9, "{c:?} y={y} got {got:?} want {want:?}");
                }
            }
        }
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            qam_map(&[0, 1, 0], Constellation::Qam16),
            Err(ModemError::BitCount(3, 4))
        ));
        let y = vec![Cplx::new(0.0, 0.0)];
        assert!(qam_demap_soft(&y, &[], 1.0, Constellation::Qpsk).is_err());
        assert!(matches!(
            qam_demap_soft(&y, &y.clone(), 0.0, Constellation::Qpsk),
            Err(ModemError::NoiseVariance(_))
        ));
    }
}
