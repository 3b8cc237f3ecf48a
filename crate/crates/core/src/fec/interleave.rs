//! Interleavers for both chains.
//!
//! Forney convolutional interleaving is generic over the element type:
//! the DVB-T outer interleaver runs it on bytes (12 branches, 17-byte
//! cells), the DTMB time interleaver on constellation symbols (52
//! branches, 240-symbol cells). Block interleavers are frozen seeded
//! permutations shipped as data files (one 0-based decimal index per
//! line) and regenerated bit-identically from the documented seeds.

use std::collections::VecDeque;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::FecError;
use crate::sysconfig::Constellation;

pub const DVBT_OUTER_BRANCHES: usize = 12;
pub const DVBT_OUTER_DEPTH: usize = 17;
pub const DTMB_TIME_BRANCHES: usize = 52;
pub const DTMB_TIME_DEPTH: usize = 240;

/// Seed for the per-block bit and symbol permutations of the CP chain.
pub const INNER_PERM_SEED: u64 = 411;
/// Seed for the PN chain's frequency-domain permutation.
pub const FREQ_PERM_SEED: u64 = 3744;
/// Number of data symbols covered by the frequency interleaver.
pub const FREQ_PERM_LEN: usize = 3744;

// ---------------------------------------------------------------------
// Forney convolutional interleaver
// ---------------------------------------------------------------------

/// One direction of a Forney convolutional interleaver. Branch `j` of
/// the interleaver delays by `j*depth` elements; the deinterleaver
/// mirrors that with `(branches-1-j)*depth`, so a matched pair is the
/// identity after `branches * depth * (branches-1)` elements of latency.
pub struct ForneyInterleaver<T> {
    lines: Vec<VecDeque<T>>,
    branch: usize,
}

impl<T: Clone + Default> ForneyInterleaver<T> {
    pub fn interleaver(branches: usize, depth: usize) -> Result<Self, FecError> {
        Self::with_delays(branches, depth, false)
    }

    pub fn deinterleaver(branches: usize, depth: usize) -> Result<Self, FecError> {
        Self::with_delays(branches, depth, true)
    }

    fn with_delays(branches: usize, depth: usize, mirrored: bool) -> Result<Self, FecError> {
        if branches == 0 {
            return Err(FecError::Length {
                what: "interleaver branches",
                got: 0,
                want: 1,
            });
        }
        let lines = (0..branches)
            .map(|j| {
                let cells = if mirrored { branches - 1 - j } else { j };
                VecDeque::from(vec![T::default(); cells * depth])
            })
            .collect();
        Ok(Self { lines, branch: 0 })
    }

    /// Push one element through the current branch's delay line.
    pub fn push(&mut self, item: T) -> T {
        let n = self.lines.len();
        let line = &mut self.lines[self.branch];
        self.branch = (self.branch + 1) % n;
        if line.is_empty() {
            return item;
        }
        line.push_back(item);
        line.pop_front().expect("non-empty delay line")
    }

    pub fn process(&mut self, stream: &[T]) -> Vec<T> {
        stream.iter().map(|x| self.push(x.clone())).collect()
    }

    /// Push defaults to drain `n` more elements out of the delay lines.
    pub fn flush(&mut self, n: usize) -> Vec<T> {
        (0..n).map(|_| self.push(T::default())).collect()
    }

    /// End-to-end latency of a matched interleaver/deinterleaver pair,
    /// in elements.
    pub fn pair_latency(branches: usize, depth: usize) -> usize {
        branches * depth * branches.saturating_sub(1)
    }
}

pub fn forney_interleave<T: Clone + Default>(
    stream: &[T],
    branches: usize,
    depth: usize,
) -> Result<Vec<T>, FecError> {
    Ok(ForneyInterleaver::interleaver(branches, depth)?.process(stream))
}

pub fn forney_deinterleave<T: Clone + Default>(
    stream: &[T],
    branches: usize,
    depth: usize,
) -> Result<Vec<T>, FecError> {
    Ok(ForneyInterleaver::deinterleaver(branches, depth)?.process(stream))
}

// ---------------------------------------------------------------------
// Seeded permutations and their file format
// ---------------------------------------------------------------------

fn seeded_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut p: Vec<u32> = (0..n as u32).collect();
    p.shuffle(rng);
    p
}

/// Render a permutation table: one 0-based decimal index per line.
pub fn permutation_to_text(perm: &[u32]) -> String {
    let mut s = String::with_capacity(perm.len() * 5);
    for &v in perm {
        s.push_str(&v.to_string());
        s.push('\n');
    }
    s
}

/// Parse and validate a permutation table of the expected length.
pub fn permutation_from_text(text: &str, expect_len: usize) -> Result<Vec<u32>, FecError> {
    let mut perm = Vec::with_capacity(expect_len);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: u32 = line
            .parse()
            .map_err(|_| FecError::PermutationFile(format!("line {}: {:?}", lineno + 1, line)))?;
        perm.push(v);
    }
    if perm.len() != expect_len {
        return Err(FecError::PermutationFile(format!(
            "expected {} entries, found {}",
            expect_len,
            perm.len()
        )));
    }
    let mut seen = vec![false; expect_len];
    for &v in &perm {
        let i = v as usize;
        if i >= expect_len || seen[i] {
            return Err(FecError::PermutationFile(format!(
                "not a bijection at value {v}"
            )));
        }
        seen[i] = true;
    }
    Ok(perm)
}

/// The six per-bit-stream permutations and the symbol permutation for
/// one OFDM block of `n_data` carriers, from the documented seed.
pub fn inner_permutations(n_data: usize) -> (Vec<Vec<u32>>, Vec<u32>) {
    let mut bit_perms = Vec::with_capacity(6);
    for j in 0..6 {
        let mut rng = ChaCha8Rng::seed_from_u64(INNER_PERM_SEED);
        rng.set_stream(1 + j as u64);
        bit_perms.push(seeded_permutation(n_data, &mut rng));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(INNER_PERM_SEED);
    rng.set_stream(0);
    (bit_perms, seeded_permutation(n_data, &mut rng))
}

/// The frequency-domain permutation of the PN chain.
pub fn freq_permutation() -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(FREQ_PERM_SEED);
    seeded_permutation(FREQ_PERM_LEN, &mut rng)
}

// ---------------------------------------------------------------------
// Inner (bit + symbol) block interleaver of the CP chain
// ---------------------------------------------------------------------

/// Per-OFDM-block interleaver: a per-bit-stream permutation followed by
/// a symbol-position permutation, precomposed into one bit-level map.
pub struct InnerInterleaver {
    n_data: usize,
    bps: usize,
    /// source[q] = input bit index feeding output bit q.
    source: Vec<u32>,
}

impl InnerInterleaver {
    pub fn new(n_data: usize, constellation: Constellation) -> Self {
        let (bit_perms, sym_perm) = inner_permutations(n_data);
        Self::from_permutations(n_data, constellation, &bit_perms, &sym_perm)
            .expect("generated permutations are consistent")
    }

    /// Build from explicit tables (e.g. loaded from replacement files).
    pub fn from_permutations(
        n_data: usize,
        constellation: Constellation,
        bit_perms: &[Vec<u32>],
        sym_perm: &[u32],
    ) -> Result<Self, FecError> {
        let bps = constellation.bits_per_symbol();
        if bit_perms.len() < bps {
            return Err(FecError::Length {
                what: "bit-stream permutations",
                got: bit_perms.len(),
                want: bps,
            });
        }
        for p in &bit_perms[..bps] {
            if p.len() != n_data {
                return Err(FecError::Length {
                    what: "bit permutation entries",
                    got: p.len(),
                    want: n_data,
                });
            }
        }
        if sym_perm.len() != n_data {
            return Err(FecError::Length {
                what: "symbol permutation entries",
                got: sym_perm.len(),
                want: n_data,
            });
        }
        let mut source = vec![0u32; n_data * bps];
        for c in 0..n_data {
            let s = sym_perm[c] as usize;
            for j in 0..bps {
                source[c * bps + j] = bit_perms[j][s] * bps as u32 + j as u32;
            }
        }
        Ok(Self { n_data, bps, source })
    }

    pub fn block_bits(&self) -> usize {
        self.n_data * self.bps
    }

    pub fn interleave<T: Copy>(&self, bits: &[T]) -> Result<Vec<T>, FecError> {
        if bits.len() != self.source.len() {
            return Err(FecError::Length {
                what: "inner interleaver block bits",
                got: bits.len(),
                want: self.source.len(),
            });
        }
        Ok(self.source.iter().map(|&s| bits[s as usize]).collect())
    }

    pub fn deinterleave<T: Copy + Default>(&self, bits: &[T]) -> Result<Vec<T>, FecError> {
        if bits.len() != self.source.len() {
            return Err(FecError::Length {
                what: "inner interleaver block bits",
                got: bits.len(),
                want: self.source.len(),
            });
        }
        let mut out = vec![T::default(); bits.len()];
        for (q, &s) in self.source.iter().enumerate() {
            out[s as usize] = bits[q];
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------
// Frequency interleaver of the PN chain
// ---------------------------------------------------------------------

/// Pseudo-random bijection on the data symbols of one PN-chain block.
pub struct FreqInterleaver {
    perm: Vec<u32>,
}

impl FreqInterleaver {
    pub fn new() -> Self {
        Self { perm: freq_permutation() }
    }

    pub fn from_permutation(perm: Vec<u32>) -> Result<Self, FecError> {
        permutation_from_text(&permutation_to_text(&perm), perm.len())?;
        Ok(Self { perm })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Input position i is carried on data slot perm[i].
    pub fn interleave<T: Copy + Default>(&self, symbols: &[T]) -> Result<Vec<T>, FecError> {
        if symbols.len() != self.perm.len() {
            return Err(FecError::Length {
                what: "frequency interleaver block",
                got: symbols.len(),
                want: self.perm.len(),
            });
        }
        let mut out = vec![T::default(); symbols.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p as usize] = symbols[i];
        }
        Ok(out)
    }

    pub fn deinterleave<T: Copy + Default>(&self, symbols: &[T]) -> Result<Vec<T>, FecError> {
        if symbols.len() != self.perm.len() {
            return Err(FecError::Length {
                what: "frequency interleaver block",
                got: symbols.len(),
                want: self.perm.len(),
            });
        }
        Ok(self.perm.iter().map(|&p| symbols[p as usize]).collect())
    }
}

impl Default for FreqInterleaver {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::path::{Path, PathBuf};

    fn perm_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("data/perm")
    }

    #[test]
    fn single_branch_is_identity() {
        let data: Vec<u8> = (0..100).collect();
        assert_eq!(forney_interleave(&data, 1, 17).unwrap(), data);
        assert_eq!(forney_deinterleave(&data, 1, 17).unwrap(), data);
    }

    #[test]
    fn zero_branches_rejected() {
        assert!(forney_interleave(&[0u8; 4], 0, 1).is_err());
    }

    #[test]
    fn outer_pair_identity_after_documented_latency() {
        let latency = ForneyInterleaver::<u8>::pair_latency(12, 17);
        assert_eq!(latency, 2244);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let data: Vec<u8> = (0..6000).map(|_| rng.gen()).collect();
        let mid = forney_interleave(&data, 12, 17).unwrap();
        let out = forney_deinterleave(&mid, 12, 17).unwrap();
        assert_eq!(&out[latency..], &data[..data.len() - latency]);
    }

    #[test]
    fn time_interleaver_pair_identity() {
        use crate::Cplx;
        let latency = ForneyInterleaver::<Cplx>::pair_latency(52, 240);
        assert_eq!(latency, 636_480);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = latency + 10_000;
        let data: Vec<Cplx> = (0..n).map(|_| Cplx::new(rng.gen(), rng.gen())).collect();
        let mut il = ForneyInterleaver::interleaver(52, 240).unwrap();
        let mut dl = ForneyInterleaver::deinterleaver(52, 240).unwrap();
        let out = dl.process(&il.process(&data));
        assert_eq!(&out[latency..], &data[..n - latency]);
    }

    #[test]
    fn multiset_preserved_after_flush() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let data: Vec<u8> = (0..5000).map(|_| rng.gen_range(1..=255)).collect();
        let mut il = ForneyInterleaver::interleaver(12, 17).unwrap();
        let mut out = il.process(&data);
        out.extend(il.flush(ForneyInterleaver::<u8>::pair_latency(12, 17)));
        let mut hist_in = [0usize; 256];
        let mut hist_out = [0usize; 256];
        for &b in &data {
            hist_in[b as usize] += 1;
        }
        for &b in &out {
            hist_out[b as usize] += 1;
        }
        // All payload bytes come out; the remainder are flush zeros.
        assert_eq!(&hist_in[1..], &hist_out[1..]);
        assert_eq!(hist_out[0], out.len() - data.len());
    }

    #[test]
    fn erasure_burst_spreads_across_branches() {
        // Mark a 204-item burst in the deinterleaver input and track the
        // erasure runs seen by each branch in routing order.
        let b = 12;
        let depth = 17;
        let total = 10_000;
        let start = 3000;
        let erased: Vec<bool> = (0..total).map(|i| i >= start && i < start + b * depth).collect();
        let mut dl = ForneyInterleaver::<bool>::deinterleaver(b, depth).unwrap();
        let out = dl.process(&erased);
        for branch in 0..b {
            let mut run = 0usize;
            let mut max_run = 0usize;
            for (i, &e) in out.iter().enumerate() {
                if i % b != branch {
                    continue;
                }
                run = if e { run + 1 } else { 0 };
                max_run = max_run.max(run);
            }
            assert!(max_run <= depth, "branch {branch} run {max_run}");
        }
    }

    #[test]
    fn inner_roundtrip_and_bijection() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for n in [1512usize, 6048] {
            for c in [Constellation::Qpsk, Constellation::Qam16, Constellation::Qam64] {
                let il = InnerInterleaver::new(n, c);
                let bits: Vec<u8> = (0..il.block_bits()).map(|_| rng.gen_range(0..2)).collect();
                let fwd = il.interleave(&bits).unwrap();
                assert_eq!(il.deinterleave::<u8>(&fwd).unwrap(), bits);
                // Bijection: the source map covers every input exactly once.
                let mut seen = vec![false; il.block_bits()];
                for &s in &il.source {
                    assert!(!seen[s as usize]);
                    seen[s as usize] = true;
                }
            }
        }
    }

    #[test]
    fn inner_rejects_wrong_length() {
        let il = InnerInterleaver::new(1512, Constellation::Qpsk);
        assert!(il.interleave(&vec![0u8; 100]).is_err());
    }

    /// A contiguous burst of corrupted carriers must shatter into short
    /// runs of pre-interleave bit positions, for every burst start.
    #[test]
    fn carrier_burst_shatters_to_short_bit_runs() {
        for n in [1512usize, 6048] {
            for c in [Constellation::Qpsk, Constellation::Qam16, Constellation::Qam64] {
                let il = InnerInterleaver::new(n, c);
                let bps = c.bits_per_symbol();
                let mut hit = vec![false; n * bps];
                for start in 0..=(n - 64) {
                    hit.iter_mut().for_each(|h| *h = false);
                    for q in start * bps..(start + 64) * bps {
                        hit[il.source[q] as usize] = true;
                    }
                    let mut run = 0usize;
                    let mut max_run = 0usize;
                    for &h in &hit {
                        run = if h { run + 1 } else { 0 };
                        max_run = max_run.max(run);
                    }
                    assert!(
                        max_run <= 8,
                        "n={n} {}: burst at {start} leaves a run of {max_run}",
                        c.name()
                    );
                }
            }
        }
    }

    #[test]
    fn freq_roundtrip_and_spacing() {
        let fi = FreqInterleaver::new();
        assert_eq!(fi.len(), 3744);
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let data: Vec<u16> = (0..3744).map(|_| rng.gen()).collect();
        let fwd = fi.interleave(&data).unwrap();
        assert_eq!(fi.deinterleave::<u16>(&fwd).unwrap(), data);
        // Adjacent inputs should land well apart on the carrier axis.
        let close = (0..fi.perm.len() - 1)
            .filter(|&i| (fi.perm[i + 1] as i64 - fi.perm[i] as i64).abs() < 2)
            .count();
        assert!(
            (close as f64) < 0.05 * (fi.perm.len() - 1) as f64,
            "{close} adjacent pairs land closer than 2 carriers"
        );
    }

    #[test]
    fn permutation_text_roundtrip_and_validation() {
        let perm = freq_permutation();
        let text = permutation_to_text(&perm);
        assert_eq!(permutation_from_text(&text, perm.len()).unwrap(), perm);
        assert!(permutation_from_text("0\n0\n", 2).is_err());
        assert!(permutation_from_text("0\n5\n", 2).is_err());
        assert!(permutation_from_text("0\nx\n", 2).is_err());
        assert!(permutation_from_text("0\n1\n2\n", 2).is_err());
    }

    #[test]
    fn shipped_tables_match_generators() {
        let dir = perm_dir();
        let check = |name: &str, expect: &[u32]| {
            let text = std::fs::read_to_string(dir.join(name))
                .unwrap_or_else(|e| panic!("{name}: {e} (regenerate with the ignored test)"));
            let got = permutation_from_text(&text, expect.len()).unwrap();
            assert_eq!(got, expect, "{name} diverges from its generator");
        };
        check("freq_3744.txt", &freq_permutation());
        for n in [1512usize, 6048] {
            let (bits, sym) = inner_permutations(n);
            for (j, p) in bits.iter().enumerate() {
                check(&format!("inner_bit{j}_{n}.txt"), p);
            }
            check(&format!("inner_sym_{n}.txt"), &sym);
        }
    }

    /// Rewrites the shipped permutation tables from the documented seeds.
    #[test]
    #[ignore]
    fn regenerate_shipped_permutation_files() {
        let dir = perm_dir();
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(
            dir.join("freq_3744.txt"),
            permutation_to_text(&freq_permutation()),
        )
        .unwrap();
        for n in [1512usize, 6048] {
            let (bits, sym) = inner_permutations(n);
            for (j, p) in bits.iter().enumerate() {
                std::fs::write(dir.join(format!("inner_bit{j}_{n}.txt")), permutation_to_text(p))
                    .unwrap();
            }
            std::fs::write(dir.join(format!("inner_sym_{n}.txt")), permutation_to_text(&sym))
                .unwrap();
        }
    }
}
