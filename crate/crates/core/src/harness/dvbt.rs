//! Trial chain for the cyclic-prefix system: RS outer code and byte
//! interleaver, punctured convolutional inner code, per-block bit/symbol
//! interleaving, pilot framing, multipath + AWGN, then CP removal, one-tap
//! equalization and soft Viterbi/RS decoding.
//!
//! One trial carries `packets` transport packets plus the outer
//! interleaver's flush, padded up to whole OFDM symbols with random filler
//! bits. The raw stage scores hard demapper decisions over every
//! transmitted bit (filler included); the post-inner stage scores the
//! Viterbi output against the full convolutional payload; the post-outer
//! stage scores the de-interleaved, RS-decoded packet bytes.

use rand::Rng;

use super::{
    count_bit_errors, extract_data_and_gains, random_bits, trial_rngs, HarnessError, StageSet,
    TrialCounts, DEMAP_VAR_FLOOR,
};
use crate::channel::{awgn_add, FirStream, NoiseSpec};
use crate::fec::conv::{coded_bits_per_period, conv_encode, puncture_pattern, FLUSH_BITS};
use crate::fec::interleave::{
    forney_deinterleave, forney_interleave, ForneyInterleaver, InnerInterleaver,
    DVBT_OUTER_BRANCHES, DVBT_OUTER_DEPTH,
};
use crate::fec::rs::{rs_decode, rs_encode, RS_K, RS_N};
use crate::fec::viterbi::viterbi_decode;
use crate::harness::Stage;
use crate::modem::carriers::CarrierPlan;
use crate::modem::framing::cp_symbol;
use crate::modem::ofdm::OfdmTransform;
use crate::modem::qam::{qam_demap_hard, qam_demap_soft, qam_map};
use crate::receiver::{cp_receive, ChannelStateInfo};
use crate::sysconfig::{Constellation, ConvRate, InnerCode, TransmissionMode};
use crate::Cplx;

pub struct DvbtChain {
    constellation: Constellation,
    rate: ConvRate,
    plan: CarrierPlan,
    ofdm: OfdmTransform,
    inner: InnerInterleaver,
    csi: ChannelStateInfo,
    gi: usize,
    avg_power: f64,
    /// Transport packets per trial.
    packets: usize,
    /// Bytes entering the convolutional encoder: packets plus outer flush.
    stream_bytes: usize,
    /// Random pad keeping (payload + conv flush) on a puncture boundary.
    pad_bits: usize,
    /// Convolutional encoder output length.
    coded_bits: usize,
    /// OFDM symbols per trial.
    blocks: usize,
}

/// Outer-interleaver flush, in bytes: the end-to-end latency of the
/// (12, 17) convolutional byte interleaver pair.
fn outer_flush_bytes() -> usize {
    ForneyInterleaver::<u8>::pair_latency(DVBT_OUTER_BRANCHES, DVBT_OUTER_DEPTH)
}

fn bits_from_bytes(bytes: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(bytes.len() * 8);
    for &b in bytes {
        for k in (0..8).rev() {
            out.push((b >> k) & 1);
        }
    }
    out
}

fn bytes_from_bits(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b))
        .collect()
}

impl DvbtChain {
    pub fn new(
        mode: &TransmissionMode,
        h: &[Cplx],
        packets: usize,
    ) -> Result<Self, HarnessError> {
        let InnerCode::Conv(rate) = mode.inner else {
            return Err(HarnessError::BadPlan("CP chain needs a convolutional rate".into()));
        };
        let plan = CarrierPlan::dvbt_2k();
        let ofdm = OfdmTransform::new(mode.fft_size);
        let inner = InnerInterleaver::new(mode.data_carriers, mode.constellation);
        let csi = ChannelStateInfo::new(h, &ofdm)?;

        let stream_bytes = packets * RS_N + outer_flush_bytes();
        let stream_bits = stream_bytes * 8;
        let (period, _, _) = puncture_pattern(rate);
        let pad_bits = (period - (stream_bits + FLUSH_BITS) % period) % period;
        let payload_bits = stream_bits + pad_bits;
        let coded_bits = (payload_bits + FLUSH_BITS) / period * coded_bits_per_period(rate);
        let block_bits = inner.block_bits();
        let blocks = coded_bits.div_ceil(block_bits);

        Ok(DvbtChain {
            constellation: mode.constellation,
            rate,
            plan,
            ofdm,
            inner,
            csi,
            gi: mode.gi_samples(),
            avg_power: mode.average_tx_power(),
            packets,
            stream_bytes,
            pad_bits,
            coded_bits,
            blocks,
        })
    }

    pub fn bits_per_trial(&self, stage: Stage) -> u64 {
        (match stage {
            Stage::Raw => self.blocks * self.inner.block_bits(),
            Stage::PostInner => self.stream_bytes * 8 + self.pad_bits,
            Stage::PostOuter => self.packets * RS_K * 8,
        }) as u64
    }

    pub fn run_trial(
        &self,
        trial: u64,
        snr_db: f64,
        set: StageSet,
        seed: u64,
        mut tx_sink: Option<&mut Vec<Cplx>>,
    ) -> Result<TrialCounts, HarnessError> {
        let (mut payload_rng, mut noise_rng) = trial_rngs(seed, trial);
        let spec = NoiseSpec::new(snr_db, self.avg_power)?;
        let demap_var = spec.variance().max(DEMAP_VAR_FLOOR);
        let block_bits = self.inner.block_bits();
        let mut counts = TrialCounts::default();
        let mut fir = FirStream::new(&self.csi.h);

        if set.raw_only() {
            // Coding and interleaving don't change raw demapper statistics;
            // push independent random symbols instead.
            for b in 0..self.blocks {
                let bits = random_bits(&mut payload_rng, block_bits);
                let data = qam_map(&bits, self.constellation)?;
                let sym = cp_symbol(&data, &self.plan, &self.ofdm, b as u64, self.gi)?;
                if let Some(sink) = tx_sink.as_deref_mut() {
                    sink.extend_from_slice(&sym);
                }
                let mut rx = fir.process(&sym);
                awgn_add(&mut rx, &spec, &mut noise_rng);
                let eq = cp_receive(&rx, &self.csi, &self.ofdm)?;
                let (syms, _) = extract_data_and_gains(&self.plan, &self.csi, &eq, b as u64);
                let hard = qam_demap_hard(&syms, self.constellation);
                counts.tally(Stage::Raw, block_bits as u64, count_bit_errors(&hard, &bits));
            }
            return Ok(counts);
        }

        // Transmit side: packets -> RS -> outer interleave -> conv code.
        let payload: Vec<u8> = (0..self.packets * RS_K).map(|_| payload_rng.gen()).collect();
        let mut stream = Vec::with_capacity(self.stream_bytes);
        for pkt in payload.chunks(RS_K) {
            stream.extend(rs_encode(pkt)?);
        }
        stream.resize(self.stream_bytes, 0); // zero flush drains the interleaver
        let interleaved = forney_interleave(&stream, DVBT_OUTER_BRANCHES, DVBT_OUTER_DEPTH)?;
        let mut conv_payload = bits_from_bytes(&interleaved);
        conv_payload.extend(random_bits(&mut payload_rng, self.pad_bits));
        let coded = conv_encode(&conv_payload, self.rate)?;
        debug_assert_eq!(coded.len(), self.coded_bits);

        // Channel + receiver, one OFDM symbol at a time.
        let mut llrs = Vec::with_capacity(self.coded_bits);
        let mut tx_bits = Vec::with_capacity(block_bits);
        for b in 0..self.blocks {
            tx_bits.clear();
            let lo = b * block_bits;
            let hi = ((b + 1) * block_bits).min(coded.len());
            tx_bits.extend_from_slice(&coded[lo..hi]);
            while tx_bits.len() < block_bits {
                tx_bits.push(payload_rng.gen_range(0..2u8));
            }
            let mapped = self.inner.interleave(&tx_bits)?;
            let data = qam_map(&mapped, self.constellation)?;
            let sym = cp_symbol(&data, &self.plan, &self.ofdm, b as u64, self.gi)?;
            if let Some(sink) = tx_sink.as_deref_mut() {
                sink.extend_from_slice(&sym);
            }
            let mut rx = fir.process(&sym);
            awgn_add(&mut rx, &spec, &mut noise_rng);
            let eq = cp_receive(&rx, &self.csi, &self.ofdm)?;
            let (syms, gains) = extract_data_and_gains(&self.plan, &self.csi, &eq, b as u64);
            let soft = qam_demap_soft(&syms, &gains, demap_var, self.constellation)?;
            let block_llrs = self.inner.deinterleave(&soft)?;
            if set.raw {
                let errs = tx_bits
                    .iter()
                    .zip(&block_llrs)
                    .filter(|(&bit, &llr)| u8::from(llr < 0.0) != bit)
                    .count() as u64;
                counts.tally(Stage::Raw, block_bits as u64, errs);
            }
            llrs.extend_from_slice(&block_llrs);
        }

        if !set.inner && !set.outer {
            return Ok(counts);
        }
        let decoded = viterbi_decode(&llrs[..self.coded_bits], self.rate, conv_payload.len())?;
        if set.inner {
            counts.tally(
                Stage::PostInner,
                conv_payload.len() as u64,
                count_bit_errors(&decoded, &conv_payload),
            );
        }
        if set.outer {
            let bytes = bytes_from_bits(&decoded[..self.stream_bytes * 8]);
            let deint = forney_deinterleave(&bytes, DVBT_OUTER_BRANCHES, DVBT_OUTER_DEPTH)?;
            let packets_rx = &deint[outer_flush_bytes()..];
            let mut errs = 0u64;
            for (word, sent) in packets_rx.chunks(RS_N).zip(payload.chunks(RS_K)) {
                // An uncorrectable word passes through systematically.
                let msg = match rs_decode(word) {
                    Ok(d) => d.message,
                    Err(_) => word[..RS_K].to_vec(),
                };
                errs += msg
                    .iter()
                    .zip(sent)
                    .map(|(a, b)| u64::from((a ^ b).count_ones()))
                    .sum::<u64>();
            }
            counts.tally(Stage::PostOuter, (self.packets * RS_K * 8) as u64, errs);
        }
        Ok(counts)
    }
}
