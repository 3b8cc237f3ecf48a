//! Trial chain for the PN-guarded system: BCH outer code, QC-LDPC inner
//! code, deep convolutional time interleaving on constellation symbols,
//! per-frame frequency interleaving and PN framing, then the channel and
//! the PN-subtraction / overlap-add receiver.
//!
//! One trial carries `blocks` LDPC blocks. The symbol-domain time
//! interleaver needs a full flush — its pair latency in symbols — so every
//! trial appends that many random filler symbols, plus tail filler up to a
//! whole signal frame; flush frames ride the channel but are never
//! decoded. The stream leads with one standalone PN guard so the first
//! body is framed like every other: `[pn, body_0, pn, body_1, …, pn]`,
//! and the receiver gets a synthetic ring-out tail after the last guard.
//!
//! Overlap-add folds the guard's noise back onto the body head, so the
//! demapper's per-bin noise variance is scaled by `(M + D) / M` — see
//! [`super::demapper_noise_factor`].


use super::{
    count_bit_errors, extract_data_and_gains, random_bits, random_symbols, trial_rngs,
    HarnessError, Stage, StageSet, TrialCounts, DEMAP_VAR_FLOOR,
};
use crate::channel::{awgn_add, FirStream, NoiseSpec};
use crate::fec::bch::{bch_decode, bch_encode, BCH_K, BCH_N};
use crate::fec::interleave::{
    forney_deinterleave, forney_interleave, ForneyInterleaver, FreqInterleaver,
    DTMB_TIME_BRANCHES, DTMB_TIME_DEPTH,
};
use crate::fec::ldpc::LdpcCode;
use crate::modem::carriers::CarrierPlan;
use crate::modem::framing::tds_frame;
use crate::modem::ofdm::OfdmTransform;
use crate::modem::pn::{pn_generate, PnHeader};
use crate::modem::qam::{qam_demap_hard, qam_demap_soft, qam_map};
use crate::receiver::{tds_receive, ChannelStateInfo};
use crate::sysconfig::{Constellation, InnerCode, TransmissionMode, LDPC_N};
use crate::Cplx;

const LDPC_MAX_ITER: usize = 50;

pub struct DtmbChain {
    constellation: Constellation,
    code: &'static LdpcCode,
    plan: CarrierPlan,
    ofdm: OfdmTransform,
    freq_il: FreqInterleaver,
    pn: PnHeader,
    csi: ChannelStateInfo,
    avg_power: f64,
    outer: bool,
    /// LDPC blocks per trial.
    blocks: usize,
    /// BCH words per LDPC block (outer enabled), k/762.
    words: usize,
    /// Demapper noise scale from overlap-add folding, (M + D) / M.
    ola_noise: f64,
}

/// Time-interleaver flush, in symbols: end-to-end latency of the (52, 240)
/// convolutional pair.
fn time_flush_symbols() -> usize {
    ForneyInterleaver::<Cplx>::pair_latency(DTMB_TIME_BRANCHES, DTMB_TIME_DEPTH)
}

impl DtmbChain {
    pub fn new(
        mode: &TransmissionMode,
        h: &[Cplx],
        blocks: usize,
    ) -> Result<Self, HarnessError> {
        let InnerCode::Ldpc(rate) = mode.inner else {
            return Err(HarnessError::BadPlan("PN chain needs an LDPC rate".into()));
        };
        let ofdm = OfdmTransform::new(mode.fft_size);
        let d = mode.gi_samples();
        Ok(DtmbChain {
            constellation: mode.constellation,
            code: LdpcCode::for_rate(rate),
            plan: CarrierPlan::dtmb(),
            freq_il: FreqInterleaver::new(),
            pn: pn_generate(d)?,
            csi: ChannelStateInfo::new(h, &ofdm)?,
            ofdm,
            avg_power: mode.average_tx_power(),
            outer: mode.outer_enabled,
            blocks,
            words: rate.info_bits() / BCH_N,
            ola_noise: (mode.fft_size + d) as f64 / mode.fft_size as f64,
        })
    }

    fn bits_per_symbol(&self) -> usize {
        self.constellation.bits_per_symbol()
    }

    /// Constellation symbols per LDPC block.
    fn symbols_per_block(&self) -> usize {
        LDPC_N / self.bits_per_symbol()
    }

    pub fn bits_per_trial(&self, stage: Stage) -> u64 {
        (self.blocks
            * match stage {
                Stage::Raw => LDPC_N,
                Stage::PostInner => self.code.k,
                Stage::PostOuter => self.words * BCH_K,
            }) as u64
    }

    /// Push one framed body through the channel, appending transmit samples
    /// to the sink when waveform capture is on.
    fn send_frame(
        &self,
        data: &[Cplx],
        fir: &mut FirStream,
        rx: &mut Vec<Cplx>,
        tx_sink: &mut Option<&mut Vec<Cplx>>,
    ) -> Result<(), HarnessError> {
        let frame = tds_frame(data, &self.plan, &self.ofdm, &self.pn)?;
        if let Some(sink) = tx_sink.as_deref_mut() {
            sink.extend_from_slice(&frame);
        }
        rx.extend(fir.process(&frame));
        Ok(())
    }

    /// Lead-in guard, so the first body sees the same `[pn, body, pn]`
    /// framing as every later one.
    fn send_lead_in(
        &self,
        fir: &mut FirStream,
        rx: &mut Vec<Cplx>,
        tx_sink: &mut Option<&mut Vec<Cplx>>,
    ) {
        if let Some(sink) = tx_sink.as_deref_mut() {
            sink.extend_from_slice(&self.pn.chips);
        }
        rx.extend(fir.process(&self.pn.chips));
    }

    /// Ring the channel out past the final guard so the last frame's
    /// receiver window has a real `rx_next_head` to read.
    fn finish_rx(&self, fir: &mut FirStream, rx: &mut Vec<Cplx>) {
        let d = self.pn.chips.len();
        let mut tail = fir.ringout();
        tail.resize(d.max(tail.len()), Cplx::new(0.0, 0.0));
        rx.extend_from_slice(&tail[..d]);
    }

    /// Equalize frame `f` of the received stream and return its data cells
    /// with channel gains, frequency de-interleaved back to symbol order.
    fn receive_frame(
        &self,
        rx: &[Cplx],
        f: usize,
    ) -> Result<(Vec<Cplx>, Vec<Cplx>), HarnessError> {
        let m = self.ofdm.size();
        let d = self.pn.chips.len();
        let start = d + f * (m + d);
        let window = &rx[start..start + m + d];
        let next_head = &rx[start + m + d..start + m + 2 * d];
        let eq = tds_receive(window, next_head, &self.csi, &self.pn, &self.ofdm)?;
        let (syms, gains) = extract_data_and_gains(&self.plan, &self.csi, &eq, 0);
        Ok((self.freq_il.deinterleave(&syms)?, self.freq_il.deinterleave(&gains)?))
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
        let demap_var = (spec.variance() * self.ola_noise).max(DEMAP_VAR_FLOOR);
        let carriers = self.freq_il.len();
        let n_data = self.blocks * self.symbols_per_block();
        let mut counts = TrialCounts::default();
        let mut fir = FirStream::new(&self.csi.h);
        let mut rx: Vec<Cplx> = Vec::new();

        if set.raw_only() {
            // Both interleavers are bijections on known random symbols;
            // skip them (and the flush they would demand).
            let frames = n_data.div_ceil(carriers);
            let bits = random_bits(&mut payload_rng, frames * carriers * self.bits_per_symbol());
            let syms = qam_map(&bits, self.constellation)?;
            self.send_lead_in(&mut fir, &mut rx, &mut tx_sink);
            for chunk in syms.chunks(carriers) {
                self.send_frame(chunk, &mut fir, &mut rx, &mut tx_sink)?;
            }
            self.finish_rx(&mut fir, &mut rx);
            awgn_add(&mut rx, &spec, &mut noise_rng);
            let mut hard = Vec::with_capacity(frames * carriers * self.bits_per_symbol());
            for f in 0..frames {
                let m = self.ofdm.size();
                let d = self.pn.chips.len();
                let start = d + f * (m + d);
                let eq = tds_receive(
                    &rx[start..start + m + d],
                    &rx[start + m + d..start + m + 2 * d],
                    &self.csi,
                    &self.pn,
                    &self.ofdm,
                )?;
                let (syms, _) = extract_data_and_gains(&self.plan, &self.csi, &eq, 0);
                hard.extend(qam_demap_hard(&syms, self.constellation));
            }
            let scored = n_data * self.bits_per_symbol();
            counts.tally(
                Stage::Raw,
                scored as u64,
                count_bit_errors(&hard[..scored], &bits[..scored]),
            );
            return Ok(counts);
        }

        // Transmit side: payload -> BCH -> LDPC -> map -> time interleave.
        let mut payloads: Vec<Vec<u8>> = Vec::with_capacity(self.blocks);
        let mut infos: Vec<Vec<u8>> = Vec::with_capacity(self.blocks);
        let mut codewords: Vec<Vec<u8>> = Vec::with_capacity(self.blocks);
        let mut tx_syms: Vec<Cplx> = Vec::with_capacity(n_data + time_flush_symbols());
        for _ in 0..self.blocks {
            let (payload, info) = if self.outer {
                let payload = random_bits(&mut payload_rng, self.words * BCH_K);
                let mut info = Vec::with_capacity(self.code.k);
                for chunk in payload.chunks(BCH_K) {
                    info.extend(bch_encode(chunk)?);
                }
                (payload, info)
            } else {
                let info = random_bits(&mut payload_rng, self.code.k);
                (info.clone(), info)
            };
            let coded = self.code.encode(&info)?;
            tx_syms.extend(qam_map(&coded, self.constellation)?);
            payloads.push(payload);
            infos.push(info);
            codewords.push(coded);
        }
        let flush = random_symbols(&mut payload_rng, time_flush_symbols(), self.constellation)?;
        tx_syms.extend(flush);
        let mut stream = forney_interleave(&tx_syms, DTMB_TIME_BRANCHES, DTMB_TIME_DEPTH)?;
        let frames = stream.len().div_ceil(carriers);
        let tail_fill = frames * carriers - stream.len();
        stream.extend(random_symbols(&mut payload_rng, tail_fill, self.constellation)?);

        // Channel: lead-in guard, framed bodies, ring-out, then noise over
        // the whole burst in one pass (draw order independent of content).
        self.send_lead_in(&mut fir, &mut rx, &mut tx_sink);
        for f in 0..frames {
            let inter = self.freq_il.interleave(&stream[f * carriers..(f + 1) * carriers])?;
            self.send_frame(&inter, &mut fir, &mut rx, &mut tx_sink)?;
        }
        self.finish_rx(&mut fir, &mut rx);
        awgn_add(&mut rx, &spec, &mut noise_rng);

        // Receive: equalize every frame, undo both interleavers, keeping
        // each cell paired with its channel gain for the soft demapper.
        let mut pairs: Vec<(Cplx, Cplx)> = Vec::with_capacity(frames * carriers);
        for f in 0..frames {
            let (syms, gains) = self.receive_frame(&rx, f)?;
            pairs.extend(syms.into_iter().zip(gains));
        }
        pairs.truncate(tx_syms.len());
        let deint = forney_deinterleave(&pairs, DTMB_TIME_BRANCHES, DTMB_TIME_DEPTH)?;
        let useful = &deint[time_flush_symbols()..];
        debug_assert_eq!(useful.len(), n_data);

        for blk in 0..self.blocks {
            let cells = &useful[blk * self.symbols_per_block()..(blk + 1) * self.symbols_per_block()];
            let (syms, gains): (Vec<Cplx>, Vec<Cplx>) = cells.iter().copied().unzip();
            let llrs = qam_demap_soft(&syms, &gains, demap_var, self.constellation)?;
            if set.raw {
                let errs = codewords[blk]
                    .iter()
                    .zip(&llrs)
                    .filter(|(&bit, &llr)| u8::from(llr < 0.0) != bit)
                    .count() as u64;
                counts.tally(Stage::Raw, LDPC_N as u64, errs);
            }
            if !set.inner && !set.outer {
                continue;
            }
            let dec = self.code.decode(&llrs, LDPC_MAX_ITER)?;
            if set.inner {
                counts.tally(
                    Stage::PostInner,
                    self.code.k as u64,
                    count_bit_errors(&dec.info, &infos[blk]),
                );
            }
            if set.outer {
                let mut errs = 0u64;
                for (word, sent) in dec.info.chunks(BCH_N).zip(payloads[blk].chunks(BCH_K)) {
                    let (msg, _) = bch_decode(word)?;
                    errs += count_bit_errors(&msg, sent);
                }
                counts.tally(Stage::PostOuter, (self.words * BCH_K) as u64, errs);
            }
        }
        Ok(counts)
    }
}
