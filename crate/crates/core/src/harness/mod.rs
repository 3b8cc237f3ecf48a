//! Monte-Carlo BER measurement over the two full transmit/receive chains.
//!
//! A [`SimPlan`] names a transmission mode, a channel profile, an SNR grid
//! and a stop rule; [`run_sweep`] drives seeded trials at every grid point
//! and reduces the counts to [`BerRecord`]s plus threshold crossings found
//! by log-domain interpolation. Everything downstream of the seed is
//! deterministic: trial `t` draws its payload from stream `2t` and its
//! noise from stream `2t + 1` of a counter-based generator, so results do
//! not depend on how trials are scheduled across worker threads, and the
//! noise a given trial sees is identical at every SNR (common random
//! numbers — BER curves move smoothly with SNR instead of jittering).

mod dtmb;
mod dvbt;

pub use dtmb::DtmbChain;
pub use dvbt::DvbtChain;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{ChannelError, ChannelProfile};
use crate::fec::FecError;
use crate::modem::carriers::CarrierPlan;
use crate::modem::ModemError;
use crate::receiver::{ChannelStateInfo, EqualizedBlock, ReceiverError};
use crate::sysconfig::{ratio_to_f64, ConfigError, System, TransmissionMode};
use crate::Cplx;

/// Quasi-error-free target used when summarising sweeps.
pub const QEF_BER: f64 = 2e-4;
/// Stricter threshold used for system-vs-system SNR deltas.
pub const COMPARE_BER: f64 = 5e-5;

/// Trials per scheduling wave. Between waves the engine checks the stop
/// rule, so the wave size bounds how far a point can overshoot it.
const WAVE_TRIALS: usize = 16;

/// Variance floor handed to the soft demapper so a noiseless run still
/// produces finite, usable LLRs.
const DEMAP_VAR_FLOOR: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    BadPlan(String),
    #[error("sweep needs at least two SNR grid points, got {0}")]
    TooFewPoints(usize),
    #[error("sweeps do not overlap: {0}")]
    NoOverlap(String),
    #[error("record line {line}: {msg}")]
    RecordParse { line: usize, msg: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Modem(#[from] ModemError),
    #[error(transparent)]
    Fec(#[from] FecError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Receiver(#[from] ReceiverError),
}

/// Measurement point in the receive chain.
///
/// `Raw` counts hard decisions straight off the demapper, `PostInner`
/// counts bits after the inner (convolutional/LDPC) decoder, `PostOuter`
/// after the outer (RS/BCH) decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Raw,
    PostInner,
    PostOuter,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Raw, Stage::PostInner, Stage::PostOuter];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Raw => "raw",
            Stage::PostInner => "post_inner",
            Stage::PostOuter => "post_outer",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        match s {
            "raw" => Some(Stage::Raw),
            "post_inner" => Some(Stage::PostInner),
            "post_outer" => Some(Stage::PostOuter),
            _ => None,
        }
    }

    fn idx(self) -> usize {
        match self {
            Stage::Raw => 0,
            Stage::PostInner => 1,
            Stage::PostOuter => 2,
        }
    }
}

/// When to stop accumulating trials at one SNR point.
///
/// A point runs until every requested stage has seen `min_errors` errors,
/// or the primary (first-listed) stage has processed `max_bits` bits,
/// whichever comes first. Records that stop on the bit cap are marked
/// censored: their BER is an upper-bound estimate, not a converged one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub min_errors: u64,
    pub max_bits: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { min_errors: 500, max_bits: 50_000_000 }
    }
}

/// One Monte-Carlo campaign: a mode, a channel, an SNR grid and bookkeeping.
#[derive(Debug, Clone)]
pub struct SimPlan {
    pub mode: TransmissionMode,
    pub channel: ChannelProfile,
    pub snr_start_db: f64,
    pub snr_stop_db: f64,
    pub snr_step_db: f64,
    pub stop: StopRule,
    pub base_seed: u64,
    /// Stages to measure; the first entry is the primary stage that the
    /// `max_bits` cap applies to.
    pub stages: Vec<Stage>,
    /// Trial granularity: RS packets per trial for the CP system, LDPC
    /// blocks per trial for the PN system.
    pub trial_span: usize,
}

impl SimPlan {
    pub fn new(
        mode: TransmissionMode,
        channel: ChannelProfile,
        snr_grid: (f64, f64, f64),
        stages: Vec<Stage>,
    ) -> Result<Self, HarnessError> {
        let plan = SimPlan {
            trial_span: default_trial_span(mode.system),
            mode,
            channel,
            snr_start_db: snr_grid.0,
            snr_stop_db: snr_grid.1,
            snr_step_db: snr_grid.2,
            stop: StopRule::default(),
            base_seed: 1,
            stages,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_stop(mut self, stop: StopRule) -> Result<Self, HarnessError> {
        self.stop = stop;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn with_trial_span(mut self, span: usize) -> Result<Self, HarnessError> {
        self.trial_span = span;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.stages.is_empty() {
            return Err(HarnessError::BadPlan("no stages requested".into()));
        }
        let mut seen = [false; 3];
        for s in &self.stages {
            if seen[s.idx()] {
                return Err(HarnessError::BadPlan(format!("stage {} listed twice", s.name())));
            }
            seen[s.idx()] = true;
        }
        if self.stages.contains(&Stage::PostOuter) && !self.mode.outer_enabled {
            return Err(HarnessError::BadPlan(
                "post_outer stage requested but the outer code is disabled".into(),
            ));
        }
        if !self.snr_step_db.is_finite() || self.snr_step_db <= 0.0 {
            return Err(HarnessError::BadPlan(format!(
                "SNR step must be positive, got {}",
                self.snr_step_db
            )));
        }
        if self.snr_stop_db < self.snr_start_db {
            return Err(HarnessError::BadPlan("SNR stop is below SNR start".into()));
        }
        if self.stop.min_errors < 100 {
            return Err(HarnessError::BadPlan(format!(
                "min_errors {} gives BER estimates with more than ~20% relative error; use at least 100",
                self.stop.min_errors
            )));
        }
        if self.stop.max_bits == 0 {
            return Err(HarnessError::BadPlan("max_bits must be nonzero".into()));
        }
        if self.trial_span == 0 {
            return Err(HarnessError::BadPlan("trial_span must be nonzero".into()));
        }
        if self.mode.system == System::Dvbt && self.mode.fft_size != 2048 {
            return Err(HarnessError::BadPlan(format!(
                "simulation supports the 2048-point CP mode only (got {}); larger FFTs are config/bitrate-only",
                self.mode.fft_size
            )));
        }
        Ok(())
    }

    /// The SNR grid, inclusive of the endpoint to within half a step.
    pub fn snr_points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut i = 0u32;
        loop {
            let snr = self.snr_start_db + f64::from(i) * self.snr_step_db;
            if snr > self.snr_stop_db + self.snr_step_db * 0.5 {
                break;
            }
            out.push(snr);
            i += 1;
        }
        out
    }
}

fn default_trial_span(system: System) -> usize {
    match system {
        System::Dvbt => 32,
        System::Dtmb => 16,
    }
}

/// BER measurement for one (plan, SNR, stage) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub system: String,
    pub map: String,
    pub rate: String,
    pub gi: String,
    pub channel: String,
    pub snr_db: f64,
    pub stage: Stage,
    pub bits: u64,
    pub errors: u64,
    pub seed: u64,
    /// True when the point hit the bit cap before reaching `min_errors`.
    pub censored: bool,
    /// Wall-clock cost of the whole SNR point (all stages share it). Not
    /// serialised: CSV output stays byte-identical across machines.
    pub wall_seconds: f64,
}

impl BerRecord {
    pub fn ber(&self) -> f64 {
        self.errors as f64 / self.bits as f64
    }

    /// BER with a half-error floor, so zero-error points can still enter
    /// log-domain interpolation as an upper bound.
    fn ber_floored(&self) -> f64 {
        if self.errors == 0 {
            0.5 / self.bits as f64
        } else {
            self.ber()
        }
    }
}

/// Per-trial bit/error counts, indexed by stage.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrialCounts {
    pub bits: [u64; 3],
    pub errors: [u64; 3],
}

impl TrialCounts {
    fn add(&mut self, other: &TrialCounts) {
        for i in 0..3 {
            self.bits[i] += other.bits[i];
            self.errors[i] += other.errors[i];
        }
    }

    pub(crate) fn tally(&mut self, stage: Stage, bits: u64, errors: u64) {
        self.bits[stage.idx()] += bits;
        self.errors[stage.idx()] += errors;
    }
}

/// Which stages a trial must score, so unmeasured decoders can be skipped.
#[derive(Debug, Clone, Copy)]
pub struct StageSet {
    pub raw: bool,
    pub inner: bool,
    pub outer: bool,
}

impl StageSet {
    fn from_stages(stages: &[Stage]) -> StageSet {
        StageSet {
            raw: stages.contains(&Stage::Raw),
            inner: stages.contains(&Stage::PostInner),
            outer: stages.contains(&Stage::PostOuter),
        }
    }

    /// Only hard demapper decisions are scored: the trial can skip coding
    /// and interleaving entirely and push random symbols instead.
    pub(crate) fn raw_only(self) -> bool {
        self.raw && !self.inner && !self.outer
    }
}

/// Payload and noise generators for one trial. Separate, counter-addressed
/// streams keep the noise sequence independent of how many payload draws a
/// configuration makes (and vice versa).
pub(crate) fn trial_rngs(base_seed: u64, trial: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut payload = ChaCha8Rng::seed_from_u64(base_seed);
    payload.set_stream(2 * trial);
    let mut noise = ChaCha8Rng::seed_from_u64(base_seed);
    noise.set_stream(2 * trial + 1);
    (payload, noise)
}

/// Equalized data cells plus their channel gains, with erased bins zeroed
/// so the demapper emits zero LLRs for them.
pub(crate) fn extract_data_and_gains(
    plan: &CarrierPlan,
    csi: &ChannelStateInfo,
    eq: &EqualizedBlock,
    symbol_index: u64,
) -> (Vec<Cplx>, Vec<Cplx>) {
    plan.data_bins(symbol_index)
        .iter()
        .map(|&bin| {
            let gain = if eq.erased[bin] { Cplx::new(0.0, 0.0) } else { csi.freq[bin] };
            (eq.symbols[bin], gain)
        })
        .unzip()
}

/// A batch of uniformly random constellation symbols (interleaver flush
/// filler and padding).
pub(crate) fn random_symbols(
    rng: &mut ChaCha8Rng,
    count: usize,
    constellation: crate::sysconfig::Constellation,
) -> Result<Vec<Cplx>, ModemError> {
    let bits: Vec<u8> = (0..count * constellation.bits_per_symbol())
        .map(|_| rng.gen_range(0..2u8))
        .collect();
    crate::modem::qam::qam_map(&bits, constellation)
}

pub(crate) fn random_bits(rng: &mut ChaCha8Rng, count: usize) -> Vec<u8> {
    (0..count).map(|_| rng.gen_range(0..2u8)).collect()
}

pub(crate) fn count_bit_errors(a: &[u8], b: &[u8]) -> u64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

/// Extra noise the PN receiver's overlap-add folds onto each bin, relative
/// to the per-sample channel noise: the guard's samples are added back into
/// the body, so `M + D` noisy samples land on `M` bins.
pub fn demapper_noise_factor(mode: &TransmissionMode) -> f64 {
    match mode.system {
        System::Dvbt => 1.0,
        System::Dtmb => {
            let m = mode.fft_size as f64;
            (m + mode.gi_samples() as f64) / m
        }
    }
}

/// Offset from the plan's SNR (noise calibrated to total transmit power)
/// to the per-data-cell Es/N0 the demapper actually sees, in dB. Makes the
/// raw-BER oracle comparison explicit: `Es/N0 = snr_db + offset`.
pub fn data_snr_offset_db(mode: &TransmissionMode) -> f64 {
    -10.0 * (mode.average_tx_power() * demapper_noise_factor(mode)).log10()
}

/// One simulated chain, ready to run trials.
pub(crate) enum Chain {
    Dvbt(DvbtChain),
    Dtmb(DtmbChain),
}

impl Chain {
    fn new(plan: &SimPlan) -> Result<Chain, HarnessError> {
        let rate_hz = ratio_to_f64(plan.mode.elementary_rate);
        let realized = plan.channel.realize(rate_hz);
        match plan.mode.system {
            System::Dvbt => Ok(Chain::Dvbt(DvbtChain::new(&plan.mode, &realized.h, plan.trial_span)?)),
            System::Dtmb => Ok(Chain::Dtmb(DtmbChain::new(&plan.mode, &realized.h, plan.trial_span)?)),
        }
    }

    fn bits_per_trial(&self, stage: Stage) -> u64 {
        match self {
            Chain::Dvbt(c) => c.bits_per_trial(stage),
            Chain::Dtmb(c) => c.bits_per_trial(stage),
        }
    }

    fn run_trial(
        &self,
        trial: u64,
        snr_db: f64,
        set: StageSet,
        seed: u64,
    ) -> Result<TrialCounts, HarnessError> {
        match self {
            Chain::Dvbt(c) => c.run_trial(trial, snr_db, set, seed, None),
            Chain::Dtmb(c) => c.run_trial(trial, snr_db, set, seed, None),
        }
    }

    pub(crate) fn tx_stream(
        &self,
        trial: u64,
        set: StageSet,
        seed: u64,
    ) -> Result<Vec<Cplx>, HarnessError> {
        let mut sink = Vec::new();
        match self {
            Chain::Dvbt(c) => c.run_trial(trial, f64::INFINITY, set, seed, Some(&mut sink))?,
            Chain::Dtmb(c) => c.run_trial(trial, f64::INFINITY, set, seed, Some(&mut sink))?,
        };
        Ok(sink)
    }
}

/// Build the chain for a plan and return trial 0's transmit stream (before
/// the channel), for waveform inspection.
pub fn reference_tx_stream(plan: &SimPlan) -> Result<Vec<Cplx>, HarnessError> {
    let chain = Chain::new(plan)?;
    chain.tx_stream(0, StageSet::from_stages(&plan.stages), plan.base_seed)
}

fn run_wave(
    chain: &Chain,
    snr_db: f64,
    set: StageSet,
    seed: u64,
    first_trial: u64,
    count: usize,
    workers: usize,
) -> Result<TrialCounts, HarnessError> {
    let workers = workers.max(1).min(count);
    if workers == 1 {
        let mut acc = TrialCounts::default();
        for t in 0..count as u64 {
            acc.add(&chain.run_trial(first_trial + t, snr_db, set, seed)?);
        }
        return Ok(acc);
    }
    // Trials are integer-addressed and counts sum exactly, so any
    // assignment of trials to threads gives identical totals.
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut acc = TrialCounts::default();
                    let mut i = w;
                    while i < count {
                        acc.add(&chain.run_trial(first_trial + i as u64, snr_db, set, seed)?);
                        i += workers;
                    }
                    Ok::<TrialCounts, HarnessError>(acc)
                })
            })
            .collect();
        let mut acc = TrialCounts::default();
        for h in handles {
            acc.add(&h.join().expect("simulation worker panicked")?);
        }
        Ok(acc)
    })
}

fn point_records(
    plan: &SimPlan,
    snr_db: f64,
    totals: &TrialCounts,
    wall_seconds: f64,
) -> Vec<BerRecord> {
    plan.stages
        .iter()
        .map(|&stage| BerRecord {
            system: match plan.mode.system {
                System::Dvbt => "dvbt".into(),
                System::Dtmb => "dtmb".into(),
            },
            map: plan.mode.constellation.name().into(),
            rate: plan.mode.inner.name().into(),
            gi: plan.mode.gi_fraction.to_string(),
            channel: plan.channel.name.clone(),
            snr_db,
            stage,
            bits: totals.bits[stage.idx()],
            errors: totals.errors[stage.idx()],
            seed: plan.base_seed,
            censored: totals.errors[stage.idx()] < plan.stop.min_errors,
            wall_seconds,
        })
        .collect()
}

fn run_point_inner(
    chain: &Chain,
    plan: &SimPlan,
    snr_db: f64,
    workers: usize,
) -> Result<Vec<BerRecord>, HarnessError> {
    let set = StageSet::from_stages(&plan.stages);
    let primary = plan.stages[0];
    let bits_per_trial = chain.bits_per_trial(primary).max(1);
    let started = Instant::now();
    let mut totals = TrialCounts::default();
    let mut next_trial = 0u64;
    loop {
        // Trim the wave so the bit cap is not wildly overshot when trials
        // are large (one PN-system trial can be several hundred kbits).
        let remaining = plan.stop.max_bits.saturating_sub(totals.bits[primary.idx()]);
        let need = remaining.div_ceil(bits_per_trial).max(1);
        let wave = (WAVE_TRIALS as u64).min(need) as usize;
        totals.add(&run_wave(chain, snr_db, set, plan.base_seed, next_trial, wave, workers)?);
        next_trial += wave as u64;
        let converged = plan
            .stages
            .iter()
            .all(|s| totals.errors[s.idx()] >= plan.stop.min_errors);
        if converged || totals.bits[primary.idx()] >= plan.stop.max_bits {
            break;
        }
    }
    Ok(point_records(plan, snr_db, &totals, started.elapsed().as_secs_f64()))
}

/// Run one SNR point to its stop rule. `workers` ≥ 1 selects thread count;
/// results are identical for any value.
pub fn run_point(plan: &SimPlan, snr_db: f64, workers: usize) -> Result<Vec<BerRecord>, HarnessError> {
    plan.validate()?;
    let chain = Chain::new(plan)?;
    run_point_inner(&chain, plan, snr_db, workers)
}

/// Crossing of one stage's BER curve with a target, from a whole sweep.
#[derive(Debug, Clone, Copy)]
pub struct StageCrossing {
    pub stage: Stage,
    /// SNR (dB) where the curve crosses [`QEF_BER`], if bracketed.
    pub at_qef: Option<f64>,
    /// SNR (dB) where the curve crosses [`COMPARE_BER`], if bracketed.
    pub at_compare: Option<f64>,
    /// Adjacent uncensored pairs where BER *rose* with SNR.
    pub monotonicity_violations: usize,
}

/// A finished sweep: every record plus per-stage crossing summaries.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub records: Vec<BerRecord>,
    pub crossings: Vec<StageCrossing>,
}

impl Sweep {
    pub fn crossing(&self, stage: Stage) -> Option<&StageCrossing> {
        self.crossings.iter().find(|c| c.stage == stage)
    }
}

/// Interpolate the SNR where a descending BER curve hits `target`. Points
/// must be sorted by SNR; censored records are ignored (their BER is not
/// converged). Interpolation is linear in (SNR, log10 BER) over the first
/// bracketing pair.
pub fn crossing_snr(records: &[BerRecord], stage: Stage, target: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.stage == stage && !r.censored && r.bits > 0)
        .map(|r| (r.snr_db, r.ber_floored()))
        .collect();
    for pair in pts.windows(2) {
        let (s0, b0) = pair[0];
        let (s1, b1) = pair[1];
        if b0 >= target && b1 <= target && b0 > b1 {
            let t = (b0.log10() - target.log10()) / (b0.log10() - b1.log10());
            return Some(s0 + t * (s1 - s0));
        }
        if b0 == target {
            return Some(s0);
        }
    }
    // Exact hit on the last point.
    pts.last().filter(|&&(_, b)| b == target).map(|&(s, _)| s)
}

fn count_monotonicity_violations(records: &[BerRecord], stage: Stage) -> usize {
    let pts: Vec<f64> = records
        .iter()
        .filter(|r| r.stage == stage && !r.censored && r.bits > 0)
        .map(|r| r.ber_floored())
        .collect();
    pts.windows(2).filter(|w| w[1] > w[0]).count()
}

fn summarize(plan: &SimPlan, records: Vec<BerRecord>) -> Sweep {
    let crossings = plan
        .stages
        .iter()
        .map(|&stage| StageCrossing {
            stage,
            at_qef: crossing_snr(&records, stage, QEF_BER),
            at_compare: crossing_snr(&records, stage, COMPARE_BER),
            monotonicity_violations: count_monotonicity_violations(&records, stage),
        })
        .collect();
    Sweep { records, crossings }
}

/// Run every grid point of a plan and summarise crossings.
pub fn run_sweep(plan: &SimPlan, workers: usize) -> Result<Sweep, HarnessError> {
    plan.validate()?;
    let points = plan.snr_points();
    if points.len() < 2 {
        return Err(HarnessError::TooFewPoints(points.len()));
    }
    let chain = Chain::new(plan)?;
    let mut records = Vec::with_capacity(points.len() * plan.stages.len());
    for snr in points {
        records.extend(run_point_inner(&chain, plan, snr, workers)?);
    }
    Ok(summarize(plan, records))
}

/// SNR advantage of sweep `b` over sweep `a` at one stage and threshold:
/// `delta_db = crossing(a) - crossing(b)`, positive when `b` reaches the
/// target BER at a lower SNR than `a`.
#[derive(Debug, Clone, Copy)]
pub struct CrossingDelta {
    pub stage: Stage,
    pub target_ber: f64,
    pub snr_a_db: f64,
    pub snr_b_db: f64,
    pub delta_db: f64,
}

/// Compare two finished sweeps stage by stage at both standard thresholds.
/// Errors if no (stage, threshold) cell has a crossing in both sweeps.
pub fn compare_sweeps(a: &Sweep, b: &Sweep) -> Result<Vec<CrossingDelta>, HarnessError> {
    let mut out = Vec::new();
    for ca in &a.crossings {
        let Some(cb) = b.crossing(ca.stage) else { continue };
        for (target, xa, xb) in [
            (QEF_BER, ca.at_qef, cb.at_qef),
            (COMPARE_BER, ca.at_compare, cb.at_compare),
        ] {
            if let (Some(sa), Some(sb)) = (xa, xb) {
                out.push(CrossingDelta {
                    stage: ca.stage,
                    target_ber: target,
                    snr_a_db: sa,
                    snr_b_db: sb,
                    delta_db: sa - sb,
                });
            }
        }
    }
    if out.is_empty() {
        return Err(HarnessError::NoOverlap(
            "no stage reaches a common BER threshold in both sweeps; widen the SNR grids".into(),
        ));
    }
    Ok(out)
}

/// Run both plans and report SNR deltas at the shared thresholds.
pub fn compare_systems(
    plan_a: &SimPlan,
    plan_b: &SimPlan,
    workers: usize,
) -> Result<(Sweep, Sweep, Vec<CrossingDelta>), HarnessError> {
    let a = run_sweep(plan_a, workers)?;
    let b = run_sweep(plan_b, workers)?;
    let deltas = compare_sweeps(&a, &b)?;
    Ok((a, b, deltas))
}

pub const CSV_HEADER: &str = "system,map,rate,gi,channel,snr_db,stage,bits,errors,ber,seed,censored";

/// Serialise records to the canonical CSV layout. Deterministic: identical
/// runs produce byte-identical output.
pub fn records_to_csv(records: &[BerRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{:.3},{},{},{},{:.6e},{},{}\n",
            r.system,
            r.map,
            r.rate,
            r.gi,
            r.channel,
            r.snr_db,
            r.stage.name(),
            r.bits,
            r.errors,
            r.ber(),
            r.seed,
            r.censored
        ));
    }
    out
}

/// Parse records written by [`records_to_csv`]. The derived `ber` column is
/// ignored in favour of the exact counts; `wall_seconds` is not stored in
/// CSV and comes back as zero.
pub fn records_from_csv(text: &str) -> Result<Vec<BerRecord>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let parse = |msg: &str| HarnessError::RecordParse { line: i + 1, msg: msg.into() };
        if i == 0 {
            if line.trim() != CSV_HEADER {
                return Err(parse("unexpected header"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(parse(&format!("expected 12 fields, got {}", f.len())));
        }
        out.push(BerRecord {
            system: f[0].into(),
            map: f[1].into(),
            rate: f[2].into(),
            gi: f[3].into(),
            channel: f[4].into(),
            snr_db: f[5].parse().map_err(|_| parse("bad snr_db"))?,
            stage: Stage::parse(f[6]).ok_or_else(|| parse("bad stage"))?,
            bits: f[7].parse().map_err(|_| parse("bad bits"))?,
            errors: f[8].parse().map_err(|_| parse("bad errors"))?,
            seed: f[10].parse().map_err(|_| parse("bad seed"))?,
            censored: f[11].parse().map_err(|_| parse("bad censored"))?,
            wall_seconds: 0.0,
        });
    }
    Ok(out)
}

/// Reshape records into gnuplot-friendly blocks: one `# label` header per
/// (configuration, stage) group, blank-line separated, `snr ber bits errors`
/// columns. Censored points are kept but flagged in a trailing column.
pub fn plot_data(records: &[BerRecord]) -> String {
    let mut groups: Vec<(String, Vec<&BerRecord>)> = Vec::new();
    for r in records {
        let key = format!(
            "system={} map={} rate={} gi={} channel={} stage={}",
            r.system, r.map, r.rate, r.gi, r.channel, r.stage.name()
        );
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut out = String::new();
    for (gi, (key, rows)) in groups.iter().enumerate() {
        if gi > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!("# {key}\n# snr_db ber bits errors censored\n"));
        for r in rows {
            out.push_str(&format!(
                "{:.3} {:.6e} {} {} {}\n",
                r.snr_db,
                r.ber(),
                r.bits,
                r.errors,
                u8::from(r.censored)
            ));
        }
    }
    out
}
