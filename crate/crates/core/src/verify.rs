//! Self-checks against independent oracles, shared by the CLI `verify`
//! subcommand and the acceptance suite.
//!
//! Three families: the overhead/bitrate arithmetic against its published
//! working values; the CP transmit/equalize path against a naive
//! matrix-form DFT and an explicit circulant channel; and the punctured
//! Viterbi decoder against exhaustive maximum-likelihood search over short
//! payloads. Each check is deterministic and self-contained so a failure
//! points at the implementation, not at the harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::fec::conv::{conv_encode, puncture_pattern};
use crate::fec::viterbi::viterbi_decode;
use crate::modem::ofdm::OfdmTransform;
use crate::receiver::{cp_receive, ChannelStateInfo};
use crate::sysconfig::{
    power_efficiency_dtmb, power_efficiency_dvbt, rat, ratio_to_f64, round_half_up, Constellation,
    ConvRate, LdpcRate, TransmissionMode,
};
use crate::Cplx;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Every check, in reporting order.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![golden_tables(), matrix_oracle_equivalence(), viterbi_ml_check()]
}

// -- golden overhead / bitrate arithmetic ------------------------------

/// The six benchmark configurations at GI 1/4 with their two-decimal
/// bitrates (Mbit/s) before and after the outer code.
pub fn reference_modes() -> Vec<(TransmissionMode, f64, f64)> {
    let gi = rat(1, 4);
    vec![
        (TransmissionMode::dvbt_2k(Constellation::Qpsk, ConvRate::R1_2, gi, true).unwrap(), 5.40, 4.98),
        (TransmissionMode::dvbt_2k(Constellation::Qam16, ConvRate::R3_4, gi, true).unwrap(), 16.20, 14.93),
        (TransmissionMode::dvbt_2k(Constellation::Qam64, ConvRate::R3_4, gi, true).unwrap(), 24.30, 22.39),
        (TransmissionMode::dtmb(Constellation::Qpsk, LdpcRate::R0_4, gi, true).unwrap(), 4.88, 4.81),
        (TransmissionMode::dtmb(Constellation::Qam16, LdpcRate::R0_6, gi, true).unwrap(), 14.63, 14.44),
        (TransmissionMode::dtmb(Constellation::Qam64, LdpcRate::R0_6, gi, true).unwrap(), 21.96, 21.66),
    ]
}

/// Power-efficiency working values: (system, GI, expected factor).
pub fn reference_efficiencies() -> Vec<(&'static str, crate::sysconfig::Rat, f64)> {
    vec![
        ("dvbt", rat(1, 4), 0.66),
        ("dvbt", rat(1, 8), 0.73),
        ("dvbt", rat(1, 16), 0.77),
        ("dvbt", rat(1, 32), 0.79),
        ("dtmb", rat(1, 4), 0.66),
        ("dtmb", rat(1, 9), 0.81),
    ]
}

/// Exact-rational efficiency factors and bitrates against their published
/// two-decimal values (display tolerance: ±0.005 for factors, ±0.01 for
/// Mbit/s, one bitrate entry sitting exactly on the rounding boundary).
pub fn golden_tables() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();

    for (system, gi, want) in reference_efficiencies() {
        let got = match system {
            "dvbt" => {
                let m =
                    TransmissionMode::dvbt_2k(Constellation::Qpsk, ConvRate::R1_2, gi, true)
                        .unwrap();
                power_efficiency_dvbt(&m.overhead_budget())
            }
            _ => {
                let m =
                    TransmissionMode::dtmb(Constellation::Qpsk, LdpcRate::R0_4, gi, true).unwrap();
                power_efficiency_dtmb(&m.overhead_budget())
            }
        };
        let got = match got {
            Ok(r) => ratio_to_f64(r),
            Err(e) => {
                failures.push(format!("{system} gi {gi}: {e}"));
                continue;
            }
        };
        let dev = (got - want).abs();
        worst = worst.max(dev);
        if dev >= 0.005 {
            failures.push(format!("{system} gi {gi}: efficiency {got:.4} vs {want}"));
        }
    }

    for (mode, pre, post) in reference_modes() {
        let report = match mode.useful_bitrate() {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("{}: {e}", mode.label()));
                continue;
            }
        };
        let mbps = |r| ratio_to_f64(round_half_up(r / rat(1_000_000, 1), 2));
        for (got, want) in [(mbps(report.pre_outer_bps), pre), (mbps(report.post_outer_bps), post)]
        {
            let dev = (got - want).abs();
            worst = worst.max(dev);
            if dev > 0.01 + 1e-9 {
                failures.push(format!("{}: bitrate {got} vs {want}", mode.label()));
            }
        }
    }

    CheckOutcome {
        name: "golden-tables",
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("6 efficiency factors and 12 bitrates match, worst deviation {worst:.4}")
        } else {
            failures.join("; ")
        },
    }
}

// -- naive DFT + explicit circulant oracle ------------------------------

/// Unitary DFT as an explicit matrix product, O(M²).
fn naive_dft(x: &[Cplx], inverse: bool) -> Vec<Cplx> {
    let m = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let scale = 1.0 / (m as f64).sqrt();
    (0..m)
        .map(|j| {
            let mut acc = Cplx::new(0.0, 0.0);
            for (k, &v) in x.iter().enumerate() {
                let phase = sign * std::f64::consts::TAU * (j * k) as f64 / m as f64;
                acc += v * Cplx::new(phase.cos(), phase.sin());
            }
            acc * scale
        })
        .collect()
}

/// Apply the M×M circulant matrix of `h` to `x`, built element by element.
fn circulant_apply(h: &[Cplx], x: &[Cplx]) -> Vec<Cplx> {
    let m = x.len();
    let mut row = vec![Cplx::new(0.0, 0.0); m];
    row[..h.len()].copy_from_slice(h);
    (0..m)
        .map(|i| (0..m).map(|j| row[(m + i - j) % m] * x[j]).sum())
        .collect()
}

/// Apply the lower-triangular Toeplitz (linear convolution) matrix of `h`.
fn toeplitz_apply(h: &[Cplx], x: &[Cplx]) -> Vec<Cplx> {
    (0..x.len())
        .map(|i| {
            h.iter()
                .enumerate()
                .filter(|&(l, _)| l <= i)
                .map(|(l, &hv)| hv * x[i - l])
                .sum()
        })
        .collect()
}

fn max_dev(a: &[Cplx], b: &[Cplx]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// The CP path against plain linear algebra: the fast transform against the
/// naive DFT matrix, the guard-to-circulant reduction against an explicit
/// circulant multiply, and the equalized output against the transmitted
/// spectrum — all at small block sizes where O(M²) oracles are exact.
pub fn matrix_oracle_equivalence() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0F0F);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let gauss = |rng: &mut ChaCha8Rng| {
        Cplx::new(normal.sample(rng), normal.sample(rng))
    };
    let mut worst: f64 = 0.0;

    for m in [8usize, 16, 32] {
        let ofdm = OfdmTransform::new(m);
        let d = m / 4;
        for _ in 0..20 {
            let spectrum: Vec<Cplx> = (0..m).map(|_| gauss(&mut rng)).collect();

            // 1. fast unitary transform == naive matrix DFT, both ways
            let body = naive_dft(&spectrum, true);
            worst = worst.max(max_dev(&ofdm.modulate(&spectrum), &body));
            worst = worst.max(max_dev(&ofdm.demodulate(&body), &spectrum));

            // short channel, strong first tap so no bin is erased
            let taps = 1 + rng.gen_range(0..d);
            let mut h: Vec<Cplx> = (0..taps).map(|_| gauss(&mut rng) * 0.15).collect();
            h[0] = Cplx::new(1.0, 0.0);

            // 2. prefixed block through the Toeplitz matrix: the kept
            // window must equal the explicit circulant product
            let mut tx = body[m - d..].to_vec();
            tx.extend_from_slice(&body);
            let rx = toeplitz_apply(&h, &tx);
            let circ = circulant_apply(&h, &body);
            worst = worst.max(max_dev(&rx[d..], &circ));

            // 3. the real receiver on the same samples returns the spectrum
            let csi = match ChannelStateInfo::new(&h, &ofdm) {
                Ok(c) => c,
                Err(e) => {
                    return CheckOutcome {
                        name: "matrix-oracle",
                        pass: false,
                        detail: format!("csi setup failed: {e}"),
                    }
                }
            };
            match cp_receive(&rx, &csi, &ofdm) {
                Ok(eq) => {
                    if eq.erased.iter().any(|&e| e) {
                        worst = worst.max(1.0);
                    }
                    worst = worst.max(max_dev(&eq.symbols, &spectrum));
                }
                Err(e) => {
                    return CheckOutcome {
                        name: "matrix-oracle",
                        pass: false,
                        detail: format!("cp_receive failed: {e}"),
                    }
                }
            }
        }
    }

    CheckOutcome {
        name: "matrix-oracle",
        pass: worst <= 1e-9,
        detail: format!("max deviation {worst:.3e} over M ∈ {{8, 16, 32}} (bound 1e-9)"),
    }
}

// -- Viterbi vs exhaustive maximum likelihood ---------------------------

fn correlation_metric(llrs: &[f64], coded: &[u8]) -> f64 {
    llrs.iter()
        .zip(coded)
        .map(|(&l, &b)| if b == 0 { l } else { -l })
        .sum()
}

/// Payload lengths ≤ 12 compatible with a puncture period (the encoder
/// requires payload + flush on a period boundary).
fn ml_payload_lengths(period: usize) -> Vec<usize> {
    (1..=12).filter(|k| (k + 6) % period == 0).collect()
}

/// Soft Viterbi output against exhaustive ML over every 2^k payload, all
/// rates, noisy enough that roughly half the trials contain channel errors.
/// Ties count as success when the survivor's metric equals the ML metric.
pub fn viterbi_ml_check() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let normal = Normal::new(0.0, 1.2).unwrap();
    let mut trials = 0usize;
    let mut mismatches = Vec::new();

    for rate in ConvRate::ALL {
        let (period, _, _) = puncture_pattern(rate);
        let lengths = ml_payload_lengths(period);
        for t in 0..40 {
            let k = lengths[t % lengths.len()];
            let payload: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2u8)).collect();
            let coded = match conv_encode(&payload, rate) {
                Ok(c) => c,
                Err(e) => {
                    mismatches.push(format!("{} k={k}: encode: {e}", rate.name()));
                    continue;
                }
            };
            let llrs: Vec<f64> = coded
                .iter()
                .map(|&b| 2.0 * (1.0 - 2.0 * f64::from(b)) + normal.sample(&mut rng))
                .collect();
            trials += 1;

            let dec = match viterbi_decode(&llrs, rate, k) {
                Ok(d) => d,
                Err(e) => {
                    mismatches.push(format!("{} k={k}: decode: {e}", rate.name()));
                    continue;
                }
            };
            let dec_metric =
                correlation_metric(&llrs, &conv_encode(&dec, rate).expect("aligned"));

            let mut best = f64::NEG_INFINITY;
            for cand in 0u32..(1 << k) {
                let bits: Vec<u8> = (0..k).map(|i| ((cand >> i) & 1) as u8).collect();
                let m = correlation_metric(&llrs, &conv_encode(&bits, rate).expect("aligned"));
                best = best.max(m);
            }
            if dec_metric < best - 1e-9 {
                mismatches.push(format!(
                    "{} k={k}: survivor metric {dec_metric:.6} < ML {best:.6}",
                    rate.name()
                ));
            }
        }
    }

    CheckOutcome {
        name: "viterbi-ml",
        pass: mismatches.is_empty(),
        detail: if mismatches.is_empty() {
            format!("{trials} noisy trials across all rates match exhaustive ML")
        } else {
            mismatches.join("; ")
        },
    }
}
