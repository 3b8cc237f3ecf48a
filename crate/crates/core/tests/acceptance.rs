//! Acceptance checklist. Each test is one exit requirement and prints a
//! single PASS line with the measured numbers (visible via --nocapture).
//! Monte-Carlo grids and stop rules were calibrated so every interpolation
//! bracket lands on uncensored points with margin; everything is seeded,
//! so reruns are bit-identical.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use dttsim_core::channel::{fir_apply, ChannelProfile, FirStream};
use dttsim_core::fec::bch::{bch_decode, bch_encode, BchStatus, BCH_K, BCH_N};
use dttsim_core::fec::ldpc::LdpcCode;
use dttsim_core::fec::rs::{rs_decode, rs_encode, RS_K, RS_N, RS_T};
use dttsim_core::harness::{
    compare_sweeps, data_snr_offset_db, records_to_csv, run_point, run_sweep, SimPlan, Stage,
    StopRule, Sweep, QEF_BER,
};
use dttsim_core::modem::ofdm::{add_cp, OfdmTransform};
use dttsim_core::modem::pn::{pn_generate, PnHeader, PN_SHORT};
use dttsim_core::modem::qam::qam_map;
use dttsim_core::receiver::{cp_receive, pn_subtract_and_ola, tds_receive, ChannelStateInfo};
use dttsim_core::sysconfig::{rat, Constellation, ConvRate, LdpcRate, TransmissionMode};
use dttsim_core::verify;
use dttsim_core::Cplx;

fn announce(n: usize, what: &str, detail: &str) {
    println!("PASS {n}. {what}: {detail}");
}

#[test]
fn a1_overhead_and_bitrate_tables() {
    let o = verify::golden_tables();
    assert!(o.pass, "{}", o.detail);
    announce(1, "golden overhead math", &o.detail);
}

#[test]
fn a2_circulant_diagonalization_oracle() {
    let o = verify::matrix_oracle_equivalence();
    assert!(o.pass, "{}", o.detail);
    announce(2, "circulant diagonalization oracle", &o.detail);
}

fn random_taps(rng: &mut impl Rng, l: usize) -> Vec<Cplx> {
    let mut h: Vec<Cplx> = (0..l)
        .map(|_| Cplx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let scale = 1.0 / h.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for v in &mut h {
        *v *= scale;
    }
    h
}

fn random_payload(rng: &mut impl Rng, m: usize) -> Vec<Cplx> {
    let bits: Vec<u8> = (0..2 * m).map(|_| rng.gen_range(0..2u8)).collect();
    qam_map(&bits, Constellation::Qpsk).unwrap()
}

fn synthetic_pn(rng: &mut impl Rng, d: usize) -> PnHeader {
    let chips = (0..d)
        .map(|_| {
            let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            Cplx::new(s * 2f64.sqrt(), 0.0)
        })
        .collect();
    PnHeader { chips, period: d }
}

/// Worst |guard-padded − prefixed| deviation over `pairs` random
/// (payload, channel) draws at one block size.
fn guard_equivalence_worst(m: usize, pn: &PnHeader, pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ofdm = OfdmTransform::new(m);
    let d = pn.len();
    let mut worst: f64 = 0.0;

    for _ in 0..pairs {
        let l = rng.gen_range(1..=d);
        let h = random_taps(&mut rng, l);
        let csi = ChannelStateInfo::new(&h, &ofdm).unwrap();
        let x = random_payload(&mut rng, m);
        let body = ofdm.modulate(&x);

        let tx = add_cp(&body, d).unwrap();
        let rx = fir_apply(&tx, None, &h).unwrap();
        let cp = cp_receive(&rx, &csi, &ofdm).unwrap();

        let mut stream = pn.chips.clone();
        stream.extend_from_slice(&body);
        stream.extend_from_slice(&pn.chips);
        stream.extend_from_slice(&vec![Cplx::new(0.0, 0.0); d]);
        let rx = FirStream::new(&h).process(&stream);
        let tds = tds_receive(
            &rx[d..d + m + d],
            &rx[d + m + d..d + m + 2 * d],
            &csi,
            pn,
            &ofdm,
        )
        .unwrap();

        assert_eq!(cp.erased, tds.erased);
        for ((a, b), &erased) in tds.symbols.iter().zip(&cp.symbols).zip(&cp.erased) {
            if !erased {
                worst = worst.max((a - b).norm());
            }
        }
    }
    worst
}

#[test]
fn a3_guard_padding_equals_prefix_and_noise_folds_double() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA3);
    let pn_small = synthetic_pn(&mut rng, 8);
    let worst_small = guard_equivalence_worst(32, &pn_small, 100, 0xA3_01);
    let pn_full = pn_generate(PN_SHORT).unwrap();
    let worst_full = guard_equivalence_worst(3780, &pn_full, 100, 0xA3_02);
    assert!(worst_small < 1e-9, "M=32 deviation {worst_small:.3e}");
    assert!(worst_full < 1e-9, "M=3780 deviation {worst_full:.3e}");

    // Noise side: guard samples fold onto the block head, so its variance
    // must come out doubled while the rest of the block stays at sigma^2.
    let (m, d) = (32usize, 8usize);
    let ofdm = OfdmTransform::new(m);
    let h = [Cplx::new(1.0, 0.0)];
    let csi = ChannelStateInfo::new(&h, &ofdm).unwrap();
    let comp = rand_distr::Normal::new(0.0, 0.5f64.sqrt()).unwrap();
    let blocks = 100_000;
    let (mut head_pw, mut body_pw) = (0.0f64, 0.0f64);
    for _ in 0..blocks {
        // Transmitted frame is silence plus the guard; channel is identity.
        let mut window = vec![Cplx::new(0.0, 0.0); m];
        window.extend_from_slice(&pn_small.chips);
        for v in &mut window {
            *v += Cplx::new(comp.sample(&mut rng), comp.sample(&mut rng));
        }
        let next: Vec<Cplx> = (0..d)
            .map(|_| Cplx::new(comp.sample(&mut rng), comp.sample(&mut rng)))
            .collect();
        let (body, _) = pn_subtract_and_ola(&window, &next, &csi, &pn_small).unwrap();
        head_pw += body[..d].iter().map(|v| v.norm_sqr()).sum::<f64>();
        body_pw += body[d..].iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    let head_var = head_pw / (blocks * d) as f64;
    let body_var = body_pw / (blocks * (m - d)) as f64;
    assert!((head_var / 2.0 - 1.0).abs() < 0.05, "head var {head_var:.4}");
    assert!((body_var - 1.0).abs() < 0.05, "body var {body_var:.4}");

    announce(
        3,
        "guard padding equals prefix",
        &format!(
            "worst deviation {:.2e} (M=32) / {:.2e} (M=3780); head noise var {head_var:.3} vs body {body_var:.3}",
            worst_small, worst_full
        ),
    );
}

#[test]
fn a4_uncoded_awgn_matches_gaussian_tail() {
    let mode = TransmissionMode::dvbt_2k(Constellation::Qpsk, ConvRate::R1_2, rat(1, 4), true)
        .unwrap();
    let offset = data_snr_offset_db(&mode);
    let plan = SimPlan::new(
        mode,
        ChannelProfile::awgn(),
        (6.9, 12.15, 0.75),
        vec![Stage::Raw],
    )
    .unwrap()
    .with_seed(40)
    .with_stop(StopRule { min_errors: 500, max_bits: 60_000_000 })
    .unwrap();
    let sweep = run_sweep(&plan, 1).unwrap();

    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for r in sweep.records.iter().filter(|r| !r.censored) {
        let ber = r.ber();
        if !(1e-5..=1e-2).contains(&ber) {
            continue;
        }
        // Symbol-energy-to-noise ratio that produces this error rate for
        // Gray QPSK: BER = Q(sqrt(Es/N0)).
        let q_inv = -normal.inverse_cdf(ber);
        let predicted_db = 20.0 * q_inv.log10();
        let measured_db = r.snr_db + offset;
        let dev = measured_db - predicted_db;
        assert!(
            dev.abs() <= 0.2,
            "{:.2} dB point: measured Es/N0 {measured_db:.3} vs predicted {predicted_db:.3}",
            r.snr_db
        );
        worst = worst.max(dev.abs());
        checked += 1;
    }
    assert!(checked >= 4, "only {checked} points landed in the BER window");
    announce(
        4,
        "uncoded AWGN calibration",
        &format!("{checked} points in BER [1e-5, 1e-2], worst deviation {worst:.3} dB (bound 0.2)"),
    );
}

#[test]
fn a5_fec_codecs_against_oracles() {
    // Sequence decoder against brute force.
    let o = verify::viterbi_ml_check();
    assert!(o.pass, "{}", o.detail);

    // Outer byte code: every single-symbol error, samples of each weight up
    // to capacity, and beyond-capacity patterns must be flagged.
    let mut rng = ChaCha8Rng::seed_from_u64(0xA5);
    let msg: Vec<u8> = (0..RS_K).map(|_| rng.gen()).collect();
    let code = rs_encode(&msg).unwrap();
    for pos in 0..RS_N {
        for val in 1..=255u8 {
            let mut w = code.clone();
            w[pos] ^= val;
            let d = rs_decode(&w).unwrap();
            assert_eq!(d.message, msg);
            assert_eq!(d.corrected, 1);
        }
    }
    for weight in 2..=RS_T {
        for _ in 0..300 {
            let mut w = code.clone();
            for pos in rand::seq::index::sample(&mut rng, RS_N, weight) {
                w[pos] ^= rng.gen_range(1..=255u8);
            }
            let d = rs_decode(&w).unwrap();
            assert_eq!(d.message, msg, "weight {weight}");
            assert_eq!(d.corrected, weight);
        }
    }
    let mut flagged = 0;
    for _ in 0..200 {
        let mut w = code.clone();
        for pos in rand::seq::index::sample(&mut rng, RS_N, RS_T + 1) {
            w[pos] ^= rng.gen_range(1..=255u8);
        }
        if rs_decode(&w).is_err() {
            flagged += 1;
        }
    }
    assert_eq!(flagged, 200, "9-symbol patterns not flagged");

    // Outer bit code: exactly one flip anywhere comes back clean.
    let msg: Vec<u8> = (0..BCH_K).map(|_| rng.gen_range(0..2u8)).collect();
    let word = bch_encode(&msg).unwrap();
    let (out, status) = bch_decode(&word).unwrap();
    assert_eq!((out, status), (msg.clone(), BchStatus::Clean));
    for i in 0..BCH_N {
        let mut w = word.clone();
        w[i] ^= 1;
        let (out, status) = bch_decode(&w).unwrap();
        assert_eq!(out, msg, "flip at {i}");
        assert_eq!(status, BchStatus::CorrectedOne, "flip at {i}");
    }

    // Inner sparse code: convergence must always mean a zero syndrome,
    // checked across the waterfall where successes and failures mix.
    let sigmas: [(LdpcRate, [f64; 3]); 3] = [
        (LdpcRate::R0_4, [0.75, 0.90, 1.05]),
        (LdpcRate::R0_6, [0.58, 0.72, 0.88]),
        (LdpcRate::R0_8, [0.48, 0.60, 0.75]),
    ];
    let noise = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let mut detail = String::new();
    for (rate, sigma_list) in sigmas {
        let code = LdpcCode::for_rate(rate);
        let (mut ok, mut fail) = (0, 0);
        for sigma in sigma_list {
            for _ in 0..8 {
                let info: Vec<u8> = (0..code.k).map(|_| rng.gen_range(0..2u8)).collect();
                let cw = code.encode(&info).unwrap();
                let llrs: Vec<f64> = cw
                    .iter()
                    .map(|&b| {
                        let y = (1.0 - 2.0 * b as f64) + sigma * noise.sample(&mut rng);
                        2.0 * y / (sigma * sigma)
                    })
                    .collect();
                let d = code.decode(&llrs, 50).unwrap();
                if d.converged {
                    assert!(code.syndrome_ok(&d.codeword), "converged with bad syndrome");
                    ok += 1;
                } else {
                    fail += 1;
                }
            }
        }
        assert!(ok > 0 && fail > 0, "rate {}: {ok} ok / {fail} failed", rate.name());
        detail.push_str(&format!("{}:{ok}ok/{fail}fail ", rate.name()));
    }

    announce(
        5,
        "FEC oracles",
        &format!(
            "sequence=ML x200, byte code {} single + 2..=8 random all corrected, 9-symbol all flagged, \
             one-flip x{BCH_N} corrected, sparse-code syndrome always zero on success ({})",
            RS_N * 255,
            detail.trim_end()
        ),
    );
}

#[test]
fn a6_outer_code_sharpens_the_floor() {
    let mode = TransmissionMode::dvbt_2k(Constellation::Qpsk, ConvRate::R1_2, rat(1, 4), true)
        .unwrap();
    let plan = SimPlan::new(
        mode,
        ChannelProfile::awgn(),
        (3.0, 3.0, 1.0),
        vec![Stage::PostInner, Stage::PostOuter],
    )
    .unwrap()
    .with_seed(60)
    .with_stop(StopRule { min_errors: 100, max_bits: 15_500_000 })
    .unwrap();
    let records = run_point(&plan, 3.0, 1).unwrap();
    let inner = records.iter().find(|r| r.stage == Stage::PostInner).unwrap();
    let outer = records.iter().find(|r| r.stage == Stage::PostOuter).unwrap();

    assert!(
        inner.ber() <= QEF_BER,
        "operating point drifted: post-inner BER {:.3e}",
        inner.ber()
    );
    assert!(outer.bits >= 10_000_000, "only {} outer bits", outer.bits);
    assert!(
        10.0 * outer.ber() <= inner.ber(),
        "outer {:.3e} not 10x under inner {:.3e}",
        outer.ber(),
        inner.ber()
    );
    announce(
        6,
        "quasi-error-free protocol",
        &format!(
            "post-inner {:.2e} (<= {QEF_BER:.0e}), post-outer {} errors in {} bits => {:.2e}",
            inner.ber(),
            outer.errors,
            outer.bits,
            outer.ber()
        ),
    );
}

fn ordered_sweeps(
    mode: TransmissionMode,
    grids: &[(&str, (f64, f64, f64))],
    stop: StopRule,
    seed0: u64,
) -> Vec<(String, Sweep, f64)> {
    let mut out = Vec::new();
    for (i, (channel, grid)) in grids.iter().enumerate() {
        let plan = SimPlan::new(
            mode,
            ChannelProfile::builtin(channel).unwrap(),
            *grid,
            vec![Stage::PostInner],
        )
        .unwrap()
        .with_seed(seed0 + i as u64)
        .with_stop(stop)
        .unwrap();
        let sweep = run_sweep(&plan, 1).unwrap();
        let at = sweep
            .crossing(Stage::PostInner)
            .and_then(|c| c.at_qef)
            .unwrap_or_else(|| panic!("{}: QEF crossing not bracketed over {channel}", mode.label()));
        out.push((channel.to_string(), sweep, at));
    }
    out
}

#[test]
fn a7_channel_ordering_holds_for_both_systems() {
    let mode1 = TransmissionMode::dvbt_2k(Constellation::Qpsk, ConvRate::R1_2, rat(1, 4), true)
        .unwrap();
    let mode4 =
        TransmissionMode::dtmb(Constellation::Qpsk, LdpcRate::R0_4, rat(1, 4), true).unwrap();

    let a = ordered_sweeps(
        mode1,
        &[
            ("awgn", (2.0, 4.0, 0.5)),
            ("f1", (2.0, 4.5, 0.5)),
            ("p1", (3.0, 6.0, 1.0)),
        ],
        StopRule { min_errors: 120, max_bits: 2_600_000 },
        70,
    );
    let b = ordered_sweeps(
        mode4,
        &[
            ("awgn", (5.0, 7.0, 0.5)),
            ("f1", (6.0, 8.0, 0.5)),
            ("p1", (9.0, 12.0, 1.0)),
        ],
        StopRule { min_errors: 100, max_bits: 1_600_000 },
        80,
    );

    let mut details = Vec::new();
    for (label, sweeps) in [("prefixed", &a), ("padded", &b)] {
        assert!(
            sweeps[0].2 <= sweeps[1].2 && sweeps[1].2 <= sweeps[2].2,
            "{label}: crossings awgn {:.2} / f1 {:.2} / p1 {:.2} out of order",
            sweeps[0].2,
            sweeps[1].2,
            sweeps[2].2
        );
        details.push(format!(
            "{label} awgn {:.2} <= f1 {:.2} <= p1 {:.2} dB",
            sweeps[0].2, sweeps[1].2, sweeps[2].2
        ));
    }
    announce(7, "channel ordering", &details.join("; "));

    // Cross-system gaps are informational only: the inner codes differ, so
    // absolute deltas are not comparable figures of merit.
    for ((channel, sa, _), (_, sb, _)) in a.iter().zip(&b) {
        match compare_sweeps(sa, sb) {
            Ok(deltas) => {
                for d in deltas {
                    println!(
                        "INFO {channel} {} @{:.0e}: {:.2} dB vs {:.2} dB (delta {:+.2} dB)",
                        d.stage.name(),
                        d.target_ber,
                        d.snr_a_db,
                        d.snr_b_db,
                        d.delta_db
                    );
                }
            }
            Err(e) => println!("INFO {channel}: no shared crossings ({e})"),
        }
    }
}

#[test]
fn a8_worker_count_never_changes_the_csv() {
    let mode = TransmissionMode::dvbt_2k(Constellation::Qpsk, ConvRate::R1_2, rat(1, 4), true)
        .unwrap();
    let plan = SimPlan::new(
        mode,
        ChannelProfile::builtin("f1").unwrap(),
        (3.0, 4.0, 1.0),
        vec![Stage::Raw, Stage::PostInner, Stage::PostOuter],
    )
    .unwrap()
    .with_seed(808)
    .with_stop(StopRule { min_errors: 100, max_bits: 400_000 })
    .unwrap();

    let csv1 = records_to_csv(&run_sweep(&plan, 1).unwrap().records);
    let csv2 = records_to_csv(&run_sweep(&plan, 2).unwrap().records);
    let csv4 = records_to_csv(&run_sweep(&plan, 4).unwrap().records);
    assert_eq!(csv1, csv2);
    assert_eq!(csv1, csv4);
    announce(
        8,
        "determinism",
        &format!("workers 1/2/4 byte-identical over {} records", csv1.lines().count() - 1),
    );
}
