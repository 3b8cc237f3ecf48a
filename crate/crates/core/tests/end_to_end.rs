//! Whole-chain integration: every benchmark mode through every built-in
//! channel, noiseless, must come back error-free at all three stages; a
//! noisy point must reproduce bit-for-bit from the same seed.

use dttsim_core::channel::ChannelProfile;
use dttsim_core::harness::{records_to_csv, run_point, SimPlan, Stage, StopRule};
use dttsim_core::verify::reference_modes;

fn tiny_plan(mode: dttsim_core::sysconfig::TransmissionMode, channel: &str) -> SimPlan {
    SimPlan::new(
        mode,
        ChannelProfile::builtin(channel).unwrap(),
        (0.0, 0.0, 1.0),
        vec![Stage::Raw, Stage::PostInner, Stage::PostOuter],
    )
    .unwrap()
    .with_stop(StopRule { min_errors: 100, max_bits: 1 })
    .unwrap()
    .with_trial_span(1)
    .unwrap()
}

#[test]
fn noiseless_chains_are_error_free_everywhere() {
    for (mode, _, _) in reference_modes() {
        for channel in ["awgn", "f1", "p1"] {
            let plan = tiny_plan(mode, channel);
            let records = run_point(&plan, f64::INFINITY, 1).unwrap();
            assert_eq!(records.len(), 3, "{} {channel}", mode.label());
            for r in &records {
                assert!(r.bits > 0, "{} {channel} {}", mode.label(), r.stage.name());
                assert_eq!(
                    r.errors,
                    0,
                    "{} over {channel} at stage {}: {} errors in {} bits",
                    mode.label(),
                    r.stage.name(),
                    r.errors,
                    r.bits
                );
            }
        }
    }
}

#[test]
fn noisy_point_reproduces_from_seed() {
    let (mode, _, _) = reference_modes()[0];
    let plan = SimPlan::new(
        mode,
        ChannelProfile::builtin("awgn").unwrap(),
        (4.0, 4.0, 1.0),
        vec![Stage::Raw, Stage::PostInner],
    )
    .unwrap()
    .with_seed(7)
    .with_stop(StopRule { min_errors: 100, max_bits: 300_000 })
    .unwrap();

    let a = records_to_csv(&run_point(&plan, 4.0, 1).unwrap());
    let b = records_to_csv(&run_point(&plan, 4.0, 2).unwrap());
    assert_eq!(a, b);
    assert!(a.lines().count() > 1);
}
