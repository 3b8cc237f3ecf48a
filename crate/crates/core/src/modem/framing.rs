//! Transmit-side assembly of complete symbols and frames.

use super::carriers::CarrierPlan;
use super::ofdm::{add_cp, add_tds_header, OfdmTransform};
use super::pn::PnHeader;
use super::ModemError;
use crate::Cplx;

/// One cyclic-prefixed symbol: carriers → unitary IDFT → prefix.
pub fn cp_symbol(
    data: &[Cplx],
    plan: &CarrierPlan,
    ofdm: &OfdmTransform,
    symbol_index: u64,
    gi_samples: usize,
) -> Result<Vec<Cplx>, ModemError> {
    let freq = plan.frame_carriers(data, symbol_index)?;
    let body = ofdm.modulate(&freq);
    add_cp(&body, gi_samples)
}

/// One PN-padded frame: carriers → unitary IDFT → PN guard at the tail.
pub fn tds_frame(
    data: &[Cplx],
    plan: &CarrierPlan,
    ofdm: &OfdmTransform,
    pn: &PnHeader,
) -> Result<Vec<Cplx>, ModemError> {
    let freq = plan.frame_carriers(data, 0)?;
    let body = ofdm.modulate(&freq);
    Ok(add_tds_header(&body, pn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::pn::{pn_generate, PN_LONG, PN_SHORT};
    use crate::modem::qam::qam_map;
    use crate::sysconfig::{rat, Constellation, ConvRate, LdpcRate, TransmissionMode};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_qam(rng: &mut impl Rng, n: usize, c: Constellation) -> Vec<Cplx> {
        let bits: Vec<u8> = (0..n * c.bits_per_symbol())
            .map(|_| rng.gen_range(0..2u8))
            .collect();
        qam_map(&bits, c).unwrap()
    }

    /// With constant-modulus data, Parseval makes the per-symbol energy an
    /// exact constant — it must equal the analytic average power used for
    /// noise calibration.
    #[test]
    fn cp_symbol_power_matches_analytic() {
        let mode =
            TransmissionMode::dvbt_2k(Constellation::Qpsk, ConvRate::R1_2, rat(1, 4), true)
                .unwrap();
        let plan = CarrierPlan::dvbt_2k();
        let ofdm = OfdmTransform::new(2048);
        let mut rng = ChaCha8Rng::seed_from_u64(0xf7_1);
        for sym in 0..4u64 {
            let data = random_qam(&mut rng, 1512, Constellation::Qpsk);
            let freq = plan.frame_carriers(&data, sym).unwrap();
            let body = ofdm.modulate(&freq);
            let body_avg: f64 =
                body.iter().map(|v| v.norm_sqr()).sum::<f64>() / body.len() as f64;
            let rel = (body_avg - mode.average_tx_power()) / mode.average_tx_power();
            assert!(rel.abs() < 1e-9, "symbol {sym}: {body_avg}");
        }
        // Full symbol with CP keeps the length accounting.
        let data = random_qam(&mut rng, 1512, Constellation::Qpsk);
        let tx = cp_symbol(&data, &plan, &ofdm, 0, mode.gi_samples()).unwrap();
        assert_eq!(tx.len(), mode.symbol_samples());
    }

    #[test]
    fn tds_frame_power_matches_analytic() {
        let plan = CarrierPlan::dtmb();
        let ofdm = OfdmTransform::new(3780);
        let mut rng = ChaCha8Rng::seed_from_u64(0xf7_2);
        for (gi_len, gi) in [(PN_LONG, rat(1, 4)), (PN_SHORT, rat(1, 9))] {
            let mode =
                TransmissionMode::dtmb(Constellation::Qpsk, LdpcRate::R0_4, gi, true).unwrap();
            let pn = pn_generate(gi_len).unwrap();
            let data = random_qam(&mut rng, 3744, Constellation::Qpsk);
            let tx = tds_frame(&data, &plan, &ofdm, &pn).unwrap();
            assert_eq!(tx.len(), mode.symbol_samples());
            let avg: f64 = tx.iter().map(|v| v.norm_sqr()).sum::<f64>() / tx.len() as f64;
            let want = mode.average_tx_power();
            assert!(((avg - want) / want).abs() < 1e-9, "gi {gi}: {avg} vs {want}");
            // Guard region power is exactly 2.
            let tail: f64 = tx[3780..].iter().map(|v| v.norm_sqr()).sum::<f64>()
                / gi_len as f64;
            assert!((tail - 2.0).abs() < 1e-12);
        }
    }
}
