//! Carrier role maps: which active carrier carries data, pilots or
//! signalling, and where active carriers land among the FFT bins.
//!
//! The 2K plan is a constructive stand-in with the standard's carrier
//! *counts* — 1512 data, 17 TPS and 176 pilots per symbol, 1705 active —
//! rather than its published position tables: scattered pilots advance by
//! three carriers per symbol on a 12-carrier lattice, a fixed continual set
//! overlaps that lattice so every phase shows the same pilot total, and TPS
//! carriers sit on a 96-carrier grid. Positions are shipped as CSV next to
//! the crate for inspection and regression (`data/carriers_*.csv`).
//!
//! The 3780-carrier plan is exact: every 105th carrier carries system
//! information (36 of them), the rest are data.

use super::{pn::m_sequence_deg11, ModemError};
use crate::sysconfig::{pilot_power_boost, ratio_to_f64, System};
use crate::Cplx;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarrierRole {
    Data,
    ScatteredPilot,
    ContinualPilot,
    Tps,
    SystemInfo,
}

impl CarrierRole {
    pub fn name(self) -> &'static str {
        match self {
            CarrierRole::Data => "data",
            CarrierRole::ScatteredPilot => "scattered_pilot",
            CarrierRole::ContinualPilot => "continual_pilot",
            CarrierRole::Tps => "tps",
            CarrierRole::SystemInfo => "system_info",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "data" => CarrierRole::Data,
            "scattered_pilot" => CarrierRole::ScatteredPilot,
            "continual_pilot" => CarrierRole::ContinualPilot,
            "tps" => CarrierRole::Tps,
            "system_info" => CarrierRole::SystemInfo,
            _ => return None,
        })
    }
}

/// Role map over active carriers, one row per scattered-pilot phase.
#[derive(Debug, Clone, PartialEq)]
pub struct CarrierPlan {
    pub system: System,
    pub fft_size: usize,
    pub active: usize,
    /// Scattered-pilot cycle length: 4 for the 2K plan, 1 for 3780.
    pub phases: usize,
    /// Pilot amplitude relative to a unit data cell.
    pub pilot_amplitude: f64,
    roles: Vec<Vec<CarrierRole>>,
    /// ±1 reference modulation per active carrier (pilots/TPS/info).
    signs: Vec<f64>,
}

impl CarrierPlan {
    /// 2K plan: 2048-point FFT, 1705 active carriers, 4 scattered phases.
    pub fn dvbt_2k() -> Self {
        let roles = dvbt_2k_roles();
        CarrierPlan {
            system: System::Dvbt,
            fft_size: 2048,
            active: 1705,
            phases: 4,
            pilot_amplitude: ratio_to_f64(pilot_power_boost()).sqrt(),
            signs: reference_signs(1705),
            roles,
        }
    }

    /// 3780-carrier plan: fully active transform, 36 info carriers.
    pub fn dtmb() -> Self {
        let mut row = vec![CarrierRole::Data; 3780];
        for i in 0..36 {
            row[105 * i] = CarrierRole::SystemInfo;
        }
        CarrierPlan {
            system: System::Dtmb,
            fft_size: 3780,
            active: 3780,
            phases: 1,
            pilot_amplitude: 1.0,
            signs: reference_signs(3780),
            roles: vec![row],
        }
    }

    /// Role row for a symbol index (scattered pattern advances mod phases).
    pub fn roles(&self, symbol_index: u64) -> &[CarrierRole] {
        &self.roles[(symbol_index % self.phases as u64) as usize]
    }

    /// FFT bin of an active-carrier index: active carriers are centered on
    /// DC, unused edge bins are shut down. The fully-active 3780 plan is the
    /// identity.
    pub fn bin_of_active(&self, a: usize) -> usize {
        debug_assert!(a < self.active);
        let center = (self.active - 1) / 2;
        (a + self.fft_size - center) % self.fft_size
    }

    /// Number of data carriers per symbol (identical across phases).
    pub fn data_count(&self) -> usize {
        self.roles[0]
            .iter()
            .filter(|r| matches!(r, CarrierRole::Data))
            .count()
    }

    /// FFT bins carrying data for a given symbol index, ascending by
    /// active-carrier index (the order data symbols are laid out in).
    pub fn data_bins(&self, symbol_index: u64) -> Vec<usize> {
        self.roles(symbol_index)
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, CarrierRole::Data))
            .map(|(a, _)| self.bin_of_active(a))
            .collect()
    }

    /// Assemble one frequency-domain block: data on data carriers, boosted
    /// ±1 pilots, ±1 TPS/system-info, zeros on shut-down bins.
    pub fn frame_carriers(
        &self,
        data: &[Cplx],
        symbol_index: u64,
    ) -> Result<Vec<Cplx>, ModemError> {
        let want = self.data_count();
        if data.len() != want {
            return Err(ModemError::LengthMismatch {
                what: "data symbols",
                got: data.len(),
                want,
            });
        }
        let mut out = vec![Cplx::new(0.0, 0.0); self.fft_size];
        let mut next_data = 0usize;
        for (a, role) in self.roles(symbol_index).iter().enumerate() {
            let bin = self.bin_of_active(a);
            out[bin] = match role {
                CarrierRole::Data => {
                    let v = data[next_data];
                    next_data += 1;
                    v
                }
                CarrierRole::ScatteredPilot | CarrierRole::ContinualPilot => {
                    Cplx::new(self.pilot_amplitude * self.signs[a], 0.0)
                }
                CarrierRole::Tps | CarrierRole::SystemInfo => Cplx::new(self.signs[a], 0.0),
            };
        }
        Ok(out)
    }

    /// Pull the data carriers back out of a frequency-domain block.
    pub fn extract_data(&self, freq: &[Cplx], symbol_index: u64) -> Vec<Cplx> {
        self.data_bins(symbol_index)
            .iter()
            .map(|&b| freq[b])
            .collect()
    }

    /// (data, pilots, tps/info) counts for one phase.
    pub fn counts(&self, phase: usize) -> (usize, usize, usize) {
        let mut data = 0;
        let mut pilots = 0;
        let mut other = 0;
        for r in &self.roles[phase] {
            match r {
                CarrierRole::Data => data += 1,
                CarrierRole::ScatteredPilot | CarrierRole::ContinualPilot => pilots += 1,
                CarrierRole::Tps | CarrierRole::SystemInfo => other += 1,
            }
        }
        (data, pilots, other)
    }

    /// CSV dump: `phase,carrier_index,role` per active carrier and phase.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("phase,carrier_index,role\n");
        for (p, row) in self.roles.iter().enumerate() {
            for (a, role) in row.iter().enumerate() {
                s.push_str(&format!("{p},{a},{}\n", role.name()));
            }
        }
        s
    }

    /// Rebuild a plan from its CSV dump. Geometry comes from the system tag;
    /// the file supplies only the role table.
    pub fn from_csv(system: System, text: &str) -> Result<Self, ModemError> {
        let mut template = match system {
            System::Dvbt => CarrierPlan::dvbt_2k(),
            System::Dtmb => CarrierPlan::dtmb(),
        };
        let mut roles = vec![vec![None::<CarrierRole>; template.active]; template.phases];
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 || line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let bad = || ModemError::PlanFile(format!("line {}: {line:?}", lineno + 1));
            let phase: usize = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
            let idx: usize = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
            let role = parts
                .next()
                .and_then(CarrierRole::parse)
                .ok_or_else(bad)?;
            if phase >= template.phases || idx >= template.active {
                return Err(bad());
            }
            roles[phase][idx] = Some(role);
        }
        let mut table = Vec::with_capacity(template.phases);
        for (p, row) in roles.into_iter().enumerate() {
            let mut out = Vec::with_capacity(template.active);
            for (a, r) in row.into_iter().enumerate() {
                out.push(r.ok_or_else(|| {
                    ModemError::PlanFile(format!("missing carrier {a} in phase {p}"))
                })?);
            }
            table.push(out);
        }
        template.roles = table;
        Ok(template)
    }
}

/// ±1 per active carrier from the degree-11 reference sequence.
fn reference_signs(active: usize) -> Vec<f64> {
    let seq = m_sequence_deg11();
    (0..active)
        .map(|a| 1.0 - 2.0 * seq[a % seq.len()] as f64)
        .collect()
}

/// The constructive 2K role table. Scattered pilots occupy every 12th
/// carrier starting at 3·phase; the continual set is {multiples of 144} ∪
/// {3,6,9 mod 156}; TPS sits at 1 mod 96. The overlap between scattered and
/// continual sets is what keeps the distinct pilot total at 176 per phase.
fn dvbt_2k_roles() -> Vec<Vec<CarrierRole>> {
    const ACTIVE: usize = 1705;
    let mut continual = Vec::new();
    for a in (0..ACTIVE).step_by(144) {
        continual.push(a);
    }
    for start in [3usize, 6, 9] {
        for a in (start..ACTIVE).step_by(156) {
            continual.push(a);
        }
    }
    let mut rows = Vec::with_capacity(4);
    for phase in 0..4usize {
        let mut row = vec![CarrierRole::Data; ACTIVE];
        for &a in &continual {
            row[a] = CarrierRole::ContinualPilot;
        }
        for a in ((3 * phase)..ACTIVE).step_by(12) {
            if matches!(row[a], CarrierRole::Data) {
                row[a] = CarrierRole::ScatteredPilot;
            }
        }
        for a in (1..ACTIVE).step_by(96).take(17) {
            debug_assert!(matches!(row[a], CarrierRole::Data));
            row[a] = CarrierRole::Tps;
        }
        rows.push(row);
    }
    rows
}
