//! Multipath FIR channel with explicit inter-block interference, calibrated
//! complex AWGN, and tap-profile loading.
//!
//! A block of P samples through an L-tap channel sees two contributions:
//! the lower-triangular Toeplitz product with the current block (intra-block
//! ISI) and the upper-triangular corner product with the previous block's
//! tail (inter-block interference). `fir_apply` exposes that block algebra
//! directly; `FirStream` is the streaming equivalent for long sample runs.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::Cplx;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("channel has {l} taps but blocks are only {p} samples")]
    TooManyTaps { l: usize, p: usize },
    #[error("profile {0:?} has no taps")]
    Empty(String),
    #[error("negative delay {0} µs")]
    NegativeDelay(f64),
    #[error("profile line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("reading profile: {0}")]
    Io(String),
    #[error("noise reference power must be positive, got {0}")]
    BadReferencePower(f64),
}

/// One echo: excess delay in µs and complex gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileTap {
    pub delay_us: f64,
    pub gain: Cplx,
}

/// A static multipath profile in physical units. Gains (line-of-sight
/// included) are normalized to unit total power at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    pub name: String,
    pub taps: Vec<ProfileTap>,
    /// Direct path at zero delay, if the profile is Ricean.
    pub los: Option<Cplx>,
}

/// A profile quantized to one system's elementary sample period.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedChannel {
    /// Dense impulse response h[0..L), unit power.
    pub h: Vec<Cplx>,
    /// Worst tap-placement error as a fraction of the sample period.
    pub max_quantization_error: f64,
}

impl ChannelProfile {
    /// Pure-noise reference: a single unit tap.
    pub fn awgn() -> Self {
        ChannelProfile {
            name: "awgn".into(),
            taps: vec![ProfileTap {
                delay_us: 0.0,
                gain: Cplx::new(1.0, 0.0),
            }],
            los: None,
        }
    }

    /// Bundled fixed-reception Ricean profile (20 echoes + direct path).
    pub fn f1() -> Self {
        Self::from_text("f1", include_str!("../data/f1.txt"))
            .expect("bundled f1 profile must parse")
    }

    /// Bundled portable-reception Rayleigh profile (same 20 echoes, no
    /// direct path).
    pub fn p1() -> Self {
        Self::from_text("p1", include_str!("../data/p1.txt"))
            .expect("bundled p1 profile must parse")
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "awgn" => Some(Self::awgn()),
            "f1" => Some(Self::f1()),
            "p1" => Some(Self::p1()),
            _ => None,
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ChannelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ChannelError::Io(e.to_string()))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "profile".into());
        Self::from_text(&name, &text)
    }

    /// Parse the plain-text tap format:
    ///
    /// ```text
    /// format polar            # or cartesian (default)
    /// los 3.47 0.0            # optional direct path
    /// 1.003019 0.057662 4.855121   # delay_us then (re im) or (amp phase)
    /// ```
    pub fn from_text(name: &str, text: &str) -> Result<Self, ChannelError> {
        let mut polar = false;
        let mut los: Option<Cplx> = None;
        let mut taps = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| ChannelError::Parse {
                line: idx + 1,
                msg: msg.into(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "format" => {
                    polar = match fields.get(1) {
                        Some(&"polar") => true,
                        Some(&"cartesian") => false,
                        _ => return Err(err("expected `format polar|cartesian`")),
                    };
                }
                "los" => {
                    if fields.len() != 3 {
                        return Err(err("expected `los <a> <b>`"));
                    }
                    los = Some(parse_gain(&fields[1..], polar).map_err(|m| err(&m))?);
                }
                _ => {
                    if fields.len() != 3 {
                        return Err(err("expected `<delay_us> <a> <b>`"));
                    }
                    let delay_us: f64 =
                        fields[0].parse().map_err(|_| err("bad delay"))?;
                    if delay_us < 0.0 {
                        return Err(ChannelError::NegativeDelay(delay_us));
                    }
                    let gain = parse_gain(&fields[1..], polar).map_err(|m| err(&m))?;
                    taps.push(ProfileTap { delay_us, gain });
                }
            }
        }
        if taps.is_empty() {
            return Err(ChannelError::Empty(name.into()));
        }
        let mut profile = ChannelProfile {
            name: name.into(),
            taps,
            los,
        };
        profile.normalize();
        Ok(profile)
    }

    fn total_power(&self) -> f64 {
        self.taps.iter().map(|t| t.gain.norm_sqr()).sum::<f64>()
            + self.los.map_or(0.0, |g| g.norm_sqr())
    }

    fn normalize(&mut self) {
        let scale = 1.0 / self.total_power().sqrt();
        for t in &mut self.taps {
            t.gain *= scale;
        }
        if let Some(g) = &mut self.los {
            *g *= scale;
        }
    }

    /// Quantize tap delays to the elementary period of `rate_hz` and return
    /// the dense impulse response. Taps landing on the same sample add; the
    /// result is re-normalized to unit power so SNR calibration stays exact.
    pub fn realize(&self, rate_hz: f64) -> RealizedChannel {
        let period_us = 1e6 / rate_hz;
        let mut entries: Vec<(usize, Cplx)> = Vec::new();
        let mut worst = 0.0f64;
        if let Some(g) = self.los {
            entries.push((0, g));
        }
        for t in &self.taps {
            let exact = t.delay_us / period_us;
            let idx = exact.round() as usize;
            worst = worst.max((exact - idx as f64).abs());
            entries.push((idx, t.gain));
        }
        let len = entries.iter().map(|(i, _)| i + 1).max().unwrap_or(1);
        let mut h = vec![Cplx::new(0.0, 0.0); len];
        for (i, g) in entries {
            h[i] += g;
        }
        let power: f64 = h.iter().map(|v| v.norm_sqr()).sum();
        let scale = 1.0 / power.sqrt();
        for v in &mut h {
            *v *= scale;
        }
        RealizedChannel {
            h,
            max_quantization_error: worst,
        }
    }
}

fn parse_gain(fields: &[&str], polar: bool) -> Result<Cplx, String> {
    let a: f64 = fields[0].parse().map_err(|_| "bad gain field".to_string())?;
    let b: f64 = fields[1].parse().map_err(|_| "bad gain field".to_string())?;
    Ok(if polar {
        Cplx::from_polar(a, b)
    } else {
        Cplx::new(a, b)
    })
}

/// One block through the channel: intra-block convolution plus the previous
/// block's spill-over. `prev` of `None` means a silent predecessor.
pub fn fir_apply(
    block: &[Cplx],
    prev: Option<&[Cplx]>,
    h: &[Cplx],
) -> Result<Vec<Cplx>, ChannelError> {
    let p = block.len();
    let l = h.len();
    if l > p {
        return Err(ChannelError::TooManyTaps { l, p });
    }
    if let Some(prev) = prev {
        assert_eq!(prev.len(), p, "previous block must have the same length");
    }
    let mut out = Vec::with_capacity(p);
    for r in 0..p {
        let mut acc = Cplx::new(0.0, 0.0);
        for (l_idx, &tap) in h.iter().enumerate() {
            if l_idx <= r {
                acc += tap * block[r - l_idx];
            } else if let Some(prev) = prev {
                acc += tap * prev[p + r - l_idx];
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Streaming FIR holding the last L−1 input samples between calls; matches
/// `fir_apply` block algebra exactly on concatenated input.
pub struct FirStream {
    h: Vec<Cplx>,
    tail: Vec<Cplx>,
}

impl FirStream {
    pub fn new(h: &[Cplx]) -> Self {
        FirStream {
            h: h.to_vec(),
            tail: vec![Cplx::new(0.0, 0.0); h.len().saturating_sub(1)],
        }
    }

    pub fn process(&mut self, block: &[Cplx]) -> Vec<Cplx> {
        let p = block.len();
        let l = self.h.len();
        let mut out = Vec::with_capacity(p);
        for r in 0..p {
            let mut acc = Cplx::new(0.0, 0.0);
            for (l_idx, &tap) in self.h.iter().enumerate() {
                acc += tap
                    * if l_idx <= r {
                        block[r - l_idx]
                    } else {
                        // tail holds the last l−1 pre-channel samples.
                        self.tail[self.tail.len() + r - l_idx]
                    };
            }
            out.push(acc);
        }
        // Slide the memory window.
        if l > 1 {
            let keep = l - 1;
            if p >= keep {
                self.tail.copy_from_slice(&block[p - keep..]);
            } else {
                self.tail.rotate_left(p);
                let n = self.tail.len();
                self.tail[n - p..].copy_from_slice(block);
            }
        }
        out
    }

    /// The channel's ring-out after the last processed sample: what the next
    /// L−1 output samples would be if silence followed.
    pub fn ringout(&self) -> Vec<Cplx> {
        let l = self.h.len();
        if l <= 1 {
            return Vec::new();
        }
        let keep = l - 1;
        let mut out = Vec::with_capacity(keep);
        for r in 0..keep {
            let mut acc = Cplx::new(0.0, 0.0);
            for (l_idx, &tap) in self.h.iter().enumerate().skip(r + 1) {
                acc += tap * self.tail[keep + r - l_idx];
            }
            out.push(acc);
        }
        out
    }
}

/// Noise calibration: SNR referenced to the mode's analytic average
/// transmit power, never to per-block measured power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub reference_power: f64,
}

impl NoiseSpec {
    pub fn new(snr_db: f64, reference_power: f64) -> Result<Self, ChannelError> {
        if !(reference_power > 0.0) {
            return Err(ChannelError::BadReferencePower(reference_power));
        }
        Ok(NoiseSpec {
            snr_db,
            reference_power,
        })
    }

    /// Total complex noise variance σ²; each real component gets σ²/2.
    /// Infinite SNR means a noiseless run (variance 0).
    pub fn variance(&self) -> f64 {
        if self.snr_db.is_infinite() && self.snr_db > 0.0 {
            0.0
        } else {
            self.reference_power / 10f64.powf(self.snr_db / 10.0)
        }
    }
}

/// Add circularly-symmetric complex Gaussian noise in place.
pub fn awgn_add(block: &mut [Cplx], spec: &NoiseSpec, rng: &mut impl Rng) {
    let var = spec.variance();
    if var == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, (var / 2.0).sqrt()).expect("valid sigma");
    for v in block.iter_mut() {
        *v += Cplx::new(normal.sample(rng), normal.sample(rng));
    }
}
