//! Command-line front end: Monte-Carlo BER sweeps, oracle self-checks,
//! gnuplot data reshaping, the rate/overhead tables and PN constants.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dttsim_core::channel::ChannelProfile;
use dttsim_core::harness::{
    data_snr_offset_db, records_from_csv, records_to_csv, reference_tx_stream, run_point,
    run_sweep, SimPlan, Stage, StageCrossing, StopRule, Sweep, COMPARE_BER, QEF_BER,
};
use dttsim_core::modem::pn::pn_generate;
use dttsim_core::sysconfig::{
    mbps, power_efficiency_dtmb, power_efficiency_dvbt, rat, ratio_to_f64, Constellation,
    ConvRate, LdpcRate, Rat, System, TransmissionMode,
};
use dttsim_core::verify;
use dttsim_core::Cplx;

#[derive(Parser)]
#[command(name = "dttsim", version, about = "Guard-interval trade-off simulator for CP-OFDM and PN-padded multicarrier chains")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a Monte-Carlo BER sweep and emit CSV records.
    Simulate(SimulateArgs),
    /// Run the oracle self-checks; exits nonzero on any failure.
    Verify,
    /// Reshape sweep CSV into a gnuplot-friendly data file.
    Plot {
        /// CSV written by `simulate`
        input: PathBuf,
        /// Output path (stdout when omitted)
        output: Option<PathBuf>,
    },
    /// Print useful-bitrate rows for configurations.
    Bitrate(ModeSelect),
    /// Print power-efficiency rows for configurations.
    Efficiency(ModeSelect),
    /// PN guard-sequence constants.
    #[command(subcommand)]
    Pn(PnCmd),
}

#[derive(Subcommand)]
enum PnCmd {
    /// Dump the PN guard chips as CSV (index,re,im).
    Dump {
        /// Guard length in chips (420 or 945)
        #[arg(long, default_value_t = 420)]
        length: usize,
        /// Output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Transmission system: dvbt | dtmb
    #[arg(long)]
    system: String,
    /// Constellation: qpsk | 16qam | 64qam
    #[arg(long)]
    map: String,
    /// Inner-code rate: 1/2, 2/3, 3/4, 5/6, 7/8 (dvbt) or 0.4, 0.6, 0.8 (dtmb)
    #[arg(long)]
    rate: String,
    /// Guard fraction: 1/4, 1/8, 1/16, 1/32 (dvbt) or 1/4, 1/9 (dtmb)
    #[arg(long, default_value = "1/4")]
    gi: String,
    /// Channel: awgn | f1 | p1 | file:PATH
    #[arg(long, default_value = "awgn")]
    channel: String,
    /// SNR grid start:stop:step, dB
    #[arg(long)]
    snr: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Stop rule: bit errors per stage before a point converges
    #[arg(long, default_value_t = 500)]
    min_errors: u64,
    /// Stop rule: bit cap on the first-listed stage
    #[arg(long, default_value_t = 50_000_000)]
    max_bits: u64,
    /// Comma-separated: raw, post_inner, post_outer
    #[arg(long, default_value = "post_inner,post_outer")]
    stages: String,
    /// Write records here (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Packets (dvbt) or code blocks (dtmb) per trial
    #[arg(long)]
    trial_span: Option<usize>,
    /// Disable the outer (RS / BCH) code
    #[arg(long)]
    no_outer: bool,
    /// Write trial 0's transmit samples as CSV (index,re,im)
    #[arg(long)]
    dump_iq: Option<PathBuf>,
}

/// Mode selection shared by `bitrate` and `efficiency`. With no selector
/// flags the six benchmark configurations are printed, outer code off and
/// on. Selecting a single mode requires system, map and rate together.
#[derive(Args)]
struct ModeSelect {
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    rate: Option<String>,
    #[arg(long, default_value = "1/4")]
    gi: String,
    #[arg(long)]
    no_outer: bool,
}

fn parse_gi(s: &str) -> Result<Rat, String> {
    let parts: Vec<&str> = s.split('/').collect();
    let err = || format!("bad guard fraction '{s}', expected e.g. 1/4");
    match parts.as_slice() {
        [n, d] => {
            let n: i128 = n.trim().parse().map_err(|_| err())?;
            let d: i128 = d.trim().parse().map_err(|_| err())?;
            if d == 0 {
                return Err(err());
            }
            Ok(rat(n, d))
        }
        [n] => Ok(rat(n.trim().parse().map_err(|_| err())?, 1)),
        _ => Err(err()),
    }
}

fn parse_map(s: &str) -> Result<Constellation, String> {
    [Constellation::Qpsk, Constellation::Qam16, Constellation::Qam64]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| format!("unknown constellation '{s}' (qpsk, 16qam, 64qam)"))
}

fn parse_mode(
    system: &str,
    map: &str,
    rate: &str,
    gi: &str,
    outer: bool,
) -> Result<TransmissionMode, String> {
    let constellation = parse_map(map)?;
    let gi = parse_gi(gi)?;
    match system {
        "dvbt" => {
            let r = ConvRate::ALL
                .into_iter()
                .find(|r| r.name() == rate)
                .ok_or_else(|| format!("unknown dvbt rate '{rate}' (1/2, 2/3, 3/4, 5/6, 7/8)"))?;
            TransmissionMode::dvbt_2k(constellation, r, gi, outer).map_err(|e| e.to_string())
        }
        "dtmb" => {
            let r = LdpcRate::ALL
                .into_iter()
                .find(|r| r.name() == rate)
                .ok_or_else(|| format!("unknown dtmb rate '{rate}' (0.4, 0.6, 0.8)"))?;
            TransmissionMode::dtmb(constellation, r, gi, outer).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown system '{other}' (dvbt, dtmb)")),
    }
}

fn parse_channel(s: &str) -> Result<ChannelProfile, String> {
    if let Some(path) = s.strip_prefix("file:") {
        return ChannelProfile::load(Path::new(path)).map_err(|e| e.to_string());
    }
    ChannelProfile::builtin(s)
        .ok_or_else(|| format!("unknown channel '{s}' (awgn, f1, p1, file:PATH)"))
}

fn parse_snr(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let err = || format!("bad SNR grid '{s}', expected start:stop:step");
    match parts.as_slice() {
        [a, b, c] => Ok((
            a.trim().parse().map_err(|_| err())?,
            b.trim().parse().map_err(|_| err())?,
            c.trim().parse().map_err(|_| err())?,
        )),
        _ => Err(err()),
    }
}

fn parse_stages(s: &str) -> Result<Vec<Stage>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| Stage::parse(t).ok_or_else(|| format!("unknown stage '{t}' (raw, post_inner, post_outer)")))
        .collect()
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn iq_csv(samples: &[Cplx]) -> String {
    let mut out = String::with_capacity(16 + samples.len() * 48);
    out.push_str("index,re,im\n");
    for (i, s) in samples.iter().enumerate() {
        let _ = writeln!(out, "{i},{:.12e},{:.12e}", s.re, s.im);
    }
    out
}

fn crossing_line(c: &StageCrossing) -> String {
    let fmt = |x: Option<f64>| match x {
        Some(v) => format!("{v:.2} dB"),
        None => "not reached".into(),
    };
    let mut line = format!(
        "{:<10}  BER {QEF_BER:.0e} at {},  BER {COMPARE_BER:.0e} at {}",
        c.stage.name(),
        fmt(c.at_qef),
        fmt(c.at_compare)
    );
    if c.monotonicity_violations > 0 {
        let _ = write!(line, "  [{} monotonicity violation(s)]", c.monotonicity_violations);
    }
    line
}

fn sweep_summary(plan: &SimPlan, sweep: &Sweep) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} over {}, {} SNR points, seed {}",
        plan.mode.label(),
        plan.channel.name,
        plan.snr_points().len(),
        plan.base_seed
    );
    let _ = writeln!(
        out,
        "# data-carrier Es/N0 = plan SNR {:+.2} dB (average tx power and guard-noise folding)",
        data_snr_offset_db(&plan.mode)
    );
    for c in &sweep.crossings {
        let _ = writeln!(out, "{}", crossing_line(c));
    }
    out
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), String> {
    let mode = parse_mode(&a.system, &a.map, &a.rate, &a.gi, !a.no_outer)?;
    let channel = parse_channel(&a.channel)?;
    let snr = parse_snr(&a.snr)?;
    let stages = parse_stages(&a.stages)?;
    let mut plan = SimPlan::new(mode, channel, snr, stages)
        .map_err(|e| e.to_string())?
        .with_seed(a.seed)
        .with_stop(StopRule { min_errors: a.min_errors, max_bits: a.max_bits })
        .map_err(|e| e.to_string())?;
    if let Some(span) = a.trial_span {
        plan = plan.with_trial_span(span).map_err(|e| e.to_string())?;
    }

    if let Some(path) = &a.dump_iq {
        let tx = reference_tx_stream(&plan).map_err(|e| e.to_string())?;
        std::fs::write(path, iq_csv(&tx)).map_err(|e| format!("{}: {e}", path.display()))?;
    }

    // A single grid point is a measurement, not a sweep: skip crossings.
    let sweep = match plan.snr_points().as_slice() {
        [only] => Sweep {
            records: run_point(&plan, *only, a.workers).map_err(|e| e.to_string())?,
            crossings: Vec::new(),
        },
        _ => run_sweep(&plan, a.workers).map_err(|e| e.to_string())?,
    };
    let csv = records_to_csv(&sweep.records);
    let summary = sweep_summary(&plan, &sweep);
    match &a.out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| format!("{}: {e}", path.display()))?;
            print!("{summary}");
        }
        None => {
            print!("{csv}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn cmd_verify() -> ExitCode {
    let outcomes = verify::run_all();
    for o in &outcomes {
        println!("{}", o.line());
    }
    if outcomes.iter().all(|o| o.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn cmd_plot(input: &Path, output: Option<&Path>) -> Result<(), String> {
    let text = std::fs::read_to_string(input).map_err(|e| format!("{}: {e}", input.display()))?;
    let records = records_from_csv(&text).map_err(|e| e.to_string())?;
    write_or_print(output, &dttsim_core::harness::plot_data(&records))
}

const MODE_ROW_HEADER: &str = "system,fft,gi,map,rate,outer,bitrate_mbps,power_efficiency";

fn mode_row(mode: &TransmissionMode) -> Result<String, String> {
    let report = mode.useful_bitrate().map_err(|e| e.to_string())?;
    let budget = mode.overhead_budget();
    let eff = match mode.system {
        System::Dvbt => power_efficiency_dvbt(&budget),
        System::Dtmb => power_efficiency_dtmb(&budget),
    }
    .map_err(|e| e.to_string())?;
    Ok(format!(
        "{},{},{},{},{},{},{:.2},{:.2}",
        match mode.system {
            System::Dvbt => "dvbt",
            System::Dtmb => "dtmb",
        },
        mode.fft_size,
        mode.gi_fraction,
        mode.constellation.name(),
        mode.inner.name(),
        mode.outer_enabled,
        mbps(report.selected(mode.outer_enabled)),
        ratio_to_f64(eff),
    ))
}

fn selected_modes(sel: &ModeSelect) -> Result<Vec<TransmissionMode>, String> {
    match (&sel.system, &sel.map, &sel.rate) {
        (Some(s), Some(m), Some(r)) => Ok(vec![parse_mode(s, m, r, &sel.gi, !sel.no_outer)?]),
        (None, None, None) => {
            let mut out = Vec::new();
            for (mode, _, _) in verify::reference_modes() {
                for outer in [false, true] {
                    let mut m = mode;
                    m.outer_enabled = outer;
                    out.push(m);
                }
            }
            Ok(out)
        }
        _ => Err("give all of --system, --map and --rate, or none for the benchmark set".into()),
    }
}

fn cmd_mode_rows(sel: &ModeSelect) -> Result<(), String> {
    let mut out = String::from(MODE_ROW_HEADER);
    out.push('\n');
    for mode in selected_modes(sel)? {
        out.push_str(&mode_row(&mode)?);
        out.push('\n');
    }
    print!("{out}");
    Ok(())
}

fn cmd_pn_dump(length: usize, out: Option<&Path>) -> Result<(), String> {
    let pn = pn_generate(length).map_err(|e| e.to_string())?;
    write_or_print(out, &iq_csv(&pn.chips))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Verify => return cmd_verify(),
        Cmd::Plot { input, output } => cmd_plot(input, output.as_deref()),
        Cmd::Bitrate(sel) | Cmd::Efficiency(sel) => cmd_mode_rows(sel),
        Cmd::Pn(PnCmd::Dump { length, out }) => cmd_pn_dump(*length, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
