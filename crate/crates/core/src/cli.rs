//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage and scenario-file errors, 3 for
//! failures while running a command.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::evaluate::{
    carrier_pipeline, monte_carlo, multi_pipeline, snr_grid, stream_channel, Algorithm, CarrierSetup, Scenario, Sweep,
};
use crate::export;
use crate::scenario::ScenarioFile;
use crate::spectrum::{factor_profile, multi_periodogram};
use crate::waveform::{apply_channel, synthesize_clean, ChannelConfig};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "mpvel",
    version,
    about = "Slot-pattern velocity estimation with two-carrier alias resolution"
)]
pub struct Cli {
    /// Scenario file.
    #[arg(long, global = true, default_value = "scenarios/reference.toml")]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the scenario channel seed (master seed for `montecarlo`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Velocity profile of every carrier.
    Profile {
        /// Only this carrier.
        #[arg(long)]
        carrier: Option<String>,
        /// Also write the echo samples.
        #[arg(long)]
        echo: bool,
    },
    /// Noise-free factorization of a single-target profile.
    Decompose {
        #[arg(long)]
        carrier: Option<String>,
    },
    /// CFAR detections and validated peak trains per carrier.
    Detect {
        #[arg(long)]
        carrier: Option<String>,
    },
    /// Two-carrier velocity estimates.
    Resolve,
    /// SNR sweep comparing the baseline and the two-carrier method.
    Montecarlo {
        /// Trials per SNR level.
        #[arg(long)]
        trials: Option<usize>,
        /// SNR grid as LO:HI:STEPS in dB.
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<SnrRange>,
        #[arg(long, value_enum, default_value_t = AlgoChoice::Both)]
        algo: AlgoChoice,
        /// Worker threads; 0 picks one per core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoChoice {
    Conventional,
    Multi,
    Both,
}

impl AlgoChoice {
    fn algorithms(self) -> Vec<Algorithm> {
        match self {
            AlgoChoice::Conventional => vec![Algorithm::Conventional],
            AlgoChoice::Multi => vec![Algorithm::Multi],
            AlgoChoice::Both => vec![Algorithm::Conventional, Algorithm::Multi],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrRange {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl FromStr for SnrRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, steps] = parts.as_slice() else {
            return Err(format!("expected LO:HI:STEPS, got `{s}`"));
        };
        let lo: f64 = lo.parse().map_err(|_| format!("bad LO `{lo}`"))?;
        let hi: f64 = hi.parse().map_err(|_| format!("bad HI `{hi}`"))?;
        let steps: usize = steps.parse().map_err(|_| format!("bad STEPS `{steps}`"))?;
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(format!("need finite LO <= HI, got {lo}:{hi}"));
        }
        if steps == 0 {
            return Err("STEPS must be at least 1".into());
        }
        Ok(SnrRange { lo, hi, steps })
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(Error),
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> std::result::Result<(), CliError> {
    let mut file = ScenarioFile::load(&cli.config).map_err(CliError::Config)?;
    if let Some(seed) = cli.seed {
        file.channel.seed = seed;
    }
    let scenario = file.to_scenario().map_err(CliError::Config)?;
    fs::create_dir_all(&cli.out)?;
    let out = cli.out.as_path();

    match &cli.command {
        Command::Profile { carrier, echo } => cmd_profile(&scenario, carrier.as_deref(), *echo, out),
        Command::Decompose { carrier } => cmd_decompose(&scenario, carrier.as_deref(), out),
        Command::Detect { carrier } => cmd_detect(&scenario, carrier.as_deref(), out),
        Command::Resolve => cmd_resolve(&scenario, out),
        Command::Montecarlo {
            trials,
            snr,
            algo,
            workers,
        } => {
            let eval = &file.evaluation;
            let range = snr.unwrap_or(SnrRange {
                lo: eval.snr_lo_db,
                hi: eval.snr_hi_db,
                steps: eval.snr_steps,
            });
            let sweep = Sweep {
                snr_db: snr_grid(range.lo, range.hi, range.steps),
                trials_per_snr: trials.unwrap_or(eval.trials_per_snr),
                master_seed: file.channel.seed,
                workers: *workers,
            };
            cmd_montecarlo(&file, &scenario, &sweep, &algo.algorithms(), out)
        }
    }
}

fn selected<'a>(scenario: &'a Scenario, label: Option<&str>) -> Result<Vec<(usize, &'a CarrierSetup)>> {
    let all: Vec<(usize, &CarrierSetup)> = scenario.carriers.iter().enumerate().collect();
    match label {
        None => Ok(all),
        Some(l) => {
            let hit: Vec<_> = all.into_iter().filter(|(_, c)| c.label == l).collect();
            if hit.is_empty() {
                let known: Vec<&str> = scenario.carriers.iter().map(|c| c.label.as_str()).collect();
                return Err(Error::InvalidParameter(format!(
                    "unknown carrier `{l}` (available: {})",
                    known.join(", ")
                )));
            }
            Ok(hit)
        }
    }
}

/// Carrier `i` draws noise from stream `i + 1`, matching Monte Carlo trials.
fn carrier_channel(scenario: &Scenario, index: usize) -> ChannelConfig {
    stream_channel(&scenario.channel, scenario.channel.seed, index as u64 + 1)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn cmd_profile(scenario: &Scenario, label: Option<&str>, echo: bool, out: &Path) -> std::result::Result<(), CliError> {
    let swerling: Vec<bool> = scenario.targets.iter().map(|t| t.swerling1).collect();
    for (i, c) in selected(scenario, label)? {
        let clean = synthesize_clean(&scenario.targets, &c.pattern, &c.radio)?;
        let noisy = apply_channel(&clean, &carrier_channel(scenario, i), &swerling)?;
        let profile = multi_periodogram(&noisy, &c.label);

        let mut w = create(out, &format!("profile_{}.csv", c.label))?;
        export::write_profile(&mut w, &profile)?;
        finish(w)?;
        if echo {
            let mut w = create(out, &format!("echo_{}.csv", c.label))?;
            export::write_echo(&mut w, &noisy)?;
            finish(w)?;
        }
        let peaks: Vec<String> = profile.local_maxima().iter().take(4).map(|k| k.to_string()).collect();
        println!(
            "{}: {} samples, {} bins, dv = {:.6} m/s, strongest peaks at bins {}",
            c.label,
            noisy.len(),
            profile.len(),
            profile.delta_v(),
            peaks.join(", ")
        );
    }
    Ok(())
}

fn cmd_decompose(scenario: &Scenario, label: Option<&str>, out: &Path) -> std::result::Result<(), CliError> {
    let [target] = scenario.targets.as_slice() else {
        return Err(CliError::Runtime(Error::InvalidParameter(format!(
            "decompose needs exactly one target, scenario has {}",
            scenario.targets.len()
        ))));
    };
    for (_, c) in selected(scenario, label)? {
        let factors = factor_profile(target.velocity_mps, &c.pattern, &c.radio)?;
        let dv = c.delta_v();
        let mut w = create(out, &format!("factors_{}.csv", c.label))?;
        export::write_factors(&mut w, &factors, dv)?;
        finish(w)?;
        let mut w = create(out, &format!("components_{}.csv", c.label))?;
        export::write_components(&mut w, &factors)?;
        finish(w)?;
        let mut w = create(out, &format!("component_params_{}.csv", c.label))?;
        export::write_component_params(&mut w, &factors)?;
        finish(w)?;
        println!(
            "{}: {} bins, {} components written",
            c.label,
            factors.len(),
            factors.components.len()
        );
    }
    Ok(())
}

fn cmd_detect(scenario: &Scenario, label: Option<&str>, out: &Path) -> std::result::Result<(), CliError> {
    for (i, c) in selected(scenario, label)? {
        let o = carrier_pipeline(scenario, c, &carrier_channel(scenario, i))?;
        write_carrier_outcome(out, &c.label, &o.detections, &o.trains, c.delta_v())?;
        let anchors: Vec<String> = o.trains.iter().map(|t| t.anchor_bin.to_string()).collect();
        println!(
            "{}: {} detections, {} trains (anchors: {})",
            c.label,
            o.detections.len(),
            o.trains.len(),
            if anchors.is_empty() {
                "none".to_string()
            } else {
                anchors.join(", ")
            }
        );
    }
    Ok(())
}

fn write_carrier_outcome(
    out: &Path,
    label: &str,
    detections: &[crate::detect::Detection],
    trains: &[crate::detect::PeakTrain],
    delta_v: f64,
) -> Result<()> {
    let mut w = create(out, &format!("detections_{label}.csv"))?;
    export::write_detections(&mut w, detections, trains, delta_v)?;
    finish(w)?;
    let mut w = create(out, &format!("trains_{label}.csv"))?;
    export::write_trains(&mut w, trains)?;
    finish(w)
}

fn cmd_resolve(scenario: &Scenario, out: &Path) -> std::result::Result<(), CliError> {
    let (c1, c2) = (carrier_channel(scenario, 0), carrier_channel(scenario, 1));
    let o = multi_pipeline(scenario, [&c1, &c2])?;
    for (setup, outcome) in scenario.carriers.iter().zip(&o.carriers) {
        write_carrier_outcome(out, &setup.label, &outcome.detections, &outcome.trains, setup.delta_v())?;
    }
    let mut w = create(out, "estimates.csv")?;
    export::write_estimates(&mut w, &o.estimates)?;
    finish(w)?;
    for e in &o.estimates {
        println!(
            "v = {:.3} m/s (z0 = {}, bins {}/{}, residual {:.3})",
            e.velocity_mps, e.z0, e.anchor_pair.0, e.anchor_pair.1, e.residual
        );
    }
    if o.estimates.is_empty() {
        println!("no targets resolved");
    }
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    master_seed: u64,
    trials_per_snr: usize,
    workers: usize,
    algorithms: Vec<&'static str>,
    snr_db: &'a [f64],
    scenario: &'a ScenarioFile,
}

fn cmd_montecarlo(
    file: &ScenarioFile,
    scenario: &Scenario,
    sweep: &Sweep,
    algorithms: &[Algorithm],
    out: &Path,
) -> std::result::Result<(), CliError> {
    let reports = monte_carlo(sweep, scenario, algorithms)?;
    let mut w = create(out, "metrics.csv")?;
    export::write_metrics(&mut w, &reports)?;
    finish(w)?;

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        master_seed: sweep.master_seed,
        trials_per_snr: sweep.trials_per_snr,
        workers: sweep.workers,
        algorithms: algorithms.iter().map(|a| a.name()).collect(),
        snr_db: &sweep.snr_db,
        scenario: file,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::InvalidParameter(format!("manifest: {e}")))?;
    fs::write(out.join("manifest.toml"), text)?;

    for r in &reports {
        let at10 = r
            .snr_at_missed_rate(0.1)
            .map_or_else(|| "not reached".to_string(), |s| format!("{s:.2} dB"));
        println!(
            "{:<12} trials {:>6}  false alarms {:>6}  mean |err| {:.4} m/s  10% miss at {}",
            r.algorithm.name(),
            r.total_trials(),
            r.total_false_alarms(),
            r.overall_mean_abs_error(),
            at10
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_range_parsing() {
        let r: SnrRange = "-40:-20:12".parse().unwrap();
        assert_eq!((r.lo, r.hi, r.steps), (-40.0, -20.0, 12));
        assert!("-20:-40:3".parse::<SnrRange>().is_err());
        assert!("1:2".parse::<SnrRange>().is_err());
        assert!("1:2:0".parse::<SnrRange>().is_err());
    }

    #[test]
    fn negative_snr_flag_accepted() {
        let cli = Cli::try_parse_from(["mpvel", "montecarlo", "--snr", "-30:-20:3"]).unwrap();
        let Command::Montecarlo { snr: Some(r), .. } = cli.command else {
            panic!("wrong command");
        };
        assert_eq!(r.steps, 3);
    }

    #[test]
    fn missing_config_is_exit_2() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.toml");
        let code = main_with([
            "mpvel",
            "--config",
            missing.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "resolve",
        ]);
        assert_eq!(code, 2);
    }
}
