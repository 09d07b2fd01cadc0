//! Monte Carlo comparison of the conventional periodogram and the
//! multi-periodogram pipelines.
//!
//! Conventional: comb-3 echo on one carrier, periodogram, CA-CFAR at a low
//! `p_fa`, every local-max detection is a velocity candidate.
//!
//! Multi: slot-pattern echoes on two carriers with independent channel
//! draws, CA-CFAR at an aggressive `p_fa`, peak-train validation, then
//! cross-carrier pairing. Only the paired estimates are candidates.
//!
//! Candidates are matched to the truth with global nearest neighbour inside
//! a window measured in bins of the relevant profile. Trial seeds derive
//! from `(master, snr index, trial index)`, so results do not depend on
//! scheduling.

use rayon::prelude::*;

use crate::detect::{ca_cfar, validate_periodic, CfarConfig, Detection, PeakTrain};
use crate::disambiguate::{pair_trains, CarrierTrains, PairingConfig, TargetEstimate};
use crate::patterns::SlotPattern;
use crate::spectrum::{multi_periodogram, VelocityProfile};
use crate::waveform::{apply_channel, synthesize_clean, ChannelConfig, RadioConfig, Target};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CarrierSetup {
    pub label: String,
    pub radio: RadioConfig,
    pub pattern: SlotPattern,
}

impl CarrierSetup {
    pub fn delta_v(&self) -> f64 {
        self.radio.velocity_resolution()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Conventional,
    Multi,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Conventional => "conventional",
            Algorithm::Multi => "multi",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub targets: Vec<Target>,
    /// Slot-pattern carriers; the multi pipeline uses the first two.
    pub carriers: Vec<CarrierSetup>,
    /// Comb carrier used by the conventional pipeline.
    pub baseline: CarrierSetup,
    pub channel: ChannelConfig,
    pub multi_cfar: CfarConfig,
    pub min_hits: usize,
    pub baseline_cfar: CfarConfig,
    pub pairing: PairingConfig,
    pub gnn_window_bins: f64,
}

impl Scenario {
    fn truths(&self) -> Vec<f64> {
        self.targets.iter().map(|t| t.velocity_mps).collect()
    }

    fn carrier_pair(&self) -> Result<(&CarrierSetup, &CarrierSetup)> {
        match self.carriers.as_slice() {
            [a, b, ..] => {
                if a.radio.carrier_freq_hz == b.radio.carrier_freq_hz {
                    return Err(Error::Scenario("the two carriers must use distinct frequencies".into()));
                }
                if a.radio.n_slot != b.radio.n_slot {
                    return Err(Error::Scenario(
                        "both carriers must observe the same number of slots".into(),
                    ));
                }
                Ok((a, b))
            }
            _ => Err(Error::Scenario(
                "two carriers are required to resolve velocity ambiguity".into(),
            )),
        }
    }
}

/// Noisy profile of one carrier.
pub fn observe(targets: &[Target], carrier: &CarrierSetup, channel: &ChannelConfig) -> Result<VelocityProfile> {
    let clean = synthesize_clean(targets, &carrier.pattern, &carrier.radio)?;
    let swerling: Vec<bool> = targets.iter().map(|t| t.swerling1).collect();
    let echo = apply_channel(&clean, channel, &swerling)?;
    Ok(multi_periodogram(&echo, &carrier.label))
}

#[derive(Debug, Clone)]
pub struct ConventionalOutcome {
    pub profile: VelocityProfile,
    pub detections: Vec<Detection>,
}

pub fn conventional_pipeline(scenario: &Scenario, channel: &ChannelConfig) -> Result<ConventionalOutcome> {
    let profile = observe(&scenario.targets, &scenario.baseline, channel)?;
    let detections = ca_cfar(&profile, &scenario.baseline_cfar)?;
    Ok(ConventionalOutcome { profile, detections })
}

#[derive(Debug, Clone)]
pub struct CarrierOutcome {
    pub profile: VelocityProfile,
    pub detections: Vec<Detection>,
    pub trains: Vec<PeakTrain>,
}

/// Profile, CFAR detections and validated trains of one slot-pattern carrier.
pub fn carrier_pipeline(
    scenario: &Scenario,
    carrier: &CarrierSetup,
    channel: &ChannelConfig,
) -> Result<CarrierOutcome> {
    let profile = observe(&scenario.targets, carrier, channel)?;
    let detections = ca_cfar(&profile, &scenario.multi_cfar)?;
    let trains = validate_periodic(&detections, carrier.radio.n_slot, profile.len(), scenario.min_hits)?;
    Ok(CarrierOutcome {
        profile,
        detections,
        trains,
    })
}

#[derive(Debug, Clone)]
pub struct MultiOutcome {
    pub carriers: [CarrierOutcome; 2],
    pub estimates: Vec<TargetEstimate>,
}

/// Runs both carriers with the given channel configs and pairs their trains.
pub fn multi_pipeline(scenario: &Scenario, channels: [&ChannelConfig; 2]) -> Result<MultiOutcome> {
    let (c1, c2) = scenario.carrier_pair()?;
    let o1 = carrier_pipeline(scenario, c1, channels[0])?;
    let o2 = carrier_pipeline(scenario, c2, channels[1])?;
    let estimates = pair_trains(
        &CarrierTrains {
            trains: &o1.trains,
            delta_v: c1.delta_v(),
            n_bins: o1.profile.len(),
        },
        &CarrierTrains {
            trains: &o2.trains,
            delta_v: c2.delta_v(),
            n_bins: o2.profile.len(),
        },
        c1.radio.n_slot,
        &scenario.pairing,
    )?;
    Ok(MultiOutcome {
        carriers: [o1, o2],
        estimates,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnAssignment {
    /// `(detection index, truth index, |bin error|)`.
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_truths: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

/// Global nearest neighbour: a one-to-one assignment maximizing the number
/// of pairs within `window_bins`, then minimizing the total bin error.
/// Bin error is `|v_det - v_truth| / delta_v`.
pub fn gnn_match(detected: &[f64], truths: &[f64], window_bins: f64, delta_v: f64) -> GnnAssignment {
    // Candidate detections per truth, nearest first.
    let gates: Vec<Vec<(usize, f64)>> = truths
        .iter()
        .map(|&t| {
            let mut g: Vec<(usize, f64)> = detected
                .iter()
                .enumerate()
                .map(|(i, &d)| (i, (d - t).abs() / delta_v))
                .filter(|&(_, e)| e <= window_bins + 1e-9)
                .collect();
            g.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            g
        })
        .collect();

    struct Search<'a> {
        gates: &'a [Vec<(usize, f64)>],
        used: Vec<bool>,
        current: Vec<Option<usize>>,
        best: Vec<Option<usize>>,
        best_score: (usize, f64),
    }
    impl Search<'_> {
        fn run(&mut self, t: usize, count: usize, cost: f64) {
            if t == self.gates.len() {
                let better =
                    count > self.best_score.0 || (count == self.best_score.0 && cost < self.best_score.1 - 1e-12);
                if better {
                    self.best_score = (count, cost);
                    self.best = self.current.clone();
                }
                return;
            }
            for &(d, e) in &self.gates[t] {
                if !self.used[d] {
                    self.used[d] = true;
                    self.current[t] = Some(d);
                    self.run(t + 1, count + 1, cost + e);
                    self.current[t] = None;
                    self.used[d] = false;
                }
            }
            self.run(t + 1, count, cost);
        }
    }
    let mut search = Search {
        gates: &gates,
        used: vec![false; detected.len()],
        current: vec![None; truths.len()],
        best: vec![None; truths.len()],
        best_score: (0, f64::INFINITY),
    };
    search.run(0, 0, 0.0);

    let mut det_used = vec![false; detected.len()];
    let mut pairs = Vec::new();
    let mut unmatched_truths = Vec::new();
    for (t, slot) in search.best.iter().enumerate() {
        match slot {
            Some(d) => {
                det_used[*d] = true;
                pairs.push((*d, t, (detected[*d] - truths[t]).abs() / delta_v));
            }
            None => unmatched_truths.push(t),
        }
    }
    let unmatched_detections = (0..detected.len()).filter(|&d| !det_used[d]).collect();
    GnnAssignment {
        pairs,
        unmatched_truths,
        unmatched_detections,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub scenario: Scenario,
    pub algorithm: Algorithm,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    /// One flag per truth target.
    pub matched: Vec<bool>,
    /// `|v_hat - v|` per truth, `None` when missed.
    pub velocity_errors: Vec<Option<f64>>,
    pub false_alarms: usize,
}

/// SplitMix64 finalizer over a running state.
fn mix(state: u64, value: u64) -> u64 {
    let mut z = state
        ^ value
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-trial seed.
pub fn derive_seed(master: u64, snr_index: usize, trial_index: usize) -> u64 {
    mix(mix(master, snr_index as u64), trial_index as u64)
}

/// Channel for one noise stream of a trial: 0 is the baseline carrier, 1 and
/// 2 are the two pattern carriers.
pub fn stream_channel(base: &ChannelConfig, seed: u64, stream: u64) -> ChannelConfig {
    ChannelConfig {
        seed: mix(seed, stream),
        ..*base
    }
}

pub fn run_trial(cfg: &TrialConfig) -> Result<TrialResult> {
    run_trial_parts(&cfg.scenario, cfg.algorithm, cfg.seed)
}

fn run_trial_parts(scenario: &Scenario, algorithm: Algorithm, seed: u64) -> Result<TrialResult> {
    let truths = scenario.truths();
    let channel_for = |stream: u64| stream_channel(&scenario.channel, seed, stream);
    let (candidates, delta_v) = match algorithm {
        Algorithm::Conventional => {
            let out = conventional_pipeline(scenario, &channel_for(0))?;
            let v: Vec<f64> = out.detections.iter().map(|d| out.profile.velocity(d.bin)).collect();
            (v, scenario.baseline.delta_v())
        }
        Algorithm::Multi => {
            let (c1, c2) = (channel_for(1), channel_for(2));
            let out = multi_pipeline(scenario, [&c1, &c2])?;
            let v: Vec<f64> = out.estimates.iter().map(|e| e.velocity_mps).collect();
            (v, scenario.carriers[0].delta_v())
        }
    };
    let gnn = gnn_match(&candidates, &truths, scenario.gnn_window_bins, delta_v);
    let mut matched = vec![false; truths.len()];
    let mut velocity_errors = vec![None; truths.len()];
    for &(d, t, _) in &gnn.pairs {
        matched[t] = true;
        velocity_errors[t] = Some((candidates[d] - truths[t]).abs());
    }
    Ok(TrialResult {
        matched,
        velocity_errors,
        false_alarms: gnn.unmatched_detections.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub snr_db: Vec<f64>,
    pub trials_per_snr: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
}

/// `steps` evenly spaced values over `[lo, hi]`.
pub fn snr_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub snr_db: f64,
    pub trials: usize,
    pub targets: usize,
    pub matched: usize,
    pub mean_abs_velocity_error: f64,
    pub rmse: f64,
    pub missed_detection_rate: f64,
    pub false_alarm_total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub algorithm: Algorithm,
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    pub fn total_false_alarms(&self) -> usize {
        self.rows.iter().map(|r| r.false_alarm_total).sum()
    }

    pub fn total_trials(&self) -> usize {
        self.rows.iter().map(|r| r.trials).sum()
    }

    /// Mean absolute error over every matched target of the sweep.
    pub fn overall_mean_abs_error(&self) -> f64 {
        let (sum, n) = self.rows.iter().fold((0.0, 0usize), |(s, n), r| {
            if r.matched > 0 {
                (s + r.mean_abs_velocity_error * r.matched as f64, n + r.matched)
            } else {
                (s, n)
            }
        });
        sum / n as f64
    }

    /// Lowest SNR at which the missed-detection rate falls to `rate`, by
    /// linear interpolation between the last level above and the first
    /// level at or below it. `None` when the rate is never reached.
    pub fn snr_at_missed_rate(&self, rate: f64) -> Option<f64> {
        let rows = &self.rows;
        let idx = rows.iter().position(|r| r.missed_detection_rate <= rate)?;
        if idx == 0 {
            return Some(rows[0].snr_db);
        }
        let (a, b) = (&rows[idx - 1], &rows[idx]);
        let t = (a.missed_detection_rate - rate) / (a.missed_detection_rate - b.missed_detection_rate);
        Some(a.snr_db + t * (b.snr_db - a.snr_db))
    }
}

fn aggregate(snr_db: f64, results: &[TrialResult]) -> MetricsRow {
    let targets: usize = results.iter().map(|r| r.matched.len()).sum();
    let errors: Vec<f64> = results
        .iter()
        .flat_map(|r| r.velocity_errors.iter().flatten().copied())
        .collect();
    let matched = errors.len();
    let (mean, rmse) = if matched == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let n = matched as f64;
        (
            errors.iter().sum::<f64>() / n,
            (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt(),
        )
    };
    MetricsRow {
        snr_db,
        trials: results.len(),
        targets,
        matched,
        mean_abs_velocity_error: mean,
        rmse,
        missed_detection_rate: if targets == 0 {
            0.0
        } else {
            (targets - matched) as f64 / targets as f64
        },
        false_alarm_total: results.iter().map(|r| r.false_alarms).sum(),
    }
}

/// Runs `trials_per_snr` trials of each algorithm at every SNR level.
pub fn monte_carlo(sweep: &Sweep, base: &Scenario, algorithms: &[Algorithm]) -> Result<Vec<MetricsReport>> {
    if sweep.trials_per_snr == 0 {
        return Err(Error::InvalidParameter("trials per SNR must be at least 1".into()));
    }
    if sweep.snr_db.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("SNR levels must not be NaN".into()));
    }
    if algorithms.contains(&Algorithm::Multi) {
        base.carrier_pair()?;
    }
    let scenarios: Vec<Scenario> = sweep
        .snr_db
        .iter()
        .map(|&snr_db| Scenario {
            channel: ChannelConfig { snr_db, ..base.channel },
            ..base.clone()
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..scenarios.len())
        .flat_map(|s| (0..sweep.trials_per_snr).map(move |t| (s, t)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;

    algorithms
        .iter()
        .map(|&algorithm| {
            let results: Vec<TrialResult> = pool.install(|| {
                jobs.par_iter()
                    .map(|&(s, t)| run_trial_parts(&scenarios[s], algorithm, derive_seed(sweep.master_seed, s, t)))
                    .collect::<Result<Vec<_>>>()
            })?;
            let rows = results
                .chunks(sweep.trials_per_snr)
                .zip(&sweep.snr_db)
                .map(|(chunk, &snr)| aggregate(snr, chunk))
                .collect();
            Ok(MetricsReport { algorithm, rows })
        })
        .collect()
}
