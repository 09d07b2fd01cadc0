//! Scenario files.
//!
//! A scenario is a TOML document: `[[carrier]]` and `[[target]]` arrays plus
//! `[channel]`, `[detection]`, `[disambiguation]`, `[baseline]` and
//! `[evaluation]` sections. Unknown keys are rejected. See
//! `docs/scenario.md` for the full key list.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::CfarConfig;
use crate::disambiguate::PairingConfig;
use crate::evaluate::{CarrierSetup, Scenario};
use crate::patterns::SlotPattern;
use crate::waveform::{ChannelConfig, RadioConfig, Target, DEFAULT_C0};
use crate::{Error, Result};

/// Named builtin/comb pattern, or a custom list of 1-based symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PatternSpec {
    Name(String),
    Symbols(Vec<usize>),
}

impl PatternSpec {
    pub fn resolve(&self, label: &str) -> Result<SlotPattern> {
        match self {
            PatternSpec::Name(name) => SlotPattern::from_name(name),
            PatternSpec::Symbols(symbols) => SlotPattern::custom(format!("{label}-custom"), symbols.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierSection {
    pub label: String,
    pub carrier_freq_hz: f64,
    pub symbol_duration_s: f64,
    pub n_slot: usize,
    #[serde(default = "default_c0")]
    pub c0_mps: f64,
    pub pattern: PatternSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub velocity_mps: f64,
    #[serde(default = "one")]
    pub mean_power: f64,
    #[serde(default)]
    pub swerling1: bool,
}

/// K-factor in dB, or the keyword `"disabled"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RicianSpec {
    Db(f64),
    Keyword(String),
}

impl Default for RicianSpec {
    fn default() -> Self {
        RicianSpec::Keyword("disabled".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// Per-sample SNR in dB; `inf` disables noise.
    #[serde(default = "infinite")]
    pub snr_db: f64,
    #[serde(default)]
    pub processing_gain_db: f64,
    #[serde(default)]
    pub rician_k_db: RicianSpec,
    #[serde(default)]
    pub n_multipath: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            snr_db: f64::INFINITY,
            processing_gain_db: 0.0,
            rician_k_db: RicianSpec::default(),
            n_multipath: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    #[serde(default = "default_multi_pfa")]
    pub p_fa: f64,
    #[serde(default = "default_train")]
    pub n_train: usize,
    #[serde(default = "default_guard")]
    pub n_guard: usize,
    #[serde(default = "default_min_hits")]
    pub min_hits: usize,
}

impl Default for DetectionSection {
    fn default() -> Self {
        Self {
            p_fa: default_multi_pfa(),
            n_train: default_train(),
            n_guard: default_guard(),
            min_hits: default_min_hits(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisambiguationSection {
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "default_v_max")]
    pub v_max_mps: f64,
}

impl Default for DisambiguationSection {
    fn default() -> Self {
        Self {
            residual_tol: default_residual_tol(),
            v_max_mps: default_v_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    /// Label of the carrier whose radio parameters the baseline reuses;
    /// defaults to the first carrier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier: Option<String>,
    #[serde(default = "default_baseline_pattern")]
    pub pattern: PatternSpec,
    #[serde(default = "default_baseline_pfa")]
    pub p_fa: f64,
    #[serde(default = "default_train")]
    pub n_train: usize,
    #[serde(default = "default_guard")]
    pub n_guard: usize,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            carrier: None,
            pattern: default_baseline_pattern(),
            p_fa: default_baseline_pfa(),
            n_train: default_train(),
            n_guard: default_guard(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    #[serde(default = "one")]
    pub gnn_window_bins: f64,
    #[serde(default = "default_trials")]
    pub trials_per_snr: usize,
    #[serde(default = "default_snr_lo")]
    pub snr_lo_db: f64,
    #[serde(default = "default_snr_hi")]
    pub snr_hi_db: f64,
    #[serde(default = "default_snr_steps")]
    pub snr_steps: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            gnn_window_bins: 1.0,
            trials_per_snr: default_trials(),
            snr_lo_db: default_snr_lo(),
            snr_hi_db: default_snr_hi(),
            snr_steps: default_snr_steps(),
        }
    }
}

fn default_c0() -> f64 {
    DEFAULT_C0
}
fn one() -> f64 {
    1.0
}
fn infinite() -> f64 {
    f64::INFINITY
}
fn default_multi_pfa() -> f64 {
    0.1
}
fn default_baseline_pfa() -> f64 {
    1e-3
}
fn default_train() -> usize {
    CfarConfig::DEFAULT_TRAIN
}
fn default_guard() -> usize {
    CfarConfig::DEFAULT_GUARD
}
fn default_min_hits() -> usize {
    3
}
fn default_residual_tol() -> f64 {
    PairingConfig::default().residual_tol
}
fn default_v_max() -> f64 {
    PairingConfig::default().v_max_mps
}
fn default_baseline_pattern() -> PatternSpec {
    PatternSpec::Name("comb-3".into())
}
fn default_trials() -> usize {
    500
}
fn default_snr_lo() -> f64 {
    -40.0
}
fn default_snr_hi() -> f64 {
    -20.0
}
fn default_snr_steps() -> usize {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(rename = "carrier", default)]
    pub carriers: Vec<CarrierSection>,
    #[serde(rename = "target", default)]
    pub targets: Vec<TargetSection>,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub detection: DetectionSection,
    #[serde(default)]
    pub disambiguation: DisambiguationSection,
    #[serde(default)]
    pub baseline: BaselineSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
}

impl ScenarioFile {
    /// Parses and validates a scenario document.
    pub fn parse(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        file.to_scenario()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Scenario(msg) => Error::Scenario(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files always serialize")
    }

    fn carrier_setup(section: &CarrierSection) -> Result<CarrierSetup> {
        let radio = RadioConfig::new(
            section.carrier_freq_hz,
            section.symbol_duration_s,
            section.n_slot,
            section.c0_mps,
        )
        .map_err(|e| Error::Scenario(format!("carrier `{}`: {e}", section.label)))?;
        let pattern = section
            .pattern
            .resolve(&section.label)
            .map_err(|e| Error::Scenario(format!("carrier `{}`: {e}", section.label)))?;
        Ok(CarrierSetup {
            label: section.label.clone(),
            radio,
            pattern,
        })
    }

    /// Converts to library configuration, validating every section.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let bad = |msg: String| Error::Scenario(msg);
        if self.carriers.is_empty() {
            return Err(bad("at least one [[carrier]] is required".into()));
        }
        if self.targets.is_empty() {
            return Err(bad("at least one [[target]] is required".into()));
        }
        let carriers = self
            .carriers
            .iter()
            .map(Self::carrier_setup)
            .collect::<Result<Vec<_>>>()?;
        for (i, c) in carriers.iter().enumerate() {
            if carriers[..i].iter().any(|o| o.label == c.label) {
                return Err(bad(format!("duplicate carrier label `{}`", c.label)));
            }
        }

        let targets = self
            .targets
            .iter()
            .map(|t| {
                if !t.velocity_mps.is_finite() || !(t.mean_power.is_finite() && t.mean_power > 0.0) {
                    return Err(bad(format!(
                        "target velocity must be finite and mean_power positive (v={}, power={})",
                        t.velocity_mps, t.mean_power
                    )));
                }
                Ok(Target {
                    velocity_mps: t.velocity_mps,
                    mean_power: t.mean_power,
                    swerling1: t.swerling1,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let ch = &self.channel;
        if ch.snr_db.is_nan() || !ch.processing_gain_db.is_finite() {
            return Err(bad("channel snr_db and processing_gain_db must be numbers".into()));
        }
        let rician_k_db = match &ch.rician_k_db {
            RicianSpec::Db(k) if k.is_finite() => Some(*k),
            RicianSpec::Db(k) => return Err(bad(format!("rician_k_db must be finite, got {k}"))),
            RicianSpec::Keyword(s) if s == "disabled" => None,
            RicianSpec::Keyword(s) => {
                return Err(bad(format!(
                    "rician_k_db must be a number or \"disabled\", got \"{s}\""
                )))
            }
        };
        let channel = ChannelConfig {
            snr_db: ch.snr_db,
            processing_gain_db: ch.processing_gain_db,
            rician_k_db,
            n_multipath: ch.n_multipath,
            seed: ch.seed,
        };

        let d = &self.detection;
        let multi_cfar = CfarConfig::new(d.p_fa, d.n_train, d.n_guard).map_err(|e| bad(format!("[detection] {e}")))?;
        if d.min_hits == 0 {
            return Err(bad("[detection] min_hits must be at least 1".into()));
        }

        let pairing = PairingConfig {
            residual_tol: self.disambiguation.residual_tol,
            v_max_mps: self.disambiguation.v_max_mps,
        };
        pairing.validate().map_err(|e| bad(format!("[disambiguation] {e}")))?;

        let b = &self.baseline;
        let base_carrier = match &b.carrier {
            Some(label) => carriers
                .iter()
                .find(|c| &c.label == label)
                .ok_or_else(|| bad(format!("[baseline] unknown carrier `{label}`")))?,
            None => &carriers[0],
        };
        let baseline = CarrierSetup {
            label: base_carrier.label.clone(),
            radio: base_carrier.radio,
            pattern: b
                .pattern
                .resolve(&base_carrier.label)
                .map_err(|e| bad(format!("[baseline] {e}")))?,
        };
        let baseline_cfar =
            CfarConfig::new(b.p_fa, b.n_train, b.n_guard).map_err(|e| bad(format!("[baseline] {e}")))?;

        let e = &self.evaluation;
        if !(e.gnn_window_bins >= 0.0 && e.gnn_window_bins.is_finite()) {
            return Err(bad("[evaluation] gnn_window_bins must be non-negative".into()));
        }
        if e.trials_per_snr == 0 || e.snr_steps == 0 {
            return Err(bad(
                "[evaluation] trials_per_snr and snr_steps must be at least 1".into()
            ));
        }

        Ok(Scenario {
            targets,
            carriers,
            baseline,
            channel,
            multi_cfar,
            min_hits: d.min_hits,
            baseline_cfar,
            pairing,
            gnn_window_bins: e.gnn_window_bins,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = r#"
[[carrier]]
label = "f1"
carrier_freq_hz = 27.0e9
symbol_duration_s = 8.92e-6
n_slot = 60
pattern = "SP1"

[[carrier]]
label = "f2"
carrier_freq_hz = 28.0e9
symbol_duration_s = 8.92e-6
n_slot = 60
pattern = [3, 4, 11, 12]

[[target]]
velocity_mps = 80.0

[channel]
snr_db = inf
rician_k_db = "disabled"
"#;

    #[test]
    fn parses_reference() {
        let f = ScenarioFile::parse(REFERENCE).unwrap();
        let s = f.to_scenario().unwrap();
        assert_eq!(s.carriers.len(), 2);
        assert_eq!(s.carriers[1].pattern.symbols(), &[3, 4, 11, 12]);
        assert_eq!(s.baseline.pattern.name(), "comb-3");
        assert_eq!(s.baseline.label, "f1");
        assert!(s.channel.snr_db.is_infinite());
        assert_eq!(s.min_hits, 3);
        assert_eq!(s.multi_cfar.p_fa, 0.1);
        assert_eq!(s.baseline_cfar.p_fa, 1e-3);
    }

    #[test]
    fn round_trips() {
        let f = ScenarioFile::parse(REFERENCE).unwrap();
        let again = ScenarioFile::parse(&f.to_toml()).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn unknown_key_rejected_with_location() {
        let text = REFERENCE.replace("n_slot = 60\npattern = \"SP1\"", "n_slot = 60\npatern = \"SP1\"");
        let err = ScenarioFile::parse(&text).unwrap_err().to_string();
        assert!(err.contains("patern"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn semantic_errors() {
        let no_targets = REFERENCE.replace("[[target]]\nvelocity_mps = 80.0\n", "");
        assert!(ScenarioFile::parse(&no_targets).is_err());
        let bad_pattern = REFERENCE.replace("\"SP1\"", "\"SP7\"");
        assert!(ScenarioFile::parse(&bad_pattern)
            .unwrap_err()
            .to_string()
            .contains("SP7"));
        let bad_rician = REFERENCE.replace("\"disabled\"", "\"off\"");
        assert!(ScenarioFile::parse(&bad_rician).is_err());
        let bad_baseline = format!("{REFERENCE}\n[baseline]\ncarrier = \"f9\"\n");
        assert!(ScenarioFile::parse(&bad_baseline).is_err());
    }
}
