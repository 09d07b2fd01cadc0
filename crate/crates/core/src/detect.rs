//! CA-CFAR detection and peak-train validation.
//!
//! Profiles are circular spectra, so the training window wraps around the
//! ends. Periodogram bins of complex Gaussian noise are exponentially
//! distributed, and for `N = 2 * n_train` training cells the scale factor
//! `alpha = N (p_fa^(-1/N) - 1)` gives exactly `p_fa` per cell.

use std::collections::BTreeMap;

use crate::spectrum::VelocityProfile;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfarConfig {
    pub p_fa: f64,
    /// Training cells on each side of the cell under test.
    pub n_train: usize,
    /// Guard cells on each side of the cell under test.
    pub n_guard: usize,
}

impl CfarConfig {
    pub const DEFAULT_TRAIN: usize = 8;
    pub const DEFAULT_GUARD: usize = 2;

    pub fn new(p_fa: f64, n_train: usize, n_guard: usize) -> Result<Self> {
        let cfg = Self { p_fa, n_train, n_guard };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default window (8 training, 2 guard per side) at the given `p_fa`.
    pub fn with_p_fa(p_fa: f64) -> Result<Self> {
        Self::new(p_fa, Self::DEFAULT_TRAIN, Self::DEFAULT_GUARD)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p_fa must lie in (0, 1), got {}",
                self.p_fa
            )));
        }
        if self.n_train == 0 {
            return Err(Error::InvalidParameter("n_train must be at least 1".into()));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        let n = (2 * self.n_train) as f64;
        n * (self.p_fa.powf(-1.0 / n) - 1.0)
    }

    /// Smallest profile the window fits in.
    pub fn min_profile_len(&self) -> usize {
        2 * (self.n_train + self.n_guard) + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bin: usize,
    pub power: f64,
    pub is_local_max: bool,
}

/// Adaptive threshold `alpha * mean(training cells)` for every bin.
pub fn cfar_threshold(bins: &[f64], cfg: &CfarConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = bins.len();
    if n < cfg.min_profile_len() {
        return Err(Error::ProfileTooShort {
            len: n,
            required: cfg.min_profile_len(),
        });
    }
    let alpha = cfg.alpha();
    let cells = (2 * cfg.n_train) as f64;
    let inner = cfg.n_guard + 1;
    let outer = cfg.n_guard + cfg.n_train;
    Ok((0..n)
        .map(|k| {
            let sum: f64 = (inner..=outer).map(|d| bins[(k + d) % n] + bins[(k + n - d) % n]).sum();
            alpha * sum / cells
        })
        .collect())
}

/// Every bin above its CFAR threshold, flagged with whether it is a local
/// maximum among its detected neighbours.
pub fn cfar_exceedances(profile: &VelocityProfile, cfg: &CfarConfig) -> Result<Vec<Detection>> {
    let bins = profile.bins();
    let threshold = cfar_threshold(bins, cfg)?;
    let n = bins.len();
    let over: Vec<bool> = bins.iter().zip(&threshold).map(|(p, t)| p > t).collect();
    Ok((0..n)
        .filter(|&k| over[k])
        .map(|k| {
            let left = (k + n - 1) % n;
            let right = (k + 1) % n;
            // Ties go to the lower bin.
            let beats_left = !over[left] || bins[k] > bins[left];
            let beats_right = !over[right] || bins[k] >= bins[right];
            Detection {
                bin: k,
                power: bins[k],
                is_local_max: beats_left && beats_right,
            }
        })
        .collect())
}

/// Cell-averaging CFAR with circular training windows. Only local maxima
/// among contiguous exceedances are reported, so one broad peak yields one
/// detection.
pub fn ca_cfar(profile: &VelocityProfile, cfg: &CfarConfig) -> Result<Vec<Detection>> {
    Ok(cfar_exceedances(profile, cfg)?
        .into_iter()
        .filter(|d| d.is_local_max)
        .collect())
}

/// Detections sharing one residue modulo `n_slot`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeakTrain {
    /// Residue class, in `[0, n_slot)`.
    pub anchor_bin: usize,
    /// Detected bins of the class, ascending.
    pub member_bins: Vec<usize>,
    /// Grid positions of the class inside the profile.
    pub expected_count: usize,
    pub hit_count: usize,
}

impl PeakTrain {
    pub fn contains(&self, bin: usize) -> bool {
        self.member_bins.binary_search(&bin).is_ok()
    }
}

/// Groups detections by `bin mod n_slot` and keeps the classes with at least
/// `min_hits` members. Everything else is treated as noise.
pub fn validate_periodic(
    detections: &[Detection],
    n_slot: usize,
    n_bins: usize,
    min_hits: usize,
) -> Result<Vec<PeakTrain>> {
    if n_slot == 0 || n_bins == 0 {
        return Err(Error::InvalidParameter("n_slot and n_bins must be positive".into()));
    }
    let max_hits = n_bins.div_ceil(n_slot);
    if min_hits == 0 || min_hits > max_hits {
        return Err(Error::InvalidParameter(format!(
            "min_hits must lie in 1..={max_hits} for {n_bins} bins with period {n_slot}, got {min_hits}"
        )));
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for d in detections.iter().filter(|d| d.bin < n_bins) {
        classes.entry(d.bin % n_slot).or_default().push(d.bin);
    }
    Ok(classes
        .into_iter()
        .filter_map(|(anchor, mut members)| {
            members.sort_unstable();
            members.dedup();
            (members.len() >= min_hits).then(|| PeakTrain {
                anchor_bin: anchor,
                expected_count: (anchor..n_bins).step_by(n_slot).count(),
                hit_count: members.len(),
                member_bins: members,
            })
        })
        .collect())
}
