//! Two-carrier alias resolution.
//!
//! A target at `v` produces peaks at `round(v / dv_i) + z * n_slot` on
//! carrier `i`. For a peak pair `(k1, k2)` with the same alias index `z0`,
//!
//! ```text
//! k1 dv1 = v + z0 n_slot dv1
//! k2 dv2 = v + z0 n_slot dv2
//! ```
//!
//! Eliminating `v` gives `z0 = (k1 dv1 - k2 dv2) / (n_slot (dv1 - dv2))`.
//! The real-valued solution always exists, so the distance of `z0` from the
//! nearest integer and the physical velocity range are what reject wrong
//! pairings.

use crate::detect::PeakTrain;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetEstimate {
    pub velocity_mps: f64,
    pub z0: i64,
    /// Peak bins (carrier 1, carrier 2) the estimate was solved from.
    pub anchor_pair: (usize, usize),
    pub residual: f64,
}

/// Signed bin offset `round(v/dv1) - round(v/dv2)` between corresponding peaks.
pub fn delta_bin(v: f64, dv1: f64, dv2: f64) -> i64 {
    (v / dv1).round() as i64 - (v / dv2).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSolution {
    pub z0: i64,
    pub velocity_mps: f64,
    /// `|z0_real - z0|`.
    pub residual: f64,
}

/// Solves the two-carrier alias system for one peak pair.
pub fn solve_pair(k1: usize, dv1: f64, k2: usize, dv2: f64, n_slot: usize) -> Result<PairSolution> {
    if dv1 == dv2 {
        return Err(Error::SingularPair);
    }
    if n_slot == 0 {
        return Err(Error::InvalidParameter("n_slot must be at least 1".into()));
    }
    let n = n_slot as f64;
    let z_real = (k1 as f64 * dv1 - k2 as f64 * dv2) / (n * (dv1 - dv2));
    let z0 = z_real.round();
    Ok(PairSolution {
        z0: z0 as i64,
        velocity_mps: k1 as f64 * dv1 - z0 * n * dv1,
        residual: (z_real - z0).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingConfig {
    /// Largest accepted `|z0_real - round(z0_real)|`, in (0, 0.5).
    pub residual_tol: f64,
    pub v_max_mps: f64,
}

impl Default for PairingConfig {
    fn default() -> Self {
        Self {
            residual_tol: 0.45,
            v_max_mps: 250.0,
        }
    }
}

impl PairingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0 && self.residual_tol < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "residual_tol must lie in (0, 0.5), got {}",
                self.residual_tol
            )));
        }
        if !(self.v_max_mps > 0.0 && self.v_max_mps.is_finite()) {
            return Err(Error::InvalidParameter("v_max must be positive".into()));
        }
        Ok(())
    }
}

/// Validated trains of one carrier profile.
#[derive(Debug, Clone, Copy)]
pub struct CarrierTrains<'a> {
    pub trains: &'a [PeakTrain],
    pub delta_v: f64,
    pub n_bins: usize,
}

struct Candidate {
    train1: usize,
    train2: usize,
    estimate: TargetEstimate,
}

/// Pairs peak trains across the two carriers into target estimates.
///
/// Every member-bin pair of every train pair is solved. Solutions are kept
/// when the residual is below tolerance, `0 <= v <= v_max`, and `|z0|` does
/// not exceed the number of train periods in the profile. Accepted
/// candidates are taken greedily by ascending residual (then smallest
/// `|z0|`). A candidate is dropped when both of its trains already back an
/// estimate, or when its velocity lies within one resolution cell of an
/// accepted estimate. A single train may therefore back two estimates when
/// two targets alias onto the same residue class on one carrier but not on
/// the other.
pub fn pair_trains(
    f1: &CarrierTrains<'_>,
    f2: &CarrierTrains<'_>,
    n_slot: usize,
    cfg: &PairingConfig,
) -> Result<Vec<TargetEstimate>> {
    cfg.validate()?;
    if f1.delta_v == f2.delta_v {
        return Err(Error::SingularPair);
    }
    let z_cap = f1.n_bins.max(f2.n_bins).div_ceil(n_slot.max(1)) as i64;

    let mut candidates = Vec::new();
    for (i, t1) in f1.trains.iter().enumerate() {
        for (j, t2) in f2.trains.iter().enumerate() {
            for &k1 in &t1.member_bins {
                for &k2 in &t2.member_bins {
                    let sol = solve_pair(k1, f1.delta_v, k2, f2.delta_v, n_slot)?;
                    if sol.residual < cfg.residual_tol
                        && (0.0..=cfg.v_max_mps).contains(&sol.velocity_mps)
                        && sol.z0.abs() <= z_cap
                    {
                        candidates.push(Candidate {
                            train1: i,
                            train2: j,
                            estimate: TargetEstimate {
                                velocity_mps: sol.velocity_mps,
                                z0: sol.z0,
                                anchor_pair: (k1, k2),
                                residual: sol.residual,
                            },
                        });
                    }
                }
            }
        }
    }

    // Residuals of one train pair agree up to rounding; compare on a grid.
    let key = |c: &Candidate| ((c.estimate.residual * 1e9).round() as i64, c.estimate.z0.abs());
    candidates.sort_by_key(key);

    let min_sep = f1.delta_v.max(f2.delta_v);
    let mut used1 = vec![false; f1.trains.len()];
    let mut used2 = vec![false; f2.trains.len()];
    let mut out: Vec<TargetEstimate> = Vec::new();
    for c in candidates {
        if used1[c.train1] && used2[c.train2] {
            continue;
        }
        if out
            .iter()
            .any(|e| (e.velocity_mps - c.estimate.velocity_mps).abs() <= min_sep)
        {
            continue;
        }
        used1[c.train1] = true;
        used2[c.train2] = true;
        out.push(c.estimate);
    }
    Ok(out)
}
