//! CSV writers.
//!
//! Reals are written with 17 significant digits in scientific notation, which
//! round-trips every `f64`. Columns are fixed, so output is byte-stable for a
//! given input.

use std::io::{self, Write};

use crate::detect::{Detection, PeakTrain};
use crate::disambiguate::TargetEstimate;
use crate::evaluate::MetricsReport;
use crate::spectrum::{FactorPair, VelocityProfile};
use crate::waveform::EchoVector;

/// Formats a real with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Columns `m,global_symbol,re,im`.
pub fn write_echo<W: Write>(mut w: W, echo: &EchoVector) -> io::Result<()> {
    writeln!(w, "m,global_symbol,re,im")?;
    for (m, (z, n)) in echo.samples().iter().zip(echo.index_map().global_symbols()).enumerate() {
        writeln!(w, "{m},{n},{},{}", num(z.re), num(z.im))?;
    }
    Ok(())
}

/// Columns `bin,velocity_mps,power`.
pub fn write_profile<W: Write>(mut w: W, profile: &VelocityProfile) -> io::Result<()> {
    writeln!(w, "bin,velocity_mps,power")?;
    for (k, p) in profile.bins().iter().enumerate() {
        writeln!(w, "{k},{},{}", num(profile.velocity(k)), num(*p))?;
    }
    Ok(())
}

/// Columns `bin,velocity_mps,d1_sq,d2_sq,product`.
pub fn write_factors<W: Write>(mut w: W, factors: &FactorPair, delta_v: f64) -> io::Result<()> {
    writeln!(w, "bin,velocity_mps,d1_sq,d2_sq,product")?;
    for k in 0..factors.len() {
        let (a, b) = (factors.d1_sq[k], factors.d2_sq[k]);
        writeln!(
            w,
            "{k},{},{},{},{}",
            num(k as f64 * delta_v),
            num(a),
            num(b),
            num(a * b)
        )?;
    }
    Ok(())
}

/// Real part of every `E(q, k)`: columns `bin,e1_re,...,eL_re`.
pub fn write_components<W: Write>(mut w: W, factors: &FactorPair) -> io::Result<()> {
    write!(w, "bin")?;
    for c in &factors.components {
        write!(w, ",e{}_re", c.q)?;
    }
    writeln!(w)?;
    for k in 0..factors.len() {
        write!(w, "{k}")?;
        for c in &factors.components {
            write!(w, ",{}", num(c.at(k).re))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Frequency and phase of every `E(q, k)`: columns `q,frequency,phase_rad`.
pub fn write_component_params<W: Write>(mut w: W, factors: &FactorPair) -> io::Result<()> {
    writeln!(w, "q,frequency,phase_rad")?;
    for c in &factors.components {
        writeln!(w, "{},{},{}", c.q, num(c.frequency), num(c.phase))?;
    }
    Ok(())
}

/// Columns `bin,velocity_mps,power,train_anchor`; the anchor is `none` for
/// detections outside every validated train.
pub fn write_detections<W: Write>(
    mut w: W,
    detections: &[Detection],
    trains: &[PeakTrain],
    delta_v: f64,
) -> io::Result<()> {
    writeln!(w, "bin,velocity_mps,power,train_anchor")?;
    for d in detections {
        let anchor = trains
            .iter()
            .find(|t| t.contains(d.bin))
            .map_or_else(|| "none".to_string(), |t| t.anchor_bin.to_string());
        writeln!(w, "{},{},{},{anchor}", d.bin, num(d.bin as f64 * delta_v), num(d.power))?;
    }
    Ok(())
}

/// Columns `anchor_bin,hit_count,expected_count,members` (members joined by `;`).
pub fn write_trains<W: Write>(mut w: W, trains: &[PeakTrain]) -> io::Result<()> {
    writeln!(w, "anchor_bin,hit_count,expected_count,members")?;
    for t in trains {
        let members: Vec<String> = t.member_bins.iter().map(|b| b.to_string()).collect();
        writeln!(
            w,
            "{},{},{},{}",
            t.anchor_bin,
            t.hit_count,
            t.expected_count,
            members.join(";")
        )?;
    }
    Ok(())
}

/// Columns `velocity_mps,z0,anchor_f1,anchor_f2,residual`.
pub fn write_estimates<W: Write>(mut w: W, estimates: &[TargetEstimate]) -> io::Result<()> {
    writeln!(w, "velocity_mps,z0,anchor_f1,anchor_f2,residual")?;
    for e in estimates {
        writeln!(
            w,
            "{},{},{},{},{}",
            num(e.velocity_mps),
            e.z0,
            e.anchor_pair.0,
            e.anchor_pair.1,
            num(e.residual)
        )?;
    }
    Ok(())
}

/// Columns `algorithm,snr_db,trials,mean_abs_err_mps,rmse_mps,missed_rate,false_alarms`.
pub fn write_metrics<W: Write>(mut w: W, reports: &[MetricsReport]) -> io::Result<()> {
    writeln!(
        w,
        "algorithm,snr_db,trials,mean_abs_err_mps,rmse_mps,missed_rate,false_alarms"
    )?;
    for r in reports {
        for row in &r.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.algorithm.name(),
                num(row.snr_db),
                row.trials,
                num(row.mean_abs_velocity_error),
                num(row.rmse),
                num(row.missed_detection_rate),
                row.false_alarm_total
            )?;
        }
    }
    Ok(())
}
