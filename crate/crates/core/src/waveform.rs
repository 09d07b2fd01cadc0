//! Normalized echo synthesis.
//!
//! After division by the transmitted reference symbols, the echo of a point
//! target moving at `v` is a pure phasor over the global symbol index `n`:
//! `exp(j 2 pi v n / (dv * 14 * n_slot))`, where `dv` is the velocity
//! resolution of the carrier. Slot patterns sample that phasor at the
//! symbols they occupy.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{PI, TAU};

use crate::patterns::{SampleIndexMap, SlotPattern, SYMBOLS_PER_SLOT};
use crate::{Error, Result};

/// Default propagation speed. The rounded value gives 0.741 and 0.715 m/s
/// resolution at 27 and 28 GHz; the exact speed of light moves peak bins.
pub const DEFAULT_C0: f64 = 3.0e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConfig {
    pub carrier_freq_hz: f64,
    pub symbol_duration_s: f64,
    pub n_slot: usize,
    pub c0_mps: f64,
}

impl RadioConfig {
    pub fn new(carrier_freq_hz: f64, symbol_duration_s: f64, n_slot: usize, c0_mps: f64) -> Result<Self> {
        let cfg = Self {
            carrier_freq_hz,
            symbol_duration_s,
            n_slot,
            c0_mps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 27 GHz carrier, 8.92 us symbols, 60 slots.
    pub fn reference_f1() -> Self {
        Self {
            carrier_freq_hz: 27.0e9,
            symbol_duration_s: 8.92e-6,
            n_slot: 60,
            c0_mps: DEFAULT_C0,
        }
    }

    /// 28 GHz carrier, 8.92 us symbols, 60 slots.
    pub fn reference_f2() -> Self {
        Self {
            carrier_freq_hz: 28.0e9,
            ..Self::reference_f1()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.carrier_freq_hz) || !positive(self.symbol_duration_s) || !positive(self.c0_mps) {
            return Err(Error::InvalidParameter(
                "carrier frequency, symbol duration and c0 must be finite and positive".into(),
            ));
        }
        if self.n_slot == 0 {
            return Err(Error::InvalidParameter("n_slot must be at least 1".into()));
        }
        Ok(())
    }

    pub fn velocity_resolution(&self) -> f64 {
        velocity_resolution(self)
    }
}

/// Velocity spanned by one Doppler bin: `c0 / (28 f_c T_sym N_slot)`.
pub fn velocity_resolution(radio: &RadioConfig) -> f64 {
    radio.c0_mps
        / (2.0 * SYMBOLS_PER_SLOT as f64 * radio.carrier_freq_hz * radio.symbol_duration_s * radio.n_slot as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub velocity_mps: f64,
    /// Linear power relative to a unit reference echo.
    pub mean_power: f64,
    /// Draw a Swerling-1 (complex Gaussian) amplitude per observation.
    pub swerling1: bool,
}

impl Target {
    pub fn new(velocity_mps: f64) -> Self {
        Self {
            velocity_mps,
            mean_power: 1.0,
            swerling1: false,
        }
    }

    pub fn with_power(mut self, mean_power: f64) -> Self {
        self.mean_power = mean_power;
        self
    }

    pub fn with_swerling1(mut self, swerling1: bool) -> Self {
        self.swerling1 = swerling1;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// Per-sample SNR; `f64::INFINITY` disables noise.
    pub snr_db: f64,
    /// Gain applied before the slow-time samples are formed (for example
    /// combining across subcarriers). The effective per-sample SNR is
    /// `snr_db + processing_gain_db`.
    pub processing_gain_db: f64,
    /// Rician K-factor; `None` leaves the target ray unfaded.
    pub rician_k_db: Option<f64>,
    pub n_multipath: usize,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            snr_db: f64::INFINITY,
            processing_gain_db: 0.0,
            rician_k_db: None,
            n_multipath: 0,
            seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn effective_snr_db(&self) -> f64 {
        self.snr_db + self.processing_gain_db
    }
}

/// Concatenated slow-time echo samples `d'(m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoVector {
    samples: Vec<Complex64>,
    components: Vec<Vec<Complex64>>,
    index_map: SampleIndexMap,
    radio: RadioConfig,
}

impl EchoVector {
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Noise-free contribution of each target, in target order.
    pub fn target_components(&self) -> &[Vec<Complex64>] {
        &self.components
    }

    pub fn index_map(&self) -> &SampleIndexMap {
        &self.index_map
    }

    pub fn radio(&self) -> &RadioConfig {
        &self.radio
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean `|d'(m)|^2`.
    pub fn mean_power(&self) -> f64 {
        mean_power(&self.samples)
    }
}

fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Phase advance per symbol, in cycles, for velocity `v`.
pub(crate) fn cycles_per_symbol(v: f64, radio: &RadioConfig) -> f64 {
    v / (velocity_resolution(radio) * (SYMBOLS_PER_SLOT * radio.n_slot) as f64)
}

/// Builds the noise-free echo of `targets` sampled through `pattern`.
pub fn synthesize_clean(targets: &[Target], pattern: &SlotPattern, radio: &RadioConfig) -> Result<EchoVector> {
    if targets.is_empty() {
        return Err(Error::Empty("target list"));
    }
    radio.validate()?;
    if let Some(t) = targets
        .iter()
        .find(|t| !t.velocity_mps.is_finite() || !(t.mean_power.is_finite() && t.mean_power > 0.0))
    {
        return Err(Error::InvalidParameter(format!(
            "target velocity must be finite and mean power positive (got v={}, power={})",
            t.velocity_mps, t.mean_power
        )));
    }
    let index_map = pattern.index_map(radio.n_slot)?;
    let symbols = index_map.global_symbols();

    let components: Vec<Vec<Complex64>> = targets
        .iter()
        .map(|t| {
            let amp = t.mean_power.sqrt();
            let f = cycles_per_symbol(t.velocity_mps, radio);
            symbols
                .iter()
                .map(|&n| {
                    // n * f can be large; reduce before scaling by 2 pi.
                    let cycles = (n as f64 * f).rem_euclid(1.0);
                    Complex64::from_polar(amp, TAU * cycles)
                })
                .collect()
        })
        .collect();

    let mut samples = vec![Complex64::new(0.0, 0.0); symbols.len()];
    for comp in &components {
        for (s, c) in samples.iter_mut().zip(comp) {
            *s += c;
        }
    }
    Ok(EchoVector {
        samples,
        components,
        index_map,
        radio: *radio,
    })
}

fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Applies target fluctuation, Rician multipath and AWGN.
///
/// Each target's component is scaled by a complex gain: a unit-mean-power
/// complex Gaussian when its Swerling-1 flag is set, times the Rician gain
/// `sqrt(K/(K+1)) + sum_i sqrt(1/((K+1) M)) exp(j phi_i)` when multipath is
/// enabled. Rays share the target Doppler. Noise power is set from the mean
/// power of the clean vector and the effective SNR.
pub fn apply_channel(clean: &EchoVector, channel: &ChannelConfig, swerling: &[bool]) -> Result<EchoVector> {
    if swerling.len() != clean.components.len() {
        return Err(Error::InvalidParameter(format!(
            "{} Swerling flags for {} targets",
            swerling.len(),
            clean.components.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(channel.seed);

    let mut components = Vec::with_capacity(clean.components.len());
    for (comp, &fluctuates) in clean.components.iter().zip(swerling) {
        let mut gain = Complex64::new(1.0, 0.0);
        if fluctuates {
            gain *= complex_gaussian(&mut rng, 1.0);
        }
        if let (Some(k_db), m) = (channel.rician_k_db, channel.n_multipath) {
            if m > 0 {
                let k = 10f64.powf(k_db / 10.0);
                let los = (k / (k + 1.0)).sqrt();
                let ray = (1.0 / ((k + 1.0) * m as f64)).sqrt();
                let diffuse: Complex64 = (0..m)
                    .map(|_| Complex64::from_polar(ray, rng.random_range(-PI..PI)))
                    .sum();
                gain *= los + diffuse;
            }
        }
        components.push(comp.iter().map(|c| c * gain).collect::<Vec<_>>());
    }

    let mut samples = vec![Complex64::new(0.0, 0.0); clean.samples.len()];
    for comp in &components {
        for (s, c) in samples.iter_mut().zip(comp) {
            *s += c;
        }
    }

    let snr_db = channel.effective_snr_db();
    if snr_db.is_finite() {
        let noise_power = clean.mean_power() / 10f64.powf(snr_db / 10.0);
        for s in &mut samples {
            *s += complex_gaussian(&mut rng, noise_power);
        }
    } else if snr_db.is_nan() {
        return Err(Error::InvalidParameter("SNR must not be NaN".into()));
    }

    Ok(EchoVector {
        samples,
        components,
        index_map: clean.index_map.clone(),
        radio: clean.radio,
    })
}
