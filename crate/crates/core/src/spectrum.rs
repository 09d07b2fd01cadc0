//! Periodograms and the two-factor decomposition of the velocity profile.
//!
//! Writing the zero-based sample index as `m = p * L + q` (repetition `p`,
//! offset `q` within the pattern listing of length `L`) splits the DFT of the
//! concatenated echo into a product:
//!
//! ```text
//! D'(k) = D1(k) * D2(k)
//! D1(k) = sum_p exp(j 2 pi f P p) exp(-j 2 pi p k / R)
//! D2(k) = sum_q exp(j 2 pi f l(q)) exp(-j 2 pi q k / (R L))
//! ```
//!
//! with `f` the target's Doppler in cycles per symbol, `P` the repetition
//! period in symbols (14 for slot patterns) and `R` the repetition count
//! (`n_slot` for slot patterns). `|D1|^2` is a peak train of period `R`
//! bins whose heights depend only on `v` and `n_slot`; `|D2|^2` shapes the
//! amplitudes along the train.

use std::cell::RefCell;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::patterns::SlotPattern;
use crate::waveform::{cycles_per_symbol, velocity_resolution, EchoVector, RadioConfig};
use crate::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward DFT, `X(k) = sum_m x(m) exp(-j 2 pi m k / N)`, zero-based.
///
/// Arbitrary lengths are supported (240 and 280 are not powers of two).
pub fn dft(samples: &[Complex64]) -> Result<Vec<Complex64>> {
    if samples.is_empty() {
        return Err(Error::Empty("DFT input"));
    }
    let mut buf = samples.to_vec();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(&mut buf);
    Ok(buf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMeta {
    pub delta_v: f64,
    pub n_slot: usize,
    pub n_s: usize,
    pub carrier_label: String,
}

/// Magnitude-squared spectrum over Doppler bins. Bin `k` maps to
/// `k * delta_v` m/s.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityProfile {
    bins: Vec<f64>,
    meta: ProfileMeta,
}

impl VelocityProfile {
    pub fn new(bins: Vec<f64>, meta: ProfileMeta) -> Result<Self> {
        if bins.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::InvalidParameter(
                "profile bins must be finite and non-negative".into(),
            ));
        }
        Ok(Self { bins, meta })
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn delta_v(&self) -> f64 {
        self.meta.delta_v
    }

    pub fn n_slot(&self) -> usize {
        self.meta.n_slot
    }

    pub fn n_s(&self) -> usize {
        self.meta.n_s
    }

    pub fn carrier_label(&self) -> &str {
        &self.meta.carrier_label
    }

    pub fn meta(&self) -> &ProfileMeta {
        &self.meta
    }

    pub fn velocity(&self, bin: usize) -> f64 {
        velocity_from_bin(bin, self.meta.delta_v)
    }

    /// Bins that are at least as large as both circular neighbours, sorted
    /// by descending power.
    pub fn local_maxima(&self) -> Vec<usize> {
        let n = self.bins.len();
        let mut out: Vec<usize> = (0..n)
            .filter(|&k| {
                let left = self.bins[(k + n - 1) % n];
                let right = self.bins[(k + 1) % n];
                self.bins[k] > left && self.bins[k] >= right
            })
            .collect();
        out.sort_by(|&a, &b| self.bins[b].total_cmp(&self.bins[a]).then(a.cmp(&b)));
        out
    }
}

/// `|X(k)|^2` for every bin.
pub fn periodogram(spectrum: &[Complex64], meta: ProfileMeta) -> VelocityProfile {
    VelocityProfile {
        bins: spectrum.iter().map(|x| x.norm_sqr()).collect(),
        meta,
    }
}

pub fn velocity_from_bin(k: usize, delta_v: f64) -> f64 {
    k as f64 * delta_v
}

/// Periodogram of the concatenated echo samples.
///
/// With a comb pattern this is the conventional single-peak periodogram.
pub fn multi_periodogram(echo: &EchoVector, carrier_label: &str) -> VelocityProfile {
    let spectrum = dft(echo.samples()).expect("echo vectors are never empty");
    let map = echo.index_map();
    periodogram(
        &spectrum,
        ProfileMeta {
            delta_v: velocity_resolution(echo.radio()),
            n_slot: map.n_slot(),
            n_s: map.pattern().n_s(),
            carrier_label: carrier_label.to_string(),
        },
    )
}

/// One term of the amplitude-shaping factor,
/// `E(q, k) = exp(-j (2 pi f(q) k - theta(q)))`, with 1-based `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialComponent {
    pub q: usize,
    /// Cycles per bin.
    pub frequency: f64,
    /// Radians.
    pub phase: f64,
}

impl ExponentialComponent {
    pub fn at(&self, k: usize) -> Complex64 {
        Complex64::from_polar(1.0, -(TAU * self.frequency * k as f64 - self.phase))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub d1_sq: Vec<f64>,
    pub d2_sq: Vec<f64>,
    pub components: Vec<ExponentialComponent>,
}

impl FactorPair {
    pub fn len(&self) -> usize {
        self.d1_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d1_sq.is_empty()
    }

    /// Element-wise product `|D1|^2 * |D2|^2`.
    pub fn product(&self) -> Vec<f64> {
        self.d1_sq.iter().zip(&self.d2_sq).map(|(a, b)| a * b).collect()
    }
}

/// Evaluates `|D1(k)|^2` and `|D2(k)|^2` in closed form for a unit-amplitude
/// target at velocity `v`.
pub fn factor_profile(v: f64, pattern: &SlotPattern, radio: &RadioConfig) -> Result<FactorPair> {
    radio.validate()?;
    let map = pattern.index_map(radio.n_slot)?;
    let period = map.period() as f64;
    let offsets = map.offsets();
    let reps = map.repetitions();
    let len = offsets.len();
    let n_bins = reps * len;
    let f = cycles_per_symbol(v, radio);

    // Per-repetition phasor and per-offset phasors, reduced mod one cycle.
    let slot_phase: Vec<f64> = (0..reps).map(|p| (f * period * p as f64).rem_euclid(1.0)).collect();
    let offset_phase: Vec<f64> = offsets.iter().map(|&l| (f * l as f64).rem_euclid(1.0)).collect();

    let mut d1_sq = Vec::with_capacity(n_bins);
    let mut d2_sq = Vec::with_capacity(n_bins);
    for k in 0..n_bins {
        let d1: Complex64 = slot_phase
            .iter()
            .enumerate()
            .map(|(p, &ph)| {
                let bin = ((p * k) % reps) as f64 / reps as f64;
                Complex64::from_polar(1.0, TAU * (ph - bin))
            })
            .sum();
        let d2: Complex64 = offset_phase
            .iter()
            .enumerate()
            .map(|(q, &ph)| {
                let bin = ((q * k) % n_bins) as f64 / n_bins as f64;
                Complex64::from_polar(1.0, TAU * (ph - bin))
            })
            .sum();
        d1_sq.push(d1.norm_sqr());
        d2_sq.push(d2.norm_sqr());
    }

    let components = offsets
        .iter()
        .enumerate()
        .map(|(i, &l)| ExponentialComponent {
            q: i + 1,
            frequency: (i + 1) as f64 / n_bins as f64,
            phase: TAU * f * l as f64,
        })
        .collect();

    Ok(FactorPair {
        d1_sq,
        d2_sq,
        components,
    })
}

/// Bins `round(v / dv) + z * n_slot` that fall in `[0, n_bins)`, ascending.
pub fn predicted_peak_bins(v: f64, delta_v: f64, n_slot: usize, n_bins: usize) -> Vec<usize> {
    if n_slot == 0 || n_bins == 0 {
        return Vec::new();
    }
    let k0 = (v / delta_v).round() as i64;
    let first = k0.rem_euclid(n_slot as i64) as usize;
    (first..n_bins).step_by(n_slot).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{builtin_pattern, comb_pattern};
    use crate::waveform::{synthesize_clean, Target};
    use proptest::prelude::*;

    fn brute_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(m, v)| v * Complex64::from_polar(1.0, -TAU * ((m * k) % n) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    fn meta() -> ProfileMeta {
        ProfileMeta {
            delta_v: 1.0,
            n_slot: 1,
            n_s: 1,
            carrier_label: "t".into(),
        }
    }

    #[test]
    fn dft_of_ones() {
        let x = vec![Complex64::new(1.0, 0.0); 8];
        let y = dft(&x).unwrap();
        assert!((y[0] - Complex64::new(8.0, 0.0)).norm() < 1e-12);
        assert!(y[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn dft_on_bin_tone() {
        let x: Vec<_> = (0..16)
            .map(|m| Complex64::from_polar(1.0, TAU * 3.0 * m as f64 / 16.0))
            .collect();
        let y = dft(&x).unwrap();
        for (k, z) in y.iter().enumerate() {
            let expect = if k == 3 { 16.0 } else { 0.0 };
            assert!((z.norm() - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn dft_rejects_empty() {
        assert!(matches!(dft(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn periodogram_magnitude() {
        let p = periodogram(&[Complex64::new(3.0, 4.0), Complex64::new(0.0, 0.0)], meta());
        assert_eq!(p.bins(), &[25.0, 0.0]);
    }

    #[test]
    fn velocity_from_bin_values() {
        assert!((velocity_from_bin(108, 0.741) - 80.0).abs() < 0.1);
        assert!((velocity_from_bin(112, 0.715) - 80.1).abs() < 0.1);
        assert_eq!(velocity_from_bin(0, 0.7), 0.0);
    }

    #[test]
    fn comb1_peak_on_true_velocity() {
        let radio = RadioConfig::reference_f1();
        let e = synthesize_clean(&[Target::new(80.0)], &comb_pattern(1).unwrap(), &radio).unwrap();
        let prof = multi_periodogram(&e, "f1");
        assert_eq!(prof.len(), 840);
        let k = prof.local_maxima()[0];
        assert!((prof.velocity(k) - 80.0).abs() <= prof.delta_v() / 2.0);
    }

    #[test]
    fn sp_profiles_peak_trains() {
        let cases = [
            ("SP1", RadioConfig::reference_f1(), [48, 108, 168, 228]),
            ("SP2", RadioConfig::reference_f2(), [52, 112, 172, 232]),
        ];
        for (name, radio, expect) in cases {
            let e = synthesize_clean(&[Target::new(80.0)], &builtin_pattern(name).unwrap(), &radio).unwrap();
            let prof = multi_periodogram(&e, name);
            let mut top: Vec<usize> = prof.local_maxima().into_iter().take(4).collect();
            top.sort();
            assert_eq!(top, expect, "{name}");
        }
    }

    #[test]
    fn sp1_factors() {
        let fp = factor_profile(80.0, &builtin_pattern("SP1").unwrap(), &RadioConfig::reference_f1()).unwrap();
        assert_eq!(fp.len(), 240);
        let peaks = [48, 108, 168, 228];
        let h = fp.d1_sq[48];
        for k in peaks {
            assert!((fp.d1_sq[k] - h).abs() < 1e-9 * h);
            assert!(fp.d1_sq[k] >= fp.d1_sq[(k + 1) % 240] && fp.d1_sq[k] >= fp.d1_sq[k - 1]);
        }
        let argmax = (0..240).max_by(|&a, &b| fp.d2_sq[a].total_cmp(&fp.d2_sq[b])).unwrap();
        assert!((28..=33).contains(&argmax), "d2 max at {argmax}");
        assert_eq!(fp.components.len(), 4);
        assert_eq!(fp.components[0].q, 1);
        assert!((fp.components[3].frequency - 4.0 / 240.0).abs() < 1e-15);
    }

    #[test]
    fn single_offset_gives_flat_d2() {
        let fp = factor_profile(55.0, &comb_pattern(14).unwrap(), &RadioConfig::reference_f1()).unwrap();
        assert!(fp.d2_sq.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn on_grid_d1_heights() {
        let radio = RadioConfig::reference_f2();
        let v = 30.0 * radio.velocity_resolution();
        let fp = factor_profile(v, &builtin_pattern("SP2").unwrap(), &radio).unwrap();
        for k in [30, 90, 150, 210] {
            assert!((fp.d1_sq[k] - 3600.0).abs() < 1e-6);
        }
    }

    #[test]
    fn predicted_bins() {
        assert_eq!(predicted_peak_bins(80.0, 0.7415, 60, 240), vec![48, 108, 168, 228]);
        assert_eq!(predicted_peak_bins(169.0, 0.7150, 60, 240), vec![56, 116, 176, 236]);
        assert_eq!(predicted_peak_bins(0.0, 0.7, 60, 240), vec![0, 60, 120, 180]);
        assert_eq!(predicted_peak_bins(-1.0, 1.0, 60, 240), vec![59, 119, 179, 239]);
    }

    #[test]
    fn components_sum_to_d2() {
        let fp = factor_profile(80.0, &builtin_pattern("SP2").unwrap(), &RadioConfig::reference_f2()).unwrap();
        for k in 0..fp.len() {
            let s: Complex64 = fp.components.iter().map(|c| c.at(k)).sum();
            assert!((s.norm_sqr() - fp.d2_sq[k]).abs() < 1e-9 * (1.0 + fp.d2_sq[k]));
        }
    }

    proptest! {
        #[test]
        fn dft_matches_brute_force(
            n in prop::sample::select(vec![7usize, 60, 240]),
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let fast = dft(&x).unwrap();
            let slow = brute_dft(&x);
            let scale = slow.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).norm() / scale < 1e-10);
            }
            // Parseval
            let e_t: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            let e_f: f64 = fast.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((e_f - n as f64 * e_t).abs() < 1e-9 * e_f);
        }

        #[test]
        fn d2_parseval(v in -300.0f64..300.0, name in prop::sample::select(vec!["SP1", "SP2"]), n_slot in 1usize..90) {
            let radio = RadioConfig { n_slot, ..RadioConfig::reference_f1() };
            let p = builtin_pattern(name).unwrap();
            let fp = factor_profile(v, &p, &radio).unwrap();
            let total: f64 = fp.d2_sq.iter().sum();
            let expect = (n_slot * p.n_s() * p.n_s()) as f64;
            prop_assert!((total - expect).abs() < 1e-8 * expect);
        }
    }
}
