//! Forward model of the measurement: quantum-beating coincidence
//! probability at the fiber beamsplitter, synthetic counting traces with
//! seeded Poisson noise, and single-photon spectra.
//!
//! After the gate, the two color-entangled photons meet at a balanced fiber
//! beamsplitter with a relative delay τ. The coincidence probability beats
//! at the bin separation Δf inside a triangular envelope set by the
//! single-bin coherence time τ_c:
//!
//! ```text
//! p_c(τ) = b − (V/2) · cos(2π·Δf·(τ−τ₀) + φ) · (1 − |2(τ−τ₀)/τ_c|)
//! ```
//!
//! for |τ−τ₀| < τ_c/2 and p_c = b outside, clamped to [0, 1]. V is the
//! interference visibility, φ the color-state phase, and b the asymptotic
//! baseline (1/2 for a balanced splitter). The triangular envelope is the
//! closed form for an unfiltered sinc²-shaped bin spectrum and is used
//! as-is rather than re-derived.
//!
//! Simulated traces draw coincidences and singles as Poisson counts on a
//! uniform delay grid from a counter-seeded generator, so any trace is
//! reproducible from its recorded seed. Singles means are delay-independent
//! (no single-photon interference in this configuration).

use alloc::string::String;
use alloc::vec::Vec;

// Float math on f64 comes from the trait in no_std builds; test builds link
// std, whose inherent methods shadow it and make the import look unused.
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::qstate::wrap_angle;

/// Name of the pseudo-random generator recorded in trace metadata.
pub const RNG_NAME: &str = "chacha8";

/// Delay-independent singles-to-coincidence rate ratio used by the
/// simulator. Fibre-coupled collection and detection losses put measured
/// singles rates roughly two orders of magnitude above the coincidence
/// rate; the exact value is cosmetic since the analysis never uses singles.
pub const SINGLES_TO_PAIR_RATIO: f64 = 120.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterferenceError {
    #[error("visibility V = {v} outside [0, 1]")]
    VisibilityOutOfRange { v: f64 },
    #[error("coherence time τ_c = {tau_c_ps} ps must be positive and finite")]
    BadCoherenceTime { tau_c_ps: f64 },
    #[error("baseline {baseline} outside the open interval (0, 1)")]
    BadBaseline { baseline: f64 },
    #[error("bin separation {detuning_thz} THz must be ≥ 0 and finite")]
    BadDetuning { detuning_thz: f64 },
    #[error("envelope center τ₀ = {tau0_ps} ps must be finite")]
    BadDelayOffset { tau0_ps: f64 },
    #[error("need at least {min} grid points, got {n}")]
    TooFewPoints { n: usize, min: usize },
    #[error("delay span {span_ps} ps must be positive and finite")]
    BadSpan { span_ps: f64 },
    #[error("pair rate {rate_hz} counts/s must be positive and finite")]
    BadRate { rate_hz: f64 },
    #[error("integration time {integration_s} s must be positive and finite")]
    BadIntegration { integration_s: f64 },
    #[error("trace delays must increase strictly (row {row})")]
    DelaysNotIncreasing { row: usize },
    #[error("spectrum wavelengths must increase strictly (row {row})")]
    WavelengthsNotIncreasing { row: usize },
    #[error("trace must have at least 2 rows, got {n}")]
    TraceTooShort { n: usize },
    #[error("{name} = {value} nm must be positive and finite")]
    BadWavelength { name: &'static str, value: f64 },
    #[error("{name} width {value} nm must be {constraint}")]
    BadWidth { name: &'static str, value: f64, constraint: &'static str },
    #[error("wavelength grid [{min_nm}, {max_nm}] with {points} points is invalid")]
    BadGrid { min_nm: f64, max_nm: f64, points: usize },
    #[error("per-mode spectral integrals differ by {ratio:.4}; modes must match within 1%")]
    ModeIntegralMismatch { ratio: f64 },
    #[error("spectrum intensities must be nonnegative and finite (row {row})")]
    BadIntensity { row: usize },
}

/// Parameters of the beating model. Angles are radians (wrapped to
/// [0, 2π) on construction), delays and times ps, frequencies THz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatingModelParams {
    visibility: f64,
    phase: f64,
    detuning_thz: f64,
    tau_c_ps: f64,
    tau0_ps: f64,
    baseline: f64,
}

impl BeatingModelParams {
    pub fn new(
        visibility: f64,
        phase: f64,
        detuning_thz: f64,
        tau_c_ps: f64,
        tau0_ps: f64,
        baseline: f64,
    ) -> Result<Self, InterferenceError> {
        if !(0.0..=1.0).contains(&visibility) || !visibility.is_finite() {
            return Err(InterferenceError::VisibilityOutOfRange { v: visibility });
        }
        if !(detuning_thz.is_finite() && detuning_thz >= 0.0) {
            return Err(InterferenceError::BadDetuning { detuning_thz });
        }
        if !(tau_c_ps.is_finite() && tau_c_ps > 0.0) {
            return Err(InterferenceError::BadCoherenceTime { tau_c_ps });
        }
        if !tau0_ps.is_finite() {
            return Err(InterferenceError::BadDelayOffset { tau0_ps });
        }
        if !(baseline.is_finite() && baseline > 0.0 && baseline < 1.0) {
            return Err(InterferenceError::BadBaseline { baseline });
        }
        Ok(BeatingModelParams {
            visibility,
            phase: wrap_angle(phase),
            detuning_thz,
            tau_c_ps,
            tau0_ps,
            baseline,
        })
    }

    /// Balanced-splitter default baseline of 1/2 and centered envelope.
    pub fn centered(
        visibility: f64,
        phase: f64,
        detuning_thz: f64,
        tau_c_ps: f64,
    ) -> Result<Self, InterferenceError> {
        Self::new(visibility, phase, detuning_thz, tau_c_ps, 0.0, 0.5)
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    /// Phase in radians, in [0, 2π).
    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Carrier phase referenced to zero absolute delay: φ − 2πΔf·τ₀,
    /// wrapped to [0, 2π).
    ///
    /// Shifting the envelope center trades off against φ without moving
    /// the fringe pattern (only the envelope, weakly, breaks the
    /// symmetry), so fits of noisy scans scatter (φ, τ₀) along that
    /// direction while this combination stays pinned. Compare phases of
    /// independent fits through this accessor, not [`Self::phase`].
    pub fn phase_at_zero_delay(&self) -> f64 {
        wrap_angle(self.phase - core::f64::consts::TAU * self.detuning_thz * self.tau0_ps)
    }

    pub fn detuning_thz(&self) -> f64 {
        self.detuning_thz
    }

    pub fn tau_c_ps(&self) -> f64 {
        self.tau_c_ps
    }

    pub fn tau0_ps(&self) -> f64 {
        self.tau0_ps
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }
}

/// Coincidence probability at delay `tau_ps`: the beating fringe inside its
/// triangular envelope, clamped to [0, 1].
pub fn beating_probability(tau_ps: f64, params: &BeatingModelParams) -> f64 {
    let t = tau_ps - params.tau0_ps;
    let half_width = params.tau_c_ps / 2.0;
    let p = if t.abs() < half_width {
        let envelope = 1.0 - (2.0 * t / params.tau_c_ps).abs();
        let fringe = (core::f64::consts::TAU * params.detuning_thz * t + params.phase).cos();
        params.baseline - 0.5 * params.visibility * fringe * envelope
    } else {
        params.baseline
    };
    p.clamp(0.0, 1.0)
}

/// One measured point of a beating trace. Counts are raw (not rates); the
/// per-row integration time converts between the two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub delay_ps: f64,
    pub coincidences: u64,
    pub singles3: u64,
    pub singles4: u64,
    pub integration_s: f64,
}

/// Acquisition metadata carried with a trace. The pair rate is required (it
/// normalizes counts into probabilities); seed and generator name are
/// present exactly when the trace was synthesized.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub pair_rate_hz: f64,
    pub seed: Option<u64>,
    pub rng: Option<String>,
}

/// A coincidence/singles counting scan over delay.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatingTrace {
    rows: Vec<TraceRow>,
    meta: TraceMeta,
}

impl BeatingTrace {
    /// Validates strictly increasing delays, positive integration times, and
    /// a positive pair rate.
    pub fn new(rows: Vec<TraceRow>, meta: TraceMeta) -> Result<Self, InterferenceError> {
        if rows.len() < 2 {
            return Err(InterferenceError::TraceTooShort { n: rows.len() });
        }
        for (index, row) in rows.iter().enumerate() {
            if !(row.integration_s.is_finite() && row.integration_s > 0.0) {
                return Err(InterferenceError::BadIntegration { integration_s: row.integration_s });
            }
            if !row.delay_ps.is_finite() {
                return Err(InterferenceError::DelaysNotIncreasing { row: index });
            }
        }
        for (row, pair) in rows.windows(2).enumerate() {
            if pair[1].delay_ps <= pair[0].delay_ps {
                return Err(InterferenceError::DelaysNotIncreasing { row: row + 1 });
            }
        }
        if !(meta.pair_rate_hz.is_finite() && meta.pair_rate_hz > 0.0) {
            return Err(InterferenceError::BadRate { rate_hz: meta.pair_rate_hz });
        }
        Ok(BeatingTrace { rows, meta })
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Acquisition settings for a synthetic delay scan. The grid is uniform
/// over [−span/2, +span/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSettings {
    pub n_points: usize,
    pub delay_span_ps: f64,
    pub pair_rate_hz: f64,
    pub integration_s: f64,
}

impl TraceSettings {
    fn validate(&self) -> Result<(), InterferenceError> {
        if self.n_points < 2 {
            return Err(InterferenceError::TooFewPoints { n: self.n_points, min: 2 });
        }
        if !(self.delay_span_ps.is_finite() && self.delay_span_ps > 0.0) {
            return Err(InterferenceError::BadSpan { span_ps: self.delay_span_ps });
        }
        if !(self.pair_rate_hz.is_finite() && self.pair_rate_hz > 0.0) {
            return Err(InterferenceError::BadRate { rate_hz: self.pair_rate_hz });
        }
        if !(self.integration_s.is_finite() && self.integration_s > 0.0) {
            return Err(InterferenceError::BadIntegration { integration_s: self.integration_s });
        }
        Ok(())
    }

    fn delay_at(&self, index: usize) -> f64 {
        let step = self.delay_span_ps / (self.n_points - 1) as f64;
        -self.delay_span_ps / 2.0 + step * index as f64
    }
}

/// Simulates one delay scan: coincidences Poisson-distributed around
/// rate·integration·p_c(τ), singles Poisson-distributed around a
/// delay-independent mean, all drawn from a ChaCha8 stream seeded with
/// `seed`. Identical inputs give bit-identical traces.
pub fn simulate_trace(
    params: &BeatingModelParams,
    settings: &TraceSettings,
    seed: u64,
) -> Result<BeatingTrace, InterferenceError> {
    settings.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let singles_mean =
        SINGLES_TO_PAIR_RATIO * settings.pair_rate_hz * settings.integration_s;
    let mut rows = Vec::with_capacity(settings.n_points);
    for i in 0..settings.n_points {
        let delay_ps = settings.delay_at(i);
        let mean = settings.pair_rate_hz
            * settings.integration_s
            * beating_probability(delay_ps, params);
        // Draw order per point is fixed (coincidences, singles3, singles4)
        // so that traces are reproducible from the seed alone.
        let coincidences = poisson_draw(&mut rng, mean);
        let singles3 = poisson_draw(&mut rng, singles_mean);
        let singles4 = poisson_draw(&mut rng, singles_mean);
        rows.push(TraceRow {
            delay_ps,
            coincidences,
            singles3,
            singles4,
            integration_s: settings.integration_s,
        });
    }
    BeatingTrace::new(
        rows,
        TraceMeta {
            pair_rate_hz: settings.pair_rate_hz,
            seed: Some(seed),
            rng: Some(String::from(RNG_NAME)),
        },
    )
}

/// Noise-free counterpart of [`simulate_trace`]: counts are the rounded
/// Poisson means. Useful as a zero-residual fixed point for fitting.
pub fn expected_trace(
    params: &BeatingModelParams,
    settings: &TraceSettings,
) -> Result<BeatingTrace, InterferenceError> {
    settings.validate()?;
    let singles_mean =
        SINGLES_TO_PAIR_RATIO * settings.pair_rate_hz * settings.integration_s;
    let mut rows = Vec::with_capacity(settings.n_points);
    for i in 0..settings.n_points {
        let delay_ps = settings.delay_at(i);
        let mean = settings.pair_rate_hz
            * settings.integration_s
            * beating_probability(delay_ps, params);
        rows.push(TraceRow {
            delay_ps,
            coincidences: mean.round() as u64,
            singles3: singles_mean.round() as u64,
            singles4: singles_mean.round() as u64,
            integration_s: settings.integration_s,
        });
    }
    BeatingTrace::new(
        rows,
        TraceMeta { pair_rate_hz: settings.pair_rate_hz, seed: None, rng: None },
    )
}

pub(crate) fn poisson_draw(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite mean");
    let sample: f64 = dist.sample(rng);
    sample as u64
}

/// Uniform wavelength grid for spectrum synthesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavelengthGrid {
    pub min_nm: f64,
    pub max_nm: f64,
    pub points: usize,
}

impl WavelengthGrid {
    fn validate(&self) -> Result<(), InterferenceError> {
        let bad = !(self.min_nm.is_finite() && self.max_nm.is_finite())
            || self.min_nm <= 0.0
            || self.max_nm <= self.min_nm
            || self.points < 16;
        if bad {
            return Err(InterferenceError::BadGrid {
                min_nm: self.min_nm,
                max_nm: self.max_nm,
                points: self.points,
            });
        }
        Ok(())
    }

    fn step(&self) -> f64 {
        (self.max_nm - self.min_nm) / (self.points - 1) as f64
    }
}

/// One sample of the two single-photon spectra (arbitrary units, peak
/// normalized to 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub wavelength_nm: f64,
    pub mode3: f64,
    pub mode4: f64,
}

/// Single-photon spectra of output modes 3 and 4 over a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    rows: Vec<SpectrumRow>,
}

impl Spectrum {
    /// Validates nonnegative intensities, increasing wavelengths, and that
    /// the two modes carry the same total intensity within 1%.
    pub fn new(rows: Vec<SpectrumRow>) -> Result<Self, InterferenceError> {
        if rows.len() < 2 {
            return Err(InterferenceError::BadGrid {
                min_nm: rows.first().map_or(0.0, |r| r.wavelength_nm),
                max_nm: rows.last().map_or(0.0, |r| r.wavelength_nm),
                points: rows.len(),
            });
        }
        for (index, row) in rows.iter().enumerate() {
            let ok = row.mode3.is_finite()
                && row.mode4.is_finite()
                && row.mode3 >= 0.0
                && row.mode4 >= 0.0;
            if !ok {
                return Err(InterferenceError::BadIntensity { row: index });
            }
            if !row.wavelength_nm.is_finite() {
                return Err(InterferenceError::WavelengthsNotIncreasing { row: index });
            }
        }
        for (row, pair) in rows.windows(2).enumerate() {
            if pair[1].wavelength_nm <= pair[0].wavelength_nm {
                return Err(InterferenceError::WavelengthsNotIncreasing { row: row + 1 });
            }
        }
        let total3: f64 = rows.iter().map(|r| r.mode3).sum();
        let total4: f64 = rows.iter().map(|r| r.mode4).sum();
        let scale = total3.max(total4);
        if scale > 0.0 {
            let ratio = (total3 - total4).abs() / scale;
            if ratio > 0.01 {
                return Err(InterferenceError::ModeIntegralMismatch { ratio });
            }
        }
        Ok(Spectrum { rows })
    }

    pub fn rows(&self) -> &[SpectrumRow] {
        &self.rows
    }

    /// Local maxima of the mode-3 spectrum above 10% of the global peak,
    /// refined by a parabola through the three samples around each maximum.
    pub fn peak_wavelengths(&self) -> Vec<f64> {
        let peak = self
            .rows
            .iter()
            .map(|r| r.mode3)
            .fold(0.0, f64::max);
        let threshold = 0.1 * peak;
        let mut peaks = Vec::new();
        for i in 1..self.rows.len() - 1 {
            let (prev, here, next) =
                (self.rows[i - 1].mode3, self.rows[i].mode3, self.rows[i + 1].mode3);
            if here >= threshold && here > prev && here >= next {
                let denominator = prev - 2.0 * here + next;
                let shift = if denominator.abs() > 1e-300 {
                    0.5 * (prev - next) / denominator
                } else {
                    0.0
                };
                let step = self.rows[i + 1].wavelength_nm - self.rows[i].wavelength_nm;
                peaks.push(self.rows[i].wavelength_nm + shift.clamp(-0.5, 0.5) * step);
            }
        }
        peaks
    }
}

/// Synthesizes the single-photon spectra: each mode is the 50/50 sum of two
/// sinc²-shaped lines of FWHM `bin_fwhm_nm` at `lambda1_nm` and
/// `lambda2_nm`, convolved with a Gaussian instrument response of FWHM
/// `spectrometer_fwhm_nm` (0 for an ideal instrument), peak-normalized.
/// Both modes are identical: each photon is found at either color, never in
/// between.
pub fn synth_spectra(
    lambda1_nm: f64,
    lambda2_nm: f64,
    bin_fwhm_nm: f64,
    spectrometer_fwhm_nm: f64,
    grid: WavelengthGrid,
) -> Result<Spectrum, InterferenceError> {
    for (name, value) in [("λ1", lambda1_nm), ("λ2", lambda2_nm)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(InterferenceError::BadWavelength { name, value });
        }
    }
    if !(bin_fwhm_nm.is_finite() && bin_fwhm_nm > 0.0) {
        return Err(InterferenceError::BadWidth {
            name: "bin",
            value: bin_fwhm_nm,
            constraint: "positive",
        });
    }
    if !(spectrometer_fwhm_nm.is_finite() && spectrometer_fwhm_nm >= 0.0) {
        return Err(InterferenceError::BadWidth {
            name: "spectrometer",
            value: spectrometer_fwhm_nm,
            constraint: "nonnegative",
        });
    }
    grid.validate()?;

    let step = grid.step();
    let mut intensity: Vec<f64> = (0..grid.points)
        .map(|i| {
            let lambda = grid.min_nm + step * i as f64;
            0.5 * sinc_sq_line(lambda, lambda1_nm, bin_fwhm_nm)
                + 0.5 * sinc_sq_line(lambda, lambda2_nm, bin_fwhm_nm)
        })
        .collect();

    if spectrometer_fwhm_nm > 0.0 {
        intensity = gaussian_convolve(&intensity, step, spectrometer_fwhm_nm);
    }

    let peak = intensity.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        for v in intensity.iter_mut() {
            *v /= peak;
        }
    }

    let rows = intensity
        .iter()
        .enumerate()
        .map(|(i, &v)| SpectrumRow {
            wavelength_nm: grid.min_nm + step * i as f64,
            mode3: v,
            mode4: v,
        })
        .collect();
    Spectrum::new(rows)
}

/// Half width of sin²(u)/u² at half maximum: sinc²(±U_HALF) = 1/2.
const SINC_SQ_HALF_WIDTH: f64 = 1.391_557_377_204_433;

fn sinc_sq_line(lambda: f64, center: f64, fwhm: f64) -> f64 {
    let u = 2.0 * SINC_SQ_HALF_WIDTH * (lambda - center) / fwhm;
    if u.abs() < 1e-9 {
        // sinc²(u) = 1 − u²/3 + O(u⁴)
        1.0 - u * u / 3.0
    } else {
        let s = u.sin() / u;
        s * s
    }
}

fn gaussian_convolve(values: &[f64], step: f64, fwhm: f64) -> Vec<f64> {
    let sigma = fwhm / (8.0 * core::f64::consts::LN_2).sqrt();
    let half_support = ((4.0 * sigma / step).ceil() as usize).max(1);
    let kernel: Vec<f64> = (0..=2 * half_support)
        .map(|k| {
            let x = (k as f64 - half_support as f64) * step / sigma;
            (-0.5 * x * x).exp()
        })
        .collect();
    let kernel_sum: f64 = kernel.iter().sum();
    let mut out = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        let mut acc = 0.0;
        for (k, &w) in kernel.iter().enumerate() {
            let j = i as i64 + k as i64 - half_support as i64;
            if j >= 0 && (j as usize) < values.len() {
                acc += w * values[j as usize];
            }
        }
        out.push(acc / kernel_sum);
    }
    out
}
