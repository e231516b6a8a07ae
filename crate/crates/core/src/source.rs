//! The tunable polarization-entangled pair source.
//!
//! A down-conversion source pumped at fixed frequency emits photon pairs in
//! the state (α|H⟩₁|H⟩₂ + βe^{iφ}|V⟩₁|V⟩₂) ⊗ |ω1⟩₁|ω2⟩₂: polarization
//! entanglement plus a fixed, anticorrelated assignment of frequency bins
//! whose separation is set by the crystal temperature. This module holds
//! that input state, the temperature→detuning tuning curve, and the unit
//! conversions between wavelength, frequency, and coherence time.
//!
//! Frequencies are ordinary (not angular) and in THz; wavelengths in nm;
//! times in ps. With c in nm·THz these are mutually consistent, and
//! THz × ps products are dimensionless.

use alloc::vec::Vec;

// Float math on f64 comes from the trait in no_std builds; test builds link
// std, whose inherent methods shadow it and make the import look unused.
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

/// Speed of light in nm·THz (equivalently, µm·GHz·10³): λ[nm] · f[THz] = c.
pub const SPEED_OF_LIGHT_NM_THZ: f64 = 299792.458;

/// Time–bandwidth product of the filtered line shape: the product of the
/// coincidence-envelope base-to-base half width τ_c and the line FWHM Δf_FWHM,
/// for a sinc²-shaped line. Dimensionless with THz·ps.
pub const SINC_TIME_BANDWIDTH: f64 = 0.885;

const AMPLITUDE_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SourceError {
    #[error("amplitudes (α, β) = ({alpha}, {beta}) have zero or non-finite norm")]
    ZeroNorm { alpha: f64, beta: f64 },
    #[error("amplitude {name} = {value} must be ≥ 0 (the relative phase belongs to φ)")]
    NegativeAmplitude { name: &'static str, value: f64 },
    #[error("wavelength {name} = {value} nm must be positive and finite")]
    BadWavelength { name: &'static str, value: f64 },
    #[error("temperature {temperature_c} °C is below the degeneracy point {degeneracy_c} °C")]
    BelowDegeneracy { temperature_c: f64, degeneracy_c: f64 },
    #[error("invalid tuning anchors: {reason}")]
    BadAnchors { reason: &'static str },
    #[error("detuning {value} THz must be ≥ 0")]
    NegativeDetuning { value: f64 },
    #[error("detuning {value} THz exceeds twice the degenerate frequency")]
    DetuningTooLarge { value: f64 },
    #[error("bandwidth {value} THz must be positive")]
    BadBandwidth { value: f64 },
}

/// The two-photon input state α|H⟩₁|H⟩₂ + βe^{iφ}|V⟩₁|V⟩₂, with the path-1
/// photon in bin ω1 (`omega1_nm`) and the path-2 photon in bin ω2
/// (`omega2_nm`).
///
/// Construction renormalizes (α, β) to α² + β² = 1; inputs further than 1e-9
/// from normalized are still accepted and scaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolPairState {
    alpha: f64,
    beta: f64,
    phi: f64,
    omega1_nm: f64,
    omega2_nm: f64,
}

impl PolPairState {
    pub fn new(
        alpha: f64,
        beta: f64,
        phi: f64,
        omega1_nm: f64,
        omega2_nm: f64,
    ) -> Result<Self, SourceError> {
        if alpha < 0.0 || !alpha.is_finite() {
            return Err(SourceError::NegativeAmplitude { name: "α", value: alpha });
        }
        if beta < 0.0 || !beta.is_finite() {
            return Err(SourceError::NegativeAmplitude { name: "β", value: beta });
        }
        let norm_sqr = alpha * alpha + beta * beta;
        if !norm_sqr.is_finite() || norm_sqr < AMPLITUDE_NORM_TOL * AMPLITUDE_NORM_TOL {
            return Err(SourceError::ZeroNorm { alpha, beta });
        }
        for (name, value) in [("ω1", omega1_nm), ("ω2", omega2_nm)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(SourceError::BadWavelength { name, value });
            }
        }
        let scale = 1.0 / norm_sqr.sqrt();
        Ok(PolPairState {
            alpha: alpha * scale,
            beta: beta * scale,
            phi,
            omega1_nm,
            omega2_nm,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Relative phase φ on the β term, radians.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn omega1_nm(&self) -> f64 {
        self.omega1_nm
    }

    pub fn omega2_nm(&self) -> f64 {
        self.omega2_nm
    }

    /// Bin separation Δf = c·|1/λ₂ − 1/λ₁| of this state's two modes, THz.
    pub fn detuning_thz(&self) -> f64 {
        detuning_from_wavelengths(self.omega1_nm, self.omega2_nm)
    }
}

/// Linear crystal-temperature → bin-separation model, Δf = k·(T − T_deg).
///
/// The slope k is a zero-intercept least-squares fit through the calibration
/// anchors, which pins Δf = 0 exactly at the degeneracy temperature. The
/// default anchors are the measured calibration points
/// (25.1 °C, 0), (33.7 °C, 1.7 THz), (43.7 °C, 3.6 THz), (68.1 °C, 8.4 THz)
/// with degenerate wavelength 809.6 nm; they are collinear to ~2%, so a
/// single fitted slope reproduces each anchor within ±0.15 THz.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningCurve {
    anchors: Vec<(f64, f64)>,
    degenerate_wavelength_nm: f64,
    slope_thz_per_c: f64,
}

impl Default for TuningCurve {
    fn default() -> Self {
        TuningCurve::from_anchors(
            &[(25.1, 0.0), (33.7, 1.7), (43.7, 3.6), (68.1, 8.4)],
            809.6,
        )
        .expect("default anchors are valid")
    }
}

impl TuningCurve {
    /// Fits the slope from `(temperature °C, detuning THz)` anchors. The
    /// first anchor must sit at zero detuning (it defines the degeneracy
    /// temperature) and both coordinates must increase strictly.
    pub fn from_anchors(
        anchors: &[(f64, f64)],
        degenerate_wavelength_nm: f64,
    ) -> Result<Self, SourceError> {
        if anchors.len() < 2 {
            return Err(SourceError::BadAnchors { reason: "need at least two anchor points" });
        }
        if anchors.iter().any(|(t, d)| !t.is_finite() || !d.is_finite()) {
            return Err(SourceError::BadAnchors { reason: "non-finite anchor coordinate" });
        }
        if anchors[0].1 != 0.0 {
            return Err(SourceError::BadAnchors {
                reason: "first anchor must have zero detuning (degeneracy point)",
            });
        }
        for pair in anchors.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(SourceError::BadAnchors {
                    reason: "temperatures must increase strictly",
                });
            }
            if pair[1].1 <= pair[0].1 {
                return Err(SourceError::BadAnchors {
                    reason: "detunings must increase strictly",
                });
            }
        }
        if !(degenerate_wavelength_nm.is_finite() && degenerate_wavelength_nm > 0.0) {
            return Err(SourceError::BadWavelength {
                name: "degenerate",
                value: degenerate_wavelength_nm,
            });
        }
        let t_deg = anchors[0].0;
        let mut sum_xy = 0.0;
        let mut sum_xx = 0.0;
        for &(t, d) in anchors.iter() {
            let x = t - t_deg;
            sum_xy += x * d;
            sum_xx += x * x;
        }
        Ok(TuningCurve {
            anchors: anchors.to_vec(),
            degenerate_wavelength_nm,
            slope_thz_per_c: sum_xy / sum_xx,
        })
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    pub fn degeneracy_temperature_c(&self) -> f64 {
        self.anchors[0].0
    }

    pub fn degenerate_wavelength_nm(&self) -> f64 {
        self.degenerate_wavelength_nm
    }

    pub fn slope_thz_per_c(&self) -> f64 {
        self.slope_thz_per_c
    }

    /// Δf at crystal temperature `temperature_c`. Temperatures below the
    /// degeneracy point would extrapolate to negative separation and are
    /// rejected.
    pub fn detuning_at(&self, temperature_c: f64) -> Result<f64, SourceError> {
        let t_deg = self.degeneracy_temperature_c();
        if !temperature_c.is_finite() || temperature_c < t_deg {
            return Err(SourceError::BelowDegeneracy {
                temperature_c,
                degeneracy_c: t_deg,
            });
        }
        Ok(self.slope_thz_per_c * (temperature_c - t_deg))
    }
}

/// Splits a detuning symmetrically about the degenerate frequency:
/// f₁ = f_deg − Δf/2 and f₂ = f_deg + Δf/2 (energy conservation with a fixed
/// pump), returned as wavelengths with λ₁ > λ_deg > λ₂.
pub fn wavelengths_from_detuning(
    detuning_thz: f64,
    lambda_deg_nm: f64,
) -> Result<(f64, f64), SourceError> {
    if !detuning_thz.is_finite() || detuning_thz < 0.0 {
        return Err(SourceError::NegativeDetuning { value: detuning_thz });
    }
    if !(lambda_deg_nm.is_finite() && lambda_deg_nm > 0.0) {
        return Err(SourceError::BadWavelength { name: "degenerate", value: lambda_deg_nm });
    }
    let f_deg = SPEED_OF_LIGHT_NM_THZ / lambda_deg_nm;
    let f_lo = f_deg - detuning_thz / 2.0;
    if f_lo <= 0.0 {
        return Err(SourceError::DetuningTooLarge { value: detuning_thz });
    }
    let f_hi = f_deg + detuning_thz / 2.0;
    Ok((SPEED_OF_LIGHT_NM_THZ / f_lo, SPEED_OF_LIGHT_NM_THZ / f_hi))
}

/// Bin separation Δf = c·|1/λ₂ − 1/λ₁| in THz from two wavelengths in nm.
pub fn detuning_from_wavelengths(lambda1_nm: f64, lambda2_nm: f64) -> f64 {
    SPEED_OF_LIGHT_NM_THZ * (1.0 / lambda2_nm - 1.0 / lambda1_nm).abs()
}

/// Base-to-base coincidence-envelope half width τ_c = 0.885/Δf_FWHM, in ps
/// for a line FWHM in THz.
pub fn coherence_time_from_bandwidth(df_fwhm_thz: f64) -> Result<f64, SourceError> {
    if !(df_fwhm_thz.is_finite() && df_fwhm_thz > 0.0) {
        return Err(SourceError::BadBandwidth { value: df_fwhm_thz });
    }
    Ok(SINC_TIME_BANDWIDTH / df_fwhm_thz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pol_state_normalizes() {
        let s = PolPairState::new(0.6, 0.8, 0.0, 811.9, 807.3).unwrap();
        assert_abs_diff_eq!(s.alpha(), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(s.beta(), 0.8, epsilon = 1e-15);

        let s = PolPairState::new(1.0, 1.0, core::f64::consts::PI, 811.9, 807.3).unwrap();
        assert_abs_diff_eq!(s.alpha(), core::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.alpha() * s.alpha() + s.beta() * s.beta(), 1.0, epsilon = 1e-12);

        let product = PolPairState::new(1.0, 0.0, 0.0, 809.6, 809.6).unwrap();
        assert_eq!(product.beta(), 0.0);
        assert_eq!(product.detuning_thz(), 0.0);
    }

    #[test]
    fn pol_state_rejects_bad_input() {
        assert!(matches!(
            PolPairState::new(0.0, 0.0, 0.0, 811.9, 807.3),
            Err(SourceError::ZeroNorm { .. })
        ));
        assert!(matches!(
            PolPairState::new(-0.5, 0.5, 0.0, 811.9, 807.3),
            Err(SourceError::NegativeAmplitude { .. })
        ));
        assert!(matches!(
            PolPairState::new(0.6, 0.8, 0.0, -811.9, 807.3),
            Err(SourceError::BadWavelength { .. })
        ));
        assert!(matches!(
            PolPairState::new(0.6, 0.8, 0.0, 811.9, f64::NAN),
            Err(SourceError::BadWavelength { .. })
        ));
    }

    #[test]
    fn default_curve_slope_and_anchors() {
        let curve = TuningCurve::default();
        assert_abs_diff_eq!(curve.slope_thz_per_c(), 0.195150, epsilon = 1e-6);
        assert_eq!(curve.degeneracy_temperature_c(), 25.1);
        assert_eq!(curve.degenerate_wavelength_nm(), 809.6);

        // The fitted line reproduces every calibration anchor within 0.15 THz.
        assert_eq!(curve.detuning_at(25.1).unwrap(), 0.0);
        assert_abs_diff_eq!(curve.detuning_at(33.7).unwrap(), 1.7, epsilon = 0.15);
        assert_abs_diff_eq!(curve.detuning_at(43.7).unwrap(), 3.6, epsilon = 0.15);
        assert_abs_diff_eq!(curve.detuning_at(68.1).unwrap(), 8.4, epsilon = 0.15);

        // Frozen predictions at the anchor temperatures.
        assert_abs_diff_eq!(curve.detuning_at(33.7).unwrap(), 1.678290, epsilon = 1e-5);
        assert_abs_diff_eq!(curve.detuning_at(43.7).unwrap(), 3.629791, epsilon = 1e-5);
        assert_abs_diff_eq!(curve.detuning_at(68.1).unwrap(), 8.391452, epsilon = 1e-5);
    }

    #[test]
    fn curve_monotone_and_bounded_below() {
        let curve = TuningCurve::default();
        let mut last = -1.0;
        for i in 0..20 {
            let t = 25.1 + 2.5 * i as f64;
            let d = curve.detuning_at(t).unwrap();
            assert!(d >= last);
            last = d;
        }
        assert!(matches!(
            curve.detuning_at(20.0),
            Err(SourceError::BelowDegeneracy { .. })
        ));
    }

    #[test]
    fn curve_anchor_validation() {
        assert!(TuningCurve::from_anchors(&[(25.1, 0.0)], 809.6).is_err());
        assert!(TuningCurve::from_anchors(&[(25.1, 0.5), (33.7, 1.7)], 809.6).is_err());
        assert!(TuningCurve::from_anchors(&[(25.1, 0.0), (25.1, 1.7)], 809.6).is_err());
        assert!(TuningCurve::from_anchors(&[(25.1, 0.0), (33.7, 1.7), (43.7, 1.5)], 809.6).is_err());
        assert!(TuningCurve::from_anchors(&[(25.1, 0.0), (33.7, 1.7)], 0.0).is_err());
        assert!(TuningCurve::from_anchors(&[(25.1, 0.0), (33.7, 1.7)], 809.6).is_ok());
    }

    #[test]
    fn wavelength_split() {
        let (l1, l2) = wavelengths_from_detuning(0.0, 809.6).unwrap();
        assert_eq!((l1, l2), (809.6, 809.6));

        // 2.1 THz at 809.6 nm: the measured pair 811.9 / 807.3 nm, 4.6 nm apart.
        let (l1, l2) = wavelengths_from_detuning(2.1, 809.6).unwrap();
        assert!(l1 > 809.6 && 809.6 > l2);
        assert_abs_diff_eq!(l1, 811.9, epsilon = 0.05);
        assert_abs_diff_eq!(l2, 807.3, epsilon = 0.05);
        assert_abs_diff_eq!(l1 - l2, 4.6, epsilon = 0.1);

        // 8.4 THz: 18.3 nm apart.
        let (l1, l2) = wavelengths_from_detuning(8.4, 809.6).unwrap();
        assert_abs_diff_eq!(l1 - l2, 18.3, epsilon = 0.1);

        assert!(matches!(
            wavelengths_from_detuning(-1.0, 809.6),
            Err(SourceError::NegativeDetuning { .. })
        ));
        assert!(matches!(
            wavelengths_from_detuning(1e9, 809.6),
            Err(SourceError::DetuningTooLarge { .. })
        ));
    }

    #[test]
    fn wavelength_detuning_round_trip() {
        for detuning in [0.1, 1.0, 2.1, 8.4, 30.0] {
            let (l1, l2) = wavelengths_from_detuning(detuning, 809.6).unwrap();
            let back = detuning_from_wavelengths(l1, l2);
            assert_abs_diff_eq!(back, detuning, epsilon = detuning * 1e-9);
        }
    }

    #[test]
    fn coherence_time() {
        assert_abs_diff_eq!(coherence_time_from_bandwidth(0.30).unwrap(), 2.95, epsilon = 1e-12);
        assert_abs_diff_eq!(coherence_time_from_bandwidth(0.885).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(coherence_time_from_bandwidth(0.0885).unwrap(), 10.0, epsilon = 1e-12);
        assert!(matches!(
            coherence_time_from_bandwidth(0.0),
            Err(SourceError::BadBandwidth { .. })
        ));
        assert!(matches!(
            coherence_time_from_bandwidth(-0.3),
            Err(SourceError::BadBandwidth { .. })
        ));
    }
}
