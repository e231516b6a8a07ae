//! The inverse problem: from measured counts back to the color state.
//!
//! Four stages, mirroring how the measurement is analysed:
//!
//! 1. [`fit_beating`] extracts (V, φ, Δf, τ_c, τ₀, b) from a coincidence
//!    trace by weighted least squares, with spectral initialization and a
//!    φ/φ+180° multi-start (the fringe model is multimodal in phase).
//! 2. [`balance_from_counts`] turns the two anticorrelated-basis
//!    coincidence totals into the population balance p with a Poisson
//!    error.
//! 3. [`reconstruct`] assembles the restricted density matrix from
//!    (p, V, φ), clamping into the physical region if the estimates
//!    violate it, and evaluates fidelity/tangle/purity with first-order
//!    propagated errors.
//! 4. [`bootstrap_uncertainty`] replaces those first-order errors with a
//!    parametric bootstrap (Poisson-resample all counts, refit, recompute)
//!    — the right tool once metrics like tangle = V² are nonlinear in the
//!    fitted parameters.

mod lm;

use alloc::boxed::Box;
use alloc::vec::Vec;

// Float math on f64 comes from the trait in no_std builds; test builds link
// std, whose inherent methods shadow it and make the import look unused.
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::interference::{
    poisson_draw, BeatingModelParams, BeatingTrace, InterferenceError, TraceRow,
};
use crate::qstate::{
    target_state, wrap_angle, wrap_angle_signed, DensityMatrix, QStateError,
    RestrictedColorState, StateVector4,
};
use lm::{
    levenberg_marquardt, FitProblem, IDX_BASELINE, IDX_DETUNING, IDX_PHI, IDX_TAU0, IDX_TAU_C,
    IDX_V, N_PARAMS,
};

/// Minimum number of trace points for a six-parameter fit.
pub const MIN_FIT_POINTS: usize = 8;

/// Minimum resample count for bootstrap error bars.
pub const MIN_BOOTSTRAP_RESAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("fit needs at least {min} points, trace has {n}")]
    TooFewPoints { n: usize, min: usize },
    #[error(
        "fit did not converge within the multi-start budget \
         (best cost {best_cost:.6e} after {iterations} iterations)"
    )]
    NonConvergence { best: Box<FitResult>, best_cost: f64, iterations: usize },
    #[error("balance estimation needs n12 + n21 > 0")]
    NoCounts,
    #[error("bootstrap needs at least {min} resamples, got {n}")]
    TooFewResamples { n: usize, min: usize },
    #[error("bootstrap unstable: {failed} of {total} resamples failed to converge")]
    BootstrapUnstable { failed: usize, total: usize },
    #[error("bootstrap requires a converged point-estimate fit")]
    FitNotConverged,
    #[error(transparent)]
    Model(#[from] InterferenceError),
    #[error(transparent)]
    State(#[from] QStateError),
}

/// 1σ uncertainties for the six fitted parameters, from the diagonal of
/// the inverse weighted normal matrix. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitUncertainties {
    pub visibility: f64,
    pub phase: f64,
    pub detuning_thz: f64,
    pub tau_c_ps: f64,
    pub tau0_ps: f64,
    pub baseline: f64,
}

/// Converged (or best-effort) beating-model fit. Parameters are
/// canonicalized to V ∈ [0, 1], Δf ≥ 0, φ ∈ [0, 2π) — the sign
/// ambiguities (V, φ) ↔ (−V, φ+π) and (Δf, φ) ↔ (−Δf, −φ) are resolved in
/// favor of nonnegative V and Δf.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: BeatingModelParams,
    pub errors: FitUncertainties,
    pub chi2_reduced: f64,
    pub n_points: usize,
    pub converged: bool,
}

/// Population balance p = n12/(n12+n21) with first-order Poisson error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceEstimate {
    pub p: f64,
    pub sigma_p: f64,
    pub n12: u64,
    pub n21: u64,
}

/// A value with a 1σ error bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricWithError {
    pub value: f64,
    pub sigma: f64,
}

/// The assembled state and its entanglement metrics, each with a 1σ error.
/// Errors are first-order propagated by [`reconstruct`] and replaced with
/// bootstrap sample deviations by [`bootstrap_uncertainty`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub state: RestrictedColorState,
    pub matrix: DensityMatrix,
    pub p: MetricWithError,
    pub visibility: MetricWithError,
    /// Phase in radians, [0, 2π).
    pub phase: MetricWithError,
    pub fidelity: MetricWithError,
    pub tangle: MetricWithError,
    pub purity: MetricWithError,
    /// Phase of the comparison target state, radians.
    pub target_phase: f64,
    /// Set when (p, V) violated V/2 ≤ √(p(1−p)) and V was clamped down to
    /// the physical boundary.
    pub physicality_clamped: bool,
}

/// Fits the beating model to a trace by damped weighted least squares.
///
/// Counts are normalized to probabilities with the trace's pair rate;
/// weights are 1/σᵢ² with σᵢ = max(1, √countᵢ) (the floor keeps
/// empty bins from getting infinite weight). With `init` absent, starting
/// values come from a spectral recipe: baseline from the mean, envelope
/// center/width/height from the smoothed |y − b|, detuning and phase from
/// the discrete Fourier peak of the mean-subtracted data. Both the starting
/// phase and its 180° twin are tried and the better minimum kept.
///
/// Needs ≥ 8 points covering at least one fringe period inside the
/// envelope; with fewer fringes the detuning/phase pair is not reliably
/// identifiable.
pub fn fit_beating(
    trace: &BeatingTrace,
    init: Option<&BeatingModelParams>,
) -> Result<FitResult, EstimateError> {
    let n = trace.len();
    if n < MIN_FIT_POINTS {
        return Err(EstimateError::TooFewPoints { n, min: MIN_FIT_POINTS });
    }
    let rate = trace.meta().pair_rate_hz;
    let mut tau = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    for row in trace.rows() {
        let denominator = rate * row.integration_s;
        tau.push(row.delay_ps);
        y.push(row.coincidences as f64 / denominator);
        sigma.push((row.coincidences as f64).sqrt().max(1.0) / denominator);
    }
    let problem = FitProblem { tau: &tau, y: &y, sigma: &sigma };

    let x0 = match init {
        Some(params) => [
            params.visibility(),
            params.phase(),
            params.detuning_thz(),
            params.tau_c_ps(),
            params.tau0_ps(),
            params.baseline(),
        ],
        None => initial_guess(&tau, &y),
    };
    let mut twin = x0;
    twin[IDX_PHI] += core::f64::consts::PI;

    let mut best: Option<lm::LmOutcome> = None;
    let mut iterations = 0;
    for start in [x0, twin] {
        let outcome = levenberg_marquardt(&problem, start);
        iterations += outcome.iterations;
        let better = match &best {
            None => true,
            Some(current) => {
                (outcome.converged && !current.converged)
                    || (outcome.converged == current.converged && outcome.cost < current.cost)
            }
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.expect("two starts were run");

    let x = canonicalize(best.x);
    let (jtj, _) = problem.normal_equations(&x);
    let covariance = lm::invert_regularized(&jtj);
    let errors = FitUncertainties {
        visibility: covariance[IDX_V][IDX_V].max(0.0).sqrt(),
        phase: covariance[IDX_PHI][IDX_PHI].max(0.0).sqrt(),
        detuning_thz: covariance[IDX_DETUNING][IDX_DETUNING].max(0.0).sqrt(),
        tau_c_ps: covariance[IDX_TAU_C][IDX_TAU_C].max(0.0).sqrt(),
        tau0_ps: covariance[IDX_TAU0][IDX_TAU0].max(0.0).sqrt(),
        baseline: covariance[IDX_BASELINE][IDX_BASELINE].max(0.0).sqrt(),
    };
    // The optimizer iterates unconstrained, so its endpoint can leave the
    // model's domain (baseline outside (0,1), zero coherence time) on data
    // the model cannot describe. That is a failed fit, not a caller error:
    // report non-convergence carrying the nearest representable model.
    let (params, representable) = match BeatingModelParams::new(
        x[IDX_V].min(1.0),
        x[IDX_PHI],
        x[IDX_DETUNING],
        x[IDX_TAU_C],
        x[IDX_TAU0],
        x[IDX_BASELINE],
    ) {
        Ok(params) => (params, true),
        Err(_) => (sanitized_params(&x, &tau), false),
    };
    let converged = best.converged && representable;
    let result = FitResult {
        params,
        errors,
        chi2_reduced: best.cost / (n - N_PARAMS) as f64,
        n_points: n,
        converged,
    };
    if !converged {
        return Err(EstimateError::NonConvergence {
            best_cost: best.cost,
            iterations,
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// Projects an out-of-domain optimizer endpoint onto a valid parameter
/// set for diagnostic reporting. Non-finite components fall back to
/// neutral values scaled to the scan window.
fn sanitized_params(x: &[f64; N_PARAMS], tau: &[f64]) -> BeatingModelParams {
    let span = tau[tau.len() - 1] - tau[0];
    let finite = |v: f64, fallback: f64| if v.is_finite() { v } else { fallback };
    let tau_c = x[IDX_TAU_C].abs();
    BeatingModelParams::new(
        finite(x[IDX_V], 0.0).clamp(0.0, 1.0),
        finite(x[IDX_PHI], 0.0),
        finite(x[IDX_DETUNING], 0.0).max(0.0),
        if tau_c.is_finite() && tau_c > 0.0 { tau_c } else { span },
        finite(x[IDX_TAU0], 0.0),
        finite(x[IDX_BASELINE], 0.5).clamp(1e-9, 1.0 - 1e-9),
    )
    .expect("sanitized parameters are in-domain")
}

/// Resolves the model's sign ambiguities: V ≥ 0 via (V, φ) → (−V, φ+π),
/// Δf ≥ 0 via (Δf, φ) → (−Δf, −φ), then wraps φ into [0, 2π).
fn canonicalize(mut x: [f64; N_PARAMS]) -> [f64; N_PARAMS] {
    if x[IDX_V] < 0.0 {
        x[IDX_V] = -x[IDX_V];
        x[IDX_PHI] += core::f64::consts::PI;
    }
    if x[IDX_DETUNING] < 0.0 {
        x[IDX_DETUNING] = -x[IDX_DETUNING];
        x[IDX_PHI] = -x[IDX_PHI];
    }
    x[IDX_TAU_C] = x[IDX_TAU_C].abs();
    x[IDX_PHI] = wrap_angle(x[IDX_PHI]);
    x
}

/// Spectral starting values for the optimizer; see [`fit_beating`].
fn initial_guess(tau: &[f64], y: &[f64]) -> [f64; N_PARAMS] {
    let n = tau.len();
    let span = tau[n - 1] - tau[0];
    let center = 0.5 * (tau[n - 1] + tau[0]);
    let mean_step = span / (n - 1) as f64;
    let baseline = y.iter().sum::<f64>() / n as f64;

    let deviation: Vec<f64> = y.iter().map(|v| (v - baseline).abs()).collect();
    let deviation_total: f64 = deviation.iter().sum();
    if deviation_total <= 0.0 {
        // Perfectly flat data: any fringe parameters are as good as any
        // other; start from zero visibility at the window center.
        return [0.0, 0.0, 1.0 / span, span / 2.0, center, baseline];
    }
    let tau0 = tau
        .iter()
        .zip(deviation.iter())
        .map(|(t, d)| t * d)
        .sum::<f64>()
        / deviation_total;

    // Discrete Fourier transform of the mean-subtracted data, scanned to
    // the Nyquist frequency at 4× the window resolution.
    let f_nyquist = 0.5 / mean_step;
    let f_step = 1.0 / (4.0 * span);
    let n_freq = (f_nyquist / f_step) as usize;
    let mut best_k = 1;
    let mut best_power = -1.0;
    let mut spectrum = Vec::with_capacity(n_freq + 1);
    spectrum.push((0.0, 0.0));
    for k in 1..=n_freq {
        let f = f_step * k as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for j in 0..n {
            let angle = -core::f64::consts::TAU * f * tau[j];
            let w = y[j] - baseline;
            re += w * angle.cos();
            im += w * angle.sin();
        }
        spectrum.push((re, im));
        let power = re * re + im * im;
        if power > best_power {
            best_power = power;
            best_k = k;
        }
    }
    let magnitude = |k: usize| -> f64 {
        let (re, im) = spectrum[k];
        (re * re + im * im).sqrt()
    };
    // Parabolic refinement of the peak frequency.
    let mut detuning = f_step * best_k as f64;
    if best_k > 1 && best_k < n_freq {
        let (lo, mid, hi) = (magnitude(best_k - 1), magnitude(best_k), magnitude(best_k + 1));
        let denominator = lo - 2.0 * mid + hi;
        if denominator.abs() > 1e-300 {
            let shift = (0.5 * (lo - hi) / denominator).clamp(-0.5, 0.5);
            detuning += shift * f_step;
        }
    }
    // Near the fringe frequency, Z ≈ −(V/4)·e^{i(φ − 2πΔf·τ₀)}·ΣE.
    let (re, im) = spectrum[best_k];
    let phase = wrap_angle(
        im.atan2(re) - core::f64::consts::PI + core::f64::consts::TAU * detuning * tau0,
    );

    // Envelope from |y − b| smoothed over one fringe period: the fringe
    // contributes ⟨|cos|⟩ = 2/π, so the smoothed deviation is ≈ (V/π)·E.
    let window = ((1.0 / detuning / mean_step).round() as usize).max(1);
    let half = window / 2;
    let mut envelope = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        let sum: f64 = deviation[lo..=hi].iter().sum();
        envelope.push(sum / (hi - lo + 1) as f64);
    }
    let (apex, apex_value) = envelope
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let visibility = (core::f64::consts::PI * apex_value).clamp(0.0, 1.0);
    let mut lo = apex;
    while lo > 0 && envelope[lo - 1] >= 0.5 * apex_value {
        lo -= 1;
    }
    let mut hi = apex;
    while hi + 1 < n && envelope[hi + 1] >= 0.5 * apex_value {
        hi += 1;
    }
    let tau_c = (2.0 * (tau[hi] - tau[lo])).max(2.0 * mean_step);

    [visibility, phase, detuning, tau_c, tau0, baseline]
}

/// Balance p = n12/(n12+n21) with σ_p = √(n12·n21/(n12+n21)³) from
/// first-order Poisson propagation.
pub fn balance_from_counts(n12: u64, n21: u64) -> Result<BalanceEstimate, EstimateError> {
    let total = n12 + n21;
    if total == 0 {
        return Err(EstimateError::NoCounts);
    }
    let total_f = total as f64;
    let p = n12 as f64 / total_f;
    let sigma_p = (n12 as f64 * n21 as f64 / (total_f * total_f * total_f)).sqrt();
    Ok(BalanceEstimate { p, sigma_p, n12, n21 })
}

/// Assembles the restricted state from a fit and a balance estimate and
/// evaluates its metrics against the target state with phase
/// `target_phase`.
///
/// If the estimates violate physicality (V/2 > √(p(1−p))), V is clamped
/// down to the boundary and the report is flagged. Error bars are
/// first-order: σ_F from (V, φ), σ_tangle = 2V·σ_V, σ_purity from (p, V);
/// use [`bootstrap_uncertainty`] for errors that respect the
/// nonlinearities.
pub fn reconstruct(
    fit: &FitResult,
    balance: &BalanceEstimate,
    target_phase: f64,
) -> Result<ReconstructionReport, EstimateError> {
    let p = balance.p;
    let bound = 2.0 * (p * (1.0 - p)).sqrt();
    let mut visibility = fit.params.visibility();
    let physicality_clamped = visibility > bound;
    if physicality_clamped {
        visibility = bound;
    }
    let phase = fit.params.phase();
    let state = RestrictedColorState::new(p, visibility, phase, fit.params.detuning_thz())?;
    let matrix = state.density_matrix();

    let sigma_v = fit.errors.visibility;
    let sigma_phi = fit.errors.phase;
    let sigma_p = balance.sigma_p;
    let delta = wrap_angle_signed(phase - target_phase);
    let sigma_fidelity = ((0.5 * delta.cos() * sigma_v).powi(2)
        + (0.5 * visibility * delta.sin() * sigma_phi).powi(2))
    .sqrt();
    let sigma_tangle = 2.0 * visibility * sigma_v;
    let sigma_purity =
        (((4.0 * p - 2.0) * sigma_p).powi(2) + (visibility * sigma_v).powi(2)).sqrt();

    Ok(ReconstructionReport {
        state,
        matrix,
        p: MetricWithError { value: p, sigma: sigma_p },
        visibility: MetricWithError { value: visibility, sigma: sigma_v },
        phase: MetricWithError { value: phase, sigma: sigma_phi },
        fidelity: MetricWithError { value: state.fidelity(target_phase), sigma: sigma_fidelity },
        tangle: MetricWithError { value: state.tangle(), sigma: sigma_tangle },
        purity: MetricWithError { value: state.purity(), sigma: sigma_purity },
        target_phase,
        physicality_clamped,
    })
}

/// Parametric bootstrap: every coincidence count (trace and basis counts)
/// is resampled from a Poisson at its observed value, the fit is repeated
/// from the point estimate, and metrics recomputed; reported errors are
/// the sample standard deviations. Values stay at the point estimates. A
/// balance with zero recorded counts (an assumed population split) is held
/// fixed instead of resampled.
///
/// Resample k draws from a ChaCha8 stream seeded with `seed + k`, so
/// results are reproducible and resamples independent. Phase samples are
/// unwrapped to the branch nearest the point estimate before taking the
/// deviation. Singles are not resampled (they carry no signal an analysis
/// stage reads).
///
/// Fails if more than 20% of resamples do not converge.
pub fn bootstrap_uncertainty(
    trace: &BeatingTrace,
    fit: &FitResult,
    balance: &BalanceEstimate,
    target_phase: f64,
    n_resamples: usize,
    seed: u64,
) -> Result<ReconstructionReport, EstimateError> {
    if !fit.converged {
        return Err(EstimateError::FitNotConverged);
    }
    if n_resamples < MIN_BOOTSTRAP_RESAMPLES {
        return Err(EstimateError::TooFewResamples {
            n: n_resamples,
            min: MIN_BOOTSTRAP_RESAMPLES,
        });
    }
    let mut point = reconstruct(fit, balance, target_phase)?;
    let phase_hat = point.phase.value;

    let mut samples: Vec<[f64; 6]> = Vec::with_capacity(n_resamples);
    let mut failed = 0usize;
    for k in 0..n_resamples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let rows: Vec<TraceRow> = trace
            .rows()
            .iter()
            .map(|row| TraceRow {
                coincidences: poisson_draw(&mut rng, row.coincidences as f64),
                ..*row
            })
            .collect();
        let resampled = match BeatingTrace::new(rows, trace.meta().clone()) {
            Ok(t) => t,
            Err(_) => {
                failed += 1;
                continue;
            }
        };
        let refit = match fit_beating(&resampled, Some(&fit.params)) {
            Ok(f) => f,
            Err(_) => {
                failed += 1;
                continue;
            }
        };
        // A balance with no recorded counts is an assumption, not a
        // measurement; it carries no sampling noise and is reused as-is.
        let rebalance = if balance.n12 + balance.n21 == 0 {
            *balance
        } else {
            let n12 = poisson_draw(&mut rng, balance.n12 as f64);
            let n21 = poisson_draw(&mut rng, balance.n21 as f64);
            match balance_from_counts(n12, n21) {
                Ok(b) => b,
                Err(_) => {
                    failed += 1;
                    continue;
                }
            }
        };
        let report = match reconstruct(&refit, &rebalance, target_phase) {
            Ok(r) => r,
            Err(_) => {
                failed += 1;
                continue;
            }
        };
        let phase_sample = phase_hat + wrap_angle_signed(report.phase.value - phase_hat);
        samples.push([
            report.p.value,
            report.visibility.value,
            phase_sample,
            report.fidelity.value,
            report.tangle.value,
            report.purity.value,
        ]);
    }
    if failed * 5 > n_resamples {
        return Err(EstimateError::BootstrapUnstable { failed, total: n_resamples });
    }

    let deviation = |column: usize| -> f64 {
        let n = samples.len() as f64;
        let mean = samples.iter().map(|s| s[column]).sum::<f64>() / n;
        let var = samples
            .iter()
            .map(|s| {
                let d = s[column] - mean;
                d * d
            })
            .sum::<f64>()
            / (n - 1.0);
        var.sqrt()
    };
    point.p.sigma = deviation(0);
    point.visibility.sigma = deviation(1);
    point.phase.sigma = deviation(2);
    point.fidelity.sigma = deviation(3);
    point.tangle.sigma = deviation(4);
    point.purity.sigma = deviation(5);
    Ok(point)
}

/// The three mutually unbiased bases reachable in this encoding: the
/// target states at phases {0°, 180°} and {90°, 270°}, and the
/// computational pair {|ω1ω2⟩, |ω2ω1⟩}.
pub fn mub_set() -> [[StateVector4; 2]; 3] {
    use core::f64::consts::{FRAC_PI_2, PI};
    [
        [target_state(0.0), target_state(PI)],
        [target_state(FRAC_PI_2), target_state(3.0 * FRAC_PI_2)],
        [StateVector4::basis_state(1), StateVector4::basis_state(2)],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::interference::{expected_trace, simulate_trace, BeatingTrace, TraceMeta, TraceRow, TraceSettings};
    use crate::qstate::{concurrence_wootters, mub_overlap_check, purity as matrix_purity};

    fn fig2_params() -> BeatingModelParams {
        BeatingModelParams::centered(0.782, 179.2_f64.to_radians(), 2.1, 2.95).unwrap()
    }

    fn fig2_settings() -> TraceSettings {
        TraceSettings {
            n_points: 200,
            delay_span_ps: 5.0,
            pair_rate_hz: 665.0,
            integration_s: 30.0,
        }
    }

    #[test]
    fn balance_examples() {
        let b = balance_from_counts(10882, 9068).unwrap();
        assert_abs_diff_eq!(b.p, 0.5454637, epsilon = 1e-6);
        assert_abs_diff_eq!(b.sigma_p, 0.0035253, epsilon = 1e-7);

        let even = balance_from_counts(1, 1).unwrap();
        assert_eq!(even.p, 0.5);

        let edge = balance_from_counts(100, 0).unwrap();
        assert_eq!((edge.p, edge.sigma_p), (1.0, 0.0));

        assert!(matches!(balance_from_counts(0, 0), Err(EstimateError::NoCounts)));
    }

    #[test]
    fn balance_sigma_matches_monte_carlo() {
        // Poisson-resample (n12, n21) and compare the ratio's spread with
        // the first-order formula.
        let (n12, n21) = (10882u64, 9068u64);
        let analytic = balance_from_counts(n12, n21).unwrap().sigma_p;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n_trials = 4000;
        let mut ps = Vec::with_capacity(n_trials);
        for _ in 0..n_trials {
            let a = poisson_draw(&mut rng, n12 as f64);
            let b = poisson_draw(&mut rng, n21 as f64);
            ps.push(a as f64 / (a + b) as f64);
        }
        let mean = ps.iter().sum::<f64>() / n_trials as f64;
        let var =
            ps.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (n_trials - 1) as f64;
        let empirical = var.sqrt();
        assert!(
            (empirical - analytic).abs() / analytic < 0.1,
            "σ_p analytic {analytic} vs Monte Carlo {empirical}"
        );
    }

    #[test]
    fn noiseless_fit_recovers_parameters_exactly() {
        let truth =
            BeatingModelParams::new(0.782, 179.2_f64.to_radians(), 2.1, 2.95, 0.1, 0.5).unwrap();
        // Huge counts make count-rounding negligible (≤ 0.5 in ~5e13).
        let settings = TraceSettings {
            n_points: 201,
            delay_span_ps: 5.0,
            pair_rate_hz: 1e12,
            integration_s: 100.0,
        };
        let trace = expected_trace(&truth, &settings).unwrap();
        let fit = fit_beating(&trace, None).unwrap();
        assert!(fit.converged);
        let got = fit.params;
        assert_abs_diff_eq!(got.visibility(), 0.782, epsilon = 0.782e-6);
        assert_abs_diff_eq!(got.phase(), truth.phase(), epsilon = truth.phase() * 1e-6);
        assert_abs_diff_eq!(got.detuning_thz(), 2.1, epsilon = 2.1e-6);
        assert_abs_diff_eq!(got.tau_c_ps(), 2.95, epsilon = 2.95e-6);
        assert_abs_diff_eq!(got.tau0_ps(), 0.1, epsilon = 0.1e-6);
        assert_abs_diff_eq!(got.baseline(), 0.5, epsilon = 0.5e-6);
    }

    #[test]
    fn fit_with_explicit_initialization() {
        let truth = fig2_params();
        let settings = TraceSettings { pair_rate_hz: 1e10, integration_s: 100.0, ..fig2_settings() };
        let trace = expected_trace(&truth, &settings).unwrap();
        let fit = fit_beating(&trace, Some(&truth)).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.params.visibility(), 0.782, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.params.detuning_thz(), 2.1, epsilon = 1e-6);
    }

    #[test]
    fn noisy_fit_recovers_reference_scale_parameters() {
        let truth = fig2_params();
        let trace = simulate_trace(&truth, &fig2_settings(), 11).unwrap();
        let fit = fit_beating(&trace, None).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.params.visibility(), 0.782, epsilon = 0.02);
        let dphi = wrap_angle_signed(fit.params.phase() - truth.phase());
        assert!(dphi.abs() < 2.0_f64.to_radians(), "phase off by {}°", dphi.to_degrees());
        assert_abs_diff_eq!(fit.params.detuning_thz(), 2.1, epsilon = 2.1 * 0.005);
        // Errors are sane: nonzero, small relative to the estimates.
        assert!(fit.errors.visibility > 0.0 && fit.errors.visibility < 0.05);
        assert!(fit.errors.detuning_thz < 0.05);
        assert!(fit.chi2_reduced > 0.5 && fit.chi2_reduced < 1.5);
    }

    #[test]
    fn zero_visibility_trace_fits_to_zero_visibility() {
        let truth = BeatingModelParams::centered(0.0, 0.0, 2.1, 2.95).unwrap();
        let trace = simulate_trace(&truth, &fig2_settings(), 5).unwrap();
        let fit = fit_beating(&trace, None).unwrap();
        // V consistent with zero at 2σ; φ uncertainty blows up (the model
        // has no phase information), which is reported rather than fatal.
        assert!(fit.params.visibility() <= 2.0 * fit.errors.visibility.max(1e-3));
        assert!(fit.errors.phase > 1.0 || fit.params.visibility() < 1e-3);
    }

    #[test]
    fn fit_rejects_short_traces() {
        let truth = fig2_params();
        let settings = TraceSettings { n_points: 7, ..fig2_settings() };
        let trace = simulate_trace(&truth, &settings, 0).unwrap();
        assert!(matches!(
            fit_beating(&trace, None),
            Err(EstimateError::TooFewPoints { n: 7, min: 8 })
        ));
    }

    #[test]
    fn unfittable_data_reports_nonconvergence_with_a_valid_best_effort() {
        // A step has no fringe for the model to land on; the optimizer
        // wanders out of the model's domain. The caller must get a
        // non-convergence report with in-domain best-effort parameters,
        // not a constructor error about a parameter it never set.
        let rows: Vec<TraceRow> = (0..200)
            .map(|i| TraceRow {
                delay_ps: i as f64 * 0.025 - 2.5,
                coincidences: if i < 100 { 100 } else { 19_000 },
                singles3: 0,
                singles4: 0,
                integration_s: 30.0,
            })
            .collect();
        let meta = TraceMeta { pair_rate_hz: 665.0, seed: None, rng: None };
        let trace = BeatingTrace::new(rows, meta).unwrap();
        match fit_beating(&trace, None) {
            Err(EstimateError::NonConvergence { best, .. }) => {
                assert!(!best.converged);
                let b = best.params.baseline();
                assert!(b > 0.0 && b < 1.0, "sanitized baseline {b}");
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    fn fig2_fit() -> FitResult {
        FitResult {
            params: fig2_params(),
            errors: FitUncertainties {
                visibility: 0.006,
                phase: 0.4_f64.to_radians(),
                detuning_thz: 0.002,
                tau_c_ps: 0.02,
                tau0_ps: 0.005,
                baseline: 0.001,
            },
            chi2_reduced: 1.0,
            n_points: 200,
            converged: true,
        }
    }

    #[test]
    fn reconstruction_reproduces_reference_metrics() {
        let balance = balance_from_counts(10882, 9068).unwrap();
        let report = reconstruct(&fig2_fit(), &balance, core::f64::consts::PI).unwrap();
        assert!(!report.physicality_clamped);
        assert_abs_diff_eq!(report.fidelity.value, 0.891, epsilon = 2e-3);
        assert_abs_diff_eq!(report.tangle.value, 0.611, epsilon = 2e-3);
        assert_abs_diff_eq!(report.purity.value, 0.810, epsilon = 1e-3);

        // Closed forms agree with the matrix route.
        assert_abs_diff_eq!(
            report.purity.value,
            matrix_purity(&report.matrix),
            epsilon = 1e-12
        );
        let c = concurrence_wootters(&report.matrix).unwrap();
        assert_abs_diff_eq!(report.tangle.value, c * c, epsilon = 1e-10);

        // First-order errors are the right order of magnitude.
        assert!(report.tangle.sigma > 0.005 && report.tangle.sigma < 0.02);
        assert!(report.fidelity.sigma > 0.001 && report.fidelity.sigma < 0.01);
    }

    #[test]
    fn reconstruction_clamps_unphysical_visibility() {
        let mut fit = fig2_fit();
        fit.params = BeatingModelParams::centered(0.9, 0.0, 2.1, 2.95).unwrap();
        let balance = balance_from_counts(9000, 1000).unwrap();
        let report = reconstruct(&fit, &balance, core::f64::consts::PI).unwrap();
        assert!(report.physicality_clamped);
        assert_abs_diff_eq!(report.p.value, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(report.visibility.value, 0.6, epsilon = 1e-12);

        let ok = reconstruct(
            &FitResult {
                params: BeatingModelParams::centered(1.0, 0.0, 2.1, 2.95).unwrap(),
                ..fig2_fit()
            },
            &balance_from_counts(500, 500).unwrap(),
            0.0,
        )
        .unwrap();
        assert!(!ok.physicality_clamped);
        assert_abs_diff_eq!(ok.fidelity.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bootstrap_is_deterministic_and_scales_with_counts() {
        let truth = fig2_params();
        let trace = simulate_trace(&truth, &fig2_settings(), 3).unwrap();
        let fit = fit_beating(&trace, None).unwrap();
        let balance = balance_from_counts(10882, 9068).unwrap();

        let a =
            bootstrap_uncertainty(&trace, &fit, &balance, core::f64::consts::PI, 100, 99).unwrap();
        let b =
            bootstrap_uncertainty(&trace, &fit, &balance, core::f64::consts::PI, 100, 99).unwrap();
        assert_eq!(a, b);

        // Reference-scale statistics: tangle error of order 0.01.
        assert!(
            a.tangle.sigma > 0.003 && a.tangle.sigma < 0.03,
            "tangle sigma {}",
            a.tangle.sigma
        );

        // 10× the counts shrink the errors by roughly √10.
        let rich_settings = TraceSettings { integration_s: 300.0, ..fig2_settings() };
        let rich_trace = simulate_trace(&truth, &rich_settings, 3).unwrap();
        let rich_fit = fit_beating(&rich_trace, None).unwrap();
        let rich_balance = balance_from_counts(108820, 90680).unwrap();
        let rich = bootstrap_uncertainty(
            &rich_trace,
            &rich_fit,
            &rich_balance,
            core::f64::consts::PI,
            100,
            99,
        )
        .unwrap();
        let ratio = a.tangle.sigma / rich.tangle.sigma;
        assert!(
            (2.0..=4.7).contains(&ratio),
            "expected ≈√10 error reduction, got ratio {ratio}"
        );
    }

    #[test]
    fn bootstrap_holds_an_assumed_balance_fixed() {
        let trace = simulate_trace(&fig2_params(), &fig2_settings(), 3).unwrap();
        let fit = fit_beating(&trace, None).unwrap();
        let assumed = BalanceEstimate { p: 0.5, sigma_p: 0.0, n12: 0, n21: 0 };
        let report =
            bootstrap_uncertainty(&trace, &fit, &assumed, core::f64::consts::PI, 100, 7).unwrap();
        assert_eq!(report.p.value, 0.5);
        assert_eq!(report.p.sigma, 0.0);
        // Fitted quantities still spread.
        assert!(report.visibility.sigma > 0.0);
    }

    #[test]
    fn bootstrap_input_validation() {
        let trace = simulate_trace(&fig2_params(), &fig2_settings(), 3).unwrap();
        let balance = balance_from_counts(10882, 9068).unwrap();
        let fit = fig2_fit();
        assert!(matches!(
            bootstrap_uncertainty(&trace, &fit, &balance, 0.0, 50, 1),
            Err(EstimateError::TooFewResamples { n: 50, min: 100 })
        ));
        let unconverged = FitResult { converged: false, ..fig2_fit() };
        assert!(matches!(
            bootstrap_uncertainty(&trace, &unconverged, &balance, 0.0, 100, 1),
            Err(EstimateError::FitNotConverged)
        ));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn mub_states_are_mutually_unbiased() {
        let bases = mub_set();
        let table = mub_overlap_check(&bases).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j {
                    1.0
                } else if i / 2 == j / 2 {
                    0.0
                } else {
                    0.5
                };
                assert_abs_diff_eq!(table[i][j], expected, epsilon = 1e-12);
            }
        }
    }
}
