//! `fit`: read a delay-scan CSV, fit the beating model, fold in basis
//! counts, and write a reconstruction report with bootstrap error bars.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use colorbeat_core::estimate::{
    balance_from_counts, bootstrap_uncertainty, fit_beating, BalanceEstimate, EstimateError,
    FitResult, MetricWithError, ReconstructionReport,
};

use crate::formats::{
    density_matrix_json, parse_trace_csv, sha256_hex, write_json_pretty, DensityMatrixJson,
    ToolInfo,
};
use crate::CliError;

/// Knobs for one fit run. Counts are the two basis coincidences
/// (N12, N21); when absent the population split is assumed 50/50 with
/// zero uncertainty and the report says so.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub counts: Option<(u64, u64)>,
    pub target_phase_deg: f64,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { counts: None, target_phase_deg: 180.0, resamples: 500, seed: 0 }
    }
}

/// What `fit` produced, for callers that keep the numbers in memory.
#[derive(Debug)]
pub struct FitSummary {
    pub report_path: PathBuf,
    pub fit: FitResult,
    pub reconstruction: ReconstructionReport,
}

impl FitSummary {
    /// One-line metric readout for the terminal.
    pub fn metrics_line(&self) -> String {
        let r = &self.reconstruction;
        format!(
            "fidelity = {:.4} ± {:.4}  tangle = {:.4} ± {:.4}  purity = {:.4} ± {:.4}",
            r.fidelity.value,
            r.fidelity.sigma,
            r.tangle.value,
            r.tangle.sigma,
            r.purity.value,
            r.purity.sigma,
        )
    }
}

/// A value with its 1σ error, as written to reports.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ValueSigma {
    pub value: f64,
    pub sigma: f64,
}

impl From<MetricWithError> for ValueSigma {
    fn from(m: MetricWithError) -> Self {
        Self { value: m.value, sigma: m.sigma }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReportJson {
    pub tool: ToolInfo,
    pub inputs: FitInputsJson,
    pub fit: FitParamsJson,
    pub balance: BalanceJson,
    pub state: StateJson,
    pub density_matrix: DensityMatrixJson,
    pub metrics: MetricsJson,
    /// How the metric sigmas were obtained.
    pub errors_method: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitInputsJson {
    pub trace: String,
    pub trace_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<[u64; 2]>,
    /// True when no counts were given and p = 0.5 was assumed.
    pub counts_assumed: bool,
    pub target_phase_deg: f64,
    pub resamples: usize,
    pub bootstrap_seed: u64,
}

/// Fitted beating-model parameters with 1σ errors, angles in degrees.
#[derive(Debug, Clone, Serialize)]
pub struct FitParamsJson {
    pub visibility: ValueSigma,
    pub phase_deg: ValueSigma,
    pub detuning_thz: ValueSigma,
    pub tau_c_ps: ValueSigma,
    pub tau0_ps: ValueSigma,
    pub baseline: ValueSigma,
    pub chi2_reduced: f64,
    pub n_points: usize,
    pub converged: bool,
}

impl FitParamsJson {
    fn from_fit(fit: &FitResult) -> Self {
        let p = &fit.params;
        let e = &fit.errors;
        Self {
            visibility: ValueSigma { value: p.visibility(), sigma: e.visibility },
            phase_deg: ValueSigma {
                value: p.phase().to_degrees(),
                sigma: e.phase.to_degrees(),
            },
            detuning_thz: ValueSigma { value: p.detuning_thz(), sigma: e.detuning_thz },
            tau_c_ps: ValueSigma { value: p.tau_c_ps(), sigma: e.tau_c_ps },
            tau0_ps: ValueSigma { value: p.tau0_ps(), sigma: e.tau0_ps },
            baseline: ValueSigma { value: p.baseline(), sigma: e.baseline },
            chi2_reduced: fit.chi2_reduced,
            n_points: fit.n_points,
            converged: fit.converged,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BalanceJson {
    pub p: ValueSigma,
    pub n12: u64,
    pub n21: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateJson {
    pub p: f64,
    pub visibility: f64,
    pub phase_deg: f64,
    pub detuning_thz: f64,
    /// True when the fitted visibility exceeded the physical bound for
    /// the measured balance and was clamped down to it.
    pub physicality_clamped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsJson {
    pub fidelity: ValueSigma,
    pub tangle: ValueSigma,
    pub purity: ValueSigma,
}

/// Written instead of a report when the fit fails to converge, so the
/// best-effort parameters are still inspectable.
#[derive(Debug, Clone, Serialize)]
struct FitDiagnosticsJson {
    tool: ToolInfo,
    status: &'static str,
    trace: String,
    trace_sha256: String,
    best: FitParamsJson,
    best_cost: f64,
    iterations: usize,
}

/// Reads the scan at `trace_path`, fits it, reconstructs the state, runs
/// the bootstrap, and writes the report to `out_path`.
///
/// A non-converging fit writes a diagnostics document to `out_path`
/// instead and returns [`CliError::FitDiverged`].
pub fn cmd_fit(
    trace_path: &Path,
    out_path: &Path,
    options: &FitOptions,
) -> Result<FitSummary, CliError> {
    let bytes = fs::read(trace_path).map_err(|e| CliError::io(trace_path, e))?;
    let trace_sha256 = sha256_hex(&bytes);
    let text = String::from_utf8(bytes).map_err(|_| CliError::Format {
        path: trace_path.to_path_buf(),
        message: String::from("trace file is not valid UTF-8"),
    })?;
    let trace = parse_trace_csv(&text, trace_path)?;

    let fit = match fit_beating(&trace, None) {
        Ok(fit) => fit,
        Err(EstimateError::NonConvergence { best, best_cost, iterations }) => {
            let diagnostics = FitDiagnosticsJson {
                tool: ToolInfo::current(),
                status: "fit_failed",
                trace: trace_path.display().to_string(),
                trace_sha256,
                best: FitParamsJson::from_fit(&best),
                best_cost,
                iterations,
            };
            write_json_pretty(out_path, &diagnostics)?;
            return Err(CliError::FitDiverged {
                iterations,
                best_cost,
                diagnostics: out_path.to_path_buf(),
            });
        }
        Err(e) => return Err(e.into()),
    };

    let (balance, counts_assumed) = match options.counts {
        Some((n12, n21)) => (balance_from_counts(n12, n21)?, false),
        // Nothing measured: take an even split as given, with no
        // sampling error to propagate.
        None => (BalanceEstimate { p: 0.5, sigma_p: 0.0, n12: 0, n21: 0 }, true),
    };

    let target_phase = options.target_phase_deg.to_radians();
    let reconstruction = bootstrap_uncertainty(
        &trace,
        &fit,
        &balance,
        target_phase,
        options.resamples,
        options.seed,
    )?;

    let report = FitReportJson {
        tool: ToolInfo::current(),
        inputs: FitInputsJson {
            trace: trace_path.display().to_string(),
            trace_sha256,
            counts: options.counts.map(|(n12, n21)| [n12, n21]),
            counts_assumed,
            target_phase_deg: options.target_phase_deg,
            resamples: options.resamples,
            bootstrap_seed: options.seed,
        },
        fit: FitParamsJson::from_fit(&fit),
        balance: BalanceJson {
            p: ValueSigma { value: balance.p, sigma: balance.sigma_p },
            n12: balance.n12,
            n21: balance.n21,
        },
        state: StateJson {
            p: reconstruction.p.value,
            visibility: reconstruction.visibility.value,
            phase_deg: reconstruction.phase.value.to_degrees(),
            detuning_thz: reconstruction.state.detuning_thz(),
            physicality_clamped: reconstruction.physicality_clamped,
        },
        density_matrix: density_matrix_json(&reconstruction.matrix),
        metrics: MetricsJson {
            fidelity: reconstruction.fidelity.into(),
            tangle: reconstruction.tangle.into(),
            purity: reconstruction.purity.into(),
        },
        errors_method: "bootstrap",
    };
    write_json_pretty(out_path, &report)?;

    Ok(FitSummary { report_path: out_path.to_path_buf(), fit, reconstruction })
}
