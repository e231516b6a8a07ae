//! `sweep`: repeat the simulate → fit loop across scenario settings
//! (crystal temperature or pump phase) and tabulate truth against
//! recovery.

use std::fs;
use std::path::{Path, PathBuf};

use colorbeat_core::estimate::{fit_beating, reconstruct, BalanceEstimate};

use crate::config::{ScenarioConfig, DETUNING_SWEEP_TEMPS_C};
use crate::formats::{parse_trace_csv, sha256_hex, write_atomic, ToolInfo};
use crate::simulate::cmd_simulate;
use crate::CliError;

/// Which scenario knob the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepKind {
    /// Vary crystal temperature; the tuning curve sets the detuning.
    Detuning,
    /// Vary the pump phase at fixed detuning.
    Phase,
}

impl SweepKind {
    fn setting_column(self) -> &'static str {
        match self {
            SweepKind::Detuning => "temperature_c",
            SweepKind::Phase => "phase_deg",
        }
    }

    fn metadata_name(self) -> &'static str {
        match self {
            SweepKind::Detuning => "detuning",
            SweepKind::Phase => "phase",
        }
    }
}

/// One sweep point: the setting, what the simulation put in, and what the
/// fit got back.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    /// Temperature in °C or phase in degrees, per the sweep kind.
    pub setting: f64,
    pub seed: u64,
    pub true_visibility: f64,
    pub true_phase_deg: f64,
    pub true_detuning_thz: f64,
    pub fit_visibility: f64,
    pub fit_visibility_sigma: f64,
    pub fit_phase_deg: f64,
    pub fit_phase_deg_sigma: f64,
    pub fit_detuning_thz: f64,
    pub fit_detuning_thz_sigma: f64,
    /// Metrics of the reconstructed state against the intended one at
    /// this setting (first-order errors; the bootstrap lives in `fit`).
    pub fidelity: f64,
    pub fidelity_sigma: f64,
    pub tangle: f64,
    pub tangle_sigma: f64,
    pub purity: f64,
    pub purity_sigma: f64,
    /// Spectral peak positions measured off the synthesized spectrum.
    pub peak_lambda_low_nm: f64,
    pub peak_lambda_high_nm: f64,
    pub peak_separation_nm: f64,
    /// |λ1 − λ2| the spectrum was synthesized from.
    pub expected_separation_nm: f64,
}

/// The sweep's tabulated results and where they were written.
#[derive(Debug)]
pub struct SweepSummary {
    pub kind: SweepKind,
    pub rows: Vec<SweepRow>,
    pub summary_path: PathBuf,
    pub point_dirs: Vec<PathBuf>,
}

/// Runs one simulate → fit round trip per setting under
/// `out_dir/point_NN/` and writes `out_dir/summary.csv`.
///
/// Settings come from the config's sweep block when present, otherwise
/// from the built-in defaults (the three calibration temperatures, or
/// thirteen phases over a full turn). Per-point noise seeds are
/// `base + index` with `base` the override or the config seed, so a sweep
/// is reproducible as a whole while no two points share a stream.
///
/// Fits use the same entry point as `fit` but keep the fast first-order
/// error bars; the bootstrap stays in `fit`, where one dataset gets the
/// careful treatment.
pub fn cmd_sweep(
    kind: SweepKind,
    config: &ScenarioConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<SweepSummary, CliError> {
    config.validate()?;
    let settings = sweep_settings(kind, config)?;
    let base_seed = seed_override.unwrap_or(config.measurement.seed);

    let mut rows = Vec::with_capacity(settings.len());
    let mut point_dirs = Vec::with_capacity(settings.len());
    for (index, &setting) in settings.iter().enumerate() {
        let mut point_config = match kind {
            SweepKind::Detuning => config.with_temperature_c(setting),
            SweepKind::Phase => config.with_phase_deg(setting),
        };
        let seed = base_seed.wrapping_add(index as u64);
        point_config.measurement.seed = seed;

        let point_dir = out_dir.join(format!("point_{index:02}"));
        let outcome = cmd_simulate(&point_config, &point_dir)?;

        // Fit what simulate wrote, not what it returned: the CSV is the
        // interface, so the round trip through it is part of the test.
        let text = fs::read_to_string(&outcome.trace_path)
            .map_err(|e| CliError::io(&outcome.trace_path, e))?;
        let trace = parse_trace_csv(&text, &outcome.trace_path)?;
        let fit = fit_beating(&trace, None).map_err(|e| {
            CliError::Config(format!(
                "sweep point {index} ({} = {setting}): {e}",
                kind.setting_column()
            ))
        })?;

        let balance = BalanceEstimate { p: 0.5, sigma_p: 0.0, n12: 0, n21: 0 };
        let target_phase = outcome.truth.model.phase_deg.to_radians();
        let report = reconstruct(&fit, &balance, target_phase)?;

        let peaks = outcome.spectrum.peak_wavelengths();
        let (peak_low, peak_high) = match (peaks.first(), peaks.last()) {
            (Some(&low), Some(&high)) if peaks.len() >= 2 => (low, high),
            _ => (f64::NAN, f64::NAN),
        };
        let truth = &outcome.truth;

        rows.push(SweepRow {
            index,
            setting,
            seed,
            true_visibility: truth.model.visibility,
            true_phase_deg: truth.model.phase_deg,
            true_detuning_thz: truth.model.detuning_thz,
            fit_visibility: fit.params.visibility(),
            fit_visibility_sigma: fit.errors.visibility,
            fit_phase_deg: fit.params.phase().to_degrees(),
            fit_phase_deg_sigma: fit.errors.phase.to_degrees(),
            fit_detuning_thz: fit.params.detuning_thz(),
            fit_detuning_thz_sigma: fit.errors.detuning_thz,
            fidelity: report.fidelity.value,
            fidelity_sigma: report.fidelity.sigma,
            tangle: report.tangle.value,
            tangle_sigma: report.tangle.sigma,
            purity: report.purity.value,
            purity_sigma: report.purity.sigma,
            peak_lambda_low_nm: peak_low,
            peak_lambda_high_nm: peak_high,
            peak_separation_nm: peak_high - peak_low,
            expected_separation_nm: (truth.source.lambda1_nm - truth.source.lambda2_nm).abs(),
        });
        point_dirs.push(point_dir);
    }

    let summary_path = out_dir.join("summary.csv");
    let config_sha256 =
        sha256_hex(serde_json::to_string(config).expect("config serializes").as_bytes());
    let summary = summary_csv(kind, &rows, &config_sha256, base_seed);
    write_atomic(&summary_path, summary.as_bytes())?;

    Ok(SweepSummary { kind, rows, summary_path, point_dirs })
}

fn sweep_settings(kind: SweepKind, config: &ScenarioConfig) -> Result<Vec<f64>, CliError> {
    if let Some(sweep) = &config.sweep {
        let list = match kind {
            SweepKind::Detuning => &sweep.temperatures_c,
            SweepKind::Phase => &sweep.phases_deg,
        };
        return match list {
            Some(values) => Ok(values.clone()),
            None => Err(CliError::Config(format!(
                "config sweep block has no {} list for a {} sweep",
                match kind {
                    SweepKind::Detuning => "temperatures_c",
                    SweepKind::Phase => "phases_deg",
                },
                kind.metadata_name()
            ))),
        };
    }
    Ok(match kind {
        SweepKind::Detuning => DETUNING_SWEEP_TEMPS_C.to_vec(),
        SweepKind::Phase => (0..13).map(|k| 30.0 * k as f64).collect(),
    })
}

fn summary_csv(kind: SweepKind, rows: &[SweepRow], config_sha256: &str, base_seed: u64) -> String {
    let tool = ToolInfo::current();
    let mut out = String::from("# colorbeat sweep v1\n");
    out.push_str(&format!("# tool={} {}\n", tool.name, tool.version));
    out.push_str(&format!("# kind={}\n", kind.metadata_name()));
    out.push_str(&format!("# config_sha256={config_sha256}\n"));
    out.push_str(&format!("# base_seed={base_seed}\n"));
    out.push_str(&format!(
        "index,{},seed,true_visibility,true_phase_deg,true_detuning_thz,\
         fit_visibility,fit_visibility_sigma,fit_phase_deg,fit_phase_deg_sigma,\
         fit_detuning_thz,fit_detuning_thz_sigma,fidelity,fidelity_sigma,\
         tangle,tangle_sigma,purity,purity_sigma,\
         peak_lambda_low_nm,peak_lambda_high_nm,peak_separation_nm,\
         expected_separation_nm\n",
        kind.setting_column()
    ));
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.index,
            r.setting,
            r.seed,
            r.true_visibility,
            r.true_phase_deg,
            r.true_detuning_thz,
            r.fit_visibility,
            r.fit_visibility_sigma,
            r.fit_phase_deg,
            r.fit_phase_deg_sigma,
            r.fit_detuning_thz,
            r.fit_detuning_thz_sigma,
            r.fidelity,
            r.fidelity_sigma,
            r.tangle,
            r.tangle_sigma,
            r.purity,
            r.purity_sigma,
            r.peak_lambda_low_nm,
            r.peak_lambda_high_nm,
            r.peak_separation_nm,
            r.expected_separation_nm,
        ));
    }
    out
}
