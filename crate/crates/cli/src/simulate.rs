//! `simulate`: run the source → gate → interference pipeline for one
//! scenario and write the delay scan, the two-mode spectrum, and a ground
//! truth document for round-trip testing.

use std::path::{Path, PathBuf};

use serde::Serialize;

use colorbeat_core::gate::{hybrid_gate, restricted_params_from_ket};
use colorbeat_core::interference::{
    expected_trace, simulate_trace, synth_spectra, BeatingModelParams, BeatingTrace, Spectrum,
};
use colorbeat_core::source::coherence_time_from_bandwidth;

use crate::config::ScenarioConfig;
use crate::formats::{
    ket_json, sha256_hex, write_json_pretty, write_spectrum_csv, write_trace_csv, KetTermJson,
    ToolInfo,
};
use crate::CliError;

pub const TRACE_FILE: &str = "trace.csv";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const TRUTH_FILE: &str = "truth.json";

/// What `simulate` wrote, with the in-memory artifacts for callers that
/// keep processing (sweeps, tests).
#[derive(Debug)]
pub struct SimulateOutcome {
    pub trace_path: PathBuf,
    pub spectrum_path: PathBuf,
    pub truth_path: PathBuf,
    pub trace: BeatingTrace,
    pub spectrum: Spectrum,
    pub truth: TruthJson,
}

/// Ground truth for one simulated scenario: the exact gate output, the
/// model parameters the trace was drawn from, and the spectrum inputs.
/// Everything a fit should recover, before noise.
#[derive(Debug, Clone, Serialize)]
pub struct TruthJson {
    pub tool: ToolInfo,
    /// SHA-256 of the compact-serialized config that ran.
    pub config_sha256: String,
    /// Seed of the counting-noise stream; absent for noiseless scans.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub source: TruthSource,
    pub gate: TruthGate,
    pub model: TruthModel,
    pub spectra: TruthSpectra,
    pub files: TruthFiles,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruthSource {
    pub alpha: f64,
    pub beta: f64,
    pub phi_deg: f64,
    pub lambda1_nm: f64,
    pub lambda2_nm: f64,
    pub detuning_thz: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruthGate {
    pub success_probability: f64,
    pub ket: Vec<KetTermJson>,
    /// Population of |ω1⟩₃|ω2⟩₄ in the post-selected state.
    pub p: f64,
    /// Coherence magnitude before fringe damping (equals 2αβ).
    pub visibility_ideal: f64,
    pub phase_deg: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruthModel {
    pub visibility: f64,
    pub phase_deg: f64,
    pub detuning_thz: f64,
    pub tau_c_ps: f64,
    pub tau0_ps: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruthSpectra {
    pub lambda1_nm: f64,
    pub lambda2_nm: f64,
    pub bin_fwhm_nm: f64,
    pub spectrometer_fwhm_nm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruthFiles {
    pub trace: &'static str,
    pub spectrum: &'static str,
}

/// Validates the config, runs the pipeline, and writes
/// `trace.csv` / `spectrum.csv` / `truth.json` under `out_dir`.
pub fn cmd_simulate(config: &ScenarioConfig, out_dir: &Path) -> Result<SimulateOutcome, CliError> {
    config.validate()?;

    let state = config.pol_state()?;
    let gate_out = hybrid_gate(&state)?;
    let restricted = restricted_params_from_ket(&gate_out.state, state.detuning_thz())?;

    // The fringe the scan shows: the gate-output coherence, damped by the
    // instrument factor, beating at the bin separation.
    let visibility = config.model.visibility_factor * restricted.visibility();
    let tau_c = coherence_time_from_bandwidth(config.model.bin_fwhm_thz)?;
    let params = BeatingModelParams::new(
        visibility,
        restricted.phase(),
        restricted.detuning_thz(),
        tau_c,
        0.0,
        config.model.baseline,
    )?;

    let settings = config.trace_settings();
    let seed = config.measurement.seed;
    let trace = if config.measurement.shot_noise {
        simulate_trace(&params, &settings, seed)?
    } else {
        expected_trace(&params, &settings)?
    };

    let (lambda1_nm, lambda2_nm) = config.wavelengths_nm()?;
    let bin_fwhm_nm = config.bin_fwhm_nm()?;
    let spectrum = synth_spectra(
        lambda1_nm,
        lambda2_nm,
        bin_fwhm_nm,
        config.model.spectrometer_fwhm_nm,
        config.spectrum_grid()?,
    )?;

    let truth = TruthJson {
        tool: ToolInfo::current(),
        config_sha256: sha256_hex(
            serde_json::to_string(config).expect("config serializes").as_bytes(),
        ),
        seed: trace.meta().seed,
        source: TruthSource {
            alpha: state.alpha(),
            beta: state.beta(),
            phi_deg: state.phi().to_degrees(),
            lambda1_nm,
            lambda2_nm,
            detuning_thz: state.detuning_thz(),
        },
        gate: TruthGate {
            success_probability: gate_out.success_probability,
            ket: ket_json(&gate_out.state),
            p: restricted.p(),
            visibility_ideal: restricted.visibility(),
            phase_deg: restricted.phase().to_degrees(),
        },
        model: TruthModel {
            visibility: params.visibility(),
            phase_deg: params.phase().to_degrees(),
            detuning_thz: params.detuning_thz(),
            tau_c_ps: params.tau_c_ps(),
            tau0_ps: params.tau0_ps(),
            baseline: params.baseline(),
        },
        spectra: TruthSpectra {
            lambda1_nm,
            lambda2_nm,
            bin_fwhm_nm,
            spectrometer_fwhm_nm: config.model.spectrometer_fwhm_nm,
        },
        files: TruthFiles { trace: TRACE_FILE, spectrum: SPECTRUM_FILE },
    };

    let trace_path = out_dir.join(TRACE_FILE);
    let spectrum_path = out_dir.join(SPECTRUM_FILE);
    let truth_path = out_dir.join(TRUTH_FILE);

    let model_meta = [
        (String::from("model_visibility"), params.visibility().to_string()),
        (String::from("model_phase_deg"), params.phase().to_degrees().to_string()),
        (String::from("model_detuning_thz"), params.detuning_thz().to_string()),
        (String::from("model_tau_c_ps"), params.tau_c_ps().to_string()),
        (String::from("model_baseline"), params.baseline().to_string()),
    ];
    write_trace_csv(&trace_path, &trace, &model_meta)?;
    write_spectrum_csv(&spectrum_path, &spectrum)?;
    write_json_pretty(&truth_path, &truth)?;

    Ok(SimulateOutcome { trace_path, spectrum_path, truth_path, trace, spectrum, truth })
}
