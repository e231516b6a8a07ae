//! On-disk formats.
//!
//! Delay scans travel as CSV with `#`-prefixed `key=value` metadata lines
//! followed by a fixed header; spectra as a plain three-column CSV. JSON
//! documents carry states and reports. All writes go through a temporary
//! sibling file and an atomic rename, and everything serialized here is
//! deterministic byte-for-byte given the same inputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use colorbeat_core::gate::PhotonPairKet;
use colorbeat_core::interference::{BeatingTrace, Spectrum, TraceMeta, TraceRow};
use colorbeat_core::linalg::DIM;
use colorbeat_core::qstate::{DensityMatrix, BASIS_LABELS};

use crate::CliError;

pub const TRACE_HEADER: &str = "delay_ps,coincidences,singles3,singles4,integration_s";
pub const SPECTRUM_HEADER: &str = "wavelength_nm,mode3,mode4";

/// Writes `content` under `path` via `<name>.tmp` + rename, creating the
/// parent directory if needed.
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| String::from("out"));
    let tmp = path.with_file_name(format!("{file_name}.tmp"));
    fs::write(&tmp, content).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

/// Serializes a trace: metadata lines (`pair_rate_hz`, `seed`, `rng`, plus
/// any `extra` pairs), the fixed header, one row per delay. Floats use the
/// shortest representation that parses back to the same value.
pub fn trace_csv_string(trace: &BeatingTrace, extra: &[(String, String)]) -> String {
    let mut out = String::new();
    out.push_str("# colorbeat trace v1\n");
    let meta = trace.meta();
    let _ = writeln!(out, "# pair_rate_hz={}", meta.pair_rate_hz);
    if let Some(seed) = meta.seed {
        let _ = writeln!(out, "# seed={seed}");
    }
    if let Some(rng) = &meta.rng {
        let _ = writeln!(out, "# rng={rng}");
    }
    for (key, value) in extra {
        let _ = writeln!(out, "# {key}={value}");
    }
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in trace.rows() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.delay_ps, row.coincidences, row.singles3, row.singles4, row.integration_s
        );
    }
    out
}

pub fn write_trace_csv(
    path: &Path,
    trace: &BeatingTrace,
    extra: &[(String, String)],
) -> Result<(), CliError> {
    write_atomic(path, trace_csv_string(trace, extra).as_bytes())
}

/// Parses a trace CSV. Unknown metadata keys are ignored; a missing
/// `pair_rate_hz` line, a wrong header, or any malformed row is an error
/// naming the line.
pub fn parse_trace_csv(text: &str, path: &Path) -> Result<BeatingTrace, CliError> {
    let parse_err = |line: usize, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut pair_rate_hz: Option<f64> = None;
    let mut seed: Option<u64> = None;
    let mut rng: Option<String> = None;
    let mut saw_header = false;
    let mut rows: Vec<TraceRow> = Vec::new();

    for (index, raw) in text.lines().enumerate() {
        let lineno = index + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.trim().split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "pair_rate_hz" => {
                        pair_rate_hz = Some(value.parse().map_err(|_| {
                            parse_err(lineno, format!("bad pair_rate_hz value `{value}`"))
                        })?);
                    }
                    "seed" => {
                        seed = Some(value.parse().map_err(|_| {
                            parse_err(lineno, format!("bad seed value `{value}`"))
                        })?);
                    }
                    "rng" => rng = Some(value.to_string()),
                    _ => {}
                }
            }
            continue;
        }
        if !saw_header {
            if line != TRACE_HEADER {
                return Err(parse_err(
                    lineno,
                    format!("expected header `{TRACE_HEADER}`, found `{line}`"),
                ));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_err(
                lineno,
                format!("expected 5 fields, found {}", fields.len()),
            ));
        }
        let float = |field: &str, name: &str| -> Result<f64, CliError> {
            field
                .trim()
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad {name} value `{}`", field.trim())))
        };
        let count = |field: &str, name: &str| -> Result<u64, CliError> {
            field
                .trim()
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad {name} value `{}`", field.trim())))
        };
        rows.push(TraceRow {
            delay_ps: float(fields[0], "delay_ps")?,
            coincidences: count(fields[1], "coincidences")?,
            singles3: count(fields[2], "singles3")?,
            singles4: count(fields[3], "singles4")?,
            integration_s: float(fields[4], "integration_s")?,
        });
    }

    if !saw_header {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: format!("no `{TRACE_HEADER}` header found"),
        });
    }
    let pair_rate_hz = pair_rate_hz.ok_or_else(|| CliError::Format {
        path: path.to_path_buf(),
        message: String::from("missing metadata line `# pair_rate_hz=<counts per second>`"),
    })?;

    Ok(BeatingTrace::new(rows, TraceMeta { pair_rate_hz, seed, rng })?)
}

pub fn read_trace_csv(path: &Path) -> Result<BeatingTrace, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_trace_csv(&text, path)
}

pub fn spectrum_csv_string(spectrum: &Spectrum) -> String {
    let mut out = String::new();
    out.push_str("# colorbeat spectrum v1\n");
    out.push_str(SPECTRUM_HEADER);
    out.push('\n');
    for row in spectrum.rows() {
        let _ = writeln!(out, "{},{},{}", row.wavelength_nm, row.mode3, row.mode4);
    }
    out
}

pub fn write_spectrum_csv(path: &Path, spectrum: &Spectrum) -> Result<(), CliError> {
    write_atomic(path, spectrum_csv_string(spectrum).as_bytes())
}

/// Tool identity stamped into every JSON document.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo { name: "colorbeat", version: env!("CARGO_PKG_VERSION") }
    }
}

/// 4×4 matrix as two real arrays plus the fixed basis order.
#[derive(Debug, Clone, Serialize)]
pub struct DensityMatrixJson {
    pub re: [[f64; DIM]; DIM],
    pub im: [[f64; DIM]; DIM],
    pub basis: String,
}

pub fn density_matrix_json(rho: &DensityMatrix) -> DensityMatrixJson {
    let mut re = [[0.0; DIM]; DIM];
    let mut im = [[0.0; DIM]; DIM];
    for (row, (re_row, im_row)) in re.iter_mut().zip(im.iter_mut()).enumerate() {
        for col in 0..DIM {
            let entry = rho.entry(row, col);
            re_row[col] = entry.re;
            im_row[col] = entry.im;
        }
    }
    DensityMatrixJson { re, im, basis: BASIS_LABELS.join(",") }
}

/// One ket term: the two photon labels and the complex amplitude.
#[derive(Debug, Clone, Serialize)]
pub struct KetTermJson {
    pub labels: [String; 2],
    pub re: f64,
    pub im: f64,
}

pub fn ket_json(ket: &PhotonPairKet) -> Vec<KetTermJson> {
    ket.iter()
        .map(|(label, amp)| KetTermJson {
            labels: [label.first().to_string(), label.second().to_string()],
            re: amp.re,
            im: amp.im,
        })
        .collect()
}

pub fn write_json_pretty<T: Serialize>(path: &Path, document: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(document).expect("report types serialize");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}
