//! The hybrid entanglement-transfer gate.
//!
//! The gate converts polarization entanglement into frequency-bin
//! entanglement in two linear steps acting on a labeled two-photon ket:
//!
//! 1. A polarizing beamsplitter routes input paths 1 and 2 onto output
//!    paths 3 and 4, with the branch taken by each photon decided by its
//!    polarization. Because the two input photons carry fixed, opposite
//!    frequency bins, the routing correlates path with frequency.
//! 2. Both output photons are projected onto the diagonal polarization
//!    |D⟩ = (|H⟩ + |V⟩)/√2, which erases the which-polarization information
//!    probabilistically. For any normalized input the projection succeeds
//!    with probability 1/4.
//!
//! Applied to the source state (α|HH⟩ + βe^{iφ}|VV⟩) ⊗ |ω1⟩₁|ω2⟩₂ the
//! composition yields α|ω1⟩₃|ω2⟩₄ + βe^{iφ}|ω2⟩₃|ω1⟩₄: the polarization
//! qubit (α, β, φ) is mapped onto the color pair unchanged.
//!
//! Components are ideal; real-world imperfections are not modeled here but
//! enter the analysis as a single phenomenological visibility factor in the
//! interference forward model.

use alloc::collections::BTreeMap;
use core::fmt;

use num_complex::Complex64;
// Float math on f64 comes from the trait in no_std builds; test builds link
// std, whose inherent methods shadow it and make the import look unused.
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::qstate::{QStateError, RestrictedColorState, StateVector4};
use crate::source::PolPairState;

const ZERO_AMPLITUDE_TOL: f64 = 1e-15;
const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GateError {
    #[error("term {label} is not on the expected {expected} paths")]
    WrongPath { label: PairLabel, expected: &'static str },
    #[error("term {label} lacks a polarization label required by this stage")]
    MissingPolarization { label: PairLabel },
    #[error("term {label} still carries polarization; expected a color-only ket")]
    PolarizationPresent { label: PairLabel },
    #[error("term {label} has correlated frequency bins; expected anticorrelated support")]
    NotAnticorrelated { label: PairLabel },
    #[error("ket has (near-)zero norm; no state to analyse")]
    EmptyKet,
    #[error("ket squared norm {norm_sqr} exceeds 1")]
    Overnormalized { norm_sqr: f64 },
    #[error(transparent)]
    State(#[from] QStateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Polarization {
    H,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FreqBin {
    Omega1,
    Omega2,
}

/// Spatial mode: 1 and 2 are the gate inputs, 3 and 4 the outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Path {
    P1,
    P2,
    P3,
    P4,
}

impl Path {
    pub fn is_input(self) -> bool {
        matches!(self, Path::P1 | Path::P2)
    }

    pub fn number(self) -> u8 {
        match self {
            Path::P1 => 1,
            Path::P2 => 2,
            Path::P3 => 3,
            Path::P4 => 4,
        }
    }
}

/// One photon's full label. Polarization is `None` once the gate projection
/// has traced it out. Path is ordered first so that derived ordering sorts
/// photon labels by spatial mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PhotonLabel {
    pub path: Path,
    pub bin: FreqBin,
    pub pol: Option<Polarization>,
}

impl PhotonLabel {
    pub fn new(pol: Option<Polarization>, bin: FreqBin, path: Path) -> Self {
        PhotonLabel { path, bin, pol }
    }
}

impl fmt::Display for PhotonLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pol {
            Some(Polarization::H) => write!(f, "H")?,
            Some(Polarization::V) => write!(f, "V")?,
            None => {}
        }
        match self.bin {
            FreqBin::Omega1 => write!(f, "w1")?,
            FreqBin::Omega2 => write!(f, "w2")?,
        }
        write!(f, "@{}", self.path.number())
    }
}

/// Canonically ordered two-photon label: the photon on the lower path comes
/// first, so |x⟩₃|y⟩₄ and |y⟩₄|x⟩₃ collapse to one key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PairLabel {
    first: PhotonLabel,
    second: PhotonLabel,
}

impl PairLabel {
    pub fn new(a: PhotonLabel, b: PhotonLabel) -> Self {
        if b < a {
            PairLabel { first: b, second: a }
        } else {
            PairLabel { first: a, second: b }
        }
    }

    pub fn first(&self) -> PhotonLabel {
        self.first
    }

    pub fn second(&self) -> PhotonLabel {
        self.second
    }
}

impl fmt::Display for PairLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>", self.first, self.second)
    }
}

/// Two-photon ket as a sparse map from labels to amplitudes.
///
/// Kets may be sub-normalized: the squared norm is the probability of the
/// branch the ket represents (post-selected or heralded states), and must
/// not exceed 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhotonPairKet {
    terms: BTreeMap<PairLabel, Complex64>,
}

impl PhotonPairKet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from `(label, amplitude)` pairs, summing duplicates, dropping
    /// vanishing amplitudes, and rejecting squared norms above 1.
    pub fn from_terms<I>(terms: I) -> Result<Self, GateError>
    where
        I: IntoIterator<Item = (PairLabel, Complex64)>,
    {
        let mut ket = PhotonPairKet::new();
        for (label, amp) in terms {
            ket.add_term(label, amp);
        }
        let norm_sqr = ket.norm_sqr();
        if norm_sqr > 1.0 + NORM_TOL {
            return Err(GateError::Overnormalized { norm_sqr });
        }
        Ok(ket)
    }

    /// Adds `amp` to the coefficient at `label`, removing the term if the
    /// sum cancels to (near) zero.
    pub fn add_term(&mut self, label: PairLabel, amp: Complex64) {
        let entry = self.terms.entry(label).or_insert(Complex64::ZERO);
        *entry += amp;
        if entry.norm_sqr() < ZERO_AMPLITUDE_TOL * ZERO_AMPLITUDE_TOL {
            self.terms.remove(&label);
        }
    }

    pub fn amplitude(&self, label: &PairLabel) -> Complex64 {
        self.terms.get(label).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PairLabel, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn scale(&mut self, factor: Complex64) {
        for amp in self.terms.values_mut() {
            *amp *= factor;
        }
    }

    /// Multiplies by the global phase that makes the first (lowest-label)
    /// nonzero amplitude real and positive, for phase-insensitive
    /// comparisons.
    pub fn with_canonical_phase(&self) -> PhotonPairKet {
        let mut out = self.clone();
        if let Some(amp) = out.terms.values().next().copied() {
            let magnitude = amp.norm();
            if magnitude > 0.0 {
                let rotation = amp.conj() / magnitude;
                out.scale(rotation);
            }
        }
        out
    }
}

/// Gate output: the projected two-photon state on paths 3 and 4
/// (renormalized) together with the probability that the projection
/// succeeded. A fully blocked input yields an empty ket with zero
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOutput {
    pub state: PhotonPairKet,
    pub success_probability: f64,
}

/// The source state as a labeled ket on input paths 1 and 2:
/// α|Hω1⟩₁|Hω2⟩₂ + βe^{iφ}|Vω1⟩₁|Vω2⟩₂.
pub fn source_ket(input: &PolPairState) -> PhotonPairKet {
    let mut ket = PhotonPairKet::new();
    ket.add_term(
        PairLabel::new(
            PhotonLabel::new(Some(Polarization::H), FreqBin::Omega1, Path::P1),
            PhotonLabel::new(Some(Polarization::H), FreqBin::Omega2, Path::P2),
        ),
        Complex64::new(input.alpha(), 0.0),
    );
    ket.add_term(
        PairLabel::new(
            PhotonLabel::new(Some(Polarization::V), FreqBin::Omega1, Path::P1),
            PhotonLabel::new(Some(Polarization::V), FreqBin::Omega2, Path::P2),
        ),
        Complex64::from_polar(input.beta(), input.phi()),
    );
    ket
}

/// Routes each photon through the polarizing beamsplitter: from input 1,
/// H exits on path 3 and V on path 4; from input 2, H exits on path 4 and
/// V on path 3. Frequency bins ride along unchanged.
///
/// Terms whose photons both exit on the same path fall outside the
/// post-selected one-photon-per-output subspace and are dropped, leaving a
/// sub-normalized ket. On that subspace the map is norm-preserving.
pub fn pbs_map(input: &PhotonPairKet) -> Result<PhotonPairKet, GateError> {
    let mut out = PhotonPairKet::new();
    for (label, &amp) in input.iter() {
        let mut routed = [PhotonLabel::new(None, FreqBin::Omega1, Path::P3); 2];
        for (slot, photon) in [label.first(), label.second()].into_iter().enumerate() {
            if !photon.path.is_input() {
                return Err(GateError::WrongPath { label: *label, expected: "input (1, 2)" });
            }
            let pol = photon
                .pol
                .ok_or(GateError::MissingPolarization { label: *label })?;
            let out_path = match (photon.path, pol) {
                (Path::P1, Polarization::H) => Path::P3,
                (Path::P1, Polarization::V) => Path::P4,
                (Path::P2, Polarization::H) => Path::P4,
                (Path::P2, Polarization::V) => Path::P3,
                _ => unreachable!("input paths checked above"),
            };
            routed[slot] = PhotonLabel::new(Some(pol), photon.bin, out_path);
        }
        if routed[0].path == routed[1].path {
            continue;
        }
        out.add_term(PairLabel::new(routed[0], routed[1]), amp);
    }
    Ok(out)
}

/// Projects both photons onto |D⟩ = (|H⟩ + |V⟩)/√2 and traces out the (now
/// uniform) polarization: each term picks up ⟨D|H⟩⟨D|V⟩-type factors of 1/2
/// and loses its polarization labels, with interfering terms merged.
///
/// The success probability is the squared norm of the projected ket before
/// renormalization; a fully blocked input returns an empty ket with
/// probability 0 rather than an error.
pub fn project_diagonal(input: &PhotonPairKet) -> Result<GateOutput, GateError> {
    let mut projected = PhotonPairKet::new();
    for (label, &amp) in input.iter() {
        for photon in [label.first(), label.second()] {
            if photon.path.is_input() {
                return Err(GateError::WrongPath { label: *label, expected: "output (3, 4)" });
            }
            if photon.pol.is_none() {
                return Err(GateError::MissingPolarization { label: *label });
            }
        }
        let stripped = PairLabel::new(
            PhotonLabel::new(None, label.first().bin, label.first().path),
            PhotonLabel::new(None, label.second().bin, label.second().path),
        );
        // ⟨D|H⟩ = ⟨D|V⟩ = 1/√2 per photon.
        projected.add_term(stripped, amp * 0.5);
    }
    let success_probability = projected.norm_sqr();
    let mut state = projected;
    if success_probability > ZERO_AMPLITUDE_TOL * ZERO_AMPLITUDE_TOL {
        state.scale(Complex64::new(1.0 / success_probability.sqrt(), 0.0));
    } else {
        state = PhotonPairKet::new();
        return Ok(GateOutput { state, success_probability: 0.0 });
    }
    Ok(GateOutput { state, success_probability })
}

/// The full gate: PBS routing followed by diagonal projection. For any
/// normalized input the output state is
/// α|ω1⟩₃|ω2⟩₄ + βe^{iφ}|ω2⟩₃|ω1⟩₄ with success probability 1/4.
pub fn hybrid_gate(input: &PolPairState) -> Result<GateOutput, GateError> {
    project_diagonal(&pbs_map(&source_ket(input))?)
}

/// Reads the restricted-state parameters (p, V, φ) off a color-only ket on
/// paths 3 and 4 with anticorrelated bins: p = |a₁₂|², V = 2|a₁₂a₂₁|,
/// φ = arg(a₂₁) − arg(a₁₂) (after normalization). Pure kets saturate the
/// physicality bound V/2 = √(p(1−p)) by construction.
///
/// `detuning_thz` supplies the bin separation, which the ket's symbolic
/// labels do not carry.
pub fn restricted_params_from_ket(
    ket: &PhotonPairKet,
    detuning_thz: f64,
) -> Result<RestrictedColorState, GateError> {
    let (a12, a21) = anticorrelated_amplitudes(ket)?;
    let norm_sqr = a12.norm_sqr() + a21.norm_sqr();
    if norm_sqr < ZERO_AMPLITUDE_TOL * ZERO_AMPLITUDE_TOL {
        return Err(GateError::EmptyKet);
    }
    let p = a12.norm_sqr() / norm_sqr;
    // 2|a||b| ≤ |a|² + |b|², so the true ratio never exceeds 1, but
    // rounding overshoots by an ulp when the amplitudes are balanced.
    let v = (2.0 * a12.norm() * a21.norm() / norm_sqr).min(1.0);
    let phi = if a12.norm() > 0.0 && a21.norm() > 0.0 {
        a21.arg() - a12.arg()
    } else {
        0.0
    };
    Ok(RestrictedColorState::new(p, v, phi, detuning_thz)?)
}

/// Bridges a color-only ket on paths 3 and 4 to a four-amplitude state
/// vector in the fixed computational-basis order (normalizing it).
pub fn state_vector_from_ket(ket: &PhotonPairKet) -> Result<StateVector4, GateError> {
    let mut amplitudes = [Complex64::ZERO; 4];
    for (label, &amp) in ket.iter() {
        let (a, b) = (label.first(), label.second());
        if a.pol.is_some() || b.pol.is_some() {
            return Err(GateError::PolarizationPresent { label: *label });
        }
        if a.path != Path::P3 || b.path != Path::P4 {
            return Err(GateError::WrongPath { label: *label, expected: "output (3, 4)" });
        }
        let index = 2 * (a.bin == FreqBin::Omega2) as usize + (b.bin == FreqBin::Omega2) as usize;
        amplitudes[index] = amp;
    }
    StateVector4::new(amplitudes).map_err(GateError::State)
}

fn anticorrelated_amplitudes(ket: &PhotonPairKet) -> Result<(Complex64, Complex64), GateError> {
    let mut a12 = Complex64::ZERO;
    let mut a21 = Complex64::ZERO;
    for (label, &amp) in ket.iter() {
        let (a, b) = (label.first(), label.second());
        if a.pol.is_some() || b.pol.is_some() {
            return Err(GateError::PolarizationPresent { label: *label });
        }
        if a.path != Path::P3 || b.path != Path::P4 {
            return Err(GateError::WrongPath { label: *label, expected: "output (3, 4)" });
        }
        match (a.bin, b.bin) {
            (FreqBin::Omega1, FreqBin::Omega2) => a12 = amp,
            (FreqBin::Omega2, FreqBin::Omega1) => a21 = amp,
            _ => return Err(GateError::NotAnticorrelated { label: *label }),
        }
    }
    Ok((a12, a21))
}
