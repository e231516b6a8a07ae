//! The restricted two-qubit color state and its entanglement metrics.
//!
//! Energy conservation in the pair source confines the two-photon color state
//! to the anticorrelated span of {|ω1ω2⟩, |ω2ω1⟩}. Within the full
//! computational basis, fixed everywhere in this crate as
//!
//! ```text
//!   index 0: |ω1⟩₃|ω1⟩₄     index 1: |ω1⟩₃|ω2⟩₄
//!   index 2: |ω2⟩₃|ω1⟩₄     index 3: |ω2⟩₃|ω2⟩₄
//! ```
//!
//! the complete density matrix is parameterized by the balance `p`, the
//! coherence magnitude `V` (the interference visibility), and the phase `φ`:
//! ρ₁₁ = p, ρ₂₂ = 1−p, ρ₁₂ = (V/2)e^{−iφ} (0-based indices 1, 2), all other
//! entries zero. Physical states obey 0 ≤ p ≤ 1 and 0 ≤ V/2 ≤ √(p(1−p)).
//!
//! Metrics come in two independent routes: closed forms in (p, V, φ) and
//! general matrix evaluations (Wootters concurrence via the spin-flipped
//! product, fidelity as ⟨ψ|ρ|ψ⟩). The test suite holds the two routes
//! against each other.

use alloc::vec::Vec;

use num_complex::Complex64;
// Float math on f64 comes from the trait in no_std builds; test builds link
// std, whose inherent methods shadow it and make the import look unused.
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::linalg::{eigh, sqrt_psd, LinalgError, Mat4, DIM};

/// Tolerance below which a nominally nonnegative eigenvalue may dip due to
/// roundoff; anything in `(-PSD_TOL, 0)` is clamped to zero before metrics.
pub const PSD_TOL: f64 = 1e-10;

const HERM_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QStateError {
    #[error("state vector has zero (or non-finite) norm")]
    ZeroNorm,
    #[error("balance parameter p = {p} outside [0, 1]")]
    BalanceOutOfRange { p: f64 },
    #[error("bin separation {detuning_thz} THz must be ≥ 0 and finite")]
    BadDetuning { detuning_thz: f64 },
    #[error("unphysical coherence: V/2 = {half_v} exceeds sqrt(p(1-p)) = {bound} (p = {p}, V = {v})")]
    Unphysical { p: f64, v: f64, half_v: f64, bound: f64 },
    #[error("matrix is not hermitian within {HERM_TOL:e}: deviation {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("matrix trace {trace} is not 1 within {TRACE_TOL:e}")]
    TraceNotOne { trace: f64 },
    #[error("matrix has negative eigenvalue {eigenvalue:.3e} below -{PSD_TOL:e}")]
    NotPositive { eigenvalue: f64 },
    #[error("basis {index} is not an orthonormal pair: {reason}")]
    BadBasis { index: usize, reason: &'static str },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Pure two-qubit color state: four complex amplitudes in the fixed
/// computational-basis order {|ω1ω1⟩, |ω1ω2⟩, |ω2ω1⟩, |ω2ω2⟩}.
///
/// Construction renormalizes, so the squared norm is 1 to within 1e-12.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector4 {
    amplitudes: [Complex64; DIM],
}

impl StateVector4 {
    pub fn new(amplitudes: [Complex64; DIM]) -> Result<Self, QStateError> {
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sqr.is_finite() || norm_sqr < 1e-24 {
            return Err(QStateError::ZeroNorm);
        }
        let scale = 1.0 / norm_sqr.sqrt();
        let mut amplitudes = amplitudes;
        for a in amplitudes.iter_mut() {
            *a *= scale;
        }
        Ok(StateVector4 { amplitudes })
    }

    /// Computational basis state |i⟩ for i in 0..4.
    pub fn basis_state(index: usize) -> Self {
        let mut amplitudes = [Complex64::ZERO; DIM];
        amplitudes[index] = Complex64::ONE;
        StateVector4 { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64; DIM] {
        &self.amplitudes
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector4) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |⟨self|other⟩|².
    pub fn overlap(&self, other: &StateVector4) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Projector |ψ⟩⟨ψ| as a density matrix.
    pub fn projector(&self) -> DensityMatrix {
        let mut m = Mat4::zeros();
        for i in 0..DIM {
            for j in 0..DIM {
                m[(i, j)] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityMatrix { matrix: m }
    }
}

/// Anticorrelated target state (|ω1ω2⟩ + e^{iφ_t}|ω2ω1⟩)/√2.
pub fn target_state(phase: f64) -> StateVector4 {
    let amp = core::f64::consts::FRAC_1_SQRT_2;
    StateVector4 {
        amplitudes: [
            Complex64::ZERO,
            Complex64::new(amp, 0.0),
            Complex64::from_polar(amp, phase),
            Complex64::ZERO,
        ],
    }
}

/// 4×4 Hermitian, unit-trace, positive-semidefinite matrix in the fixed
/// computational-basis order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    matrix: Mat4,
}

impl DensityMatrix {
    /// Validates hermiticity (1e-12), unit trace (1e-12), and positivity
    /// (eigenvalues ≥ −1e-10).
    pub fn new(matrix: Mat4) -> Result<Self, QStateError> {
        let dev = matrix.hermiticity_deviation();
        if dev > HERM_TOL {
            return Err(QStateError::NotHermitian { deviation: dev });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(QStateError::TraceNotOne { trace: trace.re });
        }
        let eig = eigh(&matrix)?;
        if eig.values[0] < -PSD_TOL {
            return Err(QStateError::NotPositive { eigenvalue: eig.values[0] });
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// Eigenvalues in ascending order, with tiny numerical negatives clamped
    /// to zero.
    pub fn eigenvalues(&self) -> Result<[f64; DIM], QStateError> {
        let eig = eigh(&self.matrix)?;
        let mut values = eig.values;
        for v in values.iter_mut() {
            if *v < 0.0 && *v > -PSD_TOL {
                *v = 0.0;
            }
        }
        Ok(values)
    }
}

/// Restricted color state (p, V, φ) plus the bin separation Δf.
///
/// `p` is the population of |ω1⟩₃|ω2⟩₄, `visibility` the off-diagonal
/// coherence magnitude V, `phase` the coherence phase in radians mapped to
/// [0, 2π), and `detuning_thz` the ordinary-frequency bin separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedColorState {
    p: f64,
    visibility: f64,
    phase: f64,
    detuning_thz: f64,
}

impl RestrictedColorState {
    /// Rejects p outside [0, 1] and coherences violating
    /// V/2 ≤ √(p(1−p)) (beyond a small roundoff allowance).
    pub fn new(p: f64, visibility: f64, phase: f64, detuning_thz: f64) -> Result<Self, QStateError> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(QStateError::BalanceOutOfRange { p });
        }
        let bound = (p * (1.0 - p)).sqrt();
        let half_v = visibility / 2.0;
        if !(0.0..=bound + 1e-12).contains(&half_v) {
            return Err(QStateError::Unphysical { p, v: visibility, half_v, bound });
        }
        if !(detuning_thz.is_finite() && detuning_thz >= 0.0) {
            return Err(QStateError::BadDetuning { detuning_thz });
        }
        Ok(RestrictedColorState {
            p,
            visibility,
            phase: wrap_angle(phase),
            detuning_thz,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    /// Coherence phase in radians, in [0, 2π).
    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn detuning_thz(&self) -> f64 {
        self.detuning_thz
    }

    /// The full matrix on the anticorrelated subspace:
    /// ρ₁₁ = p, ρ₂₂ = 1−p, ρ₁₂ = (V/2)e^{−iφ}, everything else zero
    /// (0-based indices in the fixed basis order).
    pub fn density_matrix(&self) -> DensityMatrix {
        let mut m = Mat4::zeros();
        m[(1, 1)] = Complex64::new(self.p, 0.0);
        m[(2, 2)] = Complex64::new(1.0 - self.p, 0.0);
        let coherence = Complex64::from_polar(self.visibility / 2.0, -self.phase);
        m[(1, 2)] = coherence;
        m[(2, 1)] = coherence.conj();
        DensityMatrix { matrix: m }
    }

    /// Closed-form purity p² + (1−p)² + V²/2.
    ///
    /// Sensitive to rounding of the inputs: (p, V) quoted to three digits
    /// shift the result by ~0.01, so a purity computed here from rounded
    /// estimates can disagree in the third digit with one computed
    /// upstream from the unrounded fit. (0.546, 0.782) gives 0.810.
    pub fn purity(&self) -> f64 {
        self.p * self.p
            + (1.0 - self.p) * (1.0 - self.p)
            + self.visibility * self.visibility / 2.0
    }

    /// Closed-form tangle V².
    pub fn tangle(&self) -> f64 {
        self.visibility * self.visibility
    }

    /// Closed-form fidelity 1/2 + (V/2)cos(φ − φ_t) against
    /// `target_state(target_phase)`.
    pub fn fidelity(&self, target_phase: f64) -> f64 {
        0.5 + 0.5 * self.visibility * (self.phase - target_phase).cos()
    }
}

/// Builds the restricted density matrix, rejecting unphysical (p, V) pairs.
pub fn restricted_density_matrix(state: &RestrictedColorState) -> DensityMatrix {
    state.density_matrix()
}

/// Tr(ρ²).
pub fn purity(rho: &DensityMatrix) -> f64 {
    let sq = *rho.matrix() * *rho.matrix();
    sq.trace().re
}

/// ⟨ψ|ρ|ψ⟩.
pub fn fidelity_with_pure(rho: &DensityMatrix, target: &StateVector4) -> f64 {
    let rv = rho.matrix().mul_vec(target.amplitudes());
    target
        .amplitudes()
        .iter()
        .zip(rv.iter())
        .map(|(a, b)| (a.conj() * b).re)
        .sum()
}

/// Wootters concurrence C = max(0, λ₁ − λ₂ − λ₃ − λ₄), where the λᵢ are the
/// decreasing square roots of the eigenvalues of ρ·ρ̃ and
/// ρ̃ = (σy⊗σy) ρ* (σy⊗σy).
///
/// Evaluated through the Hermitian form √ρ ρ̃ √ρ, which shares the nonzero
/// spectrum of ρρ̃ but keeps the eigenproblem Hermitian.
pub fn concurrence_wootters(rho: &DensityMatrix) -> Result<f64, QStateError> {
    let spin_flip = spin_flip_matrix();
    let rho_tilde = spin_flip * rho.matrix().conj() * spin_flip;
    let root = sqrt_psd(rho.matrix(), PSD_TOL)?;
    let product = root * rho_tilde * root;
    let eig = eigh(&product)?;
    let mut lambdas = [0.0; DIM];
    for (slot, v) in eig.values.iter().enumerate() {
        lambdas[slot] = v.max(0.0).sqrt();
    }
    // `eigh` sorts ascending; the largest root carries the plus sign.
    let c = lambdas[3] - lambdas[2] - lambdas[1] - lambdas[0];
    Ok(c.max(0.0))
}

/// Concurrence squared.
pub fn tangle(rho: &DensityMatrix) -> Result<f64, QStateError> {
    let c = concurrence_wootters(rho)?;
    Ok(c * c)
}

fn spin_flip_matrix() -> Mat4 {
    // σy ⊗ σy in the computational basis: antidiagonal (-1, 1, 1, -1).
    let mut m = Mat4::zeros();
    m[(0, 3)] = Complex64::new(-1.0, 0.0);
    m[(1, 2)] = Complex64::ONE;
    m[(2, 1)] = Complex64::ONE;
    m[(3, 0)] = Complex64::new(-1.0, 0.0);
    m
}

/// All pairwise overlaps |⟨ψᵢ|ψⱼ⟩|² for states grouped into bases.
///
/// The output is indexed by the flattened state order. Each basis must be a
/// pair of mutually orthogonal states supported on the anticorrelated
/// subspace {|ω1ω2⟩, |ω2ω1⟩}; anything else is rejected.
pub fn mub_overlap_check(bases: &[[StateVector4; 2]]) -> Result<Vec<Vec<f64>>, QStateError> {
    for (index, basis) in bases.iter().enumerate() {
        for state in basis.iter() {
            if state.amplitudes()[0].norm() > 1e-12 || state.amplitudes()[3].norm() > 1e-12 {
                return Err(QStateError::BadBasis {
                    index,
                    reason: "support outside the anticorrelated subspace",
                });
            }
        }
        if basis[0].overlap(&basis[1]) > 1e-12 {
            return Err(QStateError::BadBasis { index, reason: "states are not orthogonal" });
        }
    }
    let states: Vec<&StateVector4> = bases.iter().flatten().collect();
    let n = states.len();
    let mut table = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(states[i].overlap(states[j]));
        }
        table.push(row);
    }
    Ok(table)
}

/// Maps an angle into [0, 2π).
pub fn wrap_angle(phase: f64) -> f64 {
    let tau = core::f64::consts::TAU;
    let mut wrapped = phase % tau;
    if wrapped < 0.0 {
        wrapped += tau;
    }
    // `x % tau` can round up to tau itself for tiny negative x.
    if wrapped >= tau {
        wrapped = 0.0;
    }
    wrapped
}

/// Maps an angle into (−π, π].
pub fn wrap_angle_signed(phase: f64) -> f64 {
    let pi = core::f64::consts::PI;
    let w = wrap_angle(phase);
    if w > pi {
        w - core::f64::consts::TAU
    } else {
        w
    }
}

/// Serialization order of the computational basis, for file formats.
pub const BASIS_LABELS: [&str; DIM] = ["w1w1", "w1w2", "w2w1", "w2w2"];
