//! Core models and estimators for discretely frequency-bin-entangled photon
//! pairs measured by two-photon interference at a balanced fiber beamsplitter.
//!
//! The crate is organized around the experiment pipeline:
//!
//! * [`source`] — the tunable polarization-entangled pair source: input state
//!   parameters, the crystal-temperature tuning curve, and conversions between
//!   wavelength, frequency detuning, and coherence time.
//! * [`gate`] — the hybrid gate that transfers polarization entanglement onto
//!   the frequency-bin degree of freedom: PBS routing plus diagonal-polarization
//!   projection on a labeled two-photon ket.
//! * [`qstate`] — the restricted two-qubit color state: state vectors, the
//!   anticorrelated-subspace density matrix, and entanglement metrics
//!   (fidelity, tangle, purity) with a Wootters-concurrence oracle.
//! * [`interference`] — the forward measurement model: quantum-beating
//!   coincidence probability, seeded Poisson trace simulation, and synthetic
//!   single-photon spectra.
//! * [`estimate`] — the inverse problem: weighted least-squares beating fits,
//!   balance estimation from counts, density-matrix reconstruction, and
//!   parametric bootstrap uncertainties.
//!
//! The crate is `no_std` (with `alloc`); all I/O and file formats live in the
//! companion CLI crate.

#![no_std]

extern crate alloc;

pub mod estimate;
pub mod gate;
pub mod interference;
pub mod linalg;
pub mod qstate;
pub mod source;

pub use num_complex::Complex64;
