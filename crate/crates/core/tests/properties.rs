//! Randomized invariants: closed-form metrics against their matrix-route
//! counterparts, the physicality bound, gate post-selection, and the
//! wavelength/detuning conversions.

use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

use colorbeat_core::gate::{hybrid_gate, restricted_params_from_ket, state_vector_from_ket};
use colorbeat_core::interference::{beating_probability, BeatingModelParams};
use colorbeat_core::qstate::{
    concurrence_wootters, fidelity_with_pure, purity, tangle, target_state, wrap_angle,
    wrap_angle_signed, QStateError, RestrictedColorState, StateVector4,
};
use colorbeat_core::source::{detuning_from_wavelengths, wavelengths_from_detuning, PolPairState};
use colorbeat_core::Complex64;

/// (p, V) pairs drawn from the physical region V/2 ≤ √(p(1−p)).
fn physical_pv() -> impl Strategy<Value = (f64, f64)> {
    (0.0..=1.0f64, 0.0..=1.0f64)
        .prop_map(|(p, frac)| (p, 2.0 * frac * (p * (1.0 - p)).sqrt()))
}

proptest! {
    /// The closed-form tangle V² must agree with the spin-flip concurrence
    /// computed from the full 4×4 matrix.
    #[test]
    fn tangle_equals_squared_concurrence((p, v) in physical_pv(), phi in 0.0..TAU) {
        let state = RestrictedColorState::new(p, v, phi, 2.1).unwrap();
        let rho = state.density_matrix();
        let c = concurrence_wootters(&rho).unwrap();
        prop_assert!((state.tangle() - c * c).abs() < 1e-10);
        prop_assert!((tangle(&rho).unwrap() - state.tangle()).abs() < 1e-10);
    }

    /// Closed-form purity and fidelity against Tr ρ² and ⟨ψ_t|ρ|ψ_t⟩.
    #[test]
    fn purity_and_fidelity_match_the_matrix_route(
        (p, v) in physical_pv(),
        phi in 0.0..TAU,
        target_phase in 0.0..TAU,
    ) {
        let state = RestrictedColorState::new(p, v, phi, 2.1).unwrap();
        let rho = state.density_matrix();
        prop_assert!((state.purity() - purity(&rho)).abs() < 1e-12);
        let closed = state.fidelity(target_phase);
        let matrix = fidelity_with_pure(&rho, &target_state(target_phase));
        prop_assert!((closed - matrix).abs() < 1e-12);
    }

    /// Coherences beyond √(p(1−p)) make the matrix indefinite and must be
    /// rejected; anything inside the bound must construct.
    #[test]
    fn constructor_enforces_the_physicality_bound(
        p in 0.05..=0.95f64,
        frac in 0.0..=1.0f64,
        excess in 1.001..=3.0f64,
        phi in 0.0..TAU,
    ) {
        let bound = (p * (1.0 - p)).sqrt();
        let inside = RestrictedColorState::new(p, 2.0 * frac * bound, phi, 2.1);
        prop_assert!(inside.is_ok());
        let outside = RestrictedColorState::new(p, 2.0 * excess * bound, phi, 2.1);
        let rejected = matches!(outside, Err(QStateError::Unphysical { .. }));
        prop_assert!(rejected);
    }

    /// For any normalized polarization input the gate succeeds with
    /// probability 1/4 and emits α|ω1⟩₃|ω2⟩₄ + βe^{iφ}|ω2⟩₃|ω1⟩₄ — no
    /// same-color terms survive the projection.
    #[test]
    fn gate_success_is_one_quarter_with_anticorrelated_output(
        a in 0.05..=1.0f64,
        b in 0.05..=1.0f64,
        phi in -10.0..10.0f64,
    ) {
        let input = PolPairState::new(a, b, phi, 811.9, 807.3).unwrap();
        let out = hybrid_gate(&input).unwrap();
        prop_assert!((out.success_probability - 0.25).abs() < 1e-12);
        for (label, _) in out.state.iter() {
            prop_assert!(label.first().bin != label.second().bin);
        }
        let vec = state_vector_from_ket(&out.state).unwrap();
        let amps = vec.amplitudes();
        prop_assert!(amps[0].norm() < 1e-15);
        prop_assert!(amps[3].norm() < 1e-15);
        let expected = StateVector4::new([
            Complex64::ZERO,
            Complex64::new(input.alpha(), 0.0),
            Complex64::from_polar(input.beta(), input.phi()),
            Complex64::ZERO,
        ]).unwrap();
        prop_assert!((vec.overlap(&expected) - 1.0).abs() < 1e-12);
    }

    /// The gate output is pure, so reading (p, V, φ) off the ket saturates
    /// V/2 = √(p(1−p)) and reproduces the input weights and phase.
    #[test]
    fn gate_output_saturates_the_physicality_bound(
        a in 0.05..=1.0f64,
        b in 0.05..=1.0f64,
        phi in -10.0..10.0f64,
    ) {
        let input = PolPairState::new(a, b, phi, 811.9, 807.3).unwrap();
        let out = hybrid_gate(&input).unwrap();
        let params = restricted_params_from_ket(&out.state, input.detuning_thz()).unwrap();
        let bound = (params.p() * (1.0 - params.p())).sqrt();
        prop_assert!((params.visibility() / 2.0 - bound).abs() < 1e-12);
        prop_assert!((params.p() - input.alpha() * input.alpha()).abs() < 1e-12);
        prop_assert!(wrap_angle_signed(params.phase() - input.phi()).abs() < 1e-9);
    }

    /// Splitting a detuning about the degenerate wavelength and converting
    /// the pair back must return the original detuning.
    #[test]
    fn wavelength_split_round_trips(
        detuning in 0.0..=50.0f64,
        lambda_deg in 400.0..=1600.0f64,
    ) {
        let (l1, l2) = wavelengths_from_detuning(detuning, lambda_deg).unwrap();
        prop_assert!(l2 <= lambda_deg && lambda_deg <= l1);
        let back = detuning_from_wavelengths(l1, l2);
        prop_assert!((back - detuning).abs() < 1e-9 * detuning.max(1.0));
    }

    /// The coincidence probability is a probability for every valid
    /// parameter set, and reduces to the baseline outside the envelope.
    #[test]
    fn beating_probability_stays_in_the_unit_interval(
        v in 0.0..=1.0f64,
        phi in 0.0..TAU,
        detuning in 0.0..=10.0f64,
        tau_c in 0.1..=10.0f64,
        tau0 in -2.0..=2.0f64,
        baseline in 0.05..=0.95f64,
        tau in -8.0..=8.0f64,
    ) {
        let params =
            BeatingModelParams::new(v, phi, detuning, tau_c, tau0, baseline).unwrap();
        let p = beating_probability(tau, &params);
        prop_assert!((0.0..=1.0).contains(&p));
        if (tau - tau0).abs() > tau_c / 2.0 {
            prop_assert!((p - baseline).abs() < 1e-15);
        }
    }

    /// Angle wrapping is 2π-periodic and lands in the canonical intervals.
    #[test]
    fn angle_wrapping_lands_in_canonical_intervals(x in -1e4..1e4f64, k in -5i32..=5) {
        let wrapped = wrap_angle(x);
        prop_assert!((0.0..TAU).contains(&wrapped));
        let signed = wrap_angle_signed(x);
        prop_assert!(-PI < signed && signed <= PI);
        let shifted = wrap_angle(x + TAU * f64::from(k));
        let diff = (shifted - wrapped).abs();
        prop_assert!(diff < 1e-9 || (TAU - diff).abs() < 1e-9);
    }
}
