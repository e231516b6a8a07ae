//! Damped (Levenberg–Marquardt) weighted least squares for the
//! six-parameter beating model.
//!
//! The parameter vector is ordered `[V, φ, Δf, τ_c, τ₀, b]`. The model here
//! is the raw fringe-times-envelope form without the [0, 1] clamp of the
//! public probability function — clamping would flatten gradients exactly
//! where the optimizer needs them; a separate test pins the two evaluations
//! against each other inside the unit interval. Residuals are
//! (y − m)/σ, so the normal matrix JᵀJ at the solution is the inverse
//! parameter covariance.

use alloc::vec::Vec;

// Float math on f64 comes from the trait in no_std builds; test builds link
// std, whose inherent methods shadow it and make the import look unused.
#[allow(unused_imports)]
use num_traits::Float;

pub(crate) const N_PARAMS: usize = 6;

pub(crate) const IDX_V: usize = 0;
pub(crate) const IDX_PHI: usize = 1;
pub(crate) const IDX_DETUNING: usize = 2;
pub(crate) const IDX_TAU_C: usize = 3;
pub(crate) const IDX_TAU0: usize = 4;
pub(crate) const IDX_BASELINE: usize = 5;

const MAX_ITERATIONS: usize = 300;
const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_GROW: f64 = 10.0;
const LAMBDA_SHRINK: f64 = 3.0;
const LAMBDA_MAX: f64 = 1e12;
const FTOL: f64 = 1e-12;
const XTOL: f64 = 1e-12;

/// Weighted data for one fit: delays, normalized rates, and 1σ weights.
pub(crate) struct FitProblem<'a> {
    pub tau: &'a [f64],
    pub y: &'a [f64],
    pub sigma: &'a [f64],
}

/// Raw (unclamped) model value at delay `tau` for parameters
/// `[V, φ, Δf, τ_c, τ₀, b]`.
pub(crate) fn model_value(x: &[f64; N_PARAMS], tau: f64) -> f64 {
    let t = tau - x[IDX_TAU0];
    let envelope = 1.0 - (2.0 * t / x[IDX_TAU_C]).abs();
    if envelope <= 0.0 {
        return x[IDX_BASELINE];
    }
    let psi = core::f64::consts::TAU * x[IDX_DETUNING] * t + x[IDX_PHI];
    x[IDX_BASELINE] - 0.5 * x[IDX_V] * psi.cos() * envelope
}

/// Analytic gradient of [`model_value`] with respect to each parameter.
/// The envelope kinks at t = 0 and at its edges take the subgradient 0 for
/// the sign(t) factor; these are isolated points and do not affect the
/// least-squares solution.
pub(crate) fn model_gradient(x: &[f64; N_PARAMS], tau: f64) -> [f64; N_PARAMS] {
    let mut g = [0.0; N_PARAMS];
    g[IDX_BASELINE] = 1.0;
    let t = tau - x[IDX_TAU0];
    let envelope = 1.0 - (2.0 * t / x[IDX_TAU_C]).abs();
    if envelope <= 0.0 {
        return g;
    }
    let psi = core::f64::consts::TAU * x[IDX_DETUNING] * t + x[IDX_PHI];
    let (sin_psi, cos_psi) = psi.sin_cos();
    let half_v = 0.5 * x[IDX_V];
    g[IDX_V] = -0.5 * cos_psi * envelope;
    g[IDX_PHI] = half_v * sin_psi * envelope;
    g[IDX_DETUNING] = half_v * sin_psi * core::f64::consts::TAU * t * envelope;
    g[IDX_TAU_C] = -half_v * cos_psi * 2.0 * t.abs() / (x[IDX_TAU_C] * x[IDX_TAU_C]);
    // dψ/dτ₀ = −2πΔf, dE/dτ₀ = (2/τ_c)·sign(t).
    let sign_t = if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    };
    g[IDX_TAU0] = -half_v
        * (core::f64::consts::TAU * x[IDX_DETUNING] * sin_psi * envelope
            + cos_psi * 2.0 * sign_t / x[IDX_TAU_C]);
    g
}

fn parameters_valid(x: &[f64; N_PARAMS]) -> bool {
    x.iter().all(|v| v.is_finite()) && x[IDX_TAU_C] > 0.0
}

impl FitProblem<'_> {
    /// Sum of squared weighted residuals, or +∞ for invalid parameters.
    pub(crate) fn cost(&self, x: &[f64; N_PARAMS]) -> f64 {
        if !parameters_valid(x) {
            return f64::INFINITY;
        }
        let mut total = 0.0;
        for i in 0..self.tau.len() {
            let r = (self.y[i] - model_value(x, self.tau[i])) / self.sigma[i];
            total += r * r;
        }
        total
    }

    /// Normal equations at `x`: (JᵀJ, Jᵀr) with r = (y − m)/σ and
    /// J = ∂r/∂x = −(∂m/∂x)/σ. Returns Jᵀr with the sign such that the
    /// Gauss–Newton step solves (JᵀJ)δ = Jᵀr directly.
    #[allow(clippy::needless_range_loop)] // symmetric fill-in reads clearest indexed
    pub(crate) fn normal_equations(
        &self,
        x: &[f64; N_PARAMS],
    ) -> ([[f64; N_PARAMS]; N_PARAMS], [f64; N_PARAMS]) {
        let mut jtj = [[0.0; N_PARAMS]; N_PARAMS];
        let mut jtr = [0.0; N_PARAMS];
        for i in 0..self.tau.len() {
            let g = model_gradient(x, self.tau[i]);
            let inv_sigma = 1.0 / self.sigma[i];
            let r = (self.y[i] - model_value(x, self.tau[i])) * inv_sigma;
            for a in 0..N_PARAMS {
                let ja = g[a] * inv_sigma;
                jtr[a] += ja * r;
                for b in a..N_PARAMS {
                    jtj[a][b] += ja * g[b] * inv_sigma;
                }
            }
        }
        for a in 0..N_PARAMS {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }
        (jtj, jtr)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmOutcome {
    pub x: [f64; N_PARAMS],
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Levenberg–Marquardt with multiplicative damping on the diagonal. Stops
/// on relative cost decrease below 1e-12 (twice in a row), on a step small
/// relative to the parameters, or when damping saturates.
pub(crate) fn levenberg_marquardt(problem: &FitProblem<'_>, x0: [f64; N_PARAMS]) -> LmOutcome {
    let mut x = x0;
    let mut cost = problem.cost(&x);
    if !cost.is_finite() {
        return LmOutcome { x, cost, converged: false, iterations: 0 };
    }
    let mut lambda = LAMBDA_INIT;
    let mut small_decreases = 0;
    for iteration in 1..=MAX_ITERATIONS {
        let (jtj, jtr) = problem.normal_equations(&x);
        // Zero gradient: already at a stationary point.
        if jtr.iter().all(|g| g.abs() < 1e-300) {
            return LmOutcome { x, cost, converged: true, iterations: iteration };
        }
        let mut accepted = false;
        while lambda <= LAMBDA_MAX {
            let mut damped = jtj;
            for d in 0..N_PARAMS {
                // Marquardt scaling, with a floor so zero-curvature
                // directions (e.g. φ at V = 0) still move.
                let diag = jtj[d][d].max(1e-30);
                damped[d][d] = diag * (1.0 + lambda);
            }
            let Some(step) = solve(&damped, &jtr) else {
                lambda *= LAMBDA_GROW;
                continue;
            };
            let mut trial = x;
            for d in 0..N_PARAMS {
                trial[d] += step[d];
            }
            let trial_cost = problem.cost(&trial);
            let step_norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
            let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let step_small = step_norm <= XTOL * (x_norm + XTOL);
            if trial_cost < cost {
                let decrease = cost - trial_cost;
                x = trial;
                cost = trial_cost;
                lambda = (lambda / LAMBDA_SHRINK).max(1e-16);
                accepted = true;
                if decrease <= FTOL * cost.max(1e-300) {
                    small_decreases += 1;
                } else {
                    small_decreases = 0;
                }
                if small_decreases >= 2 || step_small {
                    return LmOutcome { x, cost, converged: true, iterations: iteration };
                }
                break;
            }
            // A step below parameter resolution that still fails to descend
            // means the cost is flat at this scale; more damping only makes
            // the step smaller. Typical when starting at (or reaching) the
            // optimum of low-noise data.
            if step_small {
                return LmOutcome { x, cost, converged: true, iterations: iteration };
            }
            lambda *= LAMBDA_GROW;
        }
        if !accepted {
            // Damping saturated: no descent direction found. Converged if
            // the surface is genuinely flat here, otherwise report failure.
            let flat = jtr.iter().all(|g| g.abs() < 1e-8);
            return LmOutcome { x, cost, converged: flat, iterations: iteration };
        }
    }
    LmOutcome { x, cost, converged: false, iterations: MAX_ITERATIONS }
}

/// Solves the 6×6 system A·x = b by Gaussian elimination with partial
/// pivoting. Returns `None` for (numerically) singular A.
#[allow(clippy::needless_range_loop)] // row elimination aliases two rows of m
pub(crate) fn solve(
    a: &[[f64; N_PARAMS]; N_PARAMS],
    b: &[f64; N_PARAMS],
) -> Option<[f64; N_PARAMS]> {
    let mut m = *a;
    let mut rhs = *b;
    for col in 0..N_PARAMS {
        let pivot_row = (col..N_PARAMS)
            .max_by(|&r1, &r2| m[r1][col].abs().partial_cmp(&m[r2][col].abs()).unwrap())?;
        if m[pivot_row][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        let pivot = m[col][col];
        for row in col + 1..N_PARAMS {
            let factor = m[row][col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..N_PARAMS {
                m[row][k] -= factor * m[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = [0.0; N_PARAMS];
    for row in (0..N_PARAMS).rev() {
        let mut acc = rhs[row];
        for k in row + 1..N_PARAMS {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Inverse of a 6×6 matrix via column-by-column solves. For near-singular
/// input (unidentifiable parameters, e.g. φ at V = 0) the matrix is
/// regularized by adding εI with growing ε until it inverts; the affected
/// variances come out correspondingly huge, which is the honest answer.
pub(crate) fn invert_regularized(
    a: &[[f64; N_PARAMS]; N_PARAMS],
) -> [[f64; N_PARAMS]; N_PARAMS] {
    let scale = (0..N_PARAMS).map(|d| a[d][d].abs()).fold(0.0, f64::max).max(1e-300);
    let mut epsilon = 0.0;
    loop {
        let mut m = *a;
        for (d, row) in m.iter_mut().enumerate() {
            row[d] += epsilon;
        }
        if let Some(inv) = try_invert(&m) {
            return inv;
        }
        epsilon = if epsilon == 0.0 { scale * 1e-14 } else { epsilon * 10.0 };
        if epsilon > scale * 1e6 {
            // Fully degenerate: report unbounded uncertainty everywhere.
            let mut inf = [[0.0; N_PARAMS]; N_PARAMS];
            for (d, row) in inf.iter_mut().enumerate() {
                row[d] = f64::INFINITY;
            }
            return inf;
        }
    }
}

fn try_invert(a: &[[f64; N_PARAMS]; N_PARAMS]) -> Option<[[f64; N_PARAMS]; N_PARAMS]> {
    let mut columns: Vec<[f64; N_PARAMS]> = Vec::with_capacity(N_PARAMS);
    for col in 0..N_PARAMS {
        let mut e = [0.0; N_PARAMS];
        e[col] = 1.0;
        columns.push(solve(a, &e)?);
    }
    let mut inv = [[0.0; N_PARAMS]; N_PARAMS];
    for (col, solution) in columns.iter().enumerate() {
        for row in 0..N_PARAMS {
            inv[row][col] = solution[row];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::interference::{beating_probability, BeatingModelParams};

    fn fig2_x() -> [f64; N_PARAMS] {
        [0.782, 179.2_f64.to_radians(), 2.1, 2.95, 0.1, 0.5]
    }

    #[test]
    fn raw_model_matches_public_probability_inside_unit_interval() {
        let x = fig2_x();
        let params =
            BeatingModelParams::new(x[0], x[1], x[2], x[3], x[4], x[5]).unwrap();
        for i in 0..100 {
            let tau = -2.4 + 0.0483 * i as f64;
            let raw = model_value(&x, tau);
            if (0.0..=1.0).contains(&raw) {
                assert_abs_diff_eq!(raw, beating_probability(tau, &params), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let x = fig2_x();
        // Avoid the envelope kinks at t = 0 and |t| = τ_c/2.
        let taus = [-1.3, -0.77, -0.21, 0.33, 0.61, 1.21];
        let steps = [1e-6, 1e-7, 1e-6, 1e-6, 1e-7, 1e-6];
        for &tau in taus.iter() {
            let analytic = model_gradient(&x, tau);
            for d in 0..N_PARAMS {
                let h = steps[d] * x[d].abs().max(1.0);
                let mut plus = x;
                plus[d] += h;
                let mut minus = x;
                minus[d] -= h;
                let numeric = (model_value(&plus, tau) - model_value(&minus, tau)) / (2.0 * h);
                let scale = analytic[d].abs().max(1e-3);
                assert_abs_diff_eq!(analytic[d], numeric, epsilon = 1e-6 * scale.max(1.0));
            }
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn solver_round_trips() {
        let a = [
            [4.0, 1.0, 0.0, 0.5, 0.0, 0.2],
            [1.0, 3.0, 0.5, 0.0, 0.1, 0.0],
            [0.0, 0.5, 5.0, 0.2, 0.0, 0.3],
            [0.5, 0.0, 0.2, 2.0, 0.4, 0.0],
            [0.0, 0.1, 0.0, 0.4, 1.5, 0.1],
            [0.2, 0.0, 0.3, 0.0, 0.1, 2.5],
        ];
        let b = [1.0, -2.0, 0.5, 3.0, -1.0, 0.25];
        let x = solve(&a, &b).unwrap();
        for row in 0..N_PARAMS {
            let mut acc = 0.0;
            for col in 0..N_PARAMS {
                acc += a[row][col] * x[col];
            }
            assert_abs_diff_eq!(acc, b[row], epsilon = 1e-12);
        }

        let inv = invert_regularized(&a);
        for row in 0..N_PARAMS {
            for col in 0..N_PARAMS {
                let mut acc = 0.0;
                for k in 0..N_PARAMS {
                    acc += a[row][k] * inv[k][col];
                }
                let expected = if row == col { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(acc, expected, epsilon = 1e-10);
            }
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn singular_matrix_reports_none_then_regularizes() {
        let mut a = [[0.0; N_PARAMS]; N_PARAMS];
        // Rank-1 matrix.
        for row in 0..N_PARAMS {
            for col in 0..N_PARAMS {
                a[row][col] = ((row + 1) * (col + 1)) as f64;
            }
        }
        assert!(solve(&a, &[1.0; N_PARAMS]).is_none());
        let inv = invert_regularized(&a);
        // Regularized inverse exists and is huge along degenerate directions.
        assert!(inv.iter().flatten().all(|v| v.is_finite()));
        assert!(inv[0][0].abs() > 1e6);
    }
}
