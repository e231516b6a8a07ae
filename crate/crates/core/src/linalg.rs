//! Small dense complex linear algebra on 4×4 matrices.
//!
//! Everything in this crate lives in a fixed four-dimensional Hilbert space,
//! so the matrix type is a plain `[[Complex64; 4]; 4]` wrapper with only the
//! operations the state and metric code actually needs. Eigendecomposition of
//! Hermitian matrices uses cyclic Jacobi rotations, which is simple, robust,
//! and more than fast enough at this size.

use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
// Float math on f64 comes from the trait in no_std builds; test builds link
// std, whose inherent methods shadow it and make the import look unused.
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

pub const DIM: usize = 4;

/// Errors from the dense solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    /// The Jacobi sweep limit was reached before the off-diagonal norm
    /// dropped below tolerance.
    #[error("hermitian eigensolver failed to converge after {sweeps} sweeps (off-diagonal norm {offdiag:.3e})")]
    NoConvergence { sweeps: usize, offdiag: f64 },
    /// The input matrix is not Hermitian to within the requested tolerance.
    #[error("matrix is not hermitian: max |a_ij - conj(a_ji)| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },
}

/// Dense 4×4 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4 {
    entries: [[Complex64; DIM]; DIM],
}

impl Mat4 {
    pub fn zeros() -> Self {
        Mat4 { entries: [[Complex64::ZERO; DIM]; DIM] }
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn from_rows(entries: [[Complex64; DIM]; DIM]) -> Self {
        Mat4 { entries }
    }

    pub fn rows(&self) -> &[[Complex64; DIM]; DIM] {
        &self.entries
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros();
        for i in 0..DIM {
            for j in 0..DIM {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    /// Entry-wise complex conjugate (no transpose).
    pub fn conj(&self) -> Self {
        let mut out = *self;
        for i in 0..DIM {
            for j in 0..DIM {
                out[(i, j)] = out[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..DIM).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = *self;
        for i in 0..DIM {
            for j in 0..DIM {
                out[(i, j)] *= factor;
            }
        }
        out
    }

    /// Largest deviation from hermiticity, max_ij |a_ij - conj(a_ji)|.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Frobenius norm of the strictly off-diagonal part.
    fn offdiag_norm(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                if i != j {
                    sum += self[(i, j)].norm_sqr();
                }
            }
        }
        sum.sqrt()
    }

    /// Apply `v -> self * v`.
    pub fn mul_vec(&self, v: &[Complex64; DIM]) -> [Complex64; DIM] {
        let mut out = [Complex64::ZERO; DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                out[i] += self[(i, j)] * v[j];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for Mat4 {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i][j]
    }
}

impl Mul for Mat4 {
    type Output = Mat4;

    fn mul(self, rhs: Mat4) -> Mat4 {
        let mut out = Mat4::zeros();
        for i in 0..DIM {
            for k in 0..DIM {
                let a = self[(i, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..DIM {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for Mat4 {
    type Output = Mat4;

    fn add(self, rhs: Mat4) -> Mat4 {
        let mut out = self;
        for i in 0..DIM {
            for j in 0..DIM {
                out[(i, j)] += rhs[(i, j)];
            }
        }
        out
    }
}

impl Sub for Mat4 {
    type Output = Mat4;

    fn sub(self, rhs: Mat4) -> Mat4 {
        let mut out = self;
        for i in 0..DIM {
            for j in 0..DIM {
                out[(i, j)] -= rhs[(i, j)];
            }
        }
        out
    }
}

/// Eigendecomposition of a Hermitian matrix, `a = vectors * diag(values) * vectors†`.
#[derive(Debug, Clone, Copy)]
pub struct HermitianEigen {
    /// Real eigenvalues in ascending order.
    pub values: [f64; DIM],
    /// Unitary matrix whose columns are the corresponding eigenvectors.
    pub vectors: Mat4,
}

const HERMITICITY_TOL: f64 = 1e-9;
const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a Hermitian 4×4 matrix by cyclic complex Jacobi
/// rotations.
///
/// Each rotation zeroes one off-diagonal pair `(p, q)` with the unitary
/// `G = P · R`, where `P = diag(1, e^{-iβ})` absorbs the phase of `a_pq` and
/// `R` is the classical real Jacobi rotation for the resulting real symmetric
/// 2×2 block. Convergence is quadratic; a handful of sweeps suffices at this
/// size.
pub fn eigh(a: &Mat4) -> Result<HermitianEigen, LinalgError> {
    let dev = a.hermiticity_deviation();
    if dev > HERMITICITY_TOL {
        return Err(LinalgError::NotHermitian { deviation: dev });
    }

    let mut m = *a;
    // Symmetrize so roundoff in the input cannot accumulate.
    for i in 0..DIM {
        for j in 0..DIM {
            let h = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = h;
            m[(j, i)] = h.conj();
        }
    }
    let mut u = Mat4::identity();

    let scale = m.offdiag_norm().max(m.trace().norm()).max(1.0);
    for _sweep in 0..=MAX_SWEEPS {
        if m.offdiag_norm() <= JACOBI_TOL * scale {
            return Ok(sort_eigen(m, u));
        }
        for p in 0..DIM {
            for q in (p + 1)..DIM {
                let apq = m[(p, q)];
                if apq.norm() <= JACOBI_TOL * scale {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let abs_apq = apq.norm();
                let phase = apq / abs_apq; // e^{iβ}

                // Real Jacobi rotation for [[app, |apq|], [|apq|, aqq]].
                let tau = (aqq - app) / (2.0 * abs_apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Columns of the combined unitary G restricted to (p, q):
                //   G[p, p] = c        G[p, q] = s * e^{iβ}... applied as below.
                // Update M <- G† M G and U <- U G in place.
                let g_pp = Complex64::new(c, 0.0);
                let g_pq = phase * s;
                let g_qp = -phase.conj() * s;
                let g_qq = Complex64::new(c, 0.0);

                // M <- G† M G: first rows, then columns.
                for j in 0..DIM {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = g_pp.conj() * mpj + g_qp.conj() * mqj;
                    m[(q, j)] = g_pq.conj() * mpj + g_qq.conj() * mqj;
                }
                for i in 0..DIM {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * g_pp + miq * g_qp;
                    m[(i, q)] = mip * g_pq + miq * g_qq;
                }
                for i in 0..DIM {
                    let uip = u[(i, p)];
                    let uiq = u[(i, q)];
                    u[(i, p)] = uip * g_pp + uiq * g_qp;
                    u[(i, q)] = uip * g_pq + uiq * g_qq;
                }
                // Pin the rotated pair exactly.
                m[(p, q)] = Complex64::ZERO;
                m[(q, p)] = Complex64::ZERO;
            }
        }
    }
    Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS, offdiag: m.offdiag_norm() })
}

fn sort_eigen(m: Mat4, u: Mat4) -> HermitianEigen {
    let mut order = [0usize, 1, 2, 3];
    let vals = [m[(0, 0)].re, m[(1, 1)].re, m[(2, 2)].re, m[(3, 3)].re];
    order.sort_unstable_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());

    let mut values = [0.0; DIM];
    let mut vectors = Mat4::zeros();
    for (slot, &src) in order.iter().enumerate() {
        values[slot] = vals[src];
        for i in 0..DIM {
            vectors[(i, slot)] = u[(i, src)];
        }
    }
    HermitianEigen { values, vectors }
}

/// Principal square root of a Hermitian positive-semidefinite matrix.
///
/// Eigenvalues in `(-clamp_tol, 0)` are treated as exact zeros so that tiny
/// numerical negatives do not produce NaNs; a genuinely negative eigenvalue
/// still fails through `eigh`'s caller-side PSD checks.
pub fn sqrt_psd(a: &Mat4, clamp_tol: f64) -> Result<Mat4, LinalgError> {
    let eig = eigh(a)?;
    let mut out = Mat4::zeros();
    for k in 0..DIM {
        let lam = if eig.values[k] < 0.0 && eig.values[k] > -clamp_tol {
            0.0
        } else {
            eig.values[k]
        };
        let root = lam.max(0.0).sqrt();
        for i in 0..DIM {
            for j in 0..DIM {
                out[(i, j)] += eig.vectors[(i, k)] * eig.vectors[(j, k)].conj() * root;
            }
        }
    }
    Ok(out)
}
