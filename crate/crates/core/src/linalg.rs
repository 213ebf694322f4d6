//! Small dense complex linear algebra shared by the physics modules.
//!
//! Device Hamiltonians are diagonalized through LAPACK (with a fast path
//! for real-symmetric matrices); time stepping uses the exact action of the
//! matrix exponential evaluated by a scaled, machine-converged power series,
//! which is much cheaper than a per-step eigendecomposition at dimensions
//! of a few.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

#[derive(Debug, thiserror::Error)]
pub enum LinalgError {
    #[error("eigensolver failed: {0}")]
    Eig(String),
    #[error("matrix not Hermitian: max |A - A^†| = {dev:.3e} (tol {tol:.3e})")]
    NotHermitian { dev: f64, tol: f64 },
    #[error("exponential series failed to converge within {0} terms")]
    SeriesDiverged(usize),
}

/// Conjugate transpose.
pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// `A B - B A`.
pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

/// Largest absolute deviation from Hermiticity.
pub fn hermiticity_deviation(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    dev
}

/// Infinity norm (max absolute row sum); for Hermitian matrices this bounds
/// the spectral radius from above.
pub fn inf_norm(a: &Array2<C64>) -> f64 {
    a.rows()
        .into_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Falls back to the (roughly 3x faster) real-symmetric LAPACK path when
/// the imaginary parts are negligible against the matrix scale, which is
/// the case for both circuit Hamiltonians at their symmetry points.
pub fn eigh(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>), LinalgError> {
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_im = a.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_im <= 1e-14 * scale.max(1.0) {
        let re = a.mapv(|z| z.re);
        let (vals, vecs) = re
            .eigh(UPLO::Lower)
            .map_err(|e| LinalgError::Eig(e.to_string()))?;
        Ok((vals, vecs.mapv(|x| C64::new(x, 0.0))))
    } else {
        // LAPACK sees the row-major array as its transpose = conj(A), so the
        // returned vectors must be conjugated to diagonalize A itself.
        let (vals, vecs) = a
            .eigh(UPLO::Lower)
            .map_err(|e| LinalgError::Eig(e.to_string()))?;
        Ok((vals, vecs.mapv(|z| z.conj())))
    }
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: &Array2<C64>) -> Result<Array1<f64>, LinalgError> {
    use ndarray_linalg::EigValsh;
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_im = a.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_im <= 1e-14 * scale.max(1.0) {
        a.mapv(|z| z.re)
            .eigvalsh(UPLO::Lower)
            .map_err(|e| LinalgError::Eig(e.to_string()))
    } else {
        a.eigvalsh(UPLO::Lower)
            .map_err(|e| LinalgError::Eig(e.to_string()))
    }
}

fn vec_norm(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn mat_norm(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

const EXPM_MAX_TERMS: usize = 64;

/// `exp(G) v` for a generator given by its action `g_apply`, evaluated by a
/// power series with substepping so that the series stays well inside its
/// convergence region. `norm_bound` must bound the operator norm of `G`.
pub fn expm_apply_vec<F>(
    g_apply: F,
    v: &Array1<C64>,
    norm_bound: f64,
) -> Result<Array1<C64>, LinalgError>
where
    F: Fn(&Array1<C64>) -> Array1<C64>,
{
    let substeps = (norm_bound / 0.5).ceil().max(1.0) as usize;
    let scale = C64::new(1.0 / substeps as f64, 0.0);
    let mut acc = v.clone();
    for _ in 0..substeps {
        let mut sum = acc.clone();
        let mut term = acc;
        let mut converged = false;
        for k in 1..=EXPM_MAX_TERMS {
            term = g_apply(&term) * (scale / k as f64);
            sum += &term;
            if vec_norm(&term) <= 1e-16 * vec_norm(&sum) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(LinalgError::SeriesDiverged(EXPM_MAX_TERMS));
        }
        acc = sum;
    }
    Ok(acc)
}

/// Same as [`expm_apply_vec`] but for a generator acting on matrices
/// (vectorized superoperator action, e.g. a Lindblad right-hand side).
pub fn expm_apply_mat<F>(
    g_apply: F,
    m: &Array2<C64>,
    norm_bound: f64,
) -> Result<Array2<C64>, LinalgError>
where
    F: Fn(&Array2<C64>) -> Array2<C64>,
{
    let substeps = (norm_bound / 0.5).ceil().max(1.0) as usize;
    let scale = C64::new(1.0 / substeps as f64, 0.0);
    let mut acc = m.clone();
    for _ in 0..substeps {
        let mut sum = acc.clone();
        let mut term = acc;
        let mut converged = false;
        for k in 1..=EXPM_MAX_TERMS {
            term = g_apply(&term) * (scale / k as f64);
            sum += &term;
            if mat_norm(&term) <= 1e-16 * mat_norm(&sum) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(LinalgError::SeriesDiverged(EXPM_MAX_TERMS));
        }
        acc = sum;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::f64::consts::PI;

    #[test]
    fn eigh_matches_complex_and_real_paths() {
        let h = array![
            [C64::new(1.0, 0.0), C64::new(0.0, -0.5)],
            [C64::new(0.0, 0.5), C64::new(-1.0, 0.0)],
        ];
        let (e, v) = eigh(&h).unwrap();
        let lam = (1.0f64 + 0.25).sqrt();
        assert!((e[0] + lam).abs() < 1e-12);
        assert!((e[1] - lam).abs() < 1e-12);
        // residual || H v - v diag(e) ||
        for k in 0..2 {
            let col = v.column(k).to_owned();
            let res = h.dot(&col) - col.mapv(|z| z * e[k]);
            assert!(vec_norm(&res) < 1e-12);
        }
    }

    #[test]
    fn expm_action_rotates_spin() {
        // exp(-i (pi/2) sigma_x) |0> = -i |1>
        let sx = array![
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        ];
        let g = sx.mapv(|z| -C64::i() * z * (PI / 2.0));
        let v0 = array![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let v = expm_apply_vec(|x| g.dot(x), &v0, PI / 2.0).unwrap();
        assert!(v[0].norm() < 1e-14);
        assert!((v[1] + C64::i()).norm() < 1e-14);
        assert!((vec_norm(&v) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn expm_action_large_generator_substeps() {
        let sz = array![
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
        ];
        let theta = 37.3;
        let g = sz.mapv(|z| -C64::i() * z * theta);
        let v0 = array![
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
        ];
        let v = expm_apply_vec(|x| g.dot(x), &v0, theta).unwrap();
        let expect0 = C64::new(0.6, 0.0) * (-C64::i() * theta).exp();
        let expect1 = C64::new(0.0, 0.8) * (C64::i() * theta).exp();
        assert!((v[0] - expect0).norm() < 1e-13);
        assert!((v[1] - expect1).norm() < 1e-13);
    }
}
