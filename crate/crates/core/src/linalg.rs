//! Small dense linear-algebra helpers shared by the kernel and oracle paths.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn check_square<T>(m: &DMatrix<T>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn check_finite(m: &RMat, what: &'static str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Rejects matrices whose largest `|m_ij - m_ji|` exceeds `tol * max(1, max|m_ij|)`.
pub fn check_symmetric(m: &RMat, tol: f64) -> Result<()> {
    let n = check_square(m)?;
    let scale = m.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > tol * scale {
        Err(Error::NotSymmetric(worst))
    } else {
        Ok(())
    }
}

/// Applies a scalar function to a real symmetric matrix through its eigendecomposition.
pub fn sym_matrix_fn(m: &RMat, f: impl Fn(f64) -> f64) -> RMat {
    let eig = SymmetricEigen::new(m.clone());
    let vals = eig.eigenvalues.map(f);
    &eig.eigenvectors * RMat::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn is_positive_definite(m: &RMat) -> bool {
    m.clone().cholesky().is_some()
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    m.clone().lu().try_inverse().ok_or(Error::Singular)
}

/// Principal-branch `log det` of a complex symmetric matrix with positive-definite real part.
///
/// Uses an unpivoted `L D Lᵀ` factorisation. Every pivot of an accretive matrix lies in the
/// open right half-plane, so the sum of principal logarithms of the pivots is the branch that
/// continues analytically from the real-symmetric case.
pub fn accretive_log_det(m: &CMat) -> Result<Complex64> {
    let n = check_square(m)?;
    let mut l = CMat::identity(n, n);
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    let mut log_det = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let mut dk = m[(k, k)];
        for j in 0..k {
            dk -= l[(k, j)] * l[(k, j)] * d[j];
        }
        if dk.re <= 0.0 {
            return Err(if dk.norm() == 0.0 {
                Error::Singular
            } else {
                Error::NotAccretive
            });
        }
        d[k] = dk;
        log_det += dk.ln();
        for i in (k + 1)..n {
            let mut s = m[(i, k)];
            for j in 0..k {
                s -= l[(i, j)] * l[(k, j)] * d[j];
            }
            l[(i, k)] = s / dk;
        }
    }
    Ok(log_det)
}

/// Dense matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &RMat) -> RMat {
    let n = a.nrows();
    let norm = a
        .iter()
        .map(|x| x.abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut result = RMat::identity(n, n);
    let mut term = RMat::identity(n, n);
    for k in 1..=24 {
        term = &term * &scaled / k as f64;
        result += &term;
        if term.iter().all(|x| x.abs() < 1e-18) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_matches_eigenvalue_product() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.7),
                Complex64::new(0.2, -0.3),
                Complex64::new(0.2, -0.3),
                Complex64::new(1.5, -0.9),
            ],
        );
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let ld = accretive_log_det(&m).unwrap();
        assert!((ld.exp() - det).norm() < 1e-14);
    }

    #[test]
    fn log_det_branch_follows_continuation() {
        // det = (1 + 3i)^2 has argument 2.498 rad; the principal log of det alone would too,
        // but for (1+3i)^3 the continuation must leave the principal strip.
        let z = Complex64::new(1.0, 3.0);
        let m = CMat::from_diagonal_element(3, 3, z);
        let ld = accretive_log_det(&m).unwrap();
        assert!((ld - 3.0 * z.ln()).norm() < 1e-14);
        assert!(ld.im > std::f64::consts::PI);
    }

    #[test]
    fn rejects_non_accretive() {
        let m = CMat::from_diagonal_element(2, 2, Complex64::new(-1.0, 0.0));
        assert_eq!(accretive_log_det(&m), Err(Error::NotAccretive));
    }

    #[test]
    fn expm_of_rotation_generator() {
        let a = RMat::from_row_slice(2, 2, &[0.0, -1.3, 1.3, 0.0]);
        let e = expm(&a);
        assert!((e[(0, 0)] - 1.3f64.cos()).abs() < 1e-14);
        assert!((e[(1, 0)] - 1.3f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn sym_fn_tanh_of_self_inverse() {
        let g = RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let t = sym_matrix_fn(&(&g * 0.5), f64::tanh);
        let expected = &g * 0.5f64.tanh();
        assert!((t - expected).abs().max() < 1e-15);
    }
}
