//! Pure zero-mean N-mode Gaussian states and their coherent-basis kernel.
//!
//! Quadratures are ordered `(q_1, …, q_N, p_1, …, p_N)` throughout the crate, with ħ = 1 so
//! the vacuum covariance is `I/2`. A pure state is written as a Gaussian superposition of
//! coherent states `|α⟩`, `α = (q + i p)/√2`,
//!
//! ```text
//! |Ψ⟩ = ∫ d²ᴺx exp(-½ xᵀ 𝓑 x) |α⟩ / ((2π)ᴺ (det Γ)^¼),     Γ = V + I/2
//! ```
//!
//! where the complex symmetric kernel `𝓑` is assembled from the blocks of `Γ⁻¹`.
//!
//! States built from a squeezing generator `(G, r)` use the convention in which a positive
//! `G` anti-squeezes `q`: `V = ½ diag(e^{2Gr}, e^{-2Gr})` and `𝓑 = ½I + ½𝒢̃` with
//! `𝒢̃ = [[-T, iT], [iT, T]]`, `T = tanh(Gr)`. In Fock space this is the state
//! `exp(½ Σ T_ij a†_i a†_j)|0⟩` up to normalisation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    check_finite, check_square, check_symmetric, is_positive_definite, sym_matrix_fn, to_complex,
    CMat, RMat, I,
};

pub const PURITY_TOL: f64 = 1e-8;
const SYMPLECTIC_TOL: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-12;

/// Squeezing generator: real symmetric coupling matrix and overall strength.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub g: RMat,
    pub r: f64,
}

impl Generator {
    /// `tanh(G r)` through the symmetric eigendecomposition of `G`.
    pub fn tanh_gr(&self) -> RMat {
        sym_matrix_fn(&(&self.g * self.r), f64::tanh)
    }
}

#[derive(Debug, Clone)]
pub struct GaussianState {
    n_modes: usize,
    cov: RMat,
    gamma: RMat,
    kernel: CMat,
    generator: Option<Generator>,
}

impl GaussianState {
    pub fn vacuum(n_modes: usize) -> Self {
        Self::from_hamiltonian(RMat::zeros(n_modes, n_modes), 0.0)
            .expect("zero generator is always valid")
    }

    /// Builds `exp(-iĤ)|0⟩` for the two-mode squeezing Hamiltonian with coupling `G` and
    /// strength `r ≥ 0`.
    pub fn from_hamiltonian(g: RMat, r: f64) -> Result<Self> {
        let n = check_square(&g)?;
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "G",
                reason: "at least one mode is required".into(),
            });
        }
        check_finite(&g, "G")?;
        check_symmetric(&g, SYMMETRY_TOL)?;
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidParameter {
                name: "r",
                reason: format!("squeezing strength must be finite and non-negative, got {r}"),
            });
        }
        let generator = Generator { g: g.clone(), r };
        let t = generator.tanh_gr();
        let kernel = CMat::identity(2 * n, 2 * n) * Complex64::new(0.5, 0.0)
            + nilpotent_kernel(&t) * Complex64::new(0.5, 0.0);

        // symplectic exponential of the quadratic generator: q -> e^{Gr} q, p -> e^{-Gr} p
        let gr = &g * r;
        let up = sym_matrix_fn(&gr, |x| (2.0 * x).exp());
        let down = sym_matrix_fn(&gr, |x| (-2.0 * x).exp());
        let mut cov = RMat::zeros(2 * n, 2 * n);
        cov.view_mut((0, 0), (n, n)).copy_from(&(up * 0.5));
        cov.view_mut((n, n), (n, n)).copy_from(&(down * 0.5));
        let gamma = &cov + RMat::identity(2 * n, 2 * n) * 0.5;

        Ok(Self {
            n_modes: n,
            cov,
            gamma,
            kernel,
            generator: Some(generator),
        })
    }

    /// Builds a state from its covariance matrix. The state must be pure.
    pub fn from_covariance(v: RMat) -> Result<Self> {
        let dim = check_square(&v)?;
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::InvalidParameter {
                name: "V",
                reason: format!("covariance must be 2N x 2N, got {dim} x {dim}"),
            });
        }
        check_finite(&v, "V")?;
        check_symmetric(&v, 1e-10)?;
        let gamma = &v + RMat::identity(dim, dim) * 0.5;
        if !is_positive_definite(&gamma) {
            return Err(Error::NotPositiveDefinite);
        }
        let det = (&v * 2.0).determinant();
        let spread = symplectic_spread(&v)?;
        if (det - 1.0).abs() > PURITY_TOL || spread > SYMPLECTIC_TOL {
            return Err(Error::Impure { det, spread });
        }
        let kernel = kernel_from_gamma(&gamma)?;
        Ok(Self {
            n_modes: dim / 2,
            cov: v,
            gamma,
            kernel,
            generator: None,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn covariance(&self) -> &RMat {
        &self.cov
    }

    pub fn gamma(&self) -> &RMat {
        &self.gamma
    }

    /// The coherent-basis kernel `𝓑`.
    pub fn kernel(&self) -> &CMat {
        &self.kernel
    }

    pub fn generator(&self) -> Option<&Generator> {
        self.generator.as_ref()
    }

    /// `𝒢̃ = 2𝓑 - I` for generator-built states.
    pub fn nilpotent_part(&self) -> Option<CMat> {
        self.generator
            .as_ref()
            .map(|gen| nilpotent_kernel(&gen.tanh_gr()))
    }

    /// Blocks `(A, Δ, B)` of `Γ⁻¹`.
    pub fn gamma_inverse_blocks(&self) -> (RMat, RMat, RMat) {
        let n = self.n_modes;
        let inv = self
            .gamma
            .clone()
            .cholesky()
            .expect("Γ is positive definite by construction")
            .inverse();
        (
            inv.view((0, 0), (n, n)).into_owned(),
            inv.view((0, n), (n, n)).into_owned(),
            inv.view((n, n), (n, n)).into_owned(),
        )
    }

    pub fn det_gamma(&self) -> f64 {
        self.gamma
            .clone()
            .cholesky()
            .expect("Γ is positive definite by construction")
            .determinant()
    }

    /// `(2π)ᴺ (det Γ)^¼`, the denominator of the coherent-basis expansion.
    pub fn normalization_prefactor(&self) -> f64 {
        (2.0 * std::f64::consts::PI).powi(self.n_modes as i32) * self.det_gamma().powf(0.25)
    }
}

/// `[[-T, iT], [iT, T]]` for a real symmetric `T`.
pub fn nilpotent_kernel(t: &RMat) -> CMat {
    let n = t.nrows();
    let tc = to_complex(t);
    let mut out = CMat::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(&(-&tc));
    out.view_mut((0, n), (n, n)).copy_from(&(&tc * I));
    out.view_mut((n, 0), (n, n)).copy_from(&(&tc * I));
    out.view_mut((n, n), (n, n)).copy_from(&tc);
    out
}

/// Coherent-basis kernel from `Γ = V + I/2`:
///
/// ```text
/// 𝓑 = ½ [[A + i(Δ+Δᵀ)/2,  Δ - i(A-B)/2],
///        [Δᵀ - i(A-B)/2,  B - i(Δ+Δᵀ)/2]]
/// ```
pub fn kernel_from_gamma(gamma: &RMat) -> Result<CMat> {
    let dim = check_square(gamma)?;
    let n = dim / 2;
    let inv = gamma
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?
        .inverse();
    let a = to_complex(&inv.view((0, 0), (n, n)).into_owned());
    let d = to_complex(&inv.view((0, n), (n, n)).into_owned());
    let b = to_complex(&inv.view((n, n), (n, n)).into_owned());
    let half_i = I * 0.5;
    let dsym = &d + d.transpose();
    let amb = &a - &b;
    let mut k = CMat::zeros(dim, dim);
    k.view_mut((0, 0), (n, n)).copy_from(&(&a + &dsym * half_i));
    k.view_mut((0, n), (n, n)).copy_from(&(&d - &amb * half_i));
    k.view_mut((n, 0), (n, n))
        .copy_from(&(d.transpose() - &amb * half_i));
    k.view_mut((n, n), (n, n)).copy_from(&(&b - &dsym * half_i));
    Ok(k * Complex64::new(0.5, 0.0))
}

/// Largest deviation of the squared symplectic spectrum of `V` from `1/4`.
///
/// With `W = V^½ Ω V^½`, the eigenvalues of `WᵀW` are the squared symplectic eigenvalues, all
/// equal to `1/4` exactly when the state is pure.
fn symplectic_spread(v: &RMat) -> Result<f64> {
    let dim = v.nrows();
    let n = dim / 2;
    if !is_positive_definite(v) {
        return Err(Error::NotPositiveDefinite);
    }
    let sqrt_v = sym_matrix_fn(v, f64::sqrt);
    let mut omega = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        omega[(i, n + i)] = 1.0;
        omega[(n + i, i)] = -1.0;
    }
    let w = &sqrt_v * omega * &sqrt_v;
    let wtw = w.transpose() * w;
    let dev = wtw - RMat::identity(dim, dim) * 0.25;
    Ok(dev.abs().max() * 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &CMat) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_generator_is_vacuum() {
        let s = GaussianState::from_hamiltonian(RMat::zeros(3, 3), 1.0).unwrap();
        assert!((s.covariance() - RMat::identity(6, 6) * 0.5).abs().max() < 1e-15);
        assert!(max_abs(&s.nilpotent_part().unwrap()) == 0.0);
        let half = CMat::identity(6, 6) * Complex64::new(0.5, 0.0);
        assert!(max_abs(&(s.kernel() - half)) < 1e-15);
    }

    #[test]
    fn single_mode_nilpotent_blocks() {
        let s = GaussianState::from_hamiltonian(RMat::from_element(1, 1, 1.0), 1.0).unwrap();
        let g = s.nilpotent_part().unwrap();
        let t = 0.761_594_155_955_764_9;
        assert!((g[(0, 0)] - Complex64::new(-t, 0.0)).norm() < 1e-15);
        assert!((g[(0, 1)] - Complex64::new(0.0, t)).norm() < 1e-15);
        assert!((g[(1, 0)] - Complex64::new(0.0, t)).norm() < 1e-15);
        assert!((g[(1, 1)] - Complex64::new(t, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn vacuum_from_covariance() {
        let s = GaussianState::from_covariance(RMat::identity(2, 2) * 0.5).unwrap();
        let (a, d, b) = s.gamma_inverse_blocks();
        assert!((a[(0, 0)] - 1.0).abs() < 1e-15 && (b[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(d[(0, 0)].abs() < 1e-15);
        assert!((s.kernel()[(0, 0)] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((s.normalization_prefactor() - 2.0 * std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn smsv_covariance_matches_generator_kernel() {
        let r = 1.0f64;
        let v = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            (2.0 * r).exp() / 2.0,
            (-2.0 * r).exp() / 2.0,
        ]));
        let a = GaussianState::from_covariance(v).unwrap();
        let b = GaussianState::from_hamiltonian(RMat::from_element(1, 1, 1.0), r).unwrap();
        assert!(max_abs(&(a.kernel() - b.kernel())) < 1e-12);
    }

    #[test]
    fn smsv_prefactor() {
        let s = GaussianState::from_hamiltonian(RMat::from_element(1, 1, 1.0), 1.0).unwrap();
        let e2 = 1f64.exp().powi(2);
        let det = (e2 / 2.0 + 0.5) * (1.0 / e2 / 2.0 + 0.5);
        let expected = 2.0 * std::f64::consts::PI * det.powf(0.25);
        assert!((s.normalization_prefactor() - expected).abs() < 1e-12);
    }

    #[test]
    fn thermal_state_rejected() {
        let err = GaussianState::from_covariance(RMat::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::Impure { .. }));
    }

    #[test]
    fn unphysical_unit_determinant_rejected() {
        // det(2V) = 1 but symplectic eigenvalues 1 and 1/4 (second mode below vacuum)
        let v = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.25, 1.0, 0.25]));
        assert!(matches!(
            GaussianState::from_covariance(v),
            Err(Error::Impure { .. })
        ));
    }

    #[test]
    fn non_symmetric_generator_rejected() {
        let g = RMat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            GaussianState::from_hamiltonian(g, 0.3),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn non_finite_generator_rejected() {
        let g = RMat::from_element(1, 1, f64::NAN);
        assert!(matches!(
            GaussianState::from_hamiltonian(g, 0.3),
            Err(Error::NonFinite(_))
        ));
    }
}
