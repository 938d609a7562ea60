//! Photon subtraction by beam splitters and photon-number-resolving heralds.
//!
//! Each mode passes a beam splitter of transmissivity `τ` whose second port starts in vacuum,
//! so `|α⟩|0⟩ → |√τ α⟩|-√(1-τ) α⟩`. Projecting the reflected ports on `|m⃗⟩` leaves the
//! unnormalised heralded state
//!
//! ```text
//! |ψ_m⟩ = (-√(1-τ))^M / (2^{M/2} √(m⃗!) (2π)ᴺ (det Γ)^¼)
//!         ∫ d²ᴺx exp(-½ xᵀ(𝓑 + ½(1-τ)I)x) ∏_j (q_j + i p_j)^{m_j} |√τ α⟩
//! ```
//!
//! with `M = Σ m_j`. Overlaps with coherent states reduce to the integral `I` over `2N`
//! variables, and the norm `P_m` to the integral `J` over `4N` variables.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian_state::GaussianState;
use crate::linalg::{CMat, CVec, I};
use crate::moment::{MomentResult, Monomial, PreparedMoment};

/// Beam-splitter transmissivity (equal on every mode) and herald pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SubtractionSpec {
    tau: f64,
    pattern: Vec<u32>,
}

impl SubtractionSpec {
    /// `tau` must lie in `[0, 1)`; `tau = 0` is the fully reflecting limit.
    pub fn new(tau: f64, pattern: Vec<u32>) -> Result<Self> {
        if !tau.is_finite() || !(0.0..1.0).contains(&tau) {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("transmissivity must lie in [0, 1), got {tau}"),
            });
        }
        if pattern.is_empty() {
            return Err(Error::InvalidParameter {
                name: "pattern",
                reason: "pattern must cover at least one mode".into(),
            });
        }
        Ok(Self { tau, pattern })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn pattern(&self) -> &[u32] {
        &self.pattern
    }

    pub fn n_modes(&self) -> usize {
        self.pattern.len()
    }

    pub fn total_photons(&self) -> u32 {
        self.pattern.iter().sum()
    }

    /// `0` if every `m_j` is even, `1` if every `m_j` is odd, `None` for mixed parities.
    pub fn common_parity(&self) -> Option<u32> {
        let first = self.pattern[0] % 2;
        self.pattern.iter().all(|m| m % 2 == first).then_some(first)
    }

    fn check_state(&self, state: &GaussianState) -> Result<()> {
        if state.n_modes() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                what: "subtraction pattern",
                expected: state.n_modes(),
                got: self.n_modes(),
            });
        }
        Ok(())
    }

    /// `ln` of `(1-τ)^M / (2^M m⃗! (2π)^{2N} (det Γ)^½)`, the factor multiplying `J` in `P_m`.
    pub fn ln_probability_prefactor(&self, state: &GaussianState) -> f64 {
        let m = self.total_photons() as f64;
        let n = state.n_modes() as f64;
        let ln_fact: f64 = self.pattern.iter().map(|&k| ln_factorial(k)).sum();
        m * (-self.tau).ln_1p()
            - m * 2f64.ln()
            - ln_fact
            - 2.0 * n * (2.0 * std::f64::consts::PI).ln()
            - 0.5 * state.det_gamma().ln()
    }
}

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// `K = 𝓑 + ½I`, the quadratic form of the signal-side integral `I`.
pub fn signal_kernel(state: &GaussianState) -> CMat {
    let dim = 2 * state.n_modes();
    state.kernel() + CMat::identity(dim, dim) * Complex64::new(0.5, 0.0)
}

/// Monomial directions `e_q + i e_p` (or `e_q - i e_p` when `conjugate`) placed at `offset`.
pub fn pattern_monomials(
    pattern: &[u32],
    conjugate: bool,
    offset: usize,
    dim: usize,
) -> Vec<Monomial> {
    let n = pattern.len();
    let sign = if conjugate { -1.0 } else { 1.0 };
    pattern
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > 0)
        .map(|(j, &m)| {
            let mut u = CVec::zeros(dim);
            u[offset + j] = Complex64::new(1.0, 0.0);
            u[offset + n + j] = I * sign;
            Monomial::new(u, m)
        })
        .collect()
}

/// Linear term `b = (√τ/2) 𝒳ᵀ x_γ` for coherent amplitudes `γ_j = (q_j + i p_j)/√2`.
///
/// Per mode this is `b_q = √(τ/2) γ*`, `b_p = i √(τ/2) γ*`.
pub fn linear_term(tau: f64, gamma: &[Complex64]) -> CVec {
    let n = gamma.len();
    let w = (tau / 2.0).sqrt();
    let mut b = CVec::zeros(2 * n);
    for (j, g) in gamma.iter().enumerate() {
        let gc = g.conj() * w;
        b[j] = gc;
        b[n + j] = I * gc;
    }
    b
}

/// Evaluator for `I(γ)` at many coherent points with one kernel factorisation.
#[derive(Debug, Clone)]
pub struct OverlapIntegral {
    prepared: PreparedMoment,
    tau: f64,
    n_modes: usize,
}

impl OverlapIntegral {
    pub fn new(state: &GaussianState, spec: &SubtractionSpec) -> Result<Self> {
        spec.check_state(state)?;
        let n = state.n_modes();
        let monomials = pattern_monomials(spec.pattern(), false, 0, 2 * n);
        let prepared = PreparedMoment::new(&signal_kernel(state), &monomials)?;
        Ok(Self {
            prepared,
            tau: spec.tau(),
            n_modes: n,
        })
    }

    /// `I(γ) = ∫ exp(-½ xᵀKx + bᵀx) ∏ (q_j + i p_j)^{m_j}`.
    pub fn evaluate(&self, gamma: &[Complex64]) -> Result<MomentResult> {
        if gamma.len() != self.n_modes {
            return Err(Error::DimensionMismatch {
                what: "coherent amplitudes",
                expected: self.n_modes,
                got: gamma.len(),
            });
        }
        self.prepared.evaluate(&linear_term(self.tau, gamma))
    }
}

pub fn integral_i(
    state: &GaussianState,
    spec: &SubtractionSpec,
    gamma: &[Complex64],
) -> Result<MomentResult> {
    OverlapIntegral::new(state, spec)?.evaluate(gamma)
}

/// Kernel of the norm integral over `(x_α, x_β)`: `[[K, -(τ/2)𝒳ᵀ], [-(τ/2)𝒳, K*]]`.
pub fn norm_kernel(state: &GaussianState, tau: f64) -> CMat {
    let n = state.n_modes();
    let d = 2 * n;
    let k = signal_kernel(state);
    let mut m = CMat::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, d)).copy_from(&k);
    m.view_mut((d, d), (d, d)).copy_from(&k.map(|z| z.conj()));
    let h = Complex64::new(-tau / 2.0, 0.0);
    for j in 0..n {
        // 𝒳 = [[I, iI], [-iI, I]] couples (q_β, p_β) rows to (q_α, p_α) columns.
        m[(d + j, j)] = h;
        m[(d + j, n + j)] = h * I;
        m[(d + n + j, j)] = -h * I;
        m[(d + n + j, n + j)] = h;
    }
    for r in 0..d {
        for c in 0..d {
            m[(c, d + r)] = m[(d + r, c)];
        }
    }
    m
}

/// `J = ∫∫ exp(-½ yᵀMy) ∏ (q_j + i p_j)^{m_j} (q'_j - i p'_j)^{m_j}`.
pub fn integral_j(state: &GaussianState, spec: &SubtractionSpec) -> Result<MomentResult> {
    spec.check_state(state)?;
    let n = state.n_modes();
    let d = 2 * n;
    let mut monomials = pattern_monomials(spec.pattern(), false, 0, 2 * d);
    monomials.extend(pattern_monomials(spec.pattern(), true, d, 2 * d));
    let prepared = PreparedMoment::new(&norm_kernel(state, spec.tau()), &monomials)?;
    prepared.evaluate(&CVec::zeros(2 * d))
}

/// `ln P_m`, or `-inf` when the pattern has exactly zero probability.
pub fn ln_success_probability(state: &GaussianState, spec: &SubtractionSpec) -> Result<f64> {
    let j = integral_j(state, spec)?;
    if j.is_zero() {
        return Ok(f64::NEG_INFINITY);
    }
    if j.value.re <= 0.0 || j.value.im.abs() > 1e-10 * j.value.norm() {
        return Err(Error::Numerical(format!(
            "norm integral is not real positive: {:?}",
            j.value
        )));
    }
    Ok(spec.ln_probability_prefactor(state) + j.ln_abs())
}

/// Heralding probability `P_m = ⟨ψ_m|ψ_m⟩`.
pub fn success_probability(state: &GaussianState, spec: &SubtractionSpec) -> Result<f64> {
    Ok(ln_success_probability(state, spec)?.exp())
}

/// Unnormalised amplitude `⟨γ|ψ_m⟩` of the heralded state on a product coherent state.
pub fn heralded_overlap(
    state: &GaussianState,
    spec: &SubtractionSpec,
    gamma: &[Complex64],
) -> Result<Complex64> {
    let i_val = integral_i(state, spec, gamma)?;
    let m = spec.total_photons() as i32;
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let ln_fact: f64 = spec.pattern().iter().map(|&k| ln_factorial(k)).sum();
    let norm2: f64 = gamma.iter().map(|g| g.norm_sqr()).sum();
    let ln_pref = 0.5 * m as f64 * (-spec.tau()).ln_1p()
        - 0.5 * m as f64 * 2f64.ln()
        - 0.5 * ln_fact
        - state.normalization_prefactor().ln()
        - 0.5 * norm2;
    Ok(i_val.value * sign * (ln_pref + i_val.log_scale).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RMat;

    fn smsv(r: f64) -> GaussianState {
        GaussianState::from_hamiltonian(RMat::from_element(1, 1, 1.0), r).unwrap()
    }

    #[test]
    fn rejects_bad_tau() {
        assert!(SubtractionSpec::new(1.0, vec![1]).is_err());
        assert!(SubtractionSpec::new(-0.1, vec![1]).is_err());
        assert!(SubtractionSpec::new(f64::NAN, vec![1]).is_err());
        assert!(SubtractionSpec::new(0.0, vec![1]).is_ok());
    }

    #[test]
    fn rejects_mode_mismatch() {
        let spec = SubtractionSpec::new(0.5, vec![1, 1]).unwrap();
        assert!(integral_j(&smsv(0.5), &spec).is_err());
    }

    #[test]
    fn vacuum_herald_on_vacuum_is_certain() {
        let spec = SubtractionSpec::new(0.3, vec![0, 0]).unwrap();
        let p = success_probability(&GaussianState::vacuum(2), &spec).unwrap();
        assert!((p - 1.0).abs() < 1e-13);
    }

    #[test]
    fn vacuum_cannot_herald_photons() {
        let spec = SubtractionSpec::new(0.3, vec![1, 0]).unwrap();
        let p = success_probability(&GaussianState::vacuum(2), &spec).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn smsv_single_photon_probability() {
        // Full reflection: P_1 = |⟨1|ψ⟩|² vanishes for an even-photon state.
        let spec = SubtractionSpec::new(0.0, vec![1]).unwrap();
        assert!(success_probability(&smsv(0.7), &spec).unwrap() < 1e-14);
        // Full reflection, two photons: |⟨2|SMSV⟩|² = tanh² r / (2 cosh r).
        let spec = SubtractionSpec::new(0.0, vec![2]).unwrap();
        let r: f64 = 0.7;
        let expected = r.tanh().powi(2) / (2.0 * r.cosh());
        let p = success_probability(&smsv(r), &spec).unwrap();
        assert!((p - expected).abs() < 1e-13, "{p} vs {expected}");
    }

    #[test]
    fn norm_kernel_is_symmetric() {
        let m = norm_kernel(&smsv(0.4), 0.3);
        assert!((&m - m.transpose()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn overlap_matches_vacuum_coherent_amplitude() {
        // Vacuum with no photons heralded: ⟨γ|0⟩ = exp(-|γ|²/2).
        let spec = SubtractionSpec::new(0.4, vec![0]).unwrap();
        let g = [Complex64::new(0.3, -0.8)];
        let a = heralded_overlap(&GaussianState::vacuum(1), &spec, &g).unwrap();
        let expected = (-g[0].norm_sqr() / 2.0).exp();
        assert!((a - Complex64::new(expected, 0.0)).norm() < 1e-13);
    }
}
