//! Fidelity between a photon-subtracted Gaussian state and a binary-phase target.
//!
//! With `⟨γ_l|ψ_m⟩ ∝ e^{−|γ|²N/2} I_l` and `⟨ψ_m|ψ_m⟩ ∝ J` (same prefactor), the fidelity is
//!
//! ```text
//! F = e^{−½ x_γᵀx_γ} |Σ_l c_l* I_l|² / J
//! ```
//!
//! where `I_l` carries the signed amplitude of term `l`. Flipping the sign of `γ` on a set of
//! modes is a change of variables `x → S x` in `I`, which leaves `K` unchanged only when the
//! flipped modes are decoupled from the rest in `𝓑`. In that case `I_l = (−1)^{m⃗ᵀs⃗_l} I` and
//!
//! ```text
//! F = |Σ_l c_l (−1)^{m⃗ᵀs⃗_l}|² e^{−½ x_γᵀx_γ} R,      R = |I|²/J.
//! ```
//!
//! [`FidelityEvaluator`] uses that factorised form when it applies and otherwise sums the
//! per-term integrals. The factorised expression is always reported separately as
//! `fidelity_sign_extracted`.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian_state::GaussianState;
use crate::linalg::{sym_matrix_fn, RMat};
use crate::moment::MomentResult;
use crate::subtraction::{integral_j, OverlapIntegral, SubtractionSpec};
use crate::targets::{BinaryPhaseTarget, ParityClass, TargetKind};

/// Heralding probabilities below this are treated as unreachable patterns.
pub const MIN_PROBABILITY: f64 = 1e-12;
const DECOUPLING_TOL: f64 = 1e-14;

type OverlapCache = HashMap<(u64, u64, Vec<bool>), MomentResult>;

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    /// `None` when the pattern cannot be heralded.
    pub fidelity: Option<f64>,
    /// `|Σ_l c_l (−1)^{m⃗ᵀs⃗_l}|² e^{−½x_γᵀx_γ} R`.
    pub fidelity_sign_extracted: Option<f64>,
    pub ratio: Option<f64>,
    pub abs_i_sq: f64,
    pub j: f64,
    pub probability: f64,
    pub parity_class: ParityClass,
    pub bound_general: f64,
    /// Present only for `AllEven` and `AllOdd` parity classes.
    pub bound_vacuum: Option<f64>,
    pub phase_factor: f64,
    /// Whether every sign flip of the target leaves the kernel invariant.
    pub sign_symmetric: bool,
}

/// Kernel factorisation and norm integral for one `(state, τ, m⃗)`, reusable across targets.
#[derive(Debug, Clone)]
pub struct FidelityEvaluator {
    state: GaussianState,
    spec: SubtractionSpec,
    overlap: OverlapIntegral,
    j: MomentResult,
    ln_probability: f64,
}

impl FidelityEvaluator {
    pub fn new(state: &GaussianState, spec: &SubtractionSpec) -> Result<Self> {
        let overlap = OverlapIntegral::new(state, spec)?;
        let j = integral_j(state, spec)?;
        let ln_probability = if j.is_zero() {
            f64::NEG_INFINITY
        } else {
            if j.value.re <= 0.0 || j.value.im.abs() > 1e-8 * j.value.norm() {
                return Err(Error::Numerical(format!(
                    "norm integral is not real positive: {:?}",
                    j.value
                )));
            }
            spec.ln_probability_prefactor(state) + j.ln_abs()
        };
        Ok(Self {
            state: state.clone(),
            spec: spec.clone(),
            overlap,
            j,
            ln_probability,
        })
    }

    pub fn probability(&self) -> f64 {
        self.ln_probability.exp()
    }

    pub fn is_reachable(&self) -> bool {
        self.probability() >= MIN_PROBABILITY
    }

    /// `R = |I|²/J` at the unsigned amplitude `γ` on every mode.
    pub fn ratio(&self, gamma: Complex64) -> Result<Option<f64>> {
        if !self.is_reachable() {
            return Ok(None);
        }
        let i = self.overlap.evaluate(&vec![gamma; self.state.n_modes()])?;
        Ok(Some(self.ratio_from(&i)))
    }

    fn ratio_from(&self, i: &MomentResult) -> f64 {
        if i.is_zero() {
            return 0.0;
        }
        (2.0 * i.ln_abs() - self.j.ln_abs()).exp()
    }

    pub fn evaluate(&self, target: &BinaryPhaseTarget) -> Result<FidelityReport> {
        self.evaluate_cached(target, &mut HashMap::new())
    }

    /// Evaluates several targets, sharing the per-term integrals between targets that use
    /// the same amplitude and flip pattern.
    pub fn evaluate_batch(&self, targets: &[BinaryPhaseTarget]) -> Result<Vec<FidelityReport>> {
        let mut cache = HashMap::new();
        targets
            .iter()
            .map(|t| self.evaluate_cached(t, &mut cache))
            .collect()
    }

    fn evaluate_cached(
        &self,
        target: &BinaryPhaseTarget,
        cache: &mut OverlapCache,
    ) -> Result<FidelityReport> {
        let n = self.state.n_modes();
        if target.n_modes() != n {
            return Err(Error::ModeMismatch {
                state: n,
                target: target.n_modes(),
            });
        }
        let pattern = self.spec.pattern();
        let parity_class = target.parity_class(pattern);
        let phase_factor = target.phase_factor(pattern);
        let envelope = (-(n as f64) * target.quadrature_norm_sqr() / 2.0).exp();
        let bound_general = phase_factor * envelope;
        let bound_vacuum = match parity_class {
            ParityClass::Mixed => None,
            _ => Some(target.vacuum_overlap()),
        };
        let sign_symmetric = self.sign_symmetric(target);

        let j = self.j.to_complex().re;
        let probability = self.probability();
        if !self.is_reachable() {
            return Ok(FidelityReport {
                fidelity: None,
                fidelity_sign_extracted: None,
                ratio: None,
                abs_i_sq: 0.0,
                j,
                probability: 0.0,
                parity_class,
                bound_general,
                bound_vacuum,
                phase_factor,
                sign_symmetric,
            });
        }

        let gamma = target.gamma();
        let i = self.cached_overlap(gamma, &vec![false; n], cache)?;
        let ratio = self.ratio_from(&i);
        let sign_extracted = phase_factor * envelope * ratio;
        let fidelity = if sign_symmetric {
            sign_extracted
        } else {
            let mut parts = Vec::with_capacity(target.terms().len());
            for term in target.terms() {
                let il = self.cached_overlap(gamma, &term.flips, cache)?;
                parts.push(il.scaled(term.coeff.conj()));
            }
            let sum = sum_scaled(&parts);
            if sum.is_zero() {
                0.0
            } else {
                (2.0 * sum.ln_abs() - self.j.ln_abs()).exp() * envelope
            }
        };
        Ok(FidelityReport {
            fidelity: Some(fidelity),
            fidelity_sign_extracted: Some(sign_extracted),
            ratio: Some(ratio),
            abs_i_sq: i.to_complex().norm_sqr(),
            j,
            probability,
            parity_class,
            bound_general,
            bound_vacuum,
            phase_factor,
            sign_symmetric,
        })
    }

    fn cached_overlap(
        &self,
        gamma: Complex64,
        flips: &[bool],
        cache: &mut OverlapCache,
    ) -> Result<MomentResult> {
        let key = (gamma.re.to_bits(), gamma.im.to_bits(), flips.to_vec());
        if let Some(v) = cache.get(&key) {
            return Ok(*v);
        }
        let amps: Vec<Complex64> = flips
            .iter()
            .map(|&f| if f { -gamma } else { gamma })
            .collect();
        let v = self.overlap.evaluate(&amps)?;
        cache.insert(key, v);
        Ok(v)
    }

    /// True when no flip pattern of the target couples flipped and unflipped modes in `𝓑`.
    fn sign_symmetric(&self, target: &BinaryPhaseTarget) -> bool {
        let n = self.state.n_modes();
        let kernel = self.state.kernel();
        let scale = kernel.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
        target.terms().iter().all(|term| {
            (0..n).all(|a| {
                (0..n).all(|b| {
                    if term.flips[a] == term.flips[b] {
                        return true;
                    }
                    [(a, b), (a, n + b), (n + a, b), (n + a, n + b)]
                        .iter()
                        .all(|&(x, y)| kernel[(x, y)].norm() <= DECOUPLING_TOL * scale)
                })
            })
        })
    }
}

fn sum_scaled(parts: &[MomentResult]) -> MomentResult {
    let top = parts
        .iter()
        .filter(|p| !p.is_zero())
        .map(|p| p.log_scale)
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return MomentResult::zero();
    }
    let value: Complex64 = parts
        .iter()
        .filter(|p| !p.is_zero())
        .map(|p| p.value * (p.log_scale - top).exp())
        .sum();
    MomentResult {
        value,
        log_scale: top,
    }
}

pub fn fidelity_exact(
    state: &GaussianState,
    spec: &SubtractionSpec,
    target: &BinaryPhaseTarget,
) -> Result<FidelityReport> {
    FidelityEvaluator::new(state, spec)?.evaluate(target)
}

/// `R = |I|²/J`; `None` when the pattern cannot be heralded.
pub fn ratio_r(
    state: &GaussianState,
    spec: &SubtractionSpec,
    gamma: Complex64,
) -> Result<Option<f64>> {
    FidelityEvaluator::new(state, spec)?.ratio(gamma)
}

/// `|Σ_l c_l (−1)^{m⃗ᵀs⃗_l}|² e^{−½ x_γᵀx_γ}`.
pub fn bound_general(target: &BinaryPhaseTarget, pattern: &[u32]) -> Result<f64> {
    target.check_pattern(pattern)?;
    let n = target.n_modes() as f64;
    Ok(target.phase_factor(pattern) * (-n * target.quadrature_norm_sqr() / 2.0).exp())
}

/// `|⟨0|^⊗N|C⟩|²`, which bounds the fidelity for patterns of uniform sign parity.
pub fn bound_vacuum(target: &BinaryPhaseTarget) -> f64 {
    target.vacuum_overlap()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FnCertificate {
    /// `1⃗ᵀ tanh(Gr) 1⃗`.
    pub value: f64,
    /// `N tanh((N−1)r)`.
    pub bound: f64,
    pub within_bound: bool,
    /// `(1⃗ᵀG1⃗) tanh r` when `G² = I`.
    pub self_inverse_value: Option<f64>,
}

pub fn f_n(g: &RMat, r: f64) -> Result<FnCertificate> {
    let state = GaussianState::from_hamiltonian(g.clone(), r)?;
    let gen = state.generator().expect("built from a generator");
    let t = gen.tanh_gr();
    let n = g.nrows();
    let value = t.sum();
    let bound = n as f64 * ((n as f64 - 1.0) * r).tanh();
    let eye = RMat::identity(n, n);
    let self_inverse_value = ((g * g - eye).abs().max() < 1e-12).then(|| g.sum() * r.tanh());
    Ok(FnCertificate {
        value,
        bound,
        within_bound: value.abs() <= bound * (1.0 + 1e-12) + 1e-15,
        self_inverse_value,
    })
}

/// `1⃗ᵀ tanh(Gr) 1⃗` without validating `G`.
pub fn f_n_value(g: &RMat, r: f64) -> f64 {
    sym_matrix_fn(&(g * r), f64::tanh).sum()
}

/// Small-amplitude vacuum-overlap bound `Ã` for cluster and GHZ targets.
pub fn amplitude_bound(
    kind: TargetKind,
    n: usize,
    tau: f64,
    f_n: f64,
    q: f64,
    p: f64,
) -> Result<f64> {
    let nf = n as f64;
    let expo = (-0.5 * (nf - f_n * tau) * q * q - 0.5 * (nf + f_n * tau) * p * p).exp();
    let s = q * q + p * p;
    match kind {
        TargetKind::Cccs => Ok(expo / (1.0 + (-s).exp()).powi(n as i32)),
        TargetKind::Ghz => Ok(2.0 * expo / (1.0 + (-nf * s).exp())),
        other => Err(Error::InvalidParameter {
            name: "target_kind",
            reason: format!(
                "amplitude bound is defined for cluster and GHZ targets, not {other:?}"
            ),
        }),
    }
}

/// `s / (1 − e^{−s})`, continuous at `s = 0`.
fn s_over_one_minus_exp(s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        s / -(-s).exp_m1()
    }
}

/// Fidelity of the one-photon-subtracted squeezed vacuum with the odd cat.
pub fn closed_form_f2(r: f64, tau: f64, q: f64, p: f64) -> f64 {
    let t = tau * r.tanh();
    let s = q * q + p * p;
    let expo = (-0.5 * q * q * (1.0 - t) - 0.5 * p * p * (1.0 + t)).exp();
    let bracket = 1.0 + tau * tau + (1.0 - tau * tau) * (2.0 * r).cosh();
    expo * s_over_one_minus_exp(s) * bracket.powf(1.5)
        / (2.0 * std::f64::consts::SQRT_2 * r.cosh().powi(3))
}

/// Fidelity of the one-photon-subtracted squeezed vacuum with `|+⟩`.
pub fn closed_form_f3(r: f64, tau: f64, q: f64, p: f64) -> f64 {
    0.5 * closed_form_f2(r, tau, q, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::gamma_from_quadratures;

    fn smsv(r: f64) -> GaussianState {
        GaussianState::from_hamiltonian(RMat::from_element(1, 1, 1.0), r).unwrap()
    }

    #[test]
    fn f2_limit_is_one() {
        assert!((closed_form_f2(1.0, 0.0, 0.0, 0.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matches_f2_closed_form() {
        let spec = SubtractionSpec::new(0.01, vec![1]).unwrap();
        let eval = FidelityEvaluator::new(&smsv(1.0), &spec).unwrap();
        for q in [0.1, 0.3, 0.6] {
            let t = BinaryPhaseTarget::cat_odd(gamma_from_quadratures(q, 0.0)).unwrap();
            let f = eval.evaluate(&t).unwrap().fidelity.unwrap();
            let cf = closed_form_f2(1.0, 0.01, q, 0.0);
            assert!((f - cf).abs() < 1e-9 * cf, "{f} vs {cf}");
        }
    }

    #[test]
    fn even_cat_with_odd_pattern_vanishes() {
        let spec = SubtractionSpec::new(0.05, vec![1]).unwrap();
        let t = BinaryPhaseTarget::cat_even(gamma_from_quadratures(0.4, 0.1)).unwrap();
        let rep = fidelity_exact(&smsv(0.8), &spec, &t).unwrap();
        assert_eq!(rep.fidelity, Some(0.0));
        assert_eq!(rep.bound_general, 0.0);
    }

    #[test]
    fn ratio_is_one_at_full_reflection() {
        let spec = SubtractionSpec::new(0.0, vec![2]).unwrap();
        let r = ratio_r(&smsv(1.0), &spec, gamma_from_quadratures(0.3, 0.2))
            .unwrap()
            .unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unreachable_pattern_has_no_fidelity() {
        let spec = SubtractionSpec::new(0.1, vec![1]).unwrap();
        let t = BinaryPhaseTarget::cat_odd(gamma_from_quadratures(0.4, 0.0)).unwrap();
        let rep = fidelity_exact(&GaussianState::vacuum(1), &spec, &t).unwrap();
        assert_eq!(rep.fidelity, None);
        assert_eq!(rep.probability, 0.0);
    }

    #[test]
    fn plus_state_even_bound() {
        let g = gamma_from_quadratures(0.5, 0.2);
        let t = BinaryPhaseTarget::plus_state(g).unwrap();
        let s: f64 = 0.25 + 0.04;
        let expected = 1.0 / (2.0 * (0.5 * s).cosh());
        assert!((bound_general(&t, &[2]).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn cluster_even_bound() {
        let g = gamma_from_quadratures(0.3, 0.1);
        let t = BinaryPhaseTarget::cccs(3, &[(0, 1), (1, 2)], g).unwrap();
        let s: f64 = 0.09 + 0.01;
        let expected = (1.0 / (2.0 * (0.5 * s).cosh())).powi(3);
        assert!((bound_general(&t, &[2, 0, 4]).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn f_n_zero_generator() {
        let c = f_n(&RMat::zeros(3, 3), 0.7).unwrap();
        assert_eq!(c.value, 0.0);
        assert!(c.within_bound);
    }

    #[test]
    fn f_n_self_inverse_pair() {
        let g = RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let c = f_n(&g, 0.8).unwrap();
        assert!((c.value - 2.0 * 0.8f64.tanh()).abs() < 1e-14);
        assert!((c.self_inverse_value.unwrap() - c.value).abs() < 1e-12);
    }

    #[test]
    fn amplitude_bound_maxima() {
        for n in 1..=5 {
            let c = amplitude_bound(TargetKind::Cccs, n, 0.01, 0.3, 0.0, 0.0).unwrap();
            assert!((c - 0.5f64.powi(n as i32)).abs() < 1e-15);
            let g = amplitude_bound(TargetKind::Ghz, n, 0.01, 0.3, 0.0, 0.0).unwrap();
            assert!((g - 1.0).abs() < 1e-15);
        }
        assert!(amplitude_bound(TargetKind::Plus, 1, 0.01, 0.3, 0.0, 0.0).is_err());
    }
}
