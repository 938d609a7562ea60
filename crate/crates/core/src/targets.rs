//! Binary-phase coherent-superposition targets `Σ_l c_l |s_l1 γ, …, s_lN γ⟩`, `s = ±1`.
//!
//! The cat basis is `|0̄⟩ = (|γ⟩ + |−γ⟩)/N₀`, `|1̄⟩ = (|γ⟩ − |−γ⟩)/N₁` with
//! `N₀² = 2 + 2e^{−2|γ|²}` and `N₁² = 2 − 2e^{−2|γ|²}`. Targets that are naturally written in that
//! basis keep their cat amplitudes, so normalisation, vacuum overlaps and sign sums stay exact
//! when the coherent coefficients become huge and nearly cancel at small `|γ|`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Smallest `|γ|` accepted when the odd cat `|1̄⟩` appears in the target.
pub const MIN_ODD_AMPLITUDE: f64 = 1e-6;
/// Largest vertex count for a cluster target (2^N coherent terms).
pub const MAX_CLUSTER_MODES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetKind {
    CatEven,
    CatOdd,
    Plus,
    Ghz,
    Cccs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParityClass {
    AllEven,
    AllOdd,
    Mixed,
}

impl ParityClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ParityClass::AllEven => "even",
            ParityClass::AllOdd => "odd",
            ParityClass::Mixed => "mixed",
        }
    }
}

/// One coherent component: `flips[j]` selects `−γ` on mode `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentTerm {
    pub coeff: Complex64,
    pub flips: Vec<bool>,
}

impl CoherentTerm {
    /// `m⃗ᵀs⃗ mod 2`.
    pub fn sign_parity(&self, pattern: &[u32]) -> u32 {
        self.flips
            .iter()
            .zip(pattern)
            .filter(|(f, _)| **f)
            .map(|(_, m)| m % 2)
            .sum::<u32>()
            % 2
    }

    /// Per-mode coherent amplitudes `±γ`.
    pub fn amplitudes(&self, gamma: Complex64) -> Vec<Complex64> {
        self.flips
            .iter()
            .map(|&f| if f { -gamma } else { gamma })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryPhaseTarget {
    kind: TargetKind,
    n_modes: usize,
    gamma: Complex64,
    terms: Vec<CoherentTerm>,
    /// Amplitudes on `|b̄_1 … b̄_N⟩`, indexed by the bitstring with bit `j` for mode `j`.
    cat_amplitudes: Option<Vec<Complex64>>,
}

/// `γ = (q + i p)/√2`.
pub fn gamma_from_quadratures(q: f64, p: f64) -> Complex64 {
    Complex64::new(q, p) / std::f64::consts::SQRT_2
}

/// `(N₀, N₁)` for the cat basis at amplitude `γ`.
pub fn cat_norms(gamma: Complex64) -> (f64, f64) {
    let x = -2.0 * gamma.norm_sqr();
    ((2.0 + 2.0 * x.exp()).sqrt(), (-2.0 * x.exp_m1()).sqrt())
}

fn check_gamma(gamma: Complex64, needs_odd: bool) -> Result<()> {
    if !gamma.re.is_finite() || !gamma.im.is_finite() {
        return Err(Error::NonFinite("gamma"));
    }
    if needs_odd && gamma.norm() < MIN_ODD_AMPLITUDE {
        return Err(Error::AmplitudeTooSmall(gamma.norm()));
    }
    Ok(())
}

impl BinaryPhaseTarget {
    fn from_cat(kind: TargetKind, n_modes: usize, gamma: Complex64, amps: Vec<Complex64>) -> Self {
        let (n0, n1) = cat_norms(gamma);
        let inv = [1.0 / n0, 1.0 / n1];
        let terms = (0..1usize << n_modes)
            .map(|s| {
                let mut coeff = Complex64::new(0.0, 0.0);
                for (b, a) in amps.iter().enumerate() {
                    if *a == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut w = 1.0;
                    for j in 0..n_modes {
                        let bj = (b >> j) & 1;
                        let sj = (s >> j) & 1;
                        w *= inv[bj];
                        if bj == 1 && sj == 1 {
                            w = -w;
                        }
                    }
                    coeff += a * w;
                }
                CoherentTerm {
                    coeff,
                    flips: (0..n_modes).map(|j| (s >> j) & 1 == 1).collect(),
                }
            })
            .collect();
        Self {
            kind,
            n_modes,
            gamma,
            terms,
            cat_amplitudes: Some(amps),
        }
    }

    /// `|0̄⟩`; `γ = 0` is allowed and gives the vacuum.
    pub fn cat_even(gamma: Complex64) -> Result<Self> {
        check_gamma(gamma, false)?;
        Ok(Self::from_cat(
            TargetKind::CatEven,
            1,
            gamma,
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        ))
    }

    pub fn cat_odd(gamma: Complex64) -> Result<Self> {
        check_gamma(gamma, true)?;
        Ok(Self::from_cat(
            TargetKind::CatOdd,
            1,
            gamma,
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        ))
    }

    /// `|+⟩ = (|0̄⟩ + |1̄⟩)/√2 = c₊|γ⟩ + c₋|−γ⟩`.
    pub fn plus_state(gamma: Complex64) -> Result<Self> {
        check_gamma(gamma, true)?;
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Ok(Self::from_cat(TargetKind::Plus, 1, gamma, vec![h, h]))
    }

    /// `(|γ⟩^⊗N + |−γ⟩^⊗N)/N_GHZ`.
    pub fn ghz(n_modes: usize, gamma: Complex64) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParameter {
                name: "n_modes",
                reason: "GHZ target needs at least one mode".into(),
            });
        }
        check_gamma(gamma, false)?;
        let x = -2.0 * n_modes as f64 * gamma.norm_sqr();
        let c = Complex64::new(1.0 / (2.0 + 2.0 * x.exp()).sqrt(), 0.0);
        Ok(Self {
            kind: TargetKind::Ghz,
            n_modes,
            gamma,
            terms: vec![
                CoherentTerm {
                    coeff: c,
                    flips: vec![false; n_modes],
                },
                CoherentTerm {
                    coeff: c,
                    flips: vec![true; n_modes],
                },
            ],
            cat_amplitudes: None,
        })
    }

    /// `∏_{(i,j)∈E} C_Z^{ij} |+⟩^⊗N` in the cat basis, expanded to `2^N` coherent terms.
    pub fn cccs(n_modes: usize, edges: &[(usize, usize)], gamma: Complex64) -> Result<Self> {
        if n_modes == 0 || n_modes > MAX_CLUSTER_MODES {
            return Err(Error::Graph(format!(
                "cluster target needs 1..={MAX_CLUSTER_MODES} vertices, got {n_modes}"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for &(i, j) in edges {
            if i >= n_modes || j >= n_modes {
                return Err(Error::Graph(format!("edge ({i}, {j}) out of range")));
            }
            if i == j {
                return Err(Error::Graph(format!("self-loop on vertex {i}")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::Graph(format!("duplicate edge ({i}, {j})")));
            }
        }
        check_gamma(gamma, true)?;
        let scale = 2f64.powf(-(n_modes as f64) / 2.0);
        let amps = (0..1usize << n_modes)
            .map(|b| {
                let flips = edges
                    .iter()
                    .filter(|&&(i, j)| (b >> i) & 1 == 1 && (b >> j) & 1 == 1)
                    .count();
                Complex64::new(if flips % 2 == 0 { scale } else { -scale }, 0.0)
            })
            .collect();
        Ok(Self::from_cat(TargetKind::Cccs, n_modes, gamma, amps))
    }

    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma
    }

    /// `q_γ² + p_γ² = 2|γ|²`, the per-mode squared quadrature amplitude.
    pub fn quadrature_norm_sqr(&self) -> f64 {
        2.0 * self.gamma.norm_sqr()
    }

    pub fn terms(&self) -> &[CoherentTerm] {
        &self.terms
    }

    pub fn cat_amplitudes(&self) -> Option<&[Complex64]> {
        self.cat_amplitudes.as_deref()
    }

    /// `⟨C|C⟩` evaluated from coherent overlaps `⟨sγ|s'γ⟩ = exp(−|γ|²(1 − ss'))`.
    pub fn coherent_norm_sqr(&self) -> f64 {
        let g2 = self.gamma.norm_sqr();
        let mut acc = Complex64::new(0.0, 0.0);
        for a in &self.terms {
            for b in &self.terms {
                let differ = a.flips.iter().zip(&b.flips).filter(|(x, y)| x != y).count();
                acc += a.coeff.conj() * b.coeff * (-2.0 * g2 * differ as f64).exp();
            }
        }
        acc.re
    }

    pub fn norm_sqr(&self) -> f64 {
        match &self.cat_amplitudes {
            Some(a) => a.iter().map(|z| z.norm_sqr()).sum(),
            None => self.coherent_norm_sqr(),
        }
    }

    /// `|⟨0|^⊗N |C⟩|²`.
    pub fn vacuum_overlap(&self) -> f64 {
        let g2 = self.gamma.norm_sqr();
        match &self.cat_amplitudes {
            Some(a) => {
                let (n0, _) = cat_norms(self.gamma);
                let per_mode = 2.0 * (-g2 / 2.0).exp() / n0;
                a[0].norm_sqr() * per_mode.powi(2 * self.n_modes as i32)
            }
            None => {
                let sum: Complex64 = self.terms.iter().map(|t| t.coeff).sum();
                sum.norm_sqr() * (-(self.n_modes as f64) * g2).exp()
            }
        }
    }

    /// Whether `m⃗ᵀs⃗_l` has the same parity on every term.
    pub fn parity_class(&self, pattern: &[u32]) -> ParityClass {
        let mut even = false;
        let mut odd = false;
        for t in &self.terms {
            if t.sign_parity(pattern) == 0 {
                even = true;
            } else {
                odd = true;
            }
        }
        match (even, odd) {
            (true, false) => ParityClass::AllEven,
            (false, true) => ParityClass::AllOdd,
            _ => ParityClass::Mixed,
        }
    }

    /// `|Σ_l c_l (−1)^{m⃗ᵀs⃗_l}|²`.
    pub fn phase_factor(&self, pattern: &[u32]) -> f64 {
        match &self.cat_amplitudes {
            Some(a) => {
                // Only the cat component with b_j = m_j mod 2 survives the signed sum.
                let (n0, n1) = cat_norms(self.gamma);
                let mut idx = 0usize;
                let mut w = 1.0;
                for (j, m) in pattern.iter().enumerate() {
                    if m % 2 == 1 {
                        idx |= 1 << j;
                        w *= 2.0 / n1;
                    } else {
                        w *= 2.0 / n0;
                    }
                }
                a[idx].norm_sqr() * w * w
            }
            None => {
                let sum: Complex64 = self
                    .terms
                    .iter()
                    .map(|t| {
                        if t.sign_parity(pattern) == 0 {
                            t.coeff
                        } else {
                            -t.coeff
                        }
                    })
                    .sum();
                sum.norm_sqr()
            }
        }
    }

    pub fn check_pattern(&self, pattern: &[u32]) -> Result<()> {
        if pattern.len() != self.n_modes {
            return Err(Error::ModeMismatch {
                state: pattern.len(),
                target: self.n_modes,
            });
        }
        Ok(())
    }
}
