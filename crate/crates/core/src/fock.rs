//! Truncated Fock-space oracle.
//!
//! Everything here works on explicit amplitude tensors and shares no formulas with the
//! coherent-kernel path: the Gaussian state is `exp(A)|0⟩` with
//! `A = (r/2) Σ_ij G_ij (a†_i a†_j − a_i a_j)` applied by a scaled Taylor series, each
//! beam splitter is the dense exponential of `θ(a†b − ab†)` on a fixed-photon-number block,
//! and the target is expanded in number states.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{check_finite, check_square, check_symmetric, expm, RMat};
use crate::targets::{cat_norms, BinaryPhaseTarget};

/// Largest tensor size accepted by the oracle.
pub const MAX_FOCK_DIM: usize = 4_000_000;
/// Deficit above which a truncation is considered unusable.
pub const MAX_NORM_DEFICIT: f64 = 1e-3;

/// Amplitudes on `|n_1 … n_N⟩`, `0 ≤ n_j < cutoff`, mode 0 most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct FockTensor {
    n_modes: usize,
    cutoff: usize,
    amplitudes: Vec<Complex64>,
    norm_deficit: f64,
}

impl FockTensor {
    pub fn vacuum(n_modes: usize, cutoff: usize) -> Result<Self> {
        let len = tensor_len(n_modes, cutoff)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); len];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_modes,
            cutoff,
            amplitudes,
            norm_deficit: 0.0,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Weight lost to truncation, `1 − Σ|amplitude|²` for the untruncated state.
    pub fn norm_deficit(&self) -> f64 {
        self.norm_deficit
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn index(&self, occupation: &[usize]) -> usize {
        occupation.iter().fold(0, |acc, &n| acc * self.cutoff + n)
    }

    pub fn amplitude(&self, occupation: &[usize]) -> Complex64 {
        self.amplitudes[self.index(occupation)]
    }

    pub fn check_deficit(&self, tol: f64) -> Result<()> {
        if self.norm_deficit > tol {
            return Err(Error::Truncation {
                cutoff: self.cutoff,
                deficit: self.norm_deficit,
            });
        }
        Ok(())
    }

    fn occupations(&self) -> Occupations {
        Occupations::new(self.n_modes, self.cutoff)
    }
}

fn tensor_len(n_modes: usize, cutoff: usize) -> Result<usize> {
    if n_modes == 0 || cutoff < 2 {
        return Err(Error::InvalidParameter {
            name: "cutoff",
            reason: format!(
                "need at least one mode and cutoff >= 2, got {n_modes} modes, cutoff {cutoff}"
            ),
        });
    }
    let len = (cutoff as u128)
        .checked_pow(n_modes as u32)
        .unwrap_or(u128::MAX);
    if len > MAX_FOCK_DIM as u128 {
        return Err(Error::InvalidParameter {
            name: "cutoff",
            reason: format!("{cutoff}^{n_modes} amplitudes exceeds the oracle budget"),
        });
    }
    Ok(len as usize)
}

/// Iterates occupation vectors in tensor order.
struct Occupations {
    cutoff: usize,
    current: Vec<usize>,
    done: bool,
}

impl Occupations {
    fn new(n_modes: usize, cutoff: usize) -> Self {
        Self {
            cutoff,
            current: vec![0; n_modes],
            done: false,
        }
    }
}

impl Iterator for Occupations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut j = self.current.len();
        loop {
            if j == 0 {
                self.done = true;
                break;
            }
            j -= 1;
            self.current[j] += 1;
            if self.current[j] < self.cutoff {
                break;
            }
            self.current[j] = 0;
        }
        Some(out)
    }
}

/// Real sparse matrix in compressed rows.
struct SparseOp {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseOp {
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_start[r]..self.row_start[r + 1] {
                acc += self.vals[k] * v[self.cols[k]];
            }
            *o = acc;
        }
    }

    fn max_abs_row_sum(&self) -> f64 {
        (0..self.row_start.len() - 1)
            .map(|r| {
                self.vals[self.row_start[r]..self.row_start[r + 1]]
                    .iter()
                    .map(|x| x.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// `A = (r/2) Σ_ij G_ij (a†_i a†_j − a_i a_j)` on the truncated space.
fn squeezing_generator(g: &RMat, r: f64, n_modes: usize, cutoff: usize) -> SparseOp {
    let len = cutoff.pow(n_modes as u32);
    let mut row_start = Vec::with_capacity(len + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let stride: Vec<usize> = (0..n_modes)
        .map(|j| cutoff.pow((n_modes - 1 - j) as u32))
        .collect();
    row_start.push(0);
    for occ in Occupations::new(n_modes, cutoff) {
        let row: usize = occ.iter().zip(&stride).map(|(n, s)| n * s).sum();
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for i in 0..n_modes {
            for j in 0..n_modes {
                let c = 0.5 * r * g[(i, j)];
                if c == 0.0 {
                    continue;
                }
                // ⟨occ| a†_i a†_j |col⟩: col = occ with one photon removed from i and j.
                if let Some((col, amp)) = lowered(&occ, i, j, &stride) {
                    entries.push((col, c * amp));
                }
                // −⟨occ| a_i a_j |col⟩: col = occ with one photon added to i and j.
                if let Some((col, amp)) = raised(&occ, i, j, &stride, cutoff) {
                    entries.push((col, -c * amp));
                }
            }
        }
        entries.sort_by_key(|e| e.0);
        let mut last: Option<usize> = None;
        for (c, v) in entries {
            if last == Some(c) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                last = Some(c);
            }
        }
        debug_assert_eq!(row, row_start.len() - 1);
        row_start.push(cols.len());
    }
    SparseOp {
        row_start,
        cols,
        vals,
    }
}

/// Column index and matrix element of `a†_i a†_j` landing on `occ`.
fn lowered(occ: &[usize], i: usize, j: usize, stride: &[usize]) -> Option<(usize, f64)> {
    let mut src = occ.to_vec();
    if src[i] == 0 {
        return None;
    }
    src[i] -= 1;
    if src[j] == 0 {
        return None;
    }
    src[j] -= 1;
    // a†_i a†_j |src⟩ = √(src_j+1) a†_i |src + e_j⟩.
    let mut amp = ((src[j] + 1) as f64).sqrt();
    let mut mid = src.clone();
    mid[j] += 1;
    amp *= ((mid[i] + 1) as f64).sqrt();
    Some((src.iter().zip(stride).map(|(n, s)| n * s).sum(), amp))
}

/// Column index and matrix element of `a_i a_j` landing on `occ`.
fn raised(
    occ: &[usize],
    i: usize,
    j: usize,
    stride: &[usize],
    cutoff: usize,
) -> Option<(usize, f64)> {
    let mut src = occ.to_vec();
    src[i] += 1;
    src[j] += 1;
    if src[i] >= cutoff || src[j] >= cutoff {
        return None;
    }
    // a_i a_j |src⟩ = √src_j a_i |src − e_j⟩.
    let mut amp = (src[j] as f64).sqrt();
    let mut mid = src.clone();
    mid[j] -= 1;
    amp *= (mid[i] as f64).sqrt();
    Some((src.iter().zip(stride).map(|(n, s)| n * s).sum(), amp))
}

/// `exp(A) v` by `s` Taylor steps of size `1/s`.
fn expm_action(op: &SparseOp, v: &[f64]) -> Vec<f64> {
    let steps = op.max_abs_row_sum().ceil().max(1.0) as usize;
    let h = 1.0 / steps as f64;
    let mut state = v.to_vec();
    let mut term = vec![0.0; v.len()];
    let mut next = vec![0.0; v.len()];
    for _ in 0..steps {
        term.copy_from_slice(&state);
        let mut acc = state.clone();
        for k in 1..=60 {
            op.apply(&term, &mut next);
            let scale = h / k as f64;
            let mut norm = 0.0_f64;
            for (t, n) in term.iter_mut().zip(&next) {
                *t = n * scale;
                norm = norm.max(t.abs());
            }
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t;
            }
            if norm < 1e-18 {
                break;
            }
        }
        state = acc;
    }
    state
}

/// Gaussian state `exp((r/2) Σ G_ij (a†_i a†_j − a_i a_j))|0⟩` truncated to `cutoff` per mode.
///
/// The evolution runs in a padded space of `2·cutoff` levels so the hard wall of the
/// truncated generator does not disturb the retained amplitudes.
pub fn gaussian_to_fock(g: &RMat, r: f64, cutoff: usize) -> Result<FockTensor> {
    let n = check_square(g)?;
    check_finite(g, "generator matrix")?;
    check_symmetric(g, 1e-12)?;
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidParameter {
            name: "r",
            reason: format!("squeezing must be finite and non-negative, got {r}"),
        });
    }
    tensor_len(n, cutoff)?;
    let work = 2 * cutoff;
    tensor_len(n, work)?;
    let op = squeezing_generator(g, r, n, work);
    let mut v = vec![0.0; work.pow(n as u32)];
    v[0] = 1.0;
    let evolved = expm_action(&op, &v);

    let mut out = FockTensor::vacuum(n, cutoff)?;
    out.amplitudes[0] = Complex64::new(0.0, 0.0);
    let stride: Vec<usize> = (0..n).map(|j| work.pow((n - 1 - j) as u32)).collect();
    let mut kept = 0.0;
    for (k, occ) in out.occupations().enumerate() {
        let src: usize = occ.iter().zip(&stride).map(|(a, s)| a * s).sum();
        let a = evolved[src];
        kept += a * a;
        out.amplitudes[k] = Complex64::new(a, 0.0);
    }
    out.norm_deficit = (1.0 - kept).max(0.0);
    if out.norm_deficit > 1e-6 {
        log::warn!(
            "Fock truncation at cutoff {cutoff} loses {:.3e} of the norm",
            out.norm_deficit
        );
    }
    Ok(out)
}

/// Block of `exp(θ(a†b − ab†))`, `cos θ = √τ`, on the `n+1` states `|n−k, k⟩`, `k = 0..=n`.
pub fn beamsplitter_block(tau: f64, n: usize) -> RMat {
    let theta = tau.sqrt().acos();
    let mut gen = RMat::zeros(n + 1, n + 1);
    // a†b |n−k, k⟩ = √((n−k+1) k) |n−k+1, k−1⟩
    for k in 1..=n {
        let amp = (((n - k + 1) * k) as f64).sqrt();
        gen[(k - 1, k)] += theta * amp;
        gen[(k, k - 1)] -= theta * amp;
    }
    expm(&gen)
}

fn check_tau(tau: f64) -> Result<()> {
    if !tau.is_finite() || !(0.0..1.0).contains(&tau) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("transmissivity must lie in [0, 1), got {tau}"),
        });
    }
    Ok(())
}

/// Mixes every mode with a vacuum ancilla and projects the ancillas on `|m⃗⟩`.
///
/// Returns the normalised heralded state and the joint probability relative to the input.
/// When the probability is zero the returned tensor is all zeros.
pub fn subtract_fock(state: &FockTensor, tau: f64, pattern: &[u32]) -> Result<(FockTensor, f64)> {
    check_tau(tau)?;
    if pattern.len() != state.n_modes {
        return Err(Error::DimensionMismatch {
            what: "subtraction pattern",
            expected: state.n_modes,
            got: pattern.len(),
        });
    }
    let d = state.cutoff;
    // table[k][j] = ⟨k−j, j| U |k, 0⟩
    let table: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            beamsplitter_block(tau, k)
                .column(0)
                .iter()
                .copied()
                .collect()
        })
        .collect();
    let mut current = state.amplitudes.clone();
    let stride: Vec<usize> = (0..state.n_modes)
        .map(|j| d.pow((state.n_modes - 1 - j) as u32))
        .collect();
    for (mode, &m) in pattern.iter().enumerate() {
        let m = m as usize;
        let mut next = vec![Complex64::new(0.0, 0.0); current.len()];
        for (idx, occ) in state.occupations().enumerate() {
            let k = occ[mode];
            if k < m || current[idx] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let dst = idx - m * stride[mode];
            next[dst] += current[idx] * table[k][m];
        }
        current = next;
    }
    let probability: f64 = current.iter().map(|z| z.norm_sqr()).sum();
    if probability > 0.0 {
        let s = probability.sqrt();
        for z in current.iter_mut() {
            *z /= s;
        }
    }
    Ok((
        FockTensor {
            n_modes: state.n_modes,
            cutoff: d,
            amplitudes: current,
            norm_deficit: state.norm_deficit,
        },
        probability,
    ))
}

/// Number-state amplitudes of the target on the tensor's truncated basis.
pub fn target_amplitudes(
    target: &BinaryPhaseTarget,
    n_modes: usize,
    cutoff: usize,
) -> Result<Vec<Complex64>> {
    if target.n_modes() != n_modes {
        return Err(Error::ModeMismatch {
            state: n_modes,
            target: target.n_modes(),
        });
    }
    let gamma = target.gamma();
    let env = (-gamma.norm_sqr() / 2.0).exp();
    // coherent[n] = e^{−|γ|²/2} γⁿ/√n!
    let mut coherent = vec![Complex64::new(env, 0.0); cutoff];
    for n in 1..cutoff {
        coherent[n] = coherent[n - 1] * gamma / (n as f64).sqrt();
    }
    let mut out = Vec::with_capacity(tensor_len(n_modes, cutoff)?);
    match target.cat_amplitudes() {
        Some(cat) => {
            // |b̄⟩ has support only on n ≡ b (mod 2): amplitude 2·coherent[n]/N_b.
            let (n0, n1) = cat_norms(gamma);
            for occ in Occupations::new(n_modes, cutoff) {
                let mut bits = 0usize;
                let mut w = Complex64::new(1.0, 0.0);
                for (j, &n) in occ.iter().enumerate() {
                    let norm = if n % 2 == 0 { n0 } else { n1 };
                    if n % 2 == 1 {
                        bits |= 1 << j;
                    }
                    w *= coherent[n] * (2.0 / norm);
                }
                out.push(cat[bits] * w);
            }
        }
        None => {
            for occ in Occupations::new(n_modes, cutoff) {
                let mut acc = Complex64::new(0.0, 0.0);
                for term in target.terms() {
                    let mut w = term.coeff;
                    for (j, &n) in occ.iter().enumerate() {
                        let sign = if term.flips[j] && n % 2 == 1 {
                            -1.0
                        } else {
                            1.0
                        };
                        w *= coherent[n] * sign;
                    }
                    acc += w;
                }
                out.push(acc);
            }
        }
    }
    Ok(out)
}

/// `|⟨C|ψ⟩|²` for a normalised heralded tensor.
pub fn fidelity_fock(heralded: &FockTensor, target: &BinaryPhaseTarget) -> Result<f64> {
    let t = target_amplitudes(target, heralded.n_modes, heralded.cutoff)?;
    let overlap: Complex64 = t
        .iter()
        .zip(&heralded.amplitudes)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(overlap.norm_sqr())
}
