//! Gaussian integrals with polynomial prefactors.
//!
//! Evaluates
//!
//! ```text
//! ∫ d^{2K}x exp(-½ xᵀ M x + bᵀ x) ∏_j (u_jᵀ x)^{m_j}
//! ```
//!
//! for complex symmetric `M` with positive-definite real part. The fast path expands the
//! product into a sum over matchings-with-loops (pairs contract through `u_jᵀ M⁻¹ u_k`, loops
//! through `u_jᵀ M⁻¹ b`), grouped by how many pairs join each pair of distinct directions.
//! [`moment_reference`] computes the same number by expanding `exp(cᵀλ + ½ λᵀAλ)` as a
//! truncated multivariate power series and reading off the `λ^m` coefficient.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{accretive_log_det, check_square, inverse, CMat, CVec, RMat};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// One factor `(uᵀx)^power` of the polynomial prefactor.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub direction: CVec,
    pub power: u32,
}

impl Monomial {
    pub fn new(direction: CVec, power: u32) -> Self {
        Self { direction, power }
    }
}

#[derive(Debug, Clone)]
pub struct MomentProblem {
    pub kernel: CMat,
    pub linear: CVec,
    pub monomials: Vec<Monomial>,
}

impl MomentProblem {
    pub fn new(kernel: CMat, linear: CVec, monomials: Vec<Monomial>) -> Result<Self> {
        let dim = validate_kernel(&kernel)?;
        if linear.len() != dim {
            return Err(Error::DimensionMismatch {
                what: "linear term",
                expected: dim,
                got: linear.len(),
            });
        }
        for m in &monomials {
            if m.direction.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "monomial direction",
                    expected: dim,
                    got: m.direction.len(),
                });
            }
            if m.direction.iter().all(|z| *z == ZERO) {
                return Err(Error::InvalidParameter {
                    name: "direction",
                    reason: "monomial directions must be nonzero".into(),
                });
            }
        }
        Ok(Self {
            kernel,
            linear,
            monomials,
        })
    }

    pub fn dim(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn total_power(&self) -> u32 {
        self.monomials.iter().map(|m| m.power).sum()
    }
}

/// A complex value stored as `value · exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentResult {
    pub value: Complex64,
    pub log_scale: f64,
}

impl MomentResult {
    pub fn zero() -> Self {
        Self {
            value: ZERO,
            log_scale: 0.0,
        }
    }

    pub fn from_log(log: Complex64) -> Self {
        Self {
            value: Complex64::from_polar(1.0, log.im),
            log_scale: log.re,
        }
    }

    pub fn scaled(self, factor: Complex64) -> Self {
        Self {
            value: self.value * factor,
            log_scale: self.log_scale,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value == ZERO
    }

    pub fn to_complex(&self) -> Complex64 {
        self.value * self.log_scale.exp()
    }

    /// `ln |value|`, or `-inf` for an exact zero.
    pub fn ln_abs(&self) -> f64 {
        self.value.norm().ln() + self.log_scale
    }
}

fn validate_kernel(kernel: &CMat) -> Result<usize> {
    let dim = check_square(kernel)?;
    if dim == 0 || dim % 2 != 0 {
        return Err(Error::InvalidParameter {
            name: "kernel",
            reason: format!("integration dimension must be even and positive, got {dim}"),
        });
    }
    if kernel
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::NonFinite("kernel"));
    }
    let scale = kernel.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
    for i in 0..dim {
        for j in (i + 1)..dim {
            let gap = (kernel[(i, j)] - kernel[(j, i)]).norm();
            if gap > 1e-12 * scale {
                return Err(Error::NotSymmetric(gap));
            }
        }
    }
    let re: RMat = kernel.map(|z| z.re);
    if re.cholesky().is_none() {
        return Err(Error::NotAccretive);
    }
    Ok(dim)
}

fn bilinear(u: &CVec, v: &CVec) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

/// `(2π)^K det(M)^{-1/2} exp(½ bᵀ M⁻¹ b)` with the principal branch of `det^{-1/2}`.
pub fn base_integral(kernel: &CMat, linear: &CVec) -> Result<MomentResult> {
    let dim = validate_kernel(kernel)?;
    if linear.len() != dim {
        return Err(Error::DimensionMismatch {
            what: "linear term",
            expected: dim,
            got: linear.len(),
        });
    }
    let log_det = accretive_log_det(kernel)?;
    let solved = kernel.clone().lu().solve(linear).ok_or(Error::Singular)?;
    Ok(MomentResult::from_log(gaussian_log(
        dim,
        log_det,
        bilinear(linear, &solved),
    )))
}

fn gaussian_log(dim: usize, log_det: Complex64, quad: Complex64) -> Complex64 {
    let k = (dim / 2) as f64;
    Complex64::new(k * (2.0 * std::f64::consts::PI).ln(), 0.0) - 0.5 * log_det + 0.5 * quad
}

/// Kernel-dependent data for repeated evaluation with different linear terms.
#[derive(Debug, Clone)]
pub struct PreparedMoment {
    dim: usize,
    inverse: CMat,
    log_det: Complex64,
    powers: Vec<u32>,
    /// `M⁻¹ u_j`; loop contractions are `(M⁻¹ u_j)ᵀ b`.
    solved_dirs: Vec<CVec>,
    dir_l1: Vec<f64>,
    inv_max: f64,
    pair: CMat,
}

impl PreparedMoment {
    pub fn new(kernel: &CMat, monomials: &[Monomial]) -> Result<Self> {
        let dim = validate_kernel(kernel)?;
        let log_det = accretive_log_det(kernel)?;
        let inverse = inverse(kernel)?;
        let inv_max = inverse.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));

        let kept: Vec<&Monomial> = monomials.iter().filter(|m| m.power > 0).collect();
        for m in &kept {
            if m.direction.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "monomial direction",
                    expected: dim,
                    got: m.direction.len(),
                });
            }
        }
        let powers: Vec<u32> = kept.iter().map(|m| m.power).collect();
        let solved_dirs: Vec<CVec> = kept.iter().map(|m| &inverse * &m.direction).collect();
        let dir_l1: Vec<f64> = kept
            .iter()
            .map(|m| m.direction.iter().map(|z| z.norm()).sum())
            .collect();
        let d = kept.len();
        let mut pair = CMat::zeros(d, d);
        for j in 0..d {
            for k in j..d {
                let raw = bilinear(&kept[j].direction, &solved_dirs[k]);
                let tol = roundoff(dim) * inv_max * dir_l1[j] * dir_l1[k];
                let v = if raw.norm() <= tol { ZERO } else { raw };
                pair[(j, k)] = v;
                pair[(k, j)] = v;
            }
        }
        Ok(Self {
            dim,
            inverse,
            log_det,
            powers,
            solved_dirs,
            dir_l1,
            inv_max,
            pair,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total_power(&self) -> u32 {
        self.powers.iter().sum()
    }

    /// Pair contractions `u_jᵀ M⁻¹ u_k` over the retained (nonzero-power) directions.
    pub fn pair_contractions(&self) -> &CMat {
        &self.pair
    }

    pub fn evaluate(&self, linear: &CVec) -> Result<MomentResult> {
        if linear.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "linear term",
                expected: self.dim,
                got: linear.len(),
            });
        }
        let b_zero = linear.iter().all(|z| *z == ZERO);
        if b_zero && self.total_power() % 2 == 1 {
            return Ok(MomentResult::zero());
        }
        let quad = if b_zero {
            ZERO
        } else {
            bilinear(linear, &(&self.inverse * linear))
        };
        let base = MomentResult::from_log(gaussian_log(self.dim, self.log_det, quad));

        let b_l1: f64 = linear.iter().map(|z| z.norm()).sum();
        let loops: Vec<Complex64> = self
            .solved_dirs
            .iter()
            .zip(&self.dir_l1)
            .map(|(w, l1)| {
                if b_zero {
                    return ZERO;
                }
                let raw = bilinear(w, linear);
                let tol = roundoff(self.dim) * self.inv_max * l1 * b_l1;
                if raw.norm() <= tol {
                    ZERO
                } else {
                    raw
                }
            })
            .collect();
        let poly = wick_sum(&self.pair, &loops, &self.powers);
        if poly == ZERO {
            return Ok(MomentResult::zero());
        }
        Ok(base.scaled(poly))
    }
}

fn roundoff(dim: usize) -> f64 {
    64.0 * f64::EPSILON * dim as f64
}

/// `∏ m_j! · Σ ∏_{j<k} A_jk^{n_jk}/n_jk! · ∏_j h_j(r_j)` over off-diagonal pair counts, where
/// `h_j(r) = Σ_n A_jj^n c_j^{r-2n} / (n! 2^n (r-2n)!)` collects self-pairs and loops.
fn wick_sum(pair: &CMat, loops: &[Complex64], powers: &[u32]) -> Complex64 {
    let d = powers.len();
    if d == 0 {
        return ONE;
    }
    let max_pow = *powers.iter().max().unwrap() as usize;
    let fact = factorials(max_pow);

    let diag: Vec<Vec<Complex64>> = (0..d)
        .map(|j| {
            (0..=powers[j] as usize)
                .map(|r| {
                    let mut acc = ZERO;
                    for n in 0..=r / 2 {
                        let l = r - 2 * n;
                        if l > 0 && loops[j] == ZERO {
                            continue;
                        }
                        let term = pair[(j, j)].powu(n as u32) * loops[j].powu(l as u32)
                            / (fact[n] * 2f64.powi(n as i32) * fact[l]);
                        acc += term;
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
        .filter(|&(j, k)| pair[(j, k)] != ZERO)
        .collect();

    let mut remaining: Vec<usize> = powers.iter().map(|&p| p as usize).collect();
    let mut total = ZERO;
    enumerate_pairs(&pairs, 0, pair, &diag, &mut remaining, ONE, &mut total);
    let norm: f64 = powers.iter().map(|&p| fact[p as usize]).product();
    total * norm
}

fn enumerate_pairs(
    pairs: &[(usize, usize)],
    idx: usize,
    pair: &CMat,
    diag: &[Vec<Complex64>],
    remaining: &mut Vec<usize>,
    acc: Complex64,
    total: &mut Complex64,
) {
    if idx == pairs.len() {
        let mut term = acc;
        for (j, &r) in remaining.iter().enumerate() {
            let h = diag[j][r];
            if h == ZERO {
                return;
            }
            term *= h;
        }
        *total += term;
        return;
    }
    let (j, k) = pairs[idx];
    let cap = remaining[j].min(remaining[k]);
    let a = pair[(j, k)];
    let mut weight = acc;
    for n in 0..=cap {
        if n > 0 {
            weight = weight * a / n as f64;
        }
        remaining[j] -= n;
        remaining[k] -= n;
        enumerate_pairs(pairs, idx + 1, pair, diag, remaining, weight, total);
        remaining[j] += n;
        remaining[k] += n;
    }
}

fn factorials(n: usize) -> Vec<f64> {
    let mut out = vec![1.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] * k as f64;
    }
    out
}

/// Fast path: Wick expansion over matchings-with-loops.
pub fn moment(problem: &MomentProblem) -> Result<MomentResult> {
    PreparedMoment::new(&problem.kernel, &problem.monomials)?.evaluate(&problem.linear)
}

/// Slow reference: truncated power-series expansion of the generating function.
///
/// Shares only the base Gaussian integral with the fast path. Cost grows with the product of
/// `(m_j + 1)`, so it is meant for small test problems.
pub fn moment_reference(problem: &MomentProblem) -> Result<MomentResult> {
    let base = base_integral(&problem.kernel, &problem.linear)?;
    let mons: Vec<&Monomial> = problem.monomials.iter().filter(|m| m.power > 0).collect();
    if mons.is_empty() {
        return Ok(base);
    }
    let d = mons.len();
    let dim = problem.dim();
    let mut dirs = CMat::zeros(dim, d);
    for (j, m) in mons.iter().enumerate() {
        dirs.set_column(j, &m.direction);
    }
    let lu = problem.kernel.clone().lu();
    let solved = lu.solve(&dirs).ok_or(Error::Singular)?;
    let pair = dirs.transpose() * &solved;
    let loops = solved.transpose() * &problem.linear;

    let shape: Vec<usize> = mons.iter().map(|m| m.power as usize + 1).collect();
    let series = TruncatedSeries::new(shape);
    // Q(λ) = Σ c_j λ_j + ½ Σ_{jk} A_jk λ_j λ_k
    let mut q = series.zeros();
    for j in 0..d {
        let mut e = vec![0usize; d];
        e[j] = 1;
        series.add(&mut q, &e, loops[j]);
        for k in 0..d {
            let mut e2 = vec![0usize; d];
            e2[j] += 1;
            e2[k] += 1;
            series.add(&mut q, &e2, pair[(j, k)] * 0.5);
        }
    }
    let max_degree: usize = mons.iter().map(|m| m.power as usize).sum();
    let mut exp_q = series.zeros();
    let mut power = series.zeros();
    series.add(&mut power, &vec![0; d], ONE);
    let mut inv_fact = 1.0;
    for n in 0..=max_degree {
        if n > 0 {
            power = series.mul(&power, &q);
            inv_fact /= n as f64;
        }
        for (e, p) in exp_q.iter_mut().zip(&power) {
            *e += p * inv_fact;
        }
    }
    let top: Vec<usize> = mons.iter().map(|m| m.power as usize).collect();
    let coeff = exp_q[series.index(&top)];
    let norm: f64 = top.iter().map(|&p| factorials(p)[p]).product();
    let poly = coeff * norm;
    if poly == ZERO {
        return Ok(MomentResult::zero());
    }
    Ok(base.scaled(poly))
}

/// Dense multivariate polynomial truncated at per-variable degree `shape[j] - 1`.
struct TruncatedSeries {
    shape: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl TruncatedSeries {
    fn new(shape: Vec<usize>) -> Self {
        let mut strides = vec![1; shape.len()];
        for j in (0..shape.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * shape[j + 1];
        }
        let len = shape.iter().product();
        Self {
            shape,
            strides,
            len,
        }
    }

    fn zeros(&self) -> Vec<Complex64> {
        vec![ZERO; self.len]
    }

    fn index(&self, e: &[usize]) -> usize {
        e.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    fn exponents(&self, mut idx: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|s| {
                let e = idx / s;
                idx %= s;
                e
            })
            .collect()
    }

    fn add(&self, poly: &mut [Complex64], e: &[usize], v: Complex64) {
        if e.iter().zip(&self.shape).all(|(a, s)| a < s) {
            poly[self.index(e)] += v;
        }
    }

    fn mul(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.zeros();
        for (i, &x) in a.iter().enumerate() {
            if x == ZERO {
                continue;
            }
            let ei = self.exponents(i);
            for (k, &y) in b.iter().enumerate() {
                if y == ZERO {
                    continue;
                }
                let ek = self.exponents(k);
                let sum: Vec<usize> = ei.iter().zip(&ek).map(|(p, q)| p + q).collect();
                self.add(&mut out, &sum, x * y);
            }
        }
        out
    }
}
