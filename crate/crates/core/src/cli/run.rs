//! Evaluation of validated experiments into result tables.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{g_matrix_from_rows, Experiment, StateSource, SweepVariable};
use crate::fidelity::{amplitude_bound, closed_form_f2, closed_form_f3, f_n, FidelityEvaluator};
use crate::fock::{fidelity_fock, gaussian_to_fock, subtract_fock};
use crate::gaussian_state::GaussianState;
use crate::linalg::RMat;
use crate::subtraction::{success_probability, SubtractionSpec};
use crate::targets::{BinaryPhaseTarget, ParityClass, TargetKind};
use crate::Result;

pub const CSV_HEADER: [&str; 9] = [
    "sweep_value",
    "F",
    "R",
    "P_m",
    "bound_general",
    "bound_vacuum",
    "parity_class",
    "oracle_F",
    "norm_deficit",
];

/// One line of the result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub sweep_value: Option<f64>,
    pub fidelity: Option<f64>,
    pub ratio: Option<f64>,
    pub probability: f64,
    pub bound_general: f64,
    pub bound_vacuum: Option<f64>,
    pub parity_class: ParityClass,
    pub oracle_fidelity: Option<f64>,
    pub oracle_probability: Option<f64>,
    pub norm_deficit: Option<f64>,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl Row {
    pub fn csv_record(&self) -> [String; 9] {
        [
            opt(self.sweep_value),
            opt(self.fidelity),
            opt(self.ratio),
            self.probability.to_string(),
            self.bound_general.to_string(),
            opt(self.bound_vacuum),
            self.parity_class.as_str().to_string(),
            opt(self.oracle_fidelity),
            opt(self.norm_deficit),
        ]
    }
}

pub fn write_rows<W: Write>(rows: &[Row], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.csv_record())?;
    }
    w.flush()
}

/// Experiment parameters at one sweep point.
#[derive(Debug, Clone)]
struct Point {
    state: StateSource,
    tau: f64,
    gamma_q: f64,
    gamma_p: f64,
}

fn point_at(exp: &Experiment, value: Option<f64>) -> Point {
    let mut p = Point {
        state: exp.state.clone(),
        tau: exp.tau,
        gamma_q: exp.target.gamma_q,
        gamma_p: exp.target.gamma_p,
    };
    if let (Some(sweep), Some(v)) = (&exp.sweep, value) {
        match sweep.variable {
            SweepVariable::GammaQ => p.gamma_q = v,
            SweepVariable::GammaP => p.gamma_p = v,
            SweepVariable::Tau => p.tau = v,
            SweepVariable::R => {
                p.state = exp
                    .state
                    .with_r(v)
                    .expect("validated: r sweeps need a generator")
            }
        }
    }
    p
}

fn target_at(exp: &Experiment, p: &Point) -> Result<BinaryPhaseTarget> {
    let mut spec = exp.target.clone();
    spec.gamma_q = p.gamma_q;
    spec.gamma_p = p.gamma_p;
    spec.build()
}

fn evaluate_point(exp: &Experiment, value: Option<f64>, oracle: bool) -> Result<Row> {
    let p = point_at(exp, value);
    let state = p.state.build()?;
    let spec = SubtractionSpec::new(p.tau, exp.pattern.clone())?;
    let target = target_at(exp, &p)?;
    let report = FidelityEvaluator::new(&state, &spec)?.evaluate(&target)?;
    let mut row = Row {
        sweep_value: value,
        fidelity: report.fidelity,
        ratio: report.ratio,
        probability: report.probability,
        bound_general: report.bound_general,
        bound_vacuum: report.bound_vacuum,
        parity_class: report.parity_class,
        oracle_fidelity: None,
        oracle_probability: None,
        norm_deficit: None,
    };
    if oracle {
        if let StateSource::Hamiltonian { g, r } = &p.state {
            let fock = gaussian_to_fock(g, *r, exp.oracle_cutoff)?;
            let (heralded, prob) = subtract_fock(&fock, p.tau, &exp.pattern)?;
            row.norm_deficit = Some(fock.norm_deficit());
            row.oracle_probability = Some(prob);
            if prob > 0.0 && report.fidelity.is_some() {
                row.oracle_fidelity = Some(fidelity_fock(&heralded, &target)?);
            }
        } else {
            log::warn!("the Fock oracle needs a [state.hamiltonian] state; column left empty");
        }
    }
    Ok(row)
}

/// Single point at the configured parameters.
pub fn run_point(exp: &Experiment, force_oracle: bool) -> Result<Row> {
    evaluate_point(exp, None, exp.oracle_enabled || force_oracle)
}

/// One row per sweep value, in sweep order, evaluated in parallel.
pub fn run_sweep(exp: &Experiment, force_oracle: bool) -> Result<Vec<Row>> {
    let oracle = exp.oracle_enabled || force_oracle;
    match &exp.sweep {
        None => Ok(vec![run_point(exp, force_oracle)?]),
        Some(sweep) => sweep
            .values()
            .into_par_iter()
            .map(|v| evaluate_point(exp, Some(v), oracle))
            .collect(),
    }
}

/// Analytic bounds only: no integrals are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSummary {
    pub parity_class: ParityClass,
    pub bound_general: f64,
    pub bound_vacuum: Option<f64>,
    pub vacuum_overlap: f64,
    pub f_n: Option<f64>,
    pub f_n_bound: Option<f64>,
    pub amplitude_bound: Option<f64>,
}

pub fn run_bound(exp: &Experiment) -> Result<BoundSummary> {
    let target = exp.target.build()?;
    let pattern = &exp.pattern;
    let parity_class = target.parity_class(pattern);
    let bound_general = crate::fidelity::bound_general(&target, pattern)?;
    let vacuum_overlap = target.vacuum_overlap();
    let bound_vacuum = (parity_class != ParityClass::Mixed).then_some(vacuum_overlap);
    let (mut fv, mut fb, mut ab) = (None, None, None);
    if let StateSource::Hamiltonian { g, r } = &exp.state {
        let cert = f_n(g, *r)?;
        fv = Some(cert.value);
        fb = Some(cert.bound);
        if matches!(exp.target.kind, TargetKind::Cccs | TargetKind::Ghz) {
            ab = Some(amplitude_bound(
                exp.target.kind,
                exp.target.modes,
                exp.tau,
                cert.value,
                exp.target.gamma_q,
                exp.target.gamma_p,
            )?);
        }
    }
    Ok(BoundSummary {
        parity_class,
        bound_general,
        bound_vacuum,
        vacuum_overlap,
        f_n: fv,
        f_n_bound: fb,
        amplitude_bound: ab,
    })
}

pub fn write_bound<W: Write>(b: &BoundSummary, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["quantity", "value"])?;
    w.write_record(["parity_class", b.parity_class.as_str()])?;
    w.write_record(["bound_general", &b.bound_general.to_string()])?;
    w.write_record(["bound_vacuum", &opt(b.bound_vacuum)])?;
    w.write_record(["vacuum_overlap", &b.vacuum_overlap.to_string()])?;
    w.write_record(["f_N", &opt(b.f_n)])?;
    w.write_record(["f_N_bound", &opt(b.f_n_bound)])?;
    w.write_record(["amplitude_bound", &opt(b.amplitude_bound)])?;
    w.flush()
}

/// All patterns with `Σ m_j ≤ max_total`, in graded lexicographic order.
pub fn patterns_up_to(n_modes: usize, max_total: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=max_total {
        let mut cur = vec![0u32; n_modes];
        compositions(total, 0, &mut cur, &mut out);
    }
    out
}

fn compositions(left: u32, idx: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if idx + 1 == cur.len() {
        cur[idx] = left;
        out.push(cur.clone());
        return;
    }
    for k in (0..=left).rev() {
        cur[idx] = k;
        compositions(left - k, idx + 1, cur, out);
    }
    cur[idx] = 0;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityRow {
    pub pattern: Vec<u32>,
    pub probability: f64,
}

/// Heralding probabilities up to a total photon number, omitting exactly unreachable patterns.
pub fn run_prob(exp: &Experiment, max_total: u32) -> Result<Vec<ProbabilityRow>> {
    let state = exp.state.build()?;
    let rows: Result<Vec<ProbabilityRow>> = patterns_up_to(state.n_modes(), max_total)
        .into_par_iter()
        .map(|pattern| {
            let spec = SubtractionSpec::new(exp.tau, pattern.clone())?;
            Ok(ProbabilityRow {
                probability: success_probability(&state, &spec)?,
                pattern,
            })
        })
        .collect();
    Ok(rows?.into_iter().filter(|r| r.probability > 0.0).collect())
}

fn pattern_string(p: &[u32]) -> String {
    p.iter()
        .map(|m| m.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn write_prob<W: Write>(rows: &[ProbabilityRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pattern", "M", "P_m"])?;
    for r in rows {
        let total: u32 = r.pattern.iter().sum();
        w.write_record([
            pattern_string(&r.pattern),
            total.to_string(),
            r.probability.to_string(),
        ])?;
    }
    w.flush()
}

/// One comparison between the kernel, Fock and (where available) closed-form paths.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub label: String,
    pub kernel_f: Option<f64>,
    pub fock_f: Option<f64>,
    pub closed_f: Option<f64>,
    pub kernel_p: f64,
    pub fock_p: f64,
    pub norm_deficit: f64,
}

impl OracleComparison {
    /// Largest pairwise disagreement among the available values.
    pub fn max_deviation(&self) -> f64 {
        let fs: Vec<f64> = [self.kernel_f, self.fock_f, self.closed_f]
            .into_iter()
            .flatten()
            .collect();
        let mut worst = (self.kernel_p - self.fock_p).abs();
        for a in &fs {
            for b in &fs {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }
}

pub const ORACLE_TOLERANCE: f64 = 1e-6;

/// Compares all paths on one `(G, r, τ, m⃗, target)` tuple.
pub fn compare_paths(
    g: &RMat,
    r: f64,
    tau: f64,
    pattern: &[u32],
    target: &BinaryPhaseTarget,
    cutoff: usize,
) -> Result<OracleComparison> {
    let state = GaussianState::from_hamiltonian(g.clone(), r)?;
    let spec = SubtractionSpec::new(tau, pattern.to_vec())?;
    let report = FidelityEvaluator::new(&state, &spec)?.evaluate(target)?;
    let fock = gaussian_to_fock(g, r, cutoff)?;
    let (heralded, fock_p) = subtract_fock(&fock, tau, pattern)?;
    let fock_f = if report.fidelity.is_some() && fock_p > 0.0 {
        Some(fidelity_fock(&heralded, target)?)
    } else {
        None
    };
    let smsv = g.nrows() == 1 && g[(0, 0)] == 1.0 && pattern == [1];
    let gamma = target.gamma();
    let (q, p) = (
        gamma.re * std::f64::consts::SQRT_2,
        gamma.im * std::f64::consts::SQRT_2,
    );
    let closed_f = match target.kind() {
        TargetKind::CatOdd if smsv => Some(closed_form_f2(r, tau, q, p)),
        TargetKind::Plus if smsv => Some(closed_form_f3(r, tau, q, p)),
        _ => None,
    };
    Ok(OracleComparison {
        label: format!(
            "G={:?} r={r} tau={tau} m=({}) target={:?} gamma={}",
            g.as_slice(),
            pattern_string(pattern),
            target.kind(),
            gamma
        ),
        kernel_f: report.fidelity,
        fock_f,
        closed_f,
        kernel_p: report.probability,
        fock_p,
        norm_deficit: fock.norm_deficit(),
    })
}

/// The built-in comparison grid used when `oracle-check` is run without a config.
pub fn default_oracle_grid(cutoff: usize) -> Result<Vec<OracleComparison>> {
    let gs = [
        RMat::from_element(1, 1, 1.0),
        RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        RMat::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 0.0]),
    ];
    let gammas = [Complex64::new(0.2, 0.0), Complex64::new(0.3, -0.15)];
    let mut tasks = Vec::new();
    for g in &gs {
        let n = g.nrows();
        for &r in &[0.5, 1.0] {
            for &tau in &[0.01, 0.1] {
                for pattern in patterns_up_to(n, 2) {
                    for &gamma in &gammas {
                        tasks.push((g.clone(), r, tau, pattern.clone(), gamma));
                    }
                }
            }
        }
    }
    tasks
        .into_par_iter()
        .map(|(g, r, tau, pattern, gamma)| {
            let target = if g.nrows() == 1 {
                if pattern[0] % 2 == 1 {
                    BinaryPhaseTarget::cat_odd(gamma)?
                } else {
                    BinaryPhaseTarget::plus_state(gamma)?
                }
            } else if pattern.iter().sum::<u32>() % 2 == 0 {
                BinaryPhaseTarget::cccs(2, &[(0, 1)], gamma)?
            } else {
                BinaryPhaseTarget::ghz(2, gamma)?
            };
            compare_paths(&g, r, tau, &pattern, &target, cutoff)
        })
        .collect()
}

/// Oracle comparisons at every point of a configured experiment.
pub fn experiment_oracle_check(exp: &Experiment) -> Result<Vec<OracleComparison>> {
    let values: Vec<Option<f64>> = match &exp.sweep {
        Some(s) => s.values().into_iter().map(Some).collect(),
        None => vec![None],
    };
    values
        .into_par_iter()
        .map(|v| {
            let p = point_at(exp, v);
            let StateSource::Hamiltonian { g, r } = &p.state else {
                return Err(crate::Error::InvalidParameter {
                    name: "state",
                    reason: "the Fock oracle needs a [state.hamiltonian] state".into(),
                });
            };
            let target = target_at(exp, &p)?;
            compare_paths(g, *r, p.tau, &exp.pattern, &target, exp.oracle_cutoff)
        })
        .collect()
}

pub fn write_oracle<W: Write>(rows: &[OracleComparison], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "case",
        "F_kernel",
        "F_fock",
        "F_closed",
        "P_kernel",
        "P_fock",
        "max_deviation",
        "norm_deficit",
    ])?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            opt(r.kernel_f),
            opt(r.fock_f),
            opt(r.closed_f),
            r.kernel_p.to_string(),
            r.fock_p.to_string(),
            r.max_deviation().to_string(),
            r.norm_deficit.to_string(),
        ])?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchHit {
    pub g: RMat,
    pub r: f64,
    pub tau: f64,
    pub pattern: Vec<u32>,
    pub fidelity: f64,
    pub probability: f64,
}

/// Every symmetric `n × n` matrix over `{−1, 0, 1}`, except the zero matrix.
pub fn all_generators(n: usize) -> Vec<RMat> {
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let count = 3usize.pow(slots.len() as u32);
    (0..count)
        .map(|mut code| {
            let mut g = RMat::zeros(n, n);
            for &(i, j) in &slots {
                let v = (code % 3) as f64 - 1.0;
                code /= 3;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
            g
        })
        .filter(|g| g.iter().any(|x| *x != 0.0))
        .collect()
}

/// Grid search over `(G, r, τ, m⃗)` for the configured target, best fidelity first.
pub fn run_search(exp: &Experiment) -> Result<Vec<SearchHit>> {
    let search = exp
        .search
        .as_ref()
        .ok_or_else(|| crate::Error::InvalidParameter {
            name: "search",
            reason: "the config has no [search] section".into(),
        })?;
    let n = exp.state.n_modes();
    let gs: Vec<RMat> = match &search.g_matrices {
        Some(list) => list
            .iter()
            .map(|rows| g_matrix_from_rows(rows, "search").expect("validated"))
            .collect(),
        None => all_generators(n),
    };
    let target = exp.target.build()?;
    let mut tasks = Vec::new();
    for g in &gs {
        for &r in &search.r {
            for &tau in &search.tau {
                tasks.push((g.clone(), r, tau));
            }
        }
    }
    let per_task: Result<Vec<Vec<SearchHit>>> = tasks
        .into_par_iter()
        .map(|(g, r, tau)| {
            let state = GaussianState::from_hamiltonian(g.clone(), r)?;
            let mut hits = Vec::new();
            for pattern in patterns_up_to(n, search.max_photons) {
                let spec = SubtractionSpec::new(tau, pattern.clone())?;
                let rep = FidelityEvaluator::new(&state, &spec)?.evaluate(&target)?;
                if let Some(f) = rep.fidelity {
                    hits.push(SearchHit {
                        g: g.clone(),
                        r,
                        tau,
                        pattern,
                        fidelity: f,
                        probability: rep.probability,
                    });
                }
            }
            Ok(hits)
        })
        .collect();
    let mut hits: Vec<SearchHit> = per_task?.into_iter().flatten().collect();
    hits.sort_by(|a, b| b.fidelity.total_cmp(&a.fidelity));
    hits.truncate(search.top);
    Ok(hits)
}

pub fn write_search<W: Write>(hits: &[SearchHit], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["g_matrix", "r", "tau", "pattern", "F", "P_m"])?;
    for h in hits {
        let g: Vec<String> = (0..h.g.nrows())
            .map(|i| {
                (0..h.g.ncols())
                    .map(|j| (h.g[(i, j)] as i64).to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        w.write_record([
            g.join("; "),
            h.r.to_string(),
            h.tau.to_string(),
            pattern_string(&h.pattern),
            h.fidelity.to_string(),
            h.probability.to_string(),
        ])?;
    }
    w.flush()
}
