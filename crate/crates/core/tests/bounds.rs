//! Analytic bound claims checked against exact fidelities on their stated small-amplitude grids.

use photonsub::cli::run::patterns_up_to;
use photonsub::fock::{fidelity_fock, gaussian_to_fock, subtract_fock};
use photonsub::linalg::RMat;
use photonsub::targets::{gamma_from_quadratures, BinaryPhaseTarget};
use photonsub::{FidelityEvaluator, GaussianState, SubtractionSpec};

fn all_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let slots: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    (0..1usize << slots.len())
        .map(|mask| {
            slots
                .iter()
                .enumerate()
                .filter(|(k, _)| (mask >> k) & 1 == 1)
                .map(|(_, e)| *e)
                .collect()
        })
        .collect()
}

#[test]
fn general_bound_dominates_on_small_amplitude_grid() {
    let mut violations = 0;
    let mut worst: Option<(f64, f64, f64, f64, u32, f64, BinaryPhaseTarget)> = None;
    for r in [0.3, 0.7, 1.0] {
        let state = GaussianState::from_hamiltonian(RMat::from_element(1, 1, 1.0), r).unwrap();
        for tau in [0.001, 0.01, 0.05] {
            for m in 0..=4u32 {
                let eval =
                    FidelityEvaluator::new(&state, &SubtractionSpec::new(tau, vec![m]).unwrap())
                        .unwrap();
                for x in [0.05, 0.1, 0.2, 0.3] {
                    let z = gamma_from_quadratures(x, 0.0);
                    for t in [
                        BinaryPhaseTarget::cat_even(z).unwrap(),
                        BinaryPhaseTarget::cat_odd(z).unwrap(),
                        BinaryPhaseTarget::plus_state(z).unwrap(),
                    ] {
                        let rep = eval.evaluate(&t).unwrap();
                        let Some(f) = rep.fidelity else { continue };
                        let excess = f - rep.bound_general;
                        if excess > 1e-9 {
                            violations += 1;
                            if worst.as_ref().is_none_or(|w| excess > w.0 - w.1) {
                                worst = Some((f, rep.bound_general, r, tau, m, x, t));
                            }
                        }
                    }
                }
            }
        }
    }
    if let Some((f, b, r, tau, m, x, t)) = worst {
        let fock = gaussian_to_fock(&RMat::from_element(1, 1, 1.0), r, 40).unwrap();
        let (heralded, _) = subtract_fock(&fock, tau, &[m]).unwrap();
        let f_fock = fidelity_fock(&heralded, &t).unwrap();
        panic!(
            "{violations} grid points exceed the general bound; worst: {:?} r={r} tau={tau} m={m} q={x}: \
             F={f:.10} (Fock oracle {f_fock:.10}) > bound {b:.10}",
            t.kind()
        );
    }
}

#[test]
fn odd_patterns_keep_cluster_fidelity_below_vacuum_limit() {
    let generators: Vec<RMat> = vec![
        RMat::from_element(1, 1, 1.0),
        RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        RMat::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]),
        RMat::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]),
        RMat::from_row_slice(3, 3, &[0.0, -1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0]),
    ];
    let z = gamma_from_quadratures(1e-3, 0.0);
    let mut violations = Vec::new();
    for g in &generators {
        let n = g.nrows();
        let limit = 0.5f64.powi(n as i32);
        for r in [0.4, 0.8, 1.2] {
            let state = GaussianState::from_hamiltonian(g.clone(), r).unwrap();
            for tau in [0.01, 0.05] {
                for pattern in patterns_up_to(n, 4) {
                    if pattern.iter().all(|m| m % 2 == 0) {
                        continue;
                    }
                    let eval = FidelityEvaluator::new(
                        &state,
                        &SubtractionSpec::new(tau, pattern.clone()).unwrap(),
                    )
                    .unwrap();
                    if !eval.is_reachable() {
                        continue;
                    }
                    for edges in all_graphs(n) {
                        let t = BinaryPhaseTarget::cccs(n, &edges, z).unwrap();
                        let f = eval.evaluate(&t).unwrap().fidelity.unwrap();
                        if f >= limit {
                            violations.push((
                                f - limit,
                                format!(
                                    "G={:?} r={r} tau={tau} m={pattern:?} edges={edges:?} F={f:.6}",
                                    g.as_slice()
                                ),
                            ));
                        }
                    }
                }
            }
        }
    }
    violations.sort_by(|a, b| b.0.total_cmp(&a.0));
    assert!(
        violations.is_empty(),
        "{} cases reach 1/2^N; worst: {}",
        violations.len(),
        violations[0].1
    );
}
