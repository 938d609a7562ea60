use nalgebra::DMatrix;
use photonsub::fidelity::{closed_form_f2, fidelity_exact};
use photonsub::fock::{fidelity_fock, gaussian_to_fock, subtract_fock};
use photonsub::gaussian_state::GaussianState;
use photonsub::subtraction::{success_probability, SubtractionSpec};
use photonsub::targets::{gamma_from_quadratures, BinaryPhaseTarget};

fn g(rows: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, rows, data)
}

fn both_paths(
    gm: &DMatrix<f64>,
    r: f64,
    tau: f64,
    pattern: &[u32],
    target: &BinaryPhaseTarget,
) -> ((f64, f64), (f64, f64)) {
    let state = GaussianState::from_hamiltonian(gm.clone(), r).unwrap();
    let spec = SubtractionSpec::new(tau, pattern.to_vec()).unwrap();
    let rep = fidelity_exact(&state, &spec, target).unwrap();
    let fock = gaussian_to_fock(gm, r, 30).unwrap();
    let (heralded, p) = subtract_fock(&fock, tau, pattern).unwrap();
    let f = fidelity_fock(&heralded, target).unwrap();
    ((rep.fidelity.unwrap(), rep.probability), (f, p))
}

#[test]
fn smsv_single_subtraction_three_ways() {
    let gm = g(1, &[1.0]);
    let target = BinaryPhaseTarget::cat_odd(gamma_from_quadratures(0.3, 0.0)).unwrap();
    let ((fk, pk), (ff, pf)) = both_paths(&gm, 1.0, 0.01, &[1], &target);
    let cf = closed_form_f2(1.0, 0.01, 0.3, 0.0);
    assert!((fk - cf).abs() < 1e-9);
    assert!((ff - cf).abs() < 1e-6, "{ff} vs {cf}");
    assert!((pk - pf).abs() < 1e-6, "{pk} vs {pf}");
}

#[test]
fn smsv_probabilities_match() {
    let gm = g(1, &[1.0]);
    let state = GaussianState::from_hamiltonian(gm.clone(), 1.0).unwrap();
    let fock = gaussian_to_fock(&gm, 1.0, 30).unwrap();
    for (tau, m) in [(0.05, 1), (0.05, 2), (0.01, 3), (0.1, 0)] {
        let spec = SubtractionSpec::new(tau, vec![m]).unwrap();
        let pk = success_probability(&state, &spec).unwrap();
        let (_, pf) = subtract_fock(&fock, tau, &[m]).unwrap();
        assert!((pk - pf).abs() < 1e-6, "tau {tau} m {m}: {pk} vs {pf}");
    }
}

#[test]
fn entangled_cluster_target_uses_true_overlap() {
    let gm = g(2, &[0.0, -1.0, -1.0, 0.0]);
    let target = BinaryPhaseTarget::cccs(2, &[(0, 1)], gamma_from_quadratures(0.4, 0.1)).unwrap();
    for pattern in [[0, 0], [1, 1], [2, 1], [1, 0]] {
        let ((fk, pk), (ff, pf)) = both_paths(&gm, 0.9, 0.05, &pattern, &target);
        assert!((fk - ff).abs() < 1e-6, "{pattern:?}: {fk} vs {ff}");
        assert!((pk - pf).abs() < 1e-6, "{pattern:?}: {pk} vs {pf}");
    }
}

#[test]
fn ghz_two_mode() {
    let gm = g(2, &[0.0, 1.0, 1.0, 0.0]);
    let target = BinaryPhaseTarget::ghz(2, gamma_from_quadratures(0.5, 0.2)).unwrap();
    for pattern in [[1, 1], [2, 0], [0, 3]] {
        let ((fk, pk), (ff, pf)) = both_paths(&gm, 0.7, 0.1, &pattern, &target);
        assert!((fk - ff).abs() < 1e-6, "{pattern:?}: {fk} vs {ff}");
        assert!((pk - pf).abs() < 1e-6, "{pattern:?}: {pk} vs {pf}");
    }
}

#[test]
fn doubling_cutoff_leaves_fidelity_unchanged() {
    let cases: [(DMatrix<f64>, f64, Vec<u32>, BinaryPhaseTarget); 2] = [
        (
            g(1, &[1.0]),
            0.8,
            vec![2],
            BinaryPhaseTarget::cat_even(gamma_from_quadratures(0.4, 0.1)).unwrap(),
        ),
        (
            g(2, &[0.0, 1.0, 1.0, 0.0]),
            0.5,
            vec![1, 1],
            BinaryPhaseTarget::cccs(2, &[(0, 1)], gamma_from_quadratures(0.3, 0.0)).unwrap(),
        ),
    ];
    for (gm, r, pattern, target) in cases {
        let f = |d: usize| {
            let (h, _) =
                subtract_fock(&gaussian_to_fock(&gm, r, d).unwrap(), 0.05, &pattern).unwrap();
            fidelity_fock(&h, &target).unwrap()
        };
        let (coarse, fine) = (f(20), f(40));
        assert!((coarse - fine).abs() < 1e-7, "{coarse} vs {fine}");
    }
}
