//! Index-theorem checks at full-space CC zeros against the FCI oracle.

use approx::assert_abs_diff_eq;
use ccdeg::analysis::{self, IndexValue};
use ccdeg::cccore::{self, CCProblem};
use ccdeg::cluster::{self, TruncationScheme};
use ccdeg::fockspace;
use ccdeg::models::{ModelSpec, ScfOptions};
use ccdeg::{linalg, C64};
use nalgebra::{DMatrix, DVector};

fn dimer_problem(u: f64) -> CCProblem {
    CCProblem::from_model(&ModelSpec::hubbard_dimer(u, 2), TruncationScheme::Full, &ScfOptions::default())
        .unwrap()
        .0
}

/// Full-space zeros from FCI eigenpairs with nonzero Φ0 overlap, polished by
/// one Newton pass; returns (t*, FCI eigenvalue, ν = #eigenvalues strictly
/// below, degenerate-eigenvalue flag).
fn fcc_zeros_from_fci(p: &CCProblem) -> Vec<(DVector<f64>, f64, usize, bool)> {
    let eigs = fockspace::fci_solve(&p.h).unwrap();
    let mut out = Vec::new();
    for (j, (e, v)) in eigs.iter().enumerate() {
        if v[0].abs() < 1e-8 {
            continue;
        }
        let c = p.space.project_to_amplitudes(&(v / v[0]));
        let t = cluster::cluster_log(&p.space, &c).unwrap();
        let nu = eigs.iter().filter(|(e2, _)| *e2 < e - 1e-9).count();
        let degenerate = eigs
            .iter()
            .enumerate()
            .any(|(i, (e2, _))| i != j && (e2 - e).abs() <= 1e-8);
        out.push((t, *e, nu, degenerate));
    }
    out
}

#[test]
fn fcc_zeros_have_index_ladder() {
    let p = dimer_problem(4.0);
    let zeros = fcc_zeros_from_fci(&p);
    assert!(zeros.len() >= 2);
    for (t, e, nu, degenerate) in zeros {
        let r = cccore::cc_residual(&p, &t);
        assert!(linalg::inf_norm(&r) <= 1e-10, "cluster_log zero residual too large");
        assert_abs_diff_eq!(cccore::cc_energy(&p, &t), e, epsilon = 1e-10);
        if degenerate {
            continue;
        }
        let sol = cccore::newton_solve(&p, &t, &cccore::NewtonOptions::default());
        let rep = analysis::index_nondegenerate(&p, &sol).unwrap();
        assert!(!rep.degenerate);
        assert_eq!(rep.nu, Some(nu));
        let expected = if nu % 2 == 0 { 1 } else { -1 };
        assert_eq!(rep.index, IndexValue::Resolved(expected));
        assert_eq!(rep.sgn_det, expected as i32);
    }
}

#[test]
fn spectrum_splits_at_full_space_zero() {
    // σ(ℋ_K) = {ℰ_CC} ∪ σ(ℋ(t*)_𝔙) at a full-space zero.
    let p = dimer_problem(4.0);
    let (t, e, _, _) = fcc_zeros_from_fci(&p).swap_remove(0);
    let h_t = cccore::sim_hamiltonian(&p, &t, cccore::SimMethod::Conjugation);
    let block = cccore::restrict_to_amplitude_block(&p.space, &h_t);
    let mut inner: Vec<f64> = linalg::eigvals(&block.map(C64::from)).iter().map(|l| l.re).collect();
    inner.push(e);
    inner.sort_by(f64::total_cmp);
    let full: Vec<f64> = fockspace::fci_solve(&p.h).unwrap().iter().map(|(e, _)| *e).collect();
    for (a, b) in inner.iter().zip(&full) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    }
}

#[test]
fn eom_spectrum_gives_fci_excitation_energies() {
    let p = dimer_problem(4.0);
    let t0 = DVector::<f64>::zeros(p.dim());
    let sol = cccore::newton_solve(&p, &t0, &cccore::NewtonOptions::default());
    assert!(sol.converged);
    let rep = analysis::eom_spectrum(&p, &sol).unwrap();
    let fci: Vec<f64> = fockspace::fci_solve(&p.h).unwrap().iter().map(|(e, _)| *e).collect();
    let mut shifts: Vec<f64> = rep.delta_e.iter().map(|l| l.re).collect();
    shifts.sort_by(f64::total_cmp);
    let expected: Vec<f64> = fci[1..].iter().map(|e| e - fci[0]).collect();
    assert_eq!(shifts.len(), expected.len());
    for (a, b) in shifts.iter().zip(&expected) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-8);
    }
    assert!(shifts.iter().all(|&s| s > 0.0));
    assert_eq!(rep.nu, 0);
}

#[test]
fn fock_splitting_agrees_with_jacobian_verdict() {
    for u in [1.0, 4.0] {
        let (p, _) = CCProblem::from_model(
            &ModelSpec::hubbard_dimer(u, 2),
            TruncationScheme::DoublesOnly,
            &ScfOptions::default(),
        )
        .unwrap();
        let t0 = DVector::<f64>::zeros(p.dim());
        let sol = cccore::newton_solve(&p, &t0, &cccore::NewtonOptions::default());
        assert!(sol.converged);
        let fs = analysis::fock_splitting_test(&p, &sol).unwrap();
        assert!(fs.split_identity_defect <= 1e-12);
        let rep = analysis::index_nondegenerate(&p, &sol).unwrap();
        assert_eq!(fs.nondegenerate, !rep.degenerate);
    }
}

#[test]
fn complex_zero_has_index_one() {
    let (p, _) = CCProblem::from_model(
        &ModelSpec::hubbard_dimer(4.0, 2),
        TruncationScheme::DoublesOnly,
        &ScfOptions::default(),
    )
    .unwrap();
    let sampler = cccore::Sampler { seed: 5, radius: 3.0, count: 60 };
    let sols = cccore::multistart_solve::<C64>(&p, &sampler, &cccore::NewtonOptions::default());
    assert!(!sols.is_empty());
    let mut checked = 0;
    for sol in &sols {
        let rep = analysis::index_nondegenerate(&p, sol).unwrap();
        if rep.degenerate {
            continue;
        }
        assert_eq!(rep.index, IndexValue::Resolved(1));
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn realification_determinant_rule() {
    let id = DMatrix::<C64>::identity(3, 3);
    let rep = analysis::realification_check(&id);
    assert_abs_diff_eq!(rep.det_realification, 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(rep.det_complex_sq, 1.0, epsilon = 1e-14);

    let mut m = DMatrix::<C64>::identity(2, 2);
    m[(0, 0)] = C64::new(0.0, 1.0);
    let rep = analysis::realification_check(&m);
    assert_abs_diff_eq!(rep.det_realification, 1.0, epsilon = 1e-14);
    assert!(rep.rel_err <= 1e-8);

    // Jacobian at a complex CC zero.
    let (p, _) = CCProblem::from_model(
        &ModelSpec::hubbard_dimer(4.0, 2),
        TruncationScheme::DoublesOnly,
        &ScfOptions::default(),
    )
    .unwrap();
    let sampler = cccore::Sampler { seed: 5, radius: 3.0, count: 40 };
    let sols = cccore::multistart_solve::<C64>(&p, &sampler, &cccore::NewtonOptions::default());
    let sol = &sols[0];
    let j = cccore::jacobian(&p, &sol.t, true);
    let rep = analysis::realification_check(&j);
    assert!(rep.rel_err <= 1e-8, "rel_err = {}", rep.rel_err);
}
