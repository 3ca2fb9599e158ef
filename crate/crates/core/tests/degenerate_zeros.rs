//! Degenerate-zero phenomenology at a coupling-tuned fold of the doubles-only
//! pairing model (4 levels, 2 pairs): two real CCD solutions collide as the
//! coupling decreases, leaving a μ = 1 zero where the real index drops to 0
//! and the complex index is 2.

#[path = "support/fold.rs"]
mod fold;

use ccdeg::analysis::{self, IndexValue, PerturbOptions};
use ccdeg::cccore::{self, NewtonOptions};
use ccdeg::{linalg, C64};
use fold::{fold_point, fold_solution, pairing_problem};
use nalgebra::DVector;

#[test]
fn fold_is_an_exact_degenerate_zero() {
    let (t, g) = fold_point();
    assert!((g - 1.6890097044).abs() < 1e-8, "fold coupling drifted: {g}");
    let p = pairing_problem(g);
    let r = cccore::cc_residual(&p, &t);
    assert!(linalg::inf_norm(&r) <= 1e-12);
    let j = cccore::jacobian(&p, &t, true);
    let sv = j.svd(false, false).singular_values;
    assert!(sv.min() / sv.max() <= 1e-10, "Jacobian not singular at the fold");
}

#[test]
fn real_fold_has_index_zero_and_loses_solutions_adversely() {
    let (t, g) = fold_point();
    let p = pairing_problem(g);
    let sol = fold_solution::<f64>(&p, &t);
    let data = analysis::degenerate_index(&p, &sol, analysis::KERNEL_RANK_TOL).unwrap();
    assert_eq!(data.mu, 1);
    assert_eq!(data.index, IndexValue::Resolved(0));
    assert!(data.sphere_min_b > 1e-2, "sphere condition marginal: {}", data.sphere_min_b);

    // Perturbing toward the adverse side kills both real solutions; the
    // favorable side restores the annihilated pair.
    let z = analysis::adverse_direction(&p, &t, &data, 1e-6).unwrap();
    let lost = analysis::perturbed_roots(&p, &t, &z, &PerturbOptions::default());
    assert!(lost.is_empty(), "expected solution loss, found {} roots", lost.len());
    let zf = -&z;
    let regained = analysis::perturbed_roots(&p, &t, &zf, &PerturbOptions::default());
    assert_eq!(regained.len(), 2);
}

#[test]
fn complex_fold_has_index_two_with_two_perturbed_roots() {
    let (t, g) = fold_point();
    let p = pairing_problem(g);
    let sol = fold_solution::<C64>(&p, &t);
    let data = analysis::degenerate_index(&p, &sol, analysis::KERNEL_RANK_TOL).unwrap();
    assert_eq!(data.mu, 1);
    assert_eq!(data.index, IndexValue::Resolved(2));
    assert_eq!(data.perturbed_count, Some(2));
}

#[test]
fn degree_over_box_matches_nondegenerate_index_at_ground_zero() {
    let p = pairing_problem(0.5);
    let t0 = DVector::<f64>::zeros(p.dim());
    let sol = cccore::newton_solve(&p, &t0, &NewtonOptions::default());
    assert!(sol.converged);
    let rep = analysis::index_nondegenerate(&p, &sol).unwrap();
    let IndexValue::Resolved(idx) = rep.index else { panic!("ground zero unresolved") };
    let deg = analysis::degree_over_box(&p, &sol.t, 0.05, std::slice::from_ref(&sol)).unwrap();
    assert_eq!(deg.degree, idx);
    assert!(deg.parity_consistent);
}
