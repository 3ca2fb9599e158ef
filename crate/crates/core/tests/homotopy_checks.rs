//! Oracle checks for the KP and linear homotopies: dual residual forms, the
//! Γ identity, Jacobian structure, path tracing, the KP theorem, the energy
//! error bound, and the existence constants.

use approx::assert_abs_diff_eq;
use ccdeg::cccore::{self, CCProblem, NewtonOptions};
use ccdeg::cluster::TruncationScheme;
use ccdeg::fockspace;
use ccdeg::homotopy::{self, LinearParams, SplitSpec, TraceOptions};
use ccdeg::linalg;
use ccdeg::models::{ModelKind, ModelSpec, ScfOptions};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dimer_problem(u: f64) -> CCProblem {
    CCProblem::from_model(&ModelSpec::hubbard_dimer(u, 2), TruncationScheme::Full, &ScfOptions::default())
        .unwrap()
        .0
}

fn chain3_problem() -> CCProblem {
    let spec = ModelSpec { kind: ModelKind::HubbardChain { l: 3, t_hop: 1.0, u: 2.0, periodic: false }, n: 3 };
    CCProblem::from_model(&spec, TruncationScheme::Full, &ScfOptions::default()).unwrap().0
}

fn random_amplitudes(d: usize, rng: &mut ChaCha8Rng, scale: f64) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.gen_range(-scale..=scale))
}

fn fcc_ground(p: &CCProblem) -> cccore::CCSolution<f64> {
    let t0 = DVector::<f64>::zeros(p.dim());
    let sol = cccore::newton_solve(p, &t0, &NewtonOptions::default());
    assert!(sol.converged);
    sol
}

/// Newton directly on the λ=0 KP system, started from an FCC zero.
fn kp_zero_at_origin(p: &CCProblem, split: &SplitSpec, start: &DVector<f64>) -> DVector<f64> {
    let residual = |t: &DVector<f64>| homotopy::kp_residual(p, split, t, 0.0);
    let jac = |t: &DVector<f64>| homotopy::kp_jacobian(p, split, t, 0.0);
    let (t, rnorm, converged, _, _) = cccore::newton_generic(start, &residual, &jac, &NewtonOptions::default());
    assert!(converged, "λ=0 corrector failed, residual {rnorm}");
    t
}

#[test]
fn gamma_identity_holds_on_random_inputs() {
    let p = dimer_problem(4.0);
    let split = SplitSpec::new(&p.space, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let t1 = random_amplitudes(p.dim(), &mut rng, 0.5);
        let lambda: f64 = rng.gen_range(0.0..=1.0);
        let g_op = homotopy::script_g(&p, &split, &t1, lambda);
        let gamma = homotopy::gamma_operator(&p, &split, &t1, lambda);
        let diff = &g_op - gamma * (1.0 - lambda);
        let scale = linalg::max_abs_mat(&g_op).max(1.0);
        assert!(linalg::max_abs_mat(&diff) <= 1e-10 * scale, "Γ identity defect {}", linalg::max_abs_mat(&diff));
    }
    // t∠ = 0 → Γ = 0; λ = 1 → 𝒢 = 0.
    let t1 = split.pi_low(&random_amplitudes(p.dim(), &mut rng, 0.5));
    let gamma = homotopy::gamma_operator(&p, &split, &t1, 0.3);
    assert!(linalg::max_abs_mat(&gamma) <= 1e-12);
    let t1 = random_amplitudes(p.dim(), &mut rng, 0.5);
    let g_op = homotopy::script_g(&p, &split, &t1, 1.0);
    assert!(linalg::max_abs_mat(&g_op) <= 1e-10);
}

#[test]
fn kp_residual_forms_agree_and_hit_endpoints() {
    let p = dimer_problem(4.0);
    let split = SplitSpec::new(&p.space, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let t1 = random_amplitudes(p.dim(), &mut rng, 0.6);
        let lambda: f64 = rng.gen_range(0.0..=1.0);
        let compact = homotopy::kp_residual(&p, &split, &t1, lambda);
        let definition = homotopy::kp_residual_definition(&p, &split, &t1, lambda);
        assert!((&compact - &definition).amax() <= 1e-10, "forms disagree by {}", (&compact - &definition).amax());
        // λ = 1: the plain CC residual.
        let at_one = homotopy::kp_residual(&p, &split, &t1, 1.0);
        assert!((&at_one - cccore::cc_residual(&p, &t1)).amax() <= 1e-12);
    }
}

#[test]
fn kp_residual_at_lambda_zero_decouples() {
    // At λ=0 the 𝕍⁰ block only sees t⁰ (the truncated CC residual) and the
    // 𝕍∠ block is the full residual at t¹.
    let (p_tr, _) = CCProblem::from_model(
        &ModelSpec::hubbard_dimer(4.0, 2),
        TruncationScheme::ranks_upto(1),
        &ScfOptions::default(),
    )
    .unwrap();
    let p = dimer_problem(4.0);
    let split = SplitSpec::new(&p.space, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let t1 = random_amplitudes(p.dim(), &mut rng, 0.4);
    let r = homotopy::kp_residual(&p, &split, &t1, 0.0);
    // Low slots are the rank-ordered prefix, shared with the truncated space.
    let t_tr = DVector::from_fn(p_tr.dim(), |i, _| t1[split.low[i]]);
    let r_tr = cccore::cc_residual(&p_tr, &t_tr);
    for (i, &s) in split.low.iter().enumerate() {
        assert_abs_diff_eq!(r[s], r_tr[i], epsilon = 1e-12);
    }
    let r_full = cccore::cc_residual(&p, &t1);
    for &s in &split.high {
        assert_abs_diff_eq!(r[s], r_full[s], epsilon = 1e-12);
    }
}

#[test]
fn kp_jacobian_matches_finite_differences() {
    let p = dimer_problem(4.0);
    let split = SplitSpec::new(&p.space, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for &lambda in &[0.0, 0.3, 0.7, 1.0] {
        let t1 = random_amplitudes(p.dim(), &mut rng, 0.4);
        let j = homotopy::kp_jacobian(&p, &split, &t1, lambda);
        let step = 1e-5;
        let mut err: f64 = 0.0;
        for c in 0..p.dim() {
            let mut tp = t1.clone();
            let mut tm = t1.clone();
            tp[c] += step;
            tm[c] -= step;
            let col = (homotopy::kp_residual(&p, &split, &tp, lambda)
                - homotopy::kp_residual(&p, &split, &tm, lambda))
                / (2.0 * step);
            for r in 0..p.dim() {
                err = err.max((col[r] - j[(r, c)]).abs());
            }
        }
        assert!(err <= 1e-6, "FD mismatch {err} at λ = {lambda}");
    }
}

#[test]
fn kp_jacobian_blocks_and_index_at_lambda_zero() {
    // U = 4 is avoided here: the dimer triplet levels sit at energy 0 for
    // every U, and at U = 4 the reference energy U/2 − 2 crosses them, which
    // makes the λ=0 Jacobian exactly singular.
    let p = dimer_problem(2.0);
    let split = SplitSpec::new(&p.space, 1).unwrap();
    let start = fcc_ground(&p);
    let t = kp_zero_at_origin(&p, &split, &start.t);
    // Upper-right block vanishes: the 𝕍⁰ rows lose their t∠ dependence.
    let j = homotopy::kp_jacobian(&p, &split, &t, 0.0);
    for &r in &split.low {
        for &c in &split.high {
            assert_abs_diff_eq!(j[(r, c)], 0.0, epsilon = 1e-14);
        }
    }
    // Spectrum = union of the two diagonal block spectra, which the index
    // report exposes shifted by the respective energies.
    let rep = homotopy::kp_index(&p, &split, &t).unwrap();
    let mut expected: Vec<f64> = rep
        .eig0
        .iter()
        .map(|l| l.re - rep.e0)
        .chain(rep.eig_angle.iter().map(|l| l.re - rep.e1))
        .collect();
    expected.sort_by(f64::total_cmp);
    let mut got: Vec<f64> = linalg::eigvals(&j.map(ccdeg::C64::from)).iter().map(|l| l.re).collect();
    got.sort_by(f64::total_cmp);
    for (a, b) in got.iter().zip(&expected) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-8);
    }
    assert!(!rep.degenerate);
    assert_eq!(rep.sgn_det, rep.index as i32);
}

#[test]
fn trace_dimer_path_reaches_lambda_zero() {
    // U = 2: see the degeneracy note in the block-structure test.
    let p = dimer_problem(2.0);
    let split = SplitSpec::new(&p.space, 1).unwrap();
    let start = fcc_ground(&p);
    let path = homotopy::trace_path(&p, &split, &start, &TraceOptions::default()).unwrap();
    assert!(path.completed, "breakdown: {:?}", path.breakdown);
    let end = path.points.last().unwrap();
    assert_eq!(end.lambda, 0.0);
    assert!(end.residual_inf <= 1e-9);
    // Π₀ of the endpoint solves the truncated CC equations.
    let (p_tr, _) = CCProblem::from_model(
        &ModelSpec::hubbard_dimer(2.0, 2),
        TruncationScheme::ranks_upto(1),
        &ScfOptions::default(),
    )
    .unwrap();
    let t_tr = DVector::from_fn(p_tr.dim(), |i, _| end.t[split.low[i]]);
    assert!(linalg::inf_norm(&cccore::cc_residual(&p_tr, &t_tr)) <= 1e-9);
    // No sign change along the breakdown-free path.
    assert!(path.points.iter().all(|pt| pt.sgn_det == path.points[0].sgn_det && pt.sgn_det != 0));
}

#[test]
fn kp_energy_endpoints_and_rho2_constancy() {
    let p = dimer_problem(4.0);
    let split = SplitSpec::new(&p.space, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let t1 = random_amplitudes(p.dim(), &mut rng, 0.5);
    let (t0, _) = split.split_amplitudes(&t1);
    assert_abs_diff_eq!(homotopy::kp_energy(&p, &split, &t1, 1.0), cccore::cc_energy(&p, &t1), epsilon = 1e-12);
    assert_abs_diff_eq!(homotopy::kp_energy(&p, &split, &t1, 0.0), cccore::cc_energy(&p, &t0), epsilon = 1e-12);
    // ρ = 2: the KP energy never sees t∠ or λ.
    let p3 = chain3_problem();
    let split2 = SplitSpec::new(&p3.space, 2).unwrap();
    let base = split2.pi_low(&random_amplitudes(p3.dim(), &mut rng, 0.4));
    let reference = homotopy::kp_energy(&p3, &split2, &base, 0.37);
    for _ in 0..8 {
        let t1 = &base + split2.pi_high(&random_amplitudes(p3.dim(), &mut rng, 0.8));
        let lambda: f64 = rng.gen_range(0.0..=1.0);
        assert_abs_diff_eq!(homotopy::kp_energy(&p3, &split2, &t1, lambda), reference, epsilon = 1e-12);
    }
}

#[test]
fn kp_theorem_part_two_at_path_endpoint() {
    let p = dimer_problem(4.0);
    let split = SplitSpec::new(&p.space, 1).unwrap();
    let start = fcc_ground(&p);
    let path = homotopy::trace_path(&p, &split, &start, &TraceOptions::default()).unwrap();
    assert!(path.completed);
    let (energy, psi) = fockspace::fci_solve(&p.h).unwrap().swap_remove(0);
    for pt in &path.points {
        let rep = homotopy::kp_verify(&p, &split, &psi, energy, &pt.t, pt.lambda).unwrap();
        assert!(rep.residual <= 1e-9, "identity residual {} at λ = {}", rep.residual, pt.lambda);
    }
}

#[test]
fn kp_theorem_part_one_with_exact_reference() {
    // At U = 0 the RHF reference is the exact ground state, so Ψ = Φ0 lives in
    // span{Φ0} ⊕ 𝕍⁰ and ℰ_KP ≡ ℰ along the whole path.
    let p = dimer_problem(0.0);
    let split = SplitSpec::new(&p.space, 1).unwrap();
    let start = fcc_ground(&p);
    let path = homotopy::trace_path(&p, &split, &start, &TraceOptions::default()).unwrap();
    assert!(path.completed);
    let (energy, psi) = fockspace::fci_solve(&p.h).unwrap().swap_remove(0);
    for pt in &path.points {
        let rep = homotopy::kp_verify(&p, &split, &psi, energy, &pt.t, pt.lambda).unwrap();
        assert!(rep.psi_in_low_space);
        assert!((rep.e_kp - energy).abs() <= 1e-9);
    }
}

#[test]
fn kp_verify_refuses_orthogonal_state() {
    let p = dimer_problem(4.0);
    let split = SplitSpec::new(&p.space, 1).unwrap();
    let start = fcc_ground(&p);
    let t = kp_zero_at_origin(&p, &split, &start.t);
    // Any Ψ orthogonal to e^{T⁰}Φ0 triggers the blow-up refusal.
    let (t0, _) = split.split_amplitudes(&t);
    let phi0 = p.space.reference_vector::<f64>();
    let v = ccdeg::cluster::exp_apply(&p.space, &t0, &phi0);
    let mut psi = DVector::<f64>::zeros(p.space.sector_dim());
    psi[1] = 1.0;
    let psi = &psi - &v * (psi.dot(&v) / v.dot(&v));
    assert!(homotopy::kp_verify(&p, &split, &psi, -1.0, &t, 0.0).is_err());
}

#[test]
fn energy_error_estimate_bounds_dimer() {
    let p = dimer_problem(4.0);
    let split = SplitSpec::new(&p.space, 1).unwrap();
    let start = fcc_ground(&p);
    let t_kp = kp_zero_at_origin(&p, &split, &start.t);
    let rep = homotopy::energy_error_estimate(&p, &split, &t_kp, &start.t, &Default::default()).unwrap();
    assert!(rep.holds, "actual {} exceeds bound {}", rep.actual, rep.bound);
    assert!(rep.bound.is_finite() && rep.bound >= 0.0);
    assert!(rep.kappa > 0.0);
}

#[test]
fn kp_existence_flags_weak_versus_strong_coupling() {
    for (u, expect_both) in [(0.1, true), (8.0, false)] {
        let p = dimer_problem(u);
        let split = SplitSpec::new(&p.space, 1).unwrap();
        let sol = fcc_ground(&p);
        let rep = homotopy::kp_existence_report(&p, &split, &sol, &Default::default()).unwrap();
        if expect_both {
            assert!(rep.condition_i, "condition (i) failed at U = {u}: η = {}", rep.eta);
            assert!(rep.condition_ii, "condition (ii) failed at U = {u}: κ = {}", rep.kappa);
        } else {
            assert!(!rep.condition_i || !rep.condition_ii, "both conditions passed at U = {u}");
        }
    }
}

#[test]
fn linear_homotopy_endpoints() {
    let p = dimer_problem(4.0);
    let split = SplitSpec::new(&p.space, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let t1 = random_amplitudes(p.dim(), &mut rng, 0.4);
    let u_perp = split.pi_high(&random_amplitudes(p.dim(), &mut rng, 0.3));
    let params = LinearParams { alpha: 1.5, u_perp: u_perp.clone() };
    // λ = 1: the plain CC residual.
    let r = homotopy::linear_residual(&p, &split, &t1, 1.0, &params).unwrap();
    assert!((&r - cccore::cc_residual(&p, &t1)).amax() <= 1e-12);
    // λ = 0 at {truncated zero} ⊕ u⊥: residual vanishes.
    let (p_tr, _) = CCProblem::from_model(
        &ModelSpec::hubbard_dimer(4.0, 2),
        TruncationScheme::ranks_upto(1),
        &ScfOptions::default(),
    )
    .unwrap();
    let tr_sol = cccore::newton_solve(&p_tr, &DVector::<f64>::zeros(p_tr.dim()), &NewtonOptions::default());
    assert!(tr_sol.converged);
    let mut t_star = u_perp.clone();
    for (i, &s) in split.low.iter().enumerate() {
        t_star[s] = tr_sol.t[i];
    }
    let r0 = homotopy::linear_residual(&p, &split, &t_star, 0.0, &params).unwrap();
    assert!(linalg::inf_norm(&r0) <= 1e-9);
    // Perturbing t⊥ breaks the λ = 0 zero; α ≤ 0 is rejected.
    let mut t_bad = t_star.clone();
    t_bad[split.high[0]] += 0.1;
    let r_bad = homotopy::linear_residual(&p, &split, &t_bad, 0.0, &params).unwrap();
    assert!(linalg::inf_norm(&r_bad) > 0.01);
    assert!(homotopy::linear_residual(&p, &split, &t1, 0.5, &LinearParams { alpha: 0.0, u_perp }).is_err());
}
