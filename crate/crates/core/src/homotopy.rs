//! Linear and Kowalski–Piecuch homotopies: residuals, Jacobians, path
//! tracing, the KP index at λ=0, KP theorem verification, the energy error
//! estimate, and the existence-constants evaluator.

use crate::analysis::{self, DEGENERACY_TOL, REALITY_RTOL};
use crate::cccore::{self, CCProblem, CCSolution, NewtonOptions, SimMethod};
use crate::cluster::{self, AmplitudeSpace, NormKind};
use crate::linalg;
use crate::scalar::Scalar;
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The ℓ²-orthogonal split 𝕍¹ = 𝕍⁰ ⊕ 𝕍∠ at cut rank ρ: 𝕍⁰ carries the
/// excitation ranks ≤ ρ, 𝕍∠ the ranks > ρ.
#[derive(Debug, Clone)]
pub struct SplitSpec {
    pub rho: usize,
    /// Amplitude slots of 𝕍⁰ / 𝕍∠.
    pub low: Vec<usize>,
    pub high: Vec<usize>,
    is_high: Vec<bool>,
    /// Per sector determinant: excitation rank relative to Φ0.
    det_rank: Vec<usize>,
}

impl SplitSpec {
    pub fn new(space: &AmplitudeSpace, rho: usize) -> Result<Self> {
        let n = space.basis.n;
        if rho < 1 || rho >= n {
            return Err(Error::validation(format!("cut rank must satisfy 1 ≤ ρ < N, got ρ = {rho}, N = {n}")));
        }
        let low = space.slots_rank_le(rho);
        let high = space.slots_rank_gt(rho);
        let mut is_high = vec![false; space.dim()];
        for &s in &high {
            is_high[s] = true;
        }
        let mut det_rank = vec![0usize; space.sector_dim()];
        for (full_idx, x) in space.all.iter().enumerate() {
            det_rank[space.det_of[full_idx]] = x.rank();
        }
        Ok(SplitSpec { rho, low, high, is_high, det_rank })
    }

    pub fn slot_is_high(&self, slot: usize) -> bool {
        self.is_high[slot]
    }

    /// t¹ = t⁰ + t∠ in amplitude coordinates (both returned full-length).
    pub fn split_amplitudes<S: Scalar>(&self, t1: &DVector<S>) -> (DVector<S>, DVector<S>) {
        let mut t0 = t1.clone();
        let mut ta = t1.clone();
        for s in 0..t1.len() {
            if self.is_high[s] {
                t0[s] = S::zero();
            } else {
                ta[s] = S::zero();
            }
        }
        (t0, ta)
    }

    /// Π₀ / Π∠ on amplitude vectors.
    pub fn pi_low<S: Scalar>(&self, t: &DVector<S>) -> DVector<S> {
        self.split_amplitudes(t).0
    }

    pub fn pi_high<S: Scalar>(&self, t: &DVector<S>) -> DVector<S> {
        self.split_amplitudes(t).1
    }

    /// Π_{𝔙∠} on sector vectors: keep determinants of rank > ρ.
    pub fn sector_pi_high<S: Scalar>(&self, v: &DVector<S>) -> DVector<S> {
        let mut out = v.clone();
        out[0] = S::zero();
        for j in 1..v.len() {
            if self.det_rank[j] <= self.rho {
                out[j] = S::zero();
            }
        }
        out
    }
}

/// KP residual in the compact form: the 𝕍⁰ block is Π₀𝒜(t⁰ + λt∠), the 𝕍∠
/// block is Π∠𝒜(t¹). At λ=1 this is the plain CC residual; at λ=0 it is the
/// decoupled system {𝒜(t⁰)|𝕍⁰ = 0, 𝒜(t¹)|𝕍∠ = 0}.
pub fn kp_residual<S: Scalar>(p: &CCProblem, split: &SplitSpec, t1: &DVector<S>, lambda: f64) -> DVector<S> {
    let (t0, ta) = split.split_amplitudes(t1);
    let g = &t0 + &ta * S::from_re(lambda);
    let r_low = cccore::cc_residual(p, &g);
    let r_high = if lambda == 1.0 { r_low.clone() } else { cccore::cc_residual(p, t1) };
    let mut out = r_high;
    for &s in &split.low {
        out[s] = r_low[s];
    }
    out
}

/// KP residual straight from its definition: rows over 𝕍⁰ carry
/// ⟨ℋ(t⁰)Φ0, Φ_α⟩ + λ⟨ℋ(t⁰)(e^{T∠} − I)Φ0, Φ_α⟩, rows over 𝕍∠ carry
/// ⟨ℋ(t¹)Φ0, Φ_α⟩. Agrees with `kp_residual` identically.
pub fn kp_residual_definition<S: Scalar>(
    p: &CCProblem,
    split: &SplitSpec,
    t1: &DVector<S>,
    lambda: f64,
) -> DVector<S> {
    let (t0, ta) = split.split_amplitudes(t1);
    let sp = &p.space;
    let phi0 = sp.reference_vector::<S>();
    // ℋ(t⁰)(e^{T∠} − I)Φ0.
    let w = cluster::exp_apply(sp, &ta, &phi0) - &phi0;
    let hw = cluster::exp_apply(sp, &(-t0.clone()), &(p.h_as::<S>() * cluster::exp_apply(sp, &t0, &w)));
    let v_low = sp.project_to_amplitudes(&(sim_ref(p, &t0) + hw * S::from_re(lambda)));
    let v_high = sp.project_to_amplitudes(&sim_ref(p, t1));
    let mut out = v_high;
    for &s in &split.low {
        out[s] = v_low[s];
    }
    out
}

fn sim_ref<S: Scalar>(p: &CCProblem, t: &DVector<S>) -> DVector<S> {
    cccore::sim_h_on_reference(p, t)
}

/// Jacobian of the KP residual in t¹ at fixed λ: the 𝕍⁰ rows come from
/// 𝒜′(t⁰ + λt∠) with the 𝕍∠ columns scaled by λ (chain rule through the
/// compact form), the 𝕍∠ rows from 𝒜′(t¹).
pub fn kp_jacobian<S: Scalar>(p: &CCProblem, split: &SplitSpec, t1: &DVector<S>, lambda: f64) -> DMatrix<S> {
    let (t0, ta) = split.split_amplitudes(t1);
    let g = &t0 + &ta * S::from_re(lambda);
    let jg = cccore::jacobian(p, &g, false);
    let j1 = cccore::jacobian(p, t1, false);
    let d = p.dim();
    let lam = S::from_re(lambda);
    let mut out = j1;
    for &r in &split.low {
        for c in 0..d {
            out[(r, c)] = if split.is_high[c] { jg[(r, c)] * lam } else { jg[(r, c)] };
        }
    }
    out
}

/// KP energy ℰ_KP(t¹, λ) = ⟨ℋ_K e^{T⁰+λT∠}Φ0, Φ0⟩. For ρ ≥ 2 this is
/// independent of both λ and t∠ (the energy only sees ranks ≤ 2).
pub fn kp_energy<S: Scalar>(p: &CCProblem, split: &SplitSpec, t1: &DVector<S>, lambda: f64) -> S {
    let (t0, ta) = split.split_amplitudes(t1);
    cccore::cc_energy(p, &(&t0 + &ta * S::from_re(lambda)))
}

/// Index data at a zero of 𝒦_KP(·, 0): ν⁰ from σ(ℋ(t⁰)_{𝔙⁰}) below ℰ(t⁰),
/// ν∠ from σ(Ĥ(t¹)_{𝔙∠}) below ℰ(t¹), index (−1)^{ν⁰+ν∠}, cross-checked
/// against sgn det of the λ=0 Jacobian.
#[derive(Debug, Clone)]
pub struct KpIndexReport {
    pub nu0: usize,
    pub nu_angle: usize,
    pub index: i64,
    pub sgn_det: i32,
    pub degenerate: bool,
    pub eig0: Vec<C64>,
    pub eig_angle: Vec<C64>,
    pub e0: f64,
    pub e1: f64,
}

fn sub_block<S: Scalar>(m: &DMatrix<S>, rows: &[usize], cols: &[usize]) -> DMatrix<S> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn count_below(eigs: &[C64], e: f64) -> (usize, bool) {
    let band = DEGENERACY_TOL * e.abs().max(1.0);
    let mut nu = 0;
    let mut degenerate = false;
    for l in eigs {
        let real = l.im.abs() <= REALITY_RTOL * l.norm().max(1.0);
        if real && (l.re - e).abs() <= band {
            degenerate = true;
        } else if real && l.re < e {
            nu += 1;
        }
    }
    (nu, degenerate)
}

pub fn kp_index(p: &CCProblem, split: &SplitSpec, t1: &DVector<f64>) -> Result<KpIndexReport> {
    let (t0, _) = split.split_amplitudes(t1);
    let e0 = cccore::cc_energy(p, &t0);
    let e1 = cccore::cc_energy(p, t1);
    let block0 = {
        let m = cccore::sim_hamiltonian(p, &t0, SimMethod::Conjugation);
        let b = cccore::restrict_to_amplitude_block(&p.space, &m);
        sub_block(&b, &split.low, &split.low)
    };
    // Ĥ(t¹) subtracts the Ξ(G⁰) corrections (not the Ξ(G)^c ones of the
    // single-problem modified Hamiltonian).
    let block_angle = {
        let mut m = cccore::sim_hamiltonian(p, t1, SimMethod::Conjugation);
        let u = m.column(0).clone_owned();
        for &slot in &split.low {
            let full_idx = p.space.sel[slot];
            let coef = p.space.phase_of[full_idx] as f64 * u[p.space.det_of[full_idx]];
            if coef != 0.0 {
                m -= p.space.excitation_matrix::<f64>(full_idx) * coef;
            }
        }
        let b = cccore::restrict_to_amplitude_block(&p.space, &m);
        sub_block(&b, &split.high, &split.high)
    };
    let eig0 = linalg::eigvals(&block0);
    let eig_angle = linalg::eigvals(&block_angle);
    let (nu0, d0) = count_below(&eig0, e0);
    let (nu_angle, d1) = count_below(&eig_angle, e1);
    let degenerate = d0 || d1;
    let j = kp_jacobian(p, split, t1, 0.0);
    let sgn_det = linalg::sgn_det(&j);
    let index = if (nu0 + nu_angle) % 2 == 0 { 1 } else { -1 };
    if !degenerate && sgn_det != index as i32 {
        return Err(Error::numerical(format!(
            "KP index identity violated: (−1)^(ν⁰+ν∠) = {index} but sgn det = {sgn_det}"
        )));
    }
    Ok(KpIndexReport { nu0, nu_angle, index, sgn_det, degenerate, eig0, eig_angle, e0, e1 })
}

/// One accepted continuation point.
#[derive(Debug, Clone)]
pub struct PathPoint<S: Scalar> {
    pub lambda: f64,
    pub t: DVector<S>,
    pub residual_inf: f64,
    pub e_kp: S,
    pub sgn_det: i32,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct Breakdown {
    pub lambda: f64,
    pub residual_inf: f64,
    pub condition: f64,
}

#[derive(Debug, Clone)]
pub struct Path<S: Scalar> {
    pub points: Vec<PathPoint<S>>,
    pub breakdown: Option<Breakdown>,
    pub completed: bool,
}

#[derive(Debug, Clone)]
pub struct TraceOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub corrector: NewtonOptions,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            initial_step: 0.05,
            min_step: 1e-4,
            max_step: 0.1,
            corrector: NewtonOptions { max_iter: 30, ..NewtonOptions::default() },
        }
    }
}

fn jac_sign<S: Scalar>(j: &DMatrix<S>) -> i32 {
    if S::IS_COMPLEX {
        linalg::sgn_det(&analysis::realify(&j.map(|z| z.to_c64())))
    } else {
        linalg::sgn_det(&j.map(|z| z.re_part()))
    }
}

fn condition_estimate<S: Scalar>(j: &DMatrix<S>) -> f64 {
    let svd = j.map(|z| z.to_c64()).svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= f64::MIN_POSITIVE { f64::INFINITY } else { smax / smin }
}

/// Trace the KP zero path from λ=1 down to λ=0: secant predictor, Newton
/// corrector at frozen λ, step halved on corrector failure and doubled after
/// three straight successes within [min_step, max_step].
pub fn trace_path<S: Scalar>(
    p: &CCProblem,
    split: &SplitSpec,
    start: &CCSolution<S>,
    opts: &TraceOptions,
) -> Result<Path<S>> {
    if !start.converged {
        return Err(Error::validation("path tracing needs a converged λ=1 start"));
    }
    let point_at = |t: &DVector<S>, lambda: f64, step: f64| PathPoint {
        lambda,
        t: t.clone(),
        residual_inf: linalg::inf_norm(&kp_residual(p, split, t, lambda)),
        e_kp: kp_energy(p, split, t, lambda),
        sgn_det: jac_sign(&kp_jacobian(p, split, t, lambda)),
        step,
    };
    let mut points = vec![point_at(&start.t, 1.0, 0.0)];
    let mut step = opts.initial_step.clamp(opts.min_step, opts.max_step);
    let mut successes = 0usize;
    let mut lam = 1.0f64;
    while lam > 0.0 {
        let lam_next = (lam - step).max(0.0);
        let predictor = if points.len() >= 2 {
            let a = &points[points.len() - 1];
            let b = &points[points.len() - 2];
            let dl = a.lambda - b.lambda;
            if dl.abs() > 1e-14 {
                let f = S::from_re((lam_next - a.lambda) / dl);
                &a.t + (&a.t - &b.t) * f
            } else {
                a.t.clone()
            }
        } else {
            points[0].t.clone()
        };
        let residual = |t: &DVector<S>| kp_residual(p, split, t, lam_next);
        let jac = |t: &DVector<S>| kp_jacobian(p, split, t, lam_next);
        let (t, rnorm, converged, _iters, _sing) =
            cccore::newton_generic(&predictor, &residual, &jac, &opts.corrector);
        if converged {
            points.push(point_at(&t, lam_next, step));
            lam = lam_next;
            successes += 1;
            if successes >= 3 {
                step = (step * 2.0).min(opts.max_step);
                successes = 0;
            }
        } else {
            successes = 0;
            step *= 0.5;
            if step < opts.min_step {
                let j = kp_jacobian(p, split, &points[points.len() - 1].t, lam);
                return Ok(Path {
                    points,
                    breakdown: Some(Breakdown {
                        lambda: lam,
                        residual_inf: rnorm,
                        condition: condition_estimate(&j),
                    }),
                    completed: false,
                });
            }
        }
    }
    Ok(Path { points, breakdown: None, completed: true })
}

/// Γ(t¹, λ) = Σ_{k=1..2N} ((1−λ)^{k−1}/k!) e^{−(T⁰+λT∠)} [ℋ_K, T∠]_(k)
/// e^{T⁰+λT∠} on the N-sector; satisfies 𝒢 = (1−λ)Γ with
/// 𝒢 = ℋ(t¹) − ℋ(t⁰+λt∠). The nested commutators vanish beyond 2N.
pub fn gamma_operator<S: Scalar>(
    p: &CCProblem,
    split: &SplitSpec,
    t1: &DVector<S>,
    lambda: f64,
) -> DMatrix<S> {
    let sp = &p.space;
    let (t0, ta) = split.split_amplitudes(t1);
    let g = &t0 + &ta * S::from_re(lambda);
    let tm = cluster::cluster_matrix(sp, &ta);
    let dim = sp.sector_dim();
    let mut acc = DMatrix::<S>::zeros(dim, dim);
    let mut comm = p.h_as::<S>();
    let mut fact = 1.0f64;
    let mut pow = 1.0f64; // (1−λ)^{k−1}
    for k in 1..=(2 * sp.basis.n) {
        comm = &comm * &tm - &tm * &comm;
        fact *= k as f64;
        acc += &comm * S::from_re(pow / fact);
        pow *= 1.0 - lambda;
    }
    let e = cluster::exp_matrix(sp, &g);
    let ei = cluster::exp_matrix(sp, &(-g));
    ei * acc * e
}

/// 𝒢(t¹, λ) = ℋ(t¹) − ℋ(t⁰ + λt∠).
pub fn script_g<S: Scalar>(p: &CCProblem, split: &SplitSpec, t1: &DVector<S>, lambda: f64) -> DMatrix<S> {
    let (t0, ta) = split.split_amplitudes(t1);
    let g = &t0 + &ta * S::from_re(lambda);
    cccore::sim_hamiltonian(p, t1, SimMethod::Conjugation) - cccore::sim_hamiltonian(p, &g, SimMethod::Conjugation)
}

/// Both sides of the KP-theorem identity (part II) at one path point.
#[derive(Debug, Clone)]
pub struct KpVerifyReport<S: Scalar> {
    pub e_kp: S,
    pub overlap: S,
    /// (ℰ_KP − ℰ) · ⟨e^{T⁰+λT∠}Φ0, Ψ⟩.
    pub lhs: S,
    /// ⟨𝒢Φ0, Π_{𝔙∠} (e^{T⁰+λT∠})ᵀ C∠Φ0⟩.
    pub rhs: S,
    pub residual: f64,
    /// Ψ lives in span{Φ0} ⊕ 𝔙⁰ (part (I) applies: ℰ_KP = ℰ).
    pub psi_in_low_space: bool,
}

/// Evaluate the KP theorem at (t¹, λ) against an FCI eigenpair (Ψ, ℰ); Ψ is
/// a sector vector. Refuses when the overlap ⟨e^{T⁰+λT∠}Φ0, Ψ⟩ vanishes
/// (the energy blow-up regime).
pub fn kp_verify<S: Scalar>(
    p: &CCProblem,
    split: &SplitSpec,
    psi: &DVector<f64>,
    energy: f64,
    t1: &DVector<S>,
    lambda: f64,
) -> Result<KpVerifyReport<S>> {
    let r = kp_residual(p, split, t1, lambda);
    if linalg::inf_norm(&r) > 1e-8 {
        return Err(Error::validation("kp_verify needs a zero of the KP homotopy"));
    }
    let sp = &p.space;
    let (t0, ta) = split.split_amplitudes(t1);
    let g = &t0 + &ta * S::from_re(lambda);
    let phi0 = sp.reference_vector::<S>();
    let eg_phi0 = cluster::exp_apply(sp, &g, &phi0);
    let psi_s = psi.map(S::from_re);
    let overlap = bilinear(&eg_phi0, &psi_s);
    if overlap.mag() <= 1e-10 {
        return Err(Error::numerical(
            "⟨e^{T⁰+λT∠}Φ0, Ψ⟩ ≈ 0: the KP energy identity degenerates (blow-up regime)",
        ));
    }
    let e_kp = kp_energy(p, split, t1, lambda);
    let lhs = (e_kp - S::from_re(energy)) * overlap;
    // C∠Φ0 is the 𝔙∠ part of the literal coefficient expansion of Ψ.
    let c_angle = split.sector_pi_high(&psi_s);
    let eg = cluster::exp_matrix(sp, &g);
    let b = split.sector_pi_high(&(eg.transpose() * c_angle));
    let g_phi0 = script_g(p, split, t1, lambda).column(0).clone_owned();
    let rhs = bilinear(&g_phi0, &b);
    let psi_high_norm = split.sector_pi_high(&psi.clone()).norm();
    Ok(KpVerifyReport {
        e_kp,
        overlap,
        lhs,
        rhs,
        residual: (lhs - rhs).mag(),
        psi_in_low_space: psi_high_norm <= 1e-12 * psi.norm().max(1.0),
    })
}

fn bilinear<S: Scalar>(u: &DVector<S>, v: &DVector<S>) -> S {
    let mut acc = S::zero();
    for i in 0..u.len() {
        acc += u[i] * v[i];
    }
    acc
}

/// Energy error bound |ℰ_CC(t**¹) − ℰ_CC(t*¹)| ≤ C·‖t**∠‖ between a λ=0 KP
/// zero t**¹ and an FCC zero t*¹.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ErrorEstimateReport {
    pub actual: f64,
    pub bound: f64,
    pub overlap: f64,
    pub kappa: f64,
    pub m_sampled: f64,
    pub c_norm: f64,
    pub samples: usize,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct ErrorEstimateOptions {
    pub samples: usize,
    pub norm: NormKind,
}

impl Default for ErrorEstimateOptions {
    fn default() -> Self {
        ErrorEstimateOptions { samples: 64, norm: NormKind::Ell2 }
    }
}

pub fn energy_error_estimate(
    p: &CCProblem,
    split: &SplitSpec,
    t_kp: &DVector<f64>,
    t_fcc: &DVector<f64>,
    opts: &ErrorEstimateOptions,
) -> Result<ErrorEstimateReport> {
    if linalg::inf_norm(&kp_residual(p, split, t_kp, 0.0)) > 1e-8 {
        return Err(Error::validation("t**¹ is not a λ=0 zero of the KP homotopy"));
    }
    if linalg::inf_norm(&cccore::cc_residual(p, t_fcc)) > 1e-8 {
        return Err(Error::validation("t*¹ is not an FCC zero"));
    }
    let sp = &p.space;
    let (t0, ta) = split.split_amplitudes(t_kp);
    let phi0 = sp.reference_vector::<f64>();
    let e0_phi0 = cluster::exp_apply(sp, &t0, &phi0);
    let es_phi0 = cluster::exp_apply(sp, t_fcc, &phi0);
    let overlap = e0_phi0.dot(&es_phi0);
    if overlap.abs() <= 1e-10 {
        return Err(Error::numerical("⟨e^{T⁰**}Φ0, e^{T¹*}Φ0⟩ ≈ 0: the bound degenerates"));
    }
    let actual = (cccore::cc_energy(p, t_kp) - cccore::cc_energy(p, t_fcc)).abs();
    let eps = p.fock.as_ref().map(|f| f.eps.clone());
    let kappa = cluster::amp_norm(&ta, opts.norm, eps.as_deref())?;
    // Fock-norm ↔ 𝕍-norm equivalence constant.
    let c_norm = match (opts.norm, &eps) {
        (NormKind::FockWeighted, _) => 1.0,
        (NormKind::Ell2, Some(e)) if e.iter().all(|&x| x > 0.0) => {
            let emax = e.iter().cloned().fold(f64::MIN, f64::max);
            let emin = e.iter().cloned().fold(f64::MAX, f64::min);
            emax.sqrt().max(1.0 / emin.sqrt())
        }
        _ => 1.0,
    };
    // ‖Π_{𝔙∠} (e^{T⁰**})ᵀ Π_{𝔙∠} e^{T¹*}Φ0‖.
    let e0 = cluster::exp_matrix(sp, &t0);
    let vec = split.sector_pi_high(&(e0.transpose() * split.sector_pi_high(&es_phi0)));
    // M(t**¹): max over ξ on the segment [t⁰**, t¹**] of the operator norm of
    // u ↦ Π_{𝔙∠}[𝓦(ξ), U]Φ0.
    let w = p.w_as::<f64>()?;
    let d = p.dim();
    let mut m_sampled = 0.0f64;
    let ns = opts.samples.max(2);
    for j in 0..ns {
        let s = j as f64 / (ns - 1) as f64;
        let xi = &t0 + &ta * s;
        let w_xi = cccore::sim_transform(sp, &w, &xi, SimMethod::Conjugation);
        let w_phi0 = w_xi.column(0).clone_owned();
        let mut k = DMatrix::<f64>::zeros(sp.sector_dim(), d);
        for (slot, &full_idx) in sp.sel.iter().enumerate() {
            let ph = sp.phase_of[full_idx] as f64;
            let col = w_xi.column(sp.det_of[full_idx]).clone_owned() * ph
                - sp.apply_full_excitation(full_idx, &w_phi0);
            k.set_column(slot, &split.sector_pi_high(&col));
        }
        m_sampled = m_sampled.max(linalg::spectral_norm(&k));
    }
    let c = (c_norm * c_norm + m_sampled) * vec.norm() / overlap.abs();
    let bound = c * kappa;
    Ok(ErrorEstimateReport {
        actual,
        bound,
        overlap,
        kappa,
        m_sampled,
        c_norm,
        samples: ns,
        holds: actual <= bound + 1e-12,
    })
}

/// Constants and condition flags of the KP existence theorem, evaluated at an
/// FCC zero t*¹ with a chosen shift α, ε, ball radius δ, and inner product.
#[derive(Debug, Clone, serde::Serialize)]
pub struct KPExistenceReport {
    pub alpha: f64,
    pub gamma_alpha: f64,
    pub theta_norm: f64,
    pub theta0: f64,
    pub theta_angle: f64,
    pub g: f64,
    pub delta_op: f64,
    pub m_delta: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub eta: f64,
    pub condition_i: bool,
    pub condition_ii: bool,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct KpExistOptions {
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
    pub norm: NormKind,
}

impl Default for KpExistOptions {
    fn default() -> Self {
        KpExistOptions { alpha: 0.0, epsilon: 1e-3, delta: 0.1, samples: 256, seed: 7, norm: NormKind::Ell2 }
    }
}

fn gram(p: &CCProblem, norm: NormKind) -> Result<DVector<f64>> {
    match norm {
        NormKind::Ell2 => Ok(DVector::from_element(p.dim(), 1.0)),
        NormKind::FockWeighted => {
            let fock = p.fock.as_ref().ok_or_else(|| Error::validation("fock-weighted norm needs Fock data"))?;
            if fock.eps.iter().any(|&e| e <= 0.0) {
                return Err(Error::validation("fock-weighted norm needs ε_α > 0"));
            }
            Ok(DVector::from_iterator(p.dim(), fock.eps.iter().copied()))
        }
    }
}

fn weighted_spectral_norm(m: &DMatrix<f64>, g_row: &[f64], g_col: &[f64], row_dual: bool) -> f64 {
    // Operator norm with G-weighted norms on both sides. With `row_dual` the
    // row side carries the dual norm ‖y‖ = ‖G^{-1/2}y‖ (functionals), else the
    // primal ‖G^{1/2}·‖.
    let mut w = m.clone();
    for i in 0..w.nrows() {
        let f = if row_dual { 1.0 / g_row[i].sqrt() } else { g_row[i].sqrt() };
        for j in 0..w.ncols() {
            w[(i, j)] *= f / g_col[j].sqrt();
        }
    }
    linalg::spectral_norm(&w)
}

pub fn kp_existence_report(
    p: &CCProblem,
    split: &SplitSpec,
    sol: &CCSolution<f64>,
    opts: &KpExistOptions,
) -> Result<KPExistenceReport> {
    if !sol.converged {
        return Err(Error::validation("existence report needs a converged FCC zero"));
    }
    let t = &sol.t;
    let d = p.dim();
    let gvec = gram(p, opts.norm)?;
    let g_all: Vec<f64> = gvec.iter().copied().collect();
    let j = cccore::jacobian(p, t, false);
    if linalg::sgn_det(&j) == 0 {
        return Err(Error::validation("degenerate zero: 𝒜′(t*¹) is singular"));
    }
    // γ_α: coercivity constant of ⟨(𝒜′ + αI)r, r⟩ ≥ γ_α ‖r‖²_𝕍, i.e. the
    // smallest eigenvalue of G^{-1/2} sym(J + αG) G^{-1/2}.
    let mut ja = j.clone();
    for i in 0..d {
        ja[(i, i)] += opts.alpha * gvec[i];
    }
    let sym = (&ja + ja.transpose()) * 0.5;
    let mut sym_w = sym.clone();
    for i in 0..d {
        for c in 0..d {
            sym_w[(i, c)] /= (gvec[i] * gvec[c]).sqrt();
        }
    }
    let (evals, _) = linalg::symmetric_eig(&sym_w);
    let gamma_alpha = evals[0];
    // Θ_α from ⟨𝒜′u, Θv⟩ = ⟨(𝒜′ + αI)u, v⟩ for all u, v: JᵀΘ = (J + αG)ᵀ.
    let theta = j
        .transpose()
        .lu()
        .solve(&ja.transpose())
        .ok_or_else(|| Error::numerical("Θ_α system is singular"))?;
    let theta_norm = weighted_spectral_norm(&theta, &g_all, &g_all, false);
    let dev = &theta - DMatrix::<f64>::identity(d, d);
    let g_low: Vec<f64> = split.low.iter().map(|&s| g_all[s]).collect();
    let g_high: Vec<f64> = split.high.iter().map(|&s| g_all[s]).collect();
    let theta0 = weighted_spectral_norm(&sub_block(&dev, &split.low, &split.low), &g_low, &g_low, false).powi(2);
    let theta_angle =
        weighted_spectral_norm(&sub_block(&dev, &split.low, &split.high), &g_low, &g_high, false).powi(2);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // g: sampled bound on |⟨t⁰, t∠⟩_𝕍| / (‖t⁰‖‖t∠‖); exactly 0 for any
    // diagonal Gram matrix because the slot split is orthogonal.
    let mut g_const = 0.0f64;
    for _ in 0..opts.samples.min(64) {
        let mut u0 = DVector::<f64>::zeros(d);
        let mut ua = DVector::<f64>::zeros(d);
        for &s in &split.low {
            u0[s] = rng.gen_range(-1.0..=1.0);
        }
        for &s in &split.high {
            ua[s] = rng.gen_range(-1.0..=1.0);
        }
        let ip: f64 = (0..d).map(|i| g_all[i] * u0[i] * ua[i]).sum();
        let n0: f64 = (0..d).map(|i| g_all[i] * u0[i] * u0[i]).sum::<f64>().sqrt();
        let na: f64 = (0..d).map(|i| g_all[i] * ua[i] * ua[i]).sum::<f64>().sqrt();
        if n0 > 0.0 && na > 0.0 {
            g_const = g_const.max(ip.abs() / (n0 * na));
        }
    }
    // Δ(t*¹): 𝔙⁰ → 𝔙⊥ norm of the amplitude-block restriction of
    // 𝓦 + [(T¹*)₁†, 𝓦].
    let w = p.w_as::<f64>()?;
    let mut t1_part = DVector::<f64>::zeros(d);
    for s in 0..d {
        if p.space.rank_of_slot(s) == 1 {
            t1_part[s] = t[s];
        }
    }
    let t1d = cluster::cluster_matrix(&p.space, &t1_part).transpose();
    let op = &w + &t1d * &w - &w * &t1d;
    let block = cccore::restrict_to_amplitude_block(&p.space, &op);
    let delta_op = weighted_spectral_norm(&sub_block(&block, &split.high, &split.low), &g_high, &g_low, true);
    // M_δ: sampled sup of ‖𝒜″(t*¹ + ζ)‖ over ‖ζ‖_𝕍 ≤ δ; per sample a random
    // G-unit u fixes the first argument, the second runs over the basis.
    let mut m_delta = 0.0f64;
    for _ in 0..opts.samples {
        let mut zeta = DVector::<f64>::zeros(d);
        for i in 0..d {
            zeta[i] = rng.gen_range(-1.0..=1.0);
        }
        let zn: f64 = (0..d).map(|i| g_all[i] * zeta[i] * zeta[i]).sum::<f64>().sqrt();
        let r = rng.gen_range(0.0..=opts.delta);
        if zn > 0.0 {
            zeta *= r / zn;
        }
        let mut u = DVector::<f64>::zeros(d);
        for i in 0..d {
            u[i] = rng.gen_range(-1.0..=1.0);
        }
        let un: f64 = (0..d).map(|i| g_all[i] * u[i] * u[i]).sum::<f64>().sqrt();
        if un > 0.0 {
            u /= un;
        }
        let tz = t + &zeta;
        let mut a2 = DMatrix::<f64>::zeros(d, d);
        for c in 0..d {
            let mut ec = DVector::<f64>::zeros(d);
            ec[c] = 1.0;
            a2.set_column(c, &cccore::hessian_apply(p, &tz, &u, &ec));
        }
        m_delta = m_delta.max(weighted_spectral_norm(&a2, &g_all, &g_all, true));
    }
    let (_, ta) = split.split_amplitudes(t);
    let kappa: f64 = (0..d).map(|i| g_all[i] * ta[i] * ta[i]).sum::<f64>().sqrt();
    let eps = opts.epsilon;
    let eta = (1.0 - g_const) * (gamma_alpha - 0.5 * m_delta * theta_norm * opts.delta)
        / (delta_op + m_delta * opts.delta)
        - 0.5 * f64::max(eps + 2.0 * (1.0 + 1.0 / eps) * theta0, 2.0 * (1.0 + 1.0 / eps) * theta_angle);
    let condition_i = eta > 0.5;
    let condition_ii = if eta > 0.5 {
        let se = eta.sqrt();
        kappa < (2.0 * se - 2.0f64.sqrt()) / (2.0 - 2.0f64.sqrt() + 2.0 * se) * opts.delta
    } else {
        false
    };
    Ok(KPExistenceReport {
        alpha: opts.alpha,
        gamma_alpha,
        theta_norm,
        theta0,
        theta_angle,
        g: g_const,
        delta_op,
        m_delta,
        kappa,
        epsilon: eps,
        delta: opts.delta,
        eta,
        condition_i,
        condition_ii,
        samples: opts.samples,
    })
}

/// Parameters of the linear homotopy: the penalty weight α > 0 and the target
/// orthogonal component u⊥.
#[derive(Debug, Clone)]
pub struct LinearParams<S: Scalar> {
    pub alpha: f64,
    pub u_perp: DVector<S>,
}

/// Linear homotopy residual: (1−λ)[𝒜⁰(t⁰) on the 𝕍⁰ slots, α|t⊥_β − u⊥_β|
/// on the ⊥ slots] + λ𝒜¹(t¹). Its λ=0 zeros are exactly
/// {𝒜⁰(t⁰)=0, t⊥ = u⊥}.
pub fn linear_residual<S: Scalar>(
    p: &CCProblem,
    split: &SplitSpec,
    t1: &DVector<S>,
    lambda: f64,
    params: &LinearParams<S>,
) -> Result<DVector<S>> {
    if params.alpha <= 0.0 {
        return Err(Error::validation("linear homotopy needs α > 0"));
    }
    let (t0, ta) = split.split_amplitudes(t1);
    let r1 = cccore::cc_residual(p, t1);
    let r0 = cccore::cc_residual(p, &t0);
    let one_m = S::from_re(1.0 - lambda);
    let lam = S::from_re(lambda);
    let mut out = DVector::zeros(p.dim());
    for &s in &split.low {
        out[s] = one_m * r0[s] + lam * r1[s];
    }
    for &s in &split.high {
        let pen = S::from_re(params.alpha * (ta[s] - params.u_perp[s]).mag());
        out[s] = one_m * pen + lam * r1[s];
    }
    Ok(out)
}
