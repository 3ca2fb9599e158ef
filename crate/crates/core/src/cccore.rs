//! The CC residual map 𝒜, CC energy, similarity-transformed and modified
//! Hamiltonians, analytic Jacobian / Hessian action, and the damped Newton and
//! multistart solvers (real and complex).

use crate::cluster::{self, AmplitudeSpace, TruncationScheme};
use crate::fockspace::{hamiltonian_matrix, DenseOperator, Integrals, OrbitalBasis};
use crate::linalg;
use crate::models::{self, FockData, MeanFieldResult, ModelSpec, ScfOptions};
use crate::scalar::{field_tag, FieldTag, Scalar};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// An assembled CC problem: MO-basis integrals, the amplitude space over the
/// full N-sector, the cached Hamiltonian matrix, and (when built through SCF)
/// the Fock splitting data.
#[derive(Debug, Clone)]
pub struct CCProblem {
    pub ints: Integrals,
    pub basis: OrbitalBasis,
    pub space: AmplitudeSpace,
    pub h: DenseOperator<f64>,
    pub fock: Option<FockData>,
}

impl CCProblem {
    /// Build from integrals already in the working (e.g. MO) basis.
    pub fn from_integrals(ints: Integrals, basis: OrbitalBasis, scheme: TruncationScheme) -> Result<Self> {
        let space = cluster::amplitude_space(basis, scheme);
        let h = hamiltonian_matrix(&ints, &space.dets)?;
        Ok(CCProblem { ints, basis, space, h, fock: None })
    }

    /// Full pipeline: model → SCF → MO transform → Hamiltonian + Fock data.
    pub fn from_model(
        spec: &ModelSpec,
        scheme: TruncationScheme,
        scf_opts: &ScfOptions,
    ) -> Result<(Self, MeanFieldResult)> {
        let site_ints = models::build_model(spec)?;
        let basis = spec.orbital_basis()?;
        let mf = models::scf_solve(&site_ints, basis.n, scf_opts)?;
        let ints = models::to_mo_basis(&site_ints, &mf.c)?;
        let space = cluster::amplitude_space(basis, scheme);
        let h = hamiltonian_matrix(&ints, &space.dets)?;
        let fock = models::fock_data(&mf, &space.dets, &h, &space);
        Ok((CCProblem { ints, basis, space, h, fock: Some(fock) }, mf))
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn h_as<S: Scalar>(&self) -> DMatrix<S> {
        self.h.mat.map(S::from_re)
    }

    /// Fluctuation matrix 𝓦_K (needs Fock data).
    pub fn w_as<S: Scalar>(&self) -> Result<DMatrix<S>> {
        let fock = self.fock.as_ref().ok_or_else(|| Error::validation("no Fock data on problem"))?;
        Ok(fock.w_mat.map(S::from_re))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMethod {
    /// exp_matrix(−t) · ℋ · exp_matrix(t).
    Conjugation,
    /// Σ_{j=0..4} [ℋ, T]_(j) / j! — the BCH series, which terminates at 4
    /// commutators for a two-body operator.
    Bch,
}

/// Similarity transform of an arbitrary base operator: e^{−T} B e^{T}.
pub fn sim_transform<S: Scalar>(
    space: &AmplitudeSpace,
    base: &DMatrix<S>,
    t: &DVector<S>,
    method: SimMethod,
) -> DMatrix<S> {
    match method {
        SimMethod::Conjugation => {
            let e = cluster::exp_matrix(space, t);
            let ei = cluster::exp_matrix(space, &(-t.clone()));
            ei * base * e
        }
        SimMethod::Bch => {
            let tm = cluster::cluster_matrix(space, t);
            let mut out = base.clone();
            let mut comm = base.clone();
            let mut fact = 1.0;
            for j in 1..=4 {
                comm = &comm * &tm - &tm * &comm;
                fact *= j as f64;
                out += &comm * S::from_re(1.0 / fact);
            }
            out
        }
    }
}

/// ℋ_K(t) = e^{−T} ℋ_K e^{T}.
pub fn sim_hamiltonian<S: Scalar>(p: &CCProblem, t: &DVector<S>, method: SimMethod) -> DMatrix<S> {
    sim_transform(&p.space, &p.h_as::<S>(), t, method)
}

/// ℋ_K(t) Φ0 as a sector vector, without forming the transformed matrix.
pub fn sim_h_on_reference<S: Scalar>(p: &CCProblem, t: &DVector<S>) -> DVector<S> {
    let phi0 = p.space.reference_vector::<S>();
    let v = cluster::exp_apply(&p.space, t, &phi0);
    let w = p.h_as::<S>() * v;
    cluster::exp_apply(&p.space, &(-t.clone()), &w)
}

/// CC residual 𝒜(t): entry α = ⟨ℋ_K(t)Φ0, Φ_α⟩ over Ξ(G).
pub fn cc_residual<S: Scalar>(p: &CCProblem, t: &DVector<S>) -> DVector<S> {
    let u = sim_h_on_reference(p, t);
    p.space.project_to_amplitudes(&u)
}

/// CC energy ℰ_CC(t) = ⟨ℋ_K e^{T} Φ0, Φ0⟩.
pub fn cc_energy<S: Scalar>(p: &CCProblem, t: &DVector<S>) -> S {
    let phi0 = p.space.reference_vector::<S>();
    let v = cluster::exp_apply(&p.space, t, &phi0);
    (p.h_as::<S>() * v)[0]
}

/// Modified similarity-transformed Hamiltonian
/// Ĥ_K(t) = ℋ_K(t) − Σ_{α ∈ Ξ(G)^c} ⟨ℋ_K(t)Φ0, Φ_α⟩ X_α.
pub fn modified_hamiltonian<S: Scalar>(p: &CCProblem, t: &DVector<S>) -> DMatrix<S> {
    let mut m = sim_hamiltonian(p, t, SimMethod::Conjugation);
    let u = m.column(0).clone_owned();
    for full_idx in p.space.complement() {
        let coef = S::from_re(p.space.phase_of[full_idx] as f64) * u[p.space.det_of[full_idx]];
        if coef != S::zero() {
            m -= p.space.excitation_matrix::<S>(full_idx) * coef;
        }
    }
    m
}

/// Restrict a sector matrix to the Φ_α basis of the amplitude space:
/// entry (β, α) = ⟨M Φ_α, Φ_β⟩ = phase_β phase_α M[det_β, det_α].
pub fn restrict_to_amplitude_block<S: Scalar>(space: &AmplitudeSpace, m: &DMatrix<S>) -> DMatrix<S> {
    let d = space.dim();
    let mut out = DMatrix::zeros(d, d);
    for (bslot, &bfull) in space.sel.iter().enumerate() {
        for (aslot, &afull) in space.sel.iter().enumerate() {
            let ph = (space.phase_of[bfull] * space.phase_of[afull]) as f64;
            out[(bslot, aslot)] = S::from_re(ph) * m[(space.det_of[bfull], space.det_of[afull])];
        }
    }
    out
}

/// Jacobian 𝒜′(t).
///
/// General form (valid off-zero): (β,α) = ⟨[ℋ_K(t), X_α]Φ0, Φ_β⟩.
/// At-zero form: ⟨(Ĥ_K(t) − ℰ_CC(t)) X_α Φ0, Φ_β⟩; the two agree at zeros.
pub fn jacobian<S: Scalar>(p: &CCProblem, t: &DVector<S>, at_zero: bool) -> DMatrix<S> {
    if at_zero {
        let e = cc_energy(p, t);
        let mut m = modified_hamiltonian(p, t);
        for i in 0..m.nrows() {
            m[(i, i)] -= e;
        }
        restrict_to_amplitude_block(&p.space, &m)
    } else {
        let m = sim_hamiltonian::<S>(p, t, SimMethod::Conjugation);
        let h_phi0 = m.column(0).clone_owned();
        let d = p.space.dim();
        let mut j = DMatrix::zeros(d, d);
        for (aslot, &afull) in p.space.sel.iter().enumerate() {
            // [ℋ(t), X_α]Φ0 = ℋ(t) X_α Φ0 − X_α ℋ(t) Φ0.
            let ph = S::from_re(p.space.phase_of[afull] as f64);
            let mut col = m.column(p.space.det_of[afull]).clone_owned() * ph;
            col -= p.space.apply_full_excitation(afull, &h_phi0);
            let proj = p.space.project_to_amplitudes(&col);
            j.set_column(aslot, &proj);
        }
        j
    }
}

/// Central finite-difference Jacobian of the residual (test oracle and the
/// `jacobian: fd` solver option).
pub fn fd_jacobian<S: Scalar>(p: &CCProblem, t: &DVector<S>, step: f64) -> DMatrix<S> {
    let d = p.space.dim();
    let mut j = DMatrix::zeros(d, d);
    let h = S::from_re(step);
    for a in 0..d {
        let mut tp = t.clone();
        let mut tm = t.clone();
        tp[a] += h;
        tm[a] -= h;
        let col = (cc_residual(p, &tp) - cc_residual(p, &tm)) / (S::from_re(2.0) * h);
        j.set_column(a, &col);
    }
    j
}

/// Second derivative action 𝒜″(t)(u,v): entry β = ⟨[[B(t), U], V]Φ0, Φ_β⟩,
/// where B is ℋ_K by default; passing the fluctuation operator 𝓦_K gives the
/// same values (the Fock part drops out of the double commutator).
pub fn hessian_apply_base<S: Scalar>(
    p: &CCProblem,
    base: &DMatrix<S>,
    t: &DVector<S>,
    u: &DVector<S>,
    v: &DVector<S>,
) -> DVector<S> {
    let m = sim_transform(&p.space, base, t, SimMethod::Conjugation);
    let phi0 = p.space.reference_vector::<S>();
    let sp = &p.space;
    let uv = cluster::cluster_apply(sp, u, &cluster::cluster_apply(sp, v, &phi0));
    let m_phi0 = m.column(0).clone_owned();
    // [[M,U],V]Φ0 = M UV Φ0 − U M V Φ0 − V M U Φ0 + UV M Φ0.
    let w = &m * uv
        - cluster::cluster_apply(sp, u, &(&m * cluster::cluster_apply(sp, v, &phi0)))
        - cluster::cluster_apply(sp, v, &(&m * cluster::cluster_apply(sp, u, &phi0)))
        + cluster::cluster_apply(sp, u, &cluster::cluster_apply(sp, v, &m_phi0));
    sp.project_to_amplitudes(&w)
}

pub fn hessian_apply<S: Scalar>(
    p: &CCProblem,
    t: &DVector<S>,
    u: &DVector<S>,
    v: &DVector<S>,
) -> DVector<S> {
    hessian_apply_base(p, &p.h_as::<S>(), t, u, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JacobianMode {
    Analytic,
    Fd,
}

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Residual ∞-norm convergence threshold.
    pub tol: f64,
    /// Step ℓ²-norm threshold (alternative convergence criterion).
    pub step_tol: f64,
    pub max_iter: usize,
    pub damping: Vec<f64>,
    pub jacobian: JacobianMode,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            step_tol: 1e-12,
            max_iter: 100,
            damping: vec![1.0, 0.5, 0.25, 0.125],
            jacobian: JacobianMode::Analytic,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CCSolution<S: Scalar> {
    pub t: DVector<S>,
    pub e_cc: S,
    pub residual_inf: f64,
    pub converged: bool,
    pub iterations: usize,
    pub singular_jacobian_seen: bool,
    pub field: FieldTag,
}

/// Damped Newton iteration on an arbitrary residual/Jacobian pair.
/// Used for the CC equations and for homotopy correctors.
pub fn newton_generic<S: Scalar>(
    t0: &DVector<S>,
    residual: &dyn Fn(&DVector<S>) -> DVector<S>,
    jac: &dyn Fn(&DVector<S>) -> DMatrix<S>,
    opts: &NewtonOptions,
) -> (DVector<S>, f64, bool, usize, bool) {
    let mut t = t0.clone();
    let mut r = residual(&t);
    let mut rnorm = linalg::inf_norm(&r);
    let mut singular_seen = false;
    for iter in 0..opts.max_iter {
        if rnorm <= opts.tol {
            return (t, rnorm, true, iter, singular_seen);
        }
        let j = jac(&t);
        let (delta, singular) = linalg::solve(&j, &(-&r));
        singular_seen |= singular;
        let mut accepted = false;
        let mut best: Option<(DVector<S>, DVector<S>, f64)> = None;
        for &factor in &opts.damping {
            let cand = &t + &delta * S::from_re(factor);
            let rc = residual(&cand);
            let rcn = linalg::inf_norm(&rc);
            if rcn < rnorm {
                t = cand;
                r = rc;
                rnorm = rcn;
                accepted = true;
                break;
            }
            if best.as_ref().map_or(true, |(_, _, bn)| rcn < *bn) {
                best = Some((cand, rc, rcn));
            }
        }
        if !accepted {
            // No damping factor improved; take the least-bad step anyway so
            // the iteration can escape a flat region, then keep counting.
            let (cand, rc, rcn) = best.expect("nonempty damping set");
            t = cand;
            r = rc;
            rnorm = rcn;
        }
        let step_len = delta.iter().map(|x| x.mag().powi(2)).sum::<f64>().sqrt();
        if step_len <= opts.step_tol {
            return (t, rnorm, rnorm <= opts.tol.max(1e-8), iter + 1, singular_seen);
        }
    }
    (t, rnorm, rnorm <= opts.tol, opts.max_iter, singular_seen)
}

/// Damped Newton on the CC residual with the analytic Jacobian.
pub fn newton_solve<S: Scalar>(p: &CCProblem, t0: &DVector<S>, opts: &NewtonOptions) -> CCSolution<S> {
    let residual = |t: &DVector<S>| cc_residual(p, t);
    let jac = |t: &DVector<S>| match opts.jacobian {
        JacobianMode::Analytic => jacobian(p, t, false),
        JacobianMode::Fd => fd_jacobian(p, t, 1e-5),
    };
    let (t, rnorm, converged, iterations, singular) = newton_generic(t0, &residual, &jac, opts);
    let e_cc = cc_energy(p, &t);
    CCSolution {
        t,
        e_cc,
        residual_inf: rnorm,
        converged,
        iterations,
        singular_jacobian_seen: singular,
        field: field_tag::<S>(),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Sampler {
    pub seed: u64,
    pub radius: f64,
    pub count: usize,
}

/// Multistart Newton: random starts in a ball around the origin, concurrent
/// solves, deduplication at ℓ² distance 1e−6. Only converged zeros are kept;
/// the result is deterministic for a fixed seed.
pub fn multistart_solve<S: Scalar>(
    p: &CCProblem,
    sampler: &Sampler,
    opts: &NewtonOptions,
) -> Vec<CCSolution<S>> {
    let d = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let mut starts: Vec<DVector<S>> = Vec::with_capacity(sampler.count);
    for _ in 0..sampler.count {
        let mut t0 = DVector::zeros(d);
        for i in 0..d {
            let re = rng.gen_range(-sampler.radius..=sampler.radius);
            let im = if S::IS_COMPLEX { rng.gen_range(-sampler.radius..=sampler.radius) } else { 0.0 };
            t0[i] = S::from_re_im(re, im);
        }
        starts.push(t0);
    }
    let sols: Vec<CCSolution<S>> = {
        use rayon::prelude::*;
        starts.par_iter().map(|t0| newton_solve(p, t0, opts)).collect()
    };
    dedup_solutions(sols, opts.tol)
}

fn dedup_solutions<S: Scalar>(mut sols: Vec<CCSolution<S>>, tol: f64) -> Vec<CCSolution<S>> {
    sols.retain(|s| s.converged && s.residual_inf <= tol.max(1e-8));
    // Deterministic order: by energy, then lexicographic on amplitudes.
    sols.sort_by(|a, b| {
        a.e_cc
            .re_part()
            .total_cmp(&b.e_cc.re_part())
            .then(a.e_cc.im_part().total_cmp(&b.e_cc.im_part()))
            .then_with(|| {
                for i in 0..a.t.len() {
                    let c = a.t[i].re_part().total_cmp(&b.t[i].re_part()).then(a.t[i].im_part().total_cmp(&b.t[i].im_part()));
                    if c != std::cmp::Ordering::Equal {
                        return c;
                    }
                }
                std::cmp::Ordering::Equal
            })
    });
    let mut out: Vec<CCSolution<S>> = Vec::new();
    for s in sols {
        let dup = out.iter().any(|o| (&s.t - &o.t).norm() <= 1e-6);
        if !dup {
            out.push(s);
        }
    }
    out
}
