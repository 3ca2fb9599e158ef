//! Topological-index computation at CC zeros (non-degenerate, degenerate,
//! complex), EOM-CC spectrum, Fock-splitting non-degeneracy test, and
//! degree-over-region bookkeeping.

use crate::cccore::{self, CCProblem, CCSolution, NewtonOptions};
use crate::linalg;
use crate::scalar::{field_tag, FieldTag, Scalar};
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// |Im λ| ≤ REALITY_RTOL · max(1, |λ|) counts as a real eigenvalue.
pub const REALITY_RTOL: f64 = 1e-9;
/// Eigenvalues within this band of ℰ_CC flag degeneracy instead of entering ν.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Singular values below KERNEL_RANK_TOL · σ_max count as zero.
pub const KERNEL_RANK_TOL: f64 = 1e-8;

/// A topological index: a resolved integer or an unresolved verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexValue {
    Resolved(i64),
    Unresolved,
}

impl Serialize for IndexValue {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        match self {
            IndexValue::Resolved(v) => s.serialize_i64(*v),
            IndexValue::Unresolved => s.serialize_str("unresolved"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexReport {
    pub degenerate: bool,
    /// Count of real eigenvalues of Ĥ_K(t*)_𝔙 strictly below ℰ_CC.
    pub nu: Option<usize>,
    pub index: IndexValue,
    #[serde(serialize_with = "ser_c64_list")]
    pub eigvals: Vec<C64>,
    pub sgn_det: i32,
    pub field: FieldTag,
}

fn ser_c64_list<Ser: serde::Serializer>(v: &[C64], s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&crate::jsonio::ComplexJson::from(*z))?;
    }
    seq.end()
}

fn is_real(l: C64) -> bool {
    l.im.abs() <= REALITY_RTOL * l.norm().max(1.0)
}

/// Realification [[B, −C], [C, B]] of a complex matrix B + iC.
pub fn realify(m: &DMatrix<C64>) -> DMatrix<f64> {
    let d = m.nrows();
    let mut out = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = m[(i, j)].re;
            out[(i, j + d)] = -m[(i, j)].im;
            out[(i + d, j)] = m[(i, j)].im;
            out[(i + d, j + d)] = m[(i, j)].re;
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct RealificationReport {
    pub det_realification: f64,
    pub det_complex_sq: f64,
    pub rel_err: f64,
}

/// det of the realification equals |det|² of the complex matrix.
pub fn realification_check(m: &DMatrix<C64>) -> RealificationReport {
    let dr = linalg::det(&realify(m));
    let dc = linalg::det(m).norm_sqr();
    let scale = dr.abs().max(dc).max(f64::MIN_POSITIVE);
    RealificationReport { det_realification: dr, det_complex_sq: dc, rel_err: (dr - dc).abs() / scale }
}

/// Eigenvalues of Ĥ_K(t*)_𝔙 together with the degeneracy verdict against ℰ_CC.
fn vblock_eigenvalues<S: Scalar>(p: &CCProblem, t: &DVector<S>) -> (Vec<C64>, C64, bool) {
    let hhat = cccore::modified_hamiltonian(p, t);
    let block = cccore::restrict_to_amplitude_block(&p.space, &hhat);
    let eigs = linalg::eigvals(&block.map(|x| x.to_c64()));
    let e = cccore::cc_energy(p, t).to_c64();
    let band = DEGENERACY_TOL * e.norm().max(1.0);
    let degenerate = eigs.iter().any(|l| (l - e).norm() <= band);
    (eigs, e, degenerate)
}

/// Sign of det 𝒜′(t*): plain determinant sign over ℝ, realification sign over ℂ.
fn jacobian_sign<S: Scalar>(p: &CCProblem, t: &DVector<S>) -> i32 {
    let j = cccore::jacobian(p, t, true);
    if S::IS_COMPLEX {
        linalg::sgn_det(&realify(&j.map(|x| x.to_c64())))
    } else {
        linalg::sgn_det(&j.map(|x| x.re_part()))
    }
}

/// Index of a non-degenerate zero via the eigenvalue count ν, hard-checked
/// against sgn det 𝒜′(t*). A degenerate spectrum yields no index claim.
pub fn index_nondegenerate<S: Scalar>(p: &CCProblem, sol: &CCSolution<S>) -> Result<IndexReport> {
    if !sol.converged {
        return Err(Error::validation("index requires a converged solution"));
    }
    let (eigs, e, degenerate) = vblock_eigenvalues(p, &sol.t);
    let field = field_tag::<S>();
    if degenerate {
        return Ok(IndexReport {
            degenerate: true,
            nu: None,
            index: IndexValue::Unresolved,
            eigvals: eigs,
            sgn_det: 0,
            field,
        });
    }
    let nu = eigs.iter().filter(|l| is_real(**l) && l.re < e.re).count();
    let sgn = jacobian_sign(p, &sol.t);
    let index = if S::IS_COMPLEX { 1 } else if nu % 2 == 0 { 1 } else { -1 };
    if sgn != index {
        return Err(Error::numerical(format!(
            "index identity violated: (−1)^ν = {index} but sgn det 𝒜′ = {sgn} (ν = {nu})"
        )));
    }
    Ok(IndexReport {
        degenerate: false,
        nu: Some(nu),
        index: IndexValue::Resolved(index as i64),
        eigvals: eigs,
        sgn_det: sgn,
        field,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EOMReport {
    #[serde(serialize_with = "ser_c64_list")]
    pub delta_e: Vec<C64>,
    pub nu: usize,
}

/// EOM-CC spectrum: eigenvalues of the at-zero Jacobian, i.e. the excitation
/// energy shifts ΔE_j; ν counts the negative real ones.
pub fn eom_spectrum<S: Scalar>(p: &CCProblem, sol: &CCSolution<S>) -> Result<EOMReport> {
    if !sol.converged {
        return Err(Error::validation("EOM spectrum requires a converged solution"));
    }
    let j = cccore::jacobian(p, &sol.t, true);
    let delta_e = linalg::eigvals(&j.map(|x| x.to_c64()));
    let nu = delta_e.iter().filter(|l| is_real(**l) && l.re < -DEGENERACY_TOL).count();
    Ok(EOMReport { delta_e, nu })
}

#[derive(Debug, Clone, Serialize)]
pub struct FockSplittingReport {
    pub omega0: crate::jsonio::ComplexJson,
    #[serde(serialize_with = "ser_c64_list")]
    pub spectrum: Vec<C64>,
    pub nondegenerate: bool,
    pub lambda0: f64,
    pub e_cc: crate::jsonio::ComplexJson,
    /// |ℰ_CC − (Λ0 + ω0)|.
    pub split_identity_defect: f64,
}

/// Non-degeneracy via the Fock splitting: ω0 ∉ σ(𝒬(t*) + 𝓦_K(t*)_𝔙),
/// together with the identity ℰ_CC = Λ0 + ω0.
pub fn fock_splitting_test<S: Scalar>(p: &CCProblem, sol: &CCSolution<S>) -> Result<FockSplittingReport> {
    if !p.space.rank_regular {
        return Err(Error::validation("Fock splitting test needs a rank-regular space"));
    }
    let fock = p.fock.as_ref().ok_or_else(|| Error::validation("no Fock data on problem"))?;
    let w_sim = cccore::sim_transform(&p.space, &p.w_as::<S>()?, &sol.t, cccore::SimMethod::Conjugation);
    let omega0 = w_sim[(0, 0)].to_c64();
    let d = p.dim();
    // 𝒬_{αβ} = ε_α δ_{αβ} + Σ_γ t_γ ε_γ ⟨X_γ Φ_β, Φ_α⟩.
    let mut q = DMatrix::<S>::zeros(d, d);
    for a in 0..d {
        q[(a, a)] = S::from_re(fock.eps[a]);
    }
    for (gslot, &gfull) in p.space.sel.iter().enumerate() {
        let coef = sol.t[gslot] * S::from_re(fock.eps[gslot]);
        if coef == S::zero() {
            continue;
        }
        let xg = cccore::restrict_to_amplitude_block(&p.space, &p.space.excitation_matrix::<S>(gfull));
        q += xg * coef;
    }
    let w_block = cccore::restrict_to_amplitude_block(&p.space, &w_sim);
    let spectrum = linalg::eigvals(&(q + w_block).map(|x| x.to_c64()));
    let band = DEGENERACY_TOL * omega0.norm().max(1.0);
    let nondegenerate = spectrum.iter().all(|l| (l - omega0).norm() > band);
    let e_cc = sol.e_cc.to_c64();
    let defect = (e_cc - C64::new(fock.lambda0, 0.0) - omega0).norm();
    Ok(FockSplittingReport {
        omega0: omega0.into(),
        spectrum,
        nondegenerate,
        lambda0: fock.lambda0,
        e_cc: e_cc.into(),
        split_identity_defect: defect,
    })
}

/// Kernel data and resolved index at a degenerate zero.
#[derive(Debug, Clone)]
pub struct DegenerateData<S: Scalar> {
    /// Kernel dimension μ.
    pub mu: usize,
    /// Right kernel basis of 𝒜′(t*) (columns).
    pub w_r: DMatrix<S>,
    /// Left kernel basis (kernel of the adjoint).
    pub w_l: DMatrix<S>,
    pub index: IndexValue,
    /// min ‖ℬ(t)‖ over the sampled unit sphere of W_R.
    pub sphere_min_b: f64,
    /// Sphere direction violating ℬ ≠ 0, when unresolved.
    pub witness: Option<DVector<S>>,
    /// Root count of the perturbed equation (μ ≥ 2 procedure, complex μ = 1).
    pub perturbed_count: Option<usize>,
}

/// ℬ(u) = Q · ½𝒜″(t*)(u,u) in amplitude coordinates, Q the orthogonal
/// projector onto W_L. The fluctuation form gives identical values; we use
/// ℋ_K(t*) directly.
fn b_map<S: Scalar>(p: &CCProblem, t: &DVector<S>, q: &DMatrix<S>, u: &DVector<S>) -> DVector<S> {
    let h2 = cccore::hessian_apply(p, t, u, u);
    q * (h2 * S::from_re(0.5))
}

#[derive(Debug, Clone)]
pub struct PerturbOptions {
    pub magnitude: f64,
    pub starts: usize,
    pub seed: u64,
    /// Roots are counted inside this ℓ²-ball around t*.
    pub ball: f64,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        PerturbOptions { magnitude: 1e-6, starts: 64, seed: 17, ball: 1e-2 }
    }
}

/// Solve 𝒜(t) = z from random starts near t*; distinct roots within the ball.
pub fn perturbed_roots<S: Scalar>(
    p: &CCProblem,
    t_star: &DVector<S>,
    z: &DVector<S>,
    opts: &PerturbOptions,
) -> Vec<DVector<S>> {
    let d = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let nopts = NewtonOptions::default();
    let residual = |t: &DVector<S>| cc_shifted_residual(p, t, z);
    let jac = |t: &DVector<S>| cccore::jacobian(p, t, false);
    let spread = opts.magnitude.sqrt().max(1e-8) * 10.0;
    let mut roots: Vec<DVector<S>> = Vec::new();
    for _ in 0..opts.starts {
        let mut t0 = t_star.clone();
        for i in 0..d {
            let re = rng.gen_range(-spread..=spread);
            let im = if S::IS_COMPLEX { rng.gen_range(-spread..=spread) } else { 0.0 };
            t0[i] += S::from_re_im(re, im);
        }
        let (t, rnorm, converged, _, _) = cccore::newton_generic(&t0, &residual, &jac, &nopts);
        if !converged || rnorm > 1e-8 {
            continue;
        }
        if (&t - t_star).norm() > opts.ball {
            continue;
        }
        if roots.iter().all(|r| (r - &t).norm() > 1e-6) {
            roots.push(t);
        }
    }
    roots
}

fn cc_shifted_residual<S: Scalar>(p: &CCProblem, t: &DVector<S>, z: &DVector<S>) -> DVector<S> {
    cccore::cc_residual(p, t) - z
}

/// Adverse right-hand side for a real μ = 1 degenerate zero: η ℓ with η of
/// opposite sign to ⟨ℬ(r), ℓ⟩, so the quadratic equation for the perturbed
/// roots has no real solution (solution loss).
pub fn adverse_direction(
    p: &CCProblem,
    t_star: &DVector<f64>,
    data: &DegenerateData<f64>,
    magnitude: f64,
) -> Result<DVector<f64>> {
    if data.mu != 1 {
        return Err(Error::validation("adverse direction defined for μ = 1"));
    }
    let ell = data.w_l.column(0).clone_owned();
    let r = data.w_r.column(0).clone_owned();
    let q = &data.w_l * data.w_l.adjoint();
    let b = b_map(p, t_star, &q, &r);
    let coef = linalg::dot(&b, &ell);
    if coef.abs() < 1e-12 {
        return Err(Error::numerical("sphere condition degenerate: ⟨ℬ(r), ℓ⟩ ≈ 0"));
    }
    Ok(ell * (-coef.signum() * magnitude))
}

/// Degenerate-zero analysis: kernel bases at `rank_tol`, the sphere condition
/// for ℬ on W_R, and the resolved index (μ=1: 0 over ℝ, 2 over ℂ; μ ≥ 2 via
/// the perturbed root count).
pub fn degenerate_index<S: Scalar>(
    p: &CCProblem,
    sol: &CCSolution<S>,
    rank_tol: f64,
) -> Result<DegenerateData<S>> {
    if !sol.converged {
        return Err(Error::validation("degenerate index requires a converged solution"));
    }
    let j = cccore::jacobian(p, &sol.t, true);
    let w_r = linalg::kernel_basis(&j, rank_tol);
    let w_l = linalg::kernel_basis(&j.adjoint(), rank_tol);
    let mu = w_r.ncols();
    if mu == 0 {
        return Err(Error::validation("zero is non-degenerate at the given rank tolerance"));
    }
    if w_l.ncols() != mu {
        return Err(Error::numerical(format!(
            "left/right kernel dimension mismatch: {} vs {mu}",
            w_l.ncols()
        )));
    }
    let q = &w_l * w_l.adjoint();
    // Sphere condition: ℬ(t) ≠ 0 on the unit sphere of W_R, sampled at 64·μ
    // random directions plus the coordinate directions.
    let mut rng = ChaCha8Rng::seed_from_u64(2027);
    let mut sphere_min = f64::INFINITY;
    let mut witness: Option<DVector<S>> = None;
    let mut dirs: Vec<DVector<S>> = (0..mu).map(|j| w_r.column(j).clone_owned()).collect();
    for _ in 0..64 * mu {
        let mut c = DVector::<S>::zeros(mu);
        for i in 0..mu {
            let re = rng.gen_range(-1.0..=1.0);
            let im = if S::IS_COMPLEX { rng.gen_range(-1.0..=1.0) } else { 0.0 };
            c[i] = S::from_re_im(re, im);
        }
        let norm = c.norm();
        if norm < 1e-3 {
            continue;
        }
        dirs.push(&w_r * (c / S::from_re(norm)));
    }
    let b_floor = 1e-10;
    for u in &dirs {
        let b = b_map(p, &sol.t, &q, u);
        let bn = b.norm();
        if bn < sphere_min {
            sphere_min = bn;
            if bn <= b_floor {
                witness = Some(u.clone());
            }
        }
    }
    if witness.is_some() {
        return Ok(DegenerateData {
            mu,
            w_r,
            w_l,
            index: IndexValue::Unresolved,
            sphere_min_b: sphere_min,
            witness,
            perturbed_count: None,
        });
    }
    let (index, count) = if mu == 1 && !S::IS_COMPLEX {
        (IndexValue::Resolved(0), None)
    } else {
        // Perturbed count: roots of 𝒜 = z′ near t* for a generic small z′.
        let mut z = DVector::<S>::zeros(p.dim());
        let mut zr = ChaCha8Rng::seed_from_u64(31);
        for i in 0..p.dim() {
            let re = zr.gen_range(-1.0..=1.0);
            let im = if S::IS_COMPLEX { zr.gen_range(-1.0..=1.0) } else { 0.0 };
            z[i] = S::from_re_im(re, im);
        }
        let scale = S::from_re(1e-6 / linalg::inf_norm(&z).max(f64::MIN_POSITIVE));
        let z = z * scale;
        let roots = perturbed_roots(p, &sol.t, &z, &PerturbOptions::default());
        let m = roots.len();
        if S::IS_COMPLEX {
            (IndexValue::Resolved(m as i64), Some(m))
        } else {
            // Real μ ≥ 2: the sum in the degree formula is sign-indefinite;
            // only the parity of the perturbed count is meaningful.
            (IndexValue::Unresolved, Some(m))
        }
    };
    Ok(DegenerateData {
        mu,
        w_r,
        w_l,
        index,
        sphere_min_b: sphere_min,
        witness: None,
        perturbed_count: count,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeReport {
    pub degree: i64,
    pub boundary_min_residual: f64,
    pub perturbed_count: usize,
    pub parity_consistent: bool,
}

/// Degree of 𝒜 over a box (ball) as the sum of member indices, with a
/// boundary-residual guard and a perturbed-recount parity probe.
pub fn degree_over_box<S: Scalar>(
    p: &CCProblem,
    center: &DVector<S>,
    radius: f64,
    sols: &[CCSolution<S>],
) -> Result<DegreeReport> {
    let d = p.dim();
    for sol in sols {
        if (&sol.t - center).norm() >= radius {
            return Err(Error::validation("listed zero not strictly inside the region"));
        }
    }
    // Boundary guard: the residual must be bounded away from zero on a sample
    // of the sphere.
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut boundary_min = f64::INFINITY;
    for _ in 0..64 {
        let mut u = DVector::<S>::zeros(d);
        for i in 0..d {
            let re = rng.gen_range(-1.0..=1.0);
            let im = if S::IS_COMPLEX { rng.gen_range(-1.0..=1.0) } else { 0.0 };
            u[i] = S::from_re_im(re, im);
        }
        let norm = u.norm();
        if norm < 1e-6 {
            continue;
        }
        let x = center + u * S::from_re(radius / norm);
        let rn = linalg::inf_norm(&cccore::cc_residual(p, &x));
        boundary_min = boundary_min.min(rn);
    }
    if boundary_min < 1e-8 {
        return Err(Error::numerical(format!(
            "boundary sample hits a near-zero of 𝒜 (residual {boundary_min:.3e}); refusing degree claim"
        )));
    }
    let mut degree: i64 = 0;
    for sol in sols {
        let rep = index_nondegenerate(p, sol)?;
        let idx = if rep.degenerate {
            degenerate_index(p, sol, KERNEL_RANK_TOL)?.index
        } else {
            rep.index
        };
        match idx {
            IndexValue::Resolved(v) => degree += v,
            IndexValue::Unresolved => {
                return Err(Error::numerical("member zero has unresolved index"));
            }
        }
    }
    // Stability probe: recount Newton-found roots of the perturbed equation
    // and compare parity (m ≡ deg mod 2).
    let mut z = DVector::<S>::zeros(d);
    for i in 0..d {
        let re = rng.gen_range(-1.0..=1.0);
        let im = if S::IS_COMPLEX { rng.gen_range(-1.0..=1.0) } else { 0.0 };
        z[i] = S::from_re_im(re, im);
    }
    let scale = S::from_re(1e-6 / linalg::inf_norm(&z).max(f64::MIN_POSITIVE));
    let z = z * scale;
    let popts = PerturbOptions { ball: radius, starts: 128, ..Default::default() };
    let count = perturbed_roots(p, center, &z, &popts).len();
    let parity_consistent = (count as i64 - degree).rem_euclid(2) == 0;
    Ok(DegreeReport { degree, boundary_min_residual: boundary_min, perturbed_count: count, parity_consistent })
}
