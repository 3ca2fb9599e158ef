//! Model Hamiltonians, integral-file ingestion, discrete Roothaan SCF, and the
//! Fock/fluctuation splitting in the canonical MO basis.

use crate::cluster::AmplitudeSpace;
use crate::fockspace::{DenseOperator, DeterminantSpace, Integrals, OrbitalBasis};
use crate::linalg;
use crate::{Error, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "variant")]
pub enum ModelKind {
    HubbardChain { l: usize, t_hop: f64, u: f64, periodic: bool },
    Pairing { levels: usize, gap: f64, coupling: f64 },
    Random { k: usize, seed: u64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub n: usize,
}

impl ModelSpec {
    pub fn k(&self) -> usize {
        match &self.kind {
            ModelKind::HubbardChain { l, .. } => 2 * l,
            ModelKind::Pairing { levels, .. } => 2 * levels,
            ModelKind::Random { k, .. } => *k,
        }
    }

    pub fn orbital_basis(&self) -> Result<OrbitalBasis> {
        OrbitalBasis::new(self.k(), self.n)
    }

    pub fn hubbard_dimer(u: f64, n: usize) -> Self {
        ModelSpec { kind: ModelKind::HubbardChain { l: 2, t_hop: 1.0, u, periodic: false }, n }
    }
}

/// Integrals in the site/level basis. Spin-orbital p = 2·site + spin for the
/// lattice models.
pub fn build_model(spec: &ModelSpec) -> Result<Integrals> {
    let k = spec.k();
    spec.orbital_basis()?;
    let check_finite = |vals: &[f64]| -> Result<()> {
        if vals.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::validation("model parameters must be finite"))
        }
    };
    let mut ints = Integrals::zero(k);
    match &spec.kind {
        ModelKind::HubbardChain { l, t_hop, u, periodic } => {
            check_finite(&[*t_hop, *u])?;
            if *l < 1 {
                return Err(Error::validation("hubbard chain needs at least one site"));
            }
            for i in 0..l.saturating_sub(1) {
                for spin in 0..2 {
                    ints.h[(2 * i + spin, 2 * (i + 1) + spin)] = -t_hop;
                    ints.h[(2 * (i + 1) + spin, 2 * i + spin)] = -t_hop;
                }
            }
            if *periodic && *l > 2 {
                for spin in 0..2 {
                    ints.h[(2 * (l - 1) + spin, spin)] = -t_hop;
                    ints.h[(spin, 2 * (l - 1) + spin)] = -t_hop;
                }
            }
            for i in 0..*l {
                // U n_{i↑} n_{i↓} = U a†_p a†_q a_q a_p with p = 2i, q = 2i+1.
                ints.set_w_sym(2 * i, 2 * i + 1, 2 * i, 2 * i + 1, *u);
            }
        }
        ModelKind::Pairing { levels, gap, coupling } => {
            check_finite(&[*gap, *coupling])?;
            for m in 0..*levels {
                let e = *gap * m as f64;
                ints.h[(2 * m, 2 * m)] = e;
                ints.h[(2 * m + 1, 2 * m + 1)] = e;
            }
            // −g Σ_{m,m'} P†_m P_{m'} with P†_m = a†_{2m} a†_{2m+1}.
            for m in 0..*levels {
                for mp in 0..*levels {
                    ints.set_w(2 * m, 2 * m + 1, 2 * mp, 2 * mp + 1, -coupling);
                }
            }
        }
        ModelKind::Random { k, seed, scale } => {
            check_finite(&[*scale])?;
            let k = *k;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for p in 0..k {
                for q in p..k {
                    let v = rng.gen_range(-scale..=*scale);
                    ints.h[(p, q)] = v;
                    ints.h[(q, p)] = v;
                }
            }
            // Canonical pairs (p<q) ≤ (r<s) in lexicographic order, mirrored
            // Hermitian; antisymmetric images handled by the setter.
            for p in 0..k {
                for q in p + 1..k {
                    for r in 0..k {
                        for s in r + 1..k {
                            if (r, s) < (p, q) {
                                continue;
                            }
                            let v = rng.gen_range(-scale..=*scale);
                            ints.set_w_sym(p, q, r, s, v);
                        }
                    }
                }
            }
        }
    }
    Ok(ints)
}

/// Plain-text integral format: one record "p q r s value" per line, 1-based
/// indices, `r = s = 0` marking one-body entries, '#' starting a comment.
pub fn save_integrals(ints: &Integrals, path: &Path) -> std::io::Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# k = {}", ints.k)?;
    for p in 0..ints.k {
        for q in p..ints.k {
            if ints.h[(p, q)] != 0.0 {
                writeln!(f, "{} {} 0 0 {:.17e}", p + 1, q + 1, ints.h[(p, q)])?;
            }
        }
    }
    for p in 0..ints.k {
        for q in p + 1..ints.k {
            for r in 0..ints.k {
                for s in r + 1..ints.k {
                    if (r, s) < (p, q) {
                        continue;
                    }
                    let v = ints.w(p, q, r, s);
                    if v != 0.0 {
                        writeln!(f, "{} {} {} {} {:.17e}", p + 1, q + 1, r + 1, s + 1, v)?;
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn load_integrals(path: &Path) -> Result<Integrals> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
    parse_integrals(&text)
}

pub fn parse_integrals(text: &str) -> Result<Integrals> {
    struct Rec {
        line: usize,
        p: usize,
        q: usize,
        r: usize,
        s: usize,
        val: f64,
    }
    let mut recs: Vec<Rec> = Vec::new();
    let mut k_hint: Option<usize> = None;
    let mut k_max = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        if let Some(rest) = raw.trim_start().strip_prefix('#') {
            // Optional "# k = <K>" header fixes the basis size.
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("k =").or_else(|| rest.strip_prefix("k=")) {
                if let Ok(k) = v.trim().parse::<usize>() {
                    k_hint = Some(k);
                }
            }
        }
        if content.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 5 fields 'p q r s value', got {}", fields.len()),
            });
        }
        let idx = |f: &str| -> std::result::Result<usize, Error> {
            f.parse::<usize>().map_err(|_| Error::Parse { line, msg: format!("bad index '{f}'") })
        };
        let p = idx(fields[0])?;
        let q = idx(fields[1])?;
        let r = idx(fields[2])?;
        let s = idx(fields[3])?;
        let val: f64 = fields[4]
            .parse()
            .map_err(|_| Error::Parse { line, msg: format!("bad value '{}'", fields[4]) })?;
        if p == 0 || q == 0 || (r == 0) != (s == 0) {
            return Err(Error::Parse { line, msg: "indices must be 1-based; r=s=0 marks one-body".into() });
        }
        k_max = k_max.max(p).max(q).max(r).max(s);
        recs.push(Rec { line, p, q, r, s, val });
    }
    let k = k_hint.unwrap_or(k_max);
    if k == 0 {
        return Err(Error::validation("no integral records found"));
    }
    if k_max > k {
        return Err(Error::validation(format!("index {k_max} exceeds declared basis size {k}")));
    }
    let mut ints = Integrals::zero(k);
    let mut h_explicit = vec![false; k * k];
    let mut w_explicit = std::collections::HashSet::new();
    for rec in &recs {
        let bound = |i: usize| -> std::result::Result<usize, Error> {
            if i > k {
                Err(Error::Parse { line: rec.line, msg: format!("index {i} out of range 1..={k}") })
            } else {
                Ok(i - 1)
            }
        };
        if rec.r == 0 {
            let (p, q) = (bound(rec.p)?, bound(rec.q)?);
            ints.h[(p, q)] = rec.val;
            h_explicit[p * k + q] = true;
            if !h_explicit[q * k + p] {
                ints.h[(q, p)] = rec.val;
            }
        } else {
            let (mut p, mut q) = (bound(rec.p)?, bound(rec.q)?);
            let (mut r, mut s) = (bound(rec.r)?, bound(rec.s)?);
            if p == q || r == s {
                return Err(Error::Parse { line: rec.line, msg: "two-body labels with p=q or r=s vanish identically".into() });
            }
            let mut sign = 1.0;
            if p > q {
                std::mem::swap(&mut p, &mut q);
                sign = -sign;
            }
            if r > s {
                std::mem::swap(&mut r, &mut s);
                sign = -sign;
            }
            let val = sign * rec.val;
            ints.set_w(p, q, r, s, val);
            w_explicit.insert((p, q, r, s));
            if !w_explicit.contains(&(r, s, p, q)) && (p, q) != (r, s) {
                ints.set_w(r, s, p, q, val);
            }
        }
    }
    Ok(ints)
}

/// Mean-field (discrete Roothaan SCF) result in the canonical MO basis.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MeanFieldResult {
    pub lambdas: Vec<f64>,
    #[serde(skip)]
    pub c: DMatrix<f64>,
    pub lambda0: f64,
    pub eps_min: f64,
    pub scf_energy: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct ScfOptions {
    pub max_iter: usize,
    pub mixing: f64,
    pub tol: f64,
    /// Optional initial density matrix (defaults to the core-Hamiltonian guess).
    pub initial_density: Option<DMatrix<f64>>,
}

impl Default for ScfOptions {
    fn default() -> Self {
        ScfOptions { max_iter: 200, mixing: 0.5, tol: 1e-12, initial_density: None }
    }
}

fn fock_matrix(ints: &Integrals, d: &DMatrix<f64>) -> DMatrix<f64> {
    let k = ints.k;
    let mut f = ints.h.clone();
    for p in 0..k {
        for q in 0..k {
            let mut g = 0.0;
            for r in 0..k {
                for s in 0..k {
                    g += ints.w(p, r, q, s) * d[(r, s)];
                }
            }
            f[(p, q)] += g;
        }
    }
    f
}

fn density_from(c: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let occ = c.columns(0, n);
    &occ * occ.transpose()
}

fn hf_energy(ints: &Integrals, d: &DMatrix<f64>, f: &DMatrix<f64>) -> f64 {
    0.5 * (&ints.h + f).component_mul(d).sum()
}

/// Discrete Roothaan SCF with linear density mixing and aufbau occupation.
/// Non-convergence returns the best iterate with `converged = false`.
pub fn scf_solve(ints: &Integrals, n: usize, opts: &ScfOptions) -> Result<MeanFieldResult> {
    let k = ints.k;
    OrbitalBasis::new(k, n)?;
    let mut d = match &opts.initial_density {
        Some(d0) => {
            if d0.nrows() != k || d0.ncols() != k {
                return Err(Error::validation("initial density has wrong dimensions"));
            }
            d0.clone()
        }
        None => {
            let (_, c) = linalg::symmetric_eig(&ints.h);
            density_from(&c, n)
        }
    };
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=opts.max_iter {
        iterations = iter;
        let f = fock_matrix(ints, &d);
        let (_, c) = linalg::symmetric_eig(&f);
        let d_new = density_from(&c, n);
        let change = (&d_new - &d).amax();
        d = &d_new * opts.mixing + &d * (1.0 - opts.mixing);
        if change <= opts.tol {
            d = d_new;
            converged = true;
            break;
        }
    }
    // Final diagonalization at the converged (or best) density.
    let f = fock_matrix(ints, &d);
    let (lambdas, c) = linalg::symmetric_eig(&f);
    let d_final = density_from(&c, n);
    let f_final = fock_matrix(ints, &d_final);
    let scf_energy = hf_energy(ints, &d_final, &f_final);
    let lambda0: f64 = lambdas[..n].iter().sum();
    let eps_min = if n < k { lambdas[n] - lambdas[n - 1] } else { f64::INFINITY };
    Ok(MeanFieldResult { lambdas, c, lambda0, eps_min, scf_energy, converged, iterations })
}

/// Four-index (and two-index) transform to the basis φ'_a = Σ_p C_pa φ_p.
pub fn to_mo_basis(ints: &Integrals, c: &DMatrix<f64>) -> Result<Integrals> {
    let k = ints.k;
    if c.nrows() != k || c.ncols() != k {
        return Err(Error::validation("MO coefficient matrix has wrong dimensions"));
    }
    let defect = (c.transpose() * c - DMatrix::<f64>::identity(k, k)).amax();
    if defect > 1e-10 {
        return Err(Error::validation(format!("C not unitary: defect {defect:.3e}")));
    }
    let mut out = Integrals::zero(k);
    out.h = c.transpose() * &ints.h * c;
    // Sequential one-index transforms of the antisymmetrized tensor.
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * k + q) * k + r) * k + s;
    let mut cur: Vec<f64> = (0..k * k * k * k)
        .map(|i| {
            let s = i % k;
            let r = (i / k) % k;
            let q = (i / (k * k)) % k;
            let p = i / (k * k * k);
            ints.w(p, q, r, s)
        })
        .collect();
    for axis in 0..4 {
        let mut next = vec![0.0; k * k * k * k];
        for p in 0..k {
            for q in 0..k {
                for r in 0..k {
                    for s in 0..k {
                        let v = cur[idx(p, q, r, s)];
                        if v == 0.0 {
                            continue;
                        }
                        match axis {
                            0 => {
                                for a in 0..k {
                                    next[idx(a, q, r, s)] += c[(p, a)] * v;
                                }
                            }
                            1 => {
                                for a in 0..k {
                                    next[idx(p, a, r, s)] += c[(q, a)] * v;
                                }
                            }
                            2 => {
                                for a in 0..k {
                                    next[idx(p, q, a, s)] += c[(r, a)] * v;
                                }
                            }
                            _ => {
                                for a in 0..k {
                                    next[idx(p, q, r, a)] += c[(s, a)] * v;
                                }
                            }
                        }
                    }
                }
            }
        }
        cur = next;
    }
    for p in 0..k {
        for q in p + 1..k {
            for r in 0..k {
                for s in r + 1..k {
                    let v = cur[idx(p, q, r, s)];
                    if v != 0.0 {
                        out.set_w(p, q, r, s, v);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Fock/fluctuation splitting data in the canonical MO basis: ε_α per
/// excitation of the amplitude space, the diagonal Fock matrix 𝓕_K on the
/// determinant basis, and 𝓦_K = ℋ_K − 𝓕_K.
#[derive(Debug, Clone)]
pub struct FockData {
    pub lambdas: Vec<f64>,
    pub lambda0: f64,
    /// ε_α over Ξ(G), aligned with the amplitude space ordering.
    pub eps: Vec<f64>,
    /// ε_α over the full excitation table.
    pub eps_full: Vec<f64>,
    pub f_mat: DMatrix<f64>,
    pub w_mat: DMatrix<f64>,
}

pub fn fock_data(
    mf: &MeanFieldResult,
    space: &DeterminantSpace,
    h: &DenseOperator<f64>,
    amps: &AmplitudeSpace,
) -> FockData {
    let eps_of = |x: &crate::fockspace::Excitation| -> f64 {
        x.a.iter().map(|&a| mf.lambdas[a]).sum::<f64>() - x.i.iter().map(|&i| mf.lambdas[i]).sum::<f64>()
    };
    let eps_full: Vec<f64> = amps.all.iter().map(eps_of).collect();
    let eps: Vec<f64> = amps.sel.iter().map(|&i| eps_full[i]).collect();
    let mut f_mat = DMatrix::zeros(space.dim(), space.dim());
    for (j, d) in space.dets.iter().enumerate() {
        f_mat[(j, j)] = d.orbitals().iter().map(|&p| mf.lambdas[p]).sum::<f64>();
    }
    let w_mat = &h.mat - &f_mat;
    FockData {
        lambdas: mf.lambdas.clone(),
        lambda0: mf.lambdas[..space.basis.n].iter().sum(),
        eps,
        eps_full,
        f_mat,
        w_mat,
    }
}
