//! Truncation schemes, cluster-amplitude spaces 𝕍(G), cluster-operator
//! actions (apply / exp / log), and amplitude norms.

use crate::fockspace::{apply_excitation, DeterminantSpace, Excitation, OrbitalBasis};
use crate::scalar::Scalar;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::{BTreeSet, HashMap};

/// Which excitation ranks enter the amplitude space.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "ranks")]
pub enum TruncationScheme {
    Full,
    Ranks(BTreeSet<usize>),
    DoublesOnly,
}

impl TruncationScheme {
    pub fn ranks_upto(rho: usize) -> Self {
        TruncationScheme::Ranks((1..=rho).collect())
    }

    pub fn admits(&self, rank: usize, n: usize) -> bool {
        match self {
            TruncationScheme::Full => (1..=n).contains(&rank),
            TruncationScheme::Ranks(set) => set.contains(&rank),
            TruncationScheme::DoublesOnly => rank == 2,
        }
    }

    fn rank_set(&self, n: usize) -> BTreeSet<usize> {
        (1..=n).filter(|&r| self.admits(r, n)).collect()
    }
}

impl std::fmt::Display for TruncationScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TruncationScheme::Full => write!(f, "full"),
            TruncationScheme::DoublesOnly => write!(f, "doubles-only"),
            TruncationScheme::Ranks(set) => {
                let items: Vec<String> = set.iter().map(|r| r.to_string()).collect();
                write!(f, "ranks{{{}}}", items.join(","))
            }
        }
    }
}

/// The amplitude space 𝕍(G): the selected excitation set Ξ(G) inside the full
/// excitation enumeration, with precomputed operator actions on the N-sector
/// determinant basis.
///
/// The full excitation list is canonical — ordered by rank, then
/// lexicographically on (I, A) — and is in bijection with the non-reference
/// determinants via α ↦ X_α Φ0.
#[derive(Debug, Clone)]
pub struct AmplitudeSpace {
    pub basis: OrbitalBasis,
    pub scheme: TruncationScheme,
    /// Full N-sector determinant basis (Φ0 at index 0).
    pub dets: DeterminantSpace,
    /// Canonical full excitation list Ξ(G^full).
    pub all: Vec<Excitation>,
    /// Per full excitation: the column action d_j ↦ (sign, d_j') on `dets`.
    colmap: Vec<Vec<Option<(usize, i32)>>>,
    /// Per full excitation: index and phase of X_α Φ0.
    pub det_of: Vec<usize>,
    pub phase_of: Vec<i32>,
    /// Indices into `all` forming Ξ(G); amplitude slot i ↔ all[sel[i]].
    pub sel: Vec<usize>,
    back: HashMap<usize, usize>,
    pub rank_regular: bool,
    pub excitation_complete: bool,
}

fn combinations(pool: &[usize], r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in pool.iter().enumerate() {
        for mut tail in combinations(&pool[i + 1..], r - 1) {
            let mut v = vec![x];
            v.append(&mut tail);
            out.push(v);
        }
    }
    out
}

/// Build the amplitude space for a truncation scheme; ordering is by rank,
/// then lexicographic on (I, A).
pub fn amplitude_space(basis: OrbitalBasis, scheme: TruncationScheme) -> AmplitudeSpace {
    let dets = DeterminantSpace::full_sector(basis);
    let occ: Vec<usize> = (0..basis.n).collect();
    let virt: Vec<usize> = (basis.n..basis.k).collect();
    let mut all = Vec::new();
    for r in 1..=basis.n {
        let mut of_rank = Vec::new();
        for i in combinations(&occ, r) {
            for a in combinations(&virt, r) {
                of_rank.push(Excitation { i: i.clone(), a });
            }
        }
        of_rank.sort();
        all.extend(of_rank);
    }
    let reference = basis.reference();
    let mut colmap = Vec::with_capacity(all.len());
    let mut det_of = Vec::with_capacity(all.len());
    let mut phase_of = Vec::with_capacity(all.len());
    for x in &all {
        let col: Vec<Option<(usize, i32)>> = dets
            .dets
            .iter()
            .map(|&d| {
                apply_excitation(x, d).map(|(s, d2)| (dets.index_of(d2).expect("stays in sector"), s))
            })
            .collect();
        let (s0, d0) = apply_excitation(x, reference).expect("excitation acts on reference");
        det_of.push(dets.index_of(d0).unwrap());
        phase_of.push(s0);
        colmap.push(col);
    }
    let sel: Vec<usize> = (0..all.len()).filter(|&i| scheme.admits(all[i].rank(), basis.n)).collect();
    let back = sel.iter().enumerate().map(|(slot, &i)| (i, slot)).collect();
    let ranks = scheme.rank_set(basis.n);
    let contiguous_from_one = !ranks.is_empty() && ranks.iter().copied().eq(1..=ranks.len());
    let doubles_only = ranks.len() == 1 && ranks.contains(&2);
    let rank_regular = contiguous_from_one || doubles_only;
    let excitation_complete = ranks.iter().copied().eq(1..=basis.n);
    AmplitudeSpace {
        basis,
        scheme,
        dets,
        all,
        colmap,
        det_of,
        phase_of,
        sel,
        back,
        rank_regular,
        excitation_complete,
    }
}

impl AmplitudeSpace {
    /// Number of amplitudes d = |Ξ(G)|.
    pub fn dim(&self) -> usize {
        self.sel.len()
    }

    /// Sector dimension (full N-sector).
    pub fn sector_dim(&self) -> usize {
        self.dets.dim()
    }

    pub fn excitation(&self, slot: usize) -> &Excitation {
        &self.all[self.sel[slot]]
    }

    pub fn rank_of_slot(&self, slot: usize) -> usize {
        self.excitation(slot).rank()
    }

    /// Amplitude slot of a full-table excitation index, if selected.
    pub fn slot_of_full(&self, full_idx: usize) -> Option<usize> {
        self.back.get(&full_idx).copied()
    }

    /// Complement Ξ(G)^c as full-table indices.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.all.len()).filter(|i| !self.back.contains_key(i)).collect()
    }

    /// Apply X for a full-table excitation index to a sector vector.
    pub fn apply_full_excitation<S: Scalar>(&self, full_idx: usize, v: &DVector<S>) -> DVector<S> {
        let mut out = DVector::zeros(v.len());
        for (j, entry) in self.colmap[full_idx].iter().enumerate() {
            if let Some((tgt, sign)) = entry {
                if v[j] != S::zero() {
                    out[*tgt] += S::from_re(*sign as f64) * v[j];
                }
            }
        }
        out
    }

    /// Dense matrix of X_α for a full-table excitation index.
    pub fn excitation_matrix<S: Scalar>(&self, full_idx: usize) -> DMatrix<S> {
        let dim = self.sector_dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (j, entry) in self.colmap[full_idx].iter().enumerate() {
            if let Some((tgt, sign)) = entry {
                m[(*tgt, j)] = S::from_re(*sign as f64);
            }
        }
        m
    }

    /// Reference basis vector Φ0 in the sector.
    pub fn reference_vector<S: Scalar>(&self) -> DVector<S> {
        let mut v = DVector::zeros(self.sector_dim());
        v[0] = S::one();
        v
    }

    /// Read off amplitude coordinates from a sector vector: t_α = ⟨v, Φ_α⟩
    /// for α ∈ Ξ(G), using Φ_α = phase_α · (determinant basis vector).
    pub fn project_to_amplitudes<S: Scalar>(&self, v: &DVector<S>) -> DVector<S> {
        let mut t = DVector::zeros(self.dim());
        for (slot, &full_idx) in self.sel.iter().enumerate() {
            t[slot] = S::from_re(self.phase_of[full_idx] as f64) * v[self.det_of[full_idx]];
        }
        t
    }

    /// Embed amplitude coordinates as the sector vector Σ t_α Φ_α = T Φ0.
    pub fn amplitudes_to_sector<S: Scalar>(&self, t: &DVector<S>) -> DVector<S> {
        let mut v = DVector::zeros(self.sector_dim());
        for (slot, &full_idx) in self.sel.iter().enumerate() {
            v[self.det_of[full_idx]] += S::from_re(self.phase_of[full_idx] as f64) * t[slot];
        }
        v
    }

    /// Slots with excitation rank ≤ rho / > rho (the ρ-split of §4.5).
    pub fn slots_rank_le(&self, rho: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&s| self.rank_of_slot(s) <= rho).collect()
    }

    pub fn slots_rank_gt(&self, rho: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&s| self.rank_of_slot(s) > rho).collect()
    }
}

/// (Σ_α t_α X_α) v.
pub fn cluster_apply<S: Scalar>(space: &AmplitudeSpace, t: &DVector<S>, v: &DVector<S>) -> DVector<S> {
    assert_eq!(t.len(), space.dim(), "amplitude length mismatch");
    assert_eq!(v.len(), space.sector_dim(), "sector length mismatch");
    let mut out = DVector::zeros(v.len());
    for (slot, &full_idx) in space.sel.iter().enumerate() {
        if t[slot] == S::zero() {
            continue;
        }
        for (j, entry) in space.colmap[full_idx].iter().enumerate() {
            if let Some((tgt, sign)) = entry {
                if v[j] != S::zero() {
                    out[*tgt] += t[slot] * S::from_re(*sign as f64) * v[j];
                }
            }
        }
    }
    out
}

/// Dense matrix of T = Σ_α t_α X_α.
pub fn cluster_matrix<S: Scalar>(space: &AmplitudeSpace, t: &DVector<S>) -> DMatrix<S> {
    let dim = space.sector_dim();
    let mut m = DMatrix::zeros(dim, dim);
    for (slot, &full_idx) in space.sel.iter().enumerate() {
        if t[slot] == S::zero() {
            continue;
        }
        for (j, entry) in space.colmap[full_idx].iter().enumerate() {
            if let Some((tgt, sign)) = entry {
                m[(*tgt, j)] += t[slot] * S::from_re(*sign as f64);
            }
        }
    }
    m
}

/// e^T v = Σ_{k=0..N} T^k/k! v (the series truncates by nilpotency).
pub fn exp_apply<S: Scalar>(space: &AmplitudeSpace, t: &DVector<S>, v: &DVector<S>) -> DVector<S> {
    let mut out = v.clone();
    let mut term = v.clone();
    for k in 1..=space.basis.n {
        term = cluster_apply(space, t, &term) / S::from_re(k as f64);
        if term.iter().all(|x| *x == S::zero()) {
            break;
        }
        out += &term;
    }
    out
}

/// Dense e^T.
pub fn exp_matrix<S: Scalar>(space: &AmplitudeSpace, t: &DVector<S>) -> DMatrix<S> {
    let dim = space.sector_dim();
    let tm = cluster_matrix(space, t);
    let mut out = DMatrix::identity(dim, dim);
    let mut term = DMatrix::identity(dim, dim);
    for k in 1..=space.basis.n {
        term = (&tm * term) / S::from_re(k as f64);
        out += &term;
    }
    out
}

/// T = log(I + C) = Σ_{k=1..N} (−1)^{k+1} C^k / k for coefficients c of C on
/// the full excitation set; returns amplitudes on the full set.
/// Requires an excitation-complete space.
pub fn cluster_log<S: Scalar>(space: &AmplitudeSpace, c: &DVector<S>) -> Result<DVector<S>> {
    if !space.excitation_complete {
        return Err(Error::validation("cluster_log needs the full amplitude space"));
    }
    let cm = cluster_matrix(space, c);
    let phi0 = space.reference_vector::<S>();
    // T Φ0 accumulated term by term: (−1)^{k+1} C^k Φ0 / k.
    let mut ck_phi0 = phi0.clone();
    let mut acc = DVector::zeros(space.sector_dim());
    for k in 1..=space.basis.n {
        ck_phi0 = &cm * ck_phi0;
        let coef = if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
        acc += &ck_phi0 * S::from_re(coef);
    }
    Ok(space.project_to_amplitudes(&acc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Ell2,
    FockWeighted,
}

/// ‖t‖: ℓ² or the Fock-weighted norm ⫼t⫼ = sqrt(Σ ε_α |t_α|²).
pub fn amp_norm<S: Scalar>(t: &DVector<S>, kind: NormKind, eps: Option<&[f64]>) -> Result<f64> {
    match kind {
        NormKind::Ell2 => Ok(t.iter().map(|x| x.mag().powi(2)).sum::<f64>().sqrt()),
        NormKind::FockWeighted => {
            let eps = eps.ok_or_else(|| Error::validation("fock-weighted norm needs ε_α"))?;
            if eps.len() != t.len() {
                return Err(Error::validation("ε_α length mismatch"));
            }
            if let Some(bad) = eps.iter().find(|&&e| e <= 0.0) {
                return Err(Error::validation(format!(
                    "fock-weighted norm needs ε_α > 0, found {bad}"
                )));
            }
            Ok(t.iter()
                .zip(eps)
                .map(|(x, &e)| e * x.mag().powi(2))
                .sum::<f64>()
                .sqrt())
        }
    }
}
