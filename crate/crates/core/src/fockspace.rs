//! Bitstring Slater-determinant algebra: ladder and excitation operators with
//! the fermionic phase convention, dense second-quantized operator assembly on
//! the N-particle sector, and the Full-CI oracle.

use crate::linalg;
use crate::scalar::Scalar;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

/// Spin-orbital basis dimensions: K orbitals, N particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct OrbitalBasis {
    pub k: usize,
    pub n: usize,
}

impl OrbitalBasis {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if n < 1 || n > k {
            return Err(Error::validation(format!("need 1 <= N <= K, got N={n}, K={k}")));
        }
        if k > 24 {
            return Err(Error::validation(format!("K={k} exceeds the dense feasibility bound 24")));
        }
        Ok(OrbitalBasis { k, n })
    }

    /// Reference determinant Φ0: the N lowest orbitals occupied.
    pub fn reference(&self) -> Determinant {
        Determinant { occ: (1u32 << self.n) - 1 }
    }
}

/// Occupation bitmask over K spin-orbitals; bit p set ⇔ orbital p occupied
/// (orbital indices are 0-based internally).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Determinant {
    pub occ: u32,
}

impl Determinant {
    pub fn from_orbitals(orbs: &[usize]) -> Self {
        let mut occ = 0u32;
        for &p in orbs {
            occ |= 1 << p;
        }
        Determinant { occ }
    }

    pub fn orbitals(&self) -> Vec<usize> {
        (0..32).filter(|&p| self.occ >> p & 1 == 1).collect()
    }

    pub fn popcount(&self) -> usize {
        self.occ.count_ones() as usize
    }

    pub fn contains(&self, p: usize) -> bool {
        self.occ >> p & 1 == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderKind {
    Create,
    Annihilate,
}

/// Fermionic phase: (−1)^(number of occupied orbitals strictly below p).
fn phase_below(occ: u32, p: usize) -> i32 {
    let below = occ & ((1u32 << p) - 1);
    if below.count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Apply a single ladder operator; `None` is the vanished result
/// (creation on an occupied orbital, annihilation on an empty one).
pub fn apply_ladder(p: usize, kind: LadderKind, d: Determinant) -> Option<(i32, Determinant)> {
    let occupied = d.contains(p);
    match kind {
        LadderKind::Create => {
            if occupied {
                None
            } else {
                Some((phase_below(d.occ, p), Determinant { occ: d.occ | 1 << p }))
            }
        }
        LadderKind::Annihilate => {
            if occupied {
                Some((phase_below(d.occ, p), Determinant { occ: d.occ & !(1 << p) }))
            } else {
                None
            }
        }
    }
}

/// Excitation multiindex α: occupied orbitals I replaced by virtuals A,
/// both ascending; rank r = |I| = |A|. Rank 0 is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Excitation {
    pub i: Vec<usize>,
    pub a: Vec<usize>,
}

impl Excitation {
    pub fn identity() -> Self {
        Excitation { i: vec![], a: vec![] }
    }

    pub fn rank(&self) -> usize {
        self.i.len()
    }

    pub fn validate(&self, basis: &OrbitalBasis) -> Result<()> {
        let r = self.i.len();
        if self.a.len() != r {
            return Err(Error::validation("|I| != |A| in excitation"));
        }
        let asc = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
        if !asc(&self.i) || !asc(&self.a) {
            return Err(Error::validation("excitation indices must be strictly ascending"));
        }
        let reference = basis.reference();
        if self.i.iter().any(|&p| !reference.contains(p)) {
            return Err(Error::validation("I must be occupied in the reference"));
        }
        if self.a.iter().any(|&p| reference.contains(p) || p >= basis.k) {
            return Err(Error::validation("A must be virtual in the reference"));
        }
        Ok(())
    }
}

/// Apply X_α = a†_{A1} a_{I1} ⋯ a†_{Ar} a_{Ir} to a determinant,
/// right-to-left in the printed order.
pub fn apply_excitation(x: &Excitation, d: Determinant) -> Option<(i32, Determinant)> {
    let mut sign = 1;
    let mut cur = d;
    for j in (0..x.rank()).rev() {
        let (s1, d1) = apply_ladder(x.i[j], LadderKind::Annihilate, cur)?;
        let (s2, d2) = apply_ladder(x.a[j], LadderKind::Create, d1)?;
        sign *= s1 * s2;
        cur = d2;
    }
    Some((sign, cur))
}

/// One- and two-body coefficients in second-quantized form:
/// H = Σ_pq h_pq a†_p a_q + Σ_{p<q, r<s} W_{pq,rs} a†_p a†_q a_s a_r.
/// W is stored as the fully antisymmetrized tensor (antisymmetric in p↔q and
/// r↔s); Hermiticity is W_{rs,pq} = W_{pq,rs} for our real integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrals {
    pub k: usize,
    pub h: DMatrix<f64>,
    w: Vec<f64>,
}

impl Integrals {
    pub fn zero(k: usize) -> Self {
        Integrals { k, h: DMatrix::zeros(k, k), w: vec![0.0; k * k * k * k] }
    }

    #[inline]
    fn widx(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * self.k + q) * self.k + r) * self.k + s
    }

    pub fn w(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.w[self.widx(p, q, r, s)]
    }

    /// Set W_{pq,rs} together with its antisymmetric images.
    pub fn set_w(&mut self, p: usize, q: usize, r: usize, s: usize, val: f64) {
        assert!(p != q && r != s, "diagonal two-body labels vanish identically");
        let entries = [
            (p, q, r, s, val),
            (q, p, r, s, -val),
            (p, q, s, r, -val),
            (q, p, s, r, val),
        ];
        for (a, b, c, d, v) in entries {
            let idx = self.widx(a, b, c, d);
            self.w[idx] = v;
        }
    }

    /// Set W_{pq,rs} and the Hermitian partner W_{rs,pq} with all images.
    pub fn set_w_sym(&mut self, p: usize, q: usize, r: usize, s: usize, val: f64) {
        self.set_w(p, q, r, s, val);
        if (p, q) != (r, s) {
            self.set_w(r, s, p, q, val);
        }
    }

    /// Add to W_{pq,rs} (canonical p<q, r<s entry) and its antisymmetric images.
    pub fn add_w(&mut self, p: usize, q: usize, r: usize, s: usize, val: f64) {
        let cur = self.w(p, q, r, s);
        self.set_w(p, q, r, s, cur + val);
    }

    /// Hermiticity / antisymmetry defect of the stored coefficients.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for p in 0..self.k {
            for q in 0..self.k {
                worst = worst.max((self.h[(p, q)] - self.h[(q, p)]).abs());
                for r in 0..self.k {
                    for s in 0..self.k {
                        worst = worst.max((self.w(p, q, r, s) - self.w(r, s, p, q)).abs());
                        worst = worst.max((self.w(p, q, r, s) + self.w(q, p, r, s)).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Ordered determinant basis: the full N-sector in ascending bitmask order
/// (so Φ0 is index 0), with the index map.
#[derive(Debug, Clone)]
pub struct DeterminantSpace {
    pub basis: OrbitalBasis,
    pub dets: Vec<Determinant>,
    index: HashMap<u32, usize>,
}

impl DeterminantSpace {
    /// Full N-sector, lexicographic (= numeric) order on the bitmask.
    pub fn full_sector(basis: OrbitalBasis) -> Self {
        let mut dets = Vec::new();
        // Gosper's hack: next integer with the same popcount.
        let mut v: u32 = (1 << basis.n) - 1;
        let limit: u32 = 1 << basis.k;
        while v < limit {
            dets.push(Determinant { occ: v });
            let c = v & v.wrapping_neg();
            let r = v + c;
            if c == 0 || r >= limit {
                break;
            }
            v = r | (((v ^ r) / c) >> 2);
        }
        let index = dets.iter().enumerate().map(|(i, d)| (d.occ, i)).collect();
        DeterminantSpace { basis, dets, index }
    }

    pub fn dim(&self) -> usize {
        self.dets.len()
    }

    pub fn index_of(&self, d: Determinant) -> Option<usize> {
        self.index.get(&d.occ).copied()
    }
}

/// Dense matrix on a `DeterminantSpace` (full N-sector, or a sub-block
/// selected by the caller).
#[derive(Debug, Clone)]
pub struct DenseOperator<S: Scalar> {
    pub mat: DMatrix<S>,
}

impl<S: Scalar> DenseOperator<S> {
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
}

/// Assemble ⟨Φ_β | H | Φ_γ⟩ on the given determinant space by summing ladder
/// string applications of every one- and two-body term.
pub fn hamiltonian_matrix(ints: &Integrals, space: &DeterminantSpace) -> Result<DenseOperator<f64>> {
    if ints.k != space.basis.k {
        return Err(Error::validation(format!(
            "integral basis K={} does not match determinant space K={}",
            ints.k, space.basis.k
        )));
    }
    let k = ints.k;
    let dim = space.dim();
    let mut mat = DMatrix::<f64>::zeros(dim, dim);
    for (col, &d) in space.dets.iter().enumerate() {
        // One-body: h_pq a†_p a_q.
        for q in 0..k {
            let Some((s1, d1)) = apply_ladder(q, LadderKind::Annihilate, d) else { continue };
            for p in 0..k {
                if ints.h[(p, q)] == 0.0 {
                    continue;
                }
                let Some((s2, d2)) = apply_ladder(p, LadderKind::Create, d1) else { continue };
                let row = space.index_of(d2).expect("one-body result stays in sector");
                mat[(row, col)] += (s1 * s2) as f64 * ints.h[(p, q)];
            }
        }
        // Two-body: W_{pq,rs} a†_p a†_q a_s a_r over canonical p<q, r<s.
        for r in 0..k {
            let Some((s1, d1)) = apply_ladder(r, LadderKind::Annihilate, d) else { continue };
            for s in r + 1..k {
                let Some((s2, d2)) = apply_ladder(s, LadderKind::Annihilate, d1) else { continue };
                for q in 0..k {
                    let Some((s3, d3)) = apply_ladder(q, LadderKind::Create, d2) else { continue };
                    for p in 0..q {
                        let w = ints.w(p, q, r, s);
                        if w == 0.0 {
                            continue;
                        }
                        let Some((s4, d4)) = apply_ladder(p, LadderKind::Create, d3) else { continue };
                        let row = space.index_of(d4).expect("two-body result stays in sector");
                        mat[(row, col)] += (s1 * s2 * s3 * s4) as f64 * w;
                    }
                }
            }
        }
    }
    let defect = (&mat - mat.transpose()).amax();
    let scale = mat.amax().max(f64::MIN_POSITIVE);
    if defect > 1e-12 * scale {
        return Err(Error::numerical(format!(
            "assembled Hamiltonian not Hermitian: defect {defect:.3e} at scale {scale:.3e}"
        )));
    }
    Ok(DenseOperator { mat })
}

/// Full real spectrum of a Hermitian sector operator, ascending, with
/// orthonormal eigenvectors.
pub fn fci_solve(h: &DenseOperator<f64>) -> Result<Vec<(f64, DVector<f64>)>> {
    let defect = (&h.mat - h.mat.transpose()).amax();
    let scale = h.mat.amax().max(f64::MIN_POSITIVE);
    if defect > 1e-12 * scale {
        return Err(Error::numerical(format!(
            "fci_solve needs a Hermitian operator; defect {defect:.3e} at scale {scale:.3e}"
        )));
    }
    let sym = (&h.mat + h.mat.transpose()) * 0.5;
    let (vals, vecs) = linalg::symmetric_eig(&sym);
    Ok(vals
        .into_iter()
        .enumerate()
        .map(|(j, e)| (e, DVector::from(vecs.column(j).clone_owned())))
        .collect())
}

/// Matrix of a single ladder operator on the whole 2^K-dimensional Fock space
/// (test oracle for the canonical anticommutation relations).
pub fn ladder_matrix(k: usize, p: usize, kind: LadderKind) -> DMatrix<f64> {
    let dim = 1usize << k;
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        if let Some((sign, d)) = apply_ladder(p, kind, Determinant { occ: col as u32 }) {
            m[(d.occ as usize, col)] = sign as f64;
        }
    }
    m
}
