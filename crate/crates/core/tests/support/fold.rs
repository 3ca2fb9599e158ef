//! Shared construction of the coupling-tuned fold of the doubles-only pairing
//! model (4 levels, 2 pairs): two real CCD solutions collide as the coupling
//! decreases, leaving an isolated μ = 1 degenerate zero.

use ccdeg::cccore::{self, CCProblem, CCSolution, NewtonOptions};
use ccdeg::cluster::TruncationScheme;
use ccdeg::linalg;
use ccdeg::models::{ModelKind, ModelSpec, ScfOptions};
use ccdeg::scalar::field_tag;
use nalgebra::{DMatrix, DVector};

pub fn pairing_problem(g: f64) -> CCProblem {
    let spec = ModelSpec { kind: ModelKind::Pairing { levels: 4, gap: 1.0, coupling: g }, n: 4 };
    CCProblem::from_model(&spec, TruncationScheme::DoublesOnly, &ScfOptions::default())
        .unwrap()
        .0
}

/// The two colliding CCD solutions at g = 2, supported on the four
/// pair-double slots (0,1)→(4,5), (0,1)→(6,7), (2,3)→(4,5), (2,3)→(6,7).
fn seed_pair() -> (DVector<f64>, DVector<f64>) {
    let p = pairing_problem(2.0);
    let d = p.dim();
    let mut a = DVector::zeros(d);
    let mut b = DVector::zeros(d);
    for (slot, (va, vb)) in [
        (0, (-1.0, -1.5995)),
        (5, (-1.0, -0.5082)),
        (30, (0.0, -0.1528)),
        (35, (-1.0, -1.5995)),
    ] {
        a[slot] = va;
        b[slot] = vb;
    }
    let o = NewtonOptions::default();
    let sa = cccore::newton_solve(&p, &a, &o);
    let sb = cccore::newton_solve(&p, &b, &o);
    assert!(sa.converged && sb.converged);
    assert!((sa.e_cc - 4.0).abs() < 1e-6);
    assert!((sb.e_cc - 5.71994).abs() < 1e-4);
    (sa.t, sb.t)
}

/// Bisection on the coupling for pair collision, then a bordered Newton solve
/// of {𝒜(t) = 0, 𝒜′(t)v = 0, ⟨c,v⟩ = 1} in (t, v, g). Returns (t*, g*).
pub fn fold_point() -> (DVector<f64>, f64) {
    static CACHE: std::sync::OnceLock<(Vec<f64>, f64)> = std::sync::OnceLock::new();
    let (t, g) = CACHE.get_or_init(|| {
        let (t, g) = compute_fold_point();
        (t.as_slice().to_vec(), g)
    });
    (DVector::from_column_slice(t), *g)
}

fn compute_fold_point() -> (DVector<f64>, f64) {
    let (mut ta, mut tb) = seed_pair();
    let o = NewtonOptions::default();
    let mut g_cur = 2.0f64;
    let mut dg = 0.05f64;
    while dg > 1e-9 && (&ta - &tb).norm() > 1e-4 {
        let g_try = g_cur - dg;
        let p = pairing_problem(g_try);
        let sa = cccore::newton_solve(&p, &ta, &o);
        let sb = cccore::newton_solve(&p, &tb, &o);
        let ok = sa.converged
            && sb.converged
            && (&sa.t - &ta).norm() < 1.0
            && (&sb.t - &tb).norm() < 1.0
            && (&sa.t - &sb.t).norm() > 1e-9;
        if ok {
            ta = sa.t;
            tb = sb.t;
            g_cur = g_try;
        } else {
            dg *= 0.5;
        }
    }
    assert!((&ta - &tb).norm() <= 1e-4, "pair did not collide under bisection");

    let d = ta.len();
    let mut t = (&ta + &tb) * 0.5;
    let mut v = (&ta - &tb).normalize();
    let c = v.clone();
    let mut g = g_cur;
    let f = |t: &DVector<f64>, v: &DVector<f64>, g: f64| -> DVector<f64> {
        let p = pairing_problem(g);
        let r = cccore::cc_residual(&p, t);
        let jv = cccore::jacobian(&p, t, false) * v;
        let mut out = DVector::zeros(2 * d + 1);
        for i in 0..d {
            out[i] = r[i];
            out[d + i] = jv[i];
        }
        out[2 * d] = c.dot(v) - 1.0;
        out
    };
    let mut converged = false;
    for _ in 0..25 {
        let r = f(&t, &v, g);
        if r.amax() <= 1e-11 {
            converged = true;
            break;
        }
        let n = 2 * d + 1;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        let h = 1e-6;
        for col in 0..n {
            let (mut tp, mut vp, mut gp) = (t.clone(), v.clone(), g);
            if col < d {
                tp[col] += h;
            } else if col < 2 * d {
                vp[col - d] += h;
            } else {
                gp += h;
            }
            jac.set_column(col, &((f(&tp, &vp, gp) - &r) / h));
        }
        let (delta, _) = linalg::solve(&jac, &(-&r));
        for i in 0..d {
            t[i] += delta[i];
            v[i] += delta[d + i];
        }
        g += delta[2 * d];
    }
    assert!(converged, "bordered Newton did not converge");
    (t, g)
}

pub fn fold_solution<S: ccdeg::scalar::Scalar>(p: &CCProblem, t: &DVector<f64>) -> CCSolution<S> {
    let ts = t.map(|x| S::from_re(x));
    let r = cccore::cc_residual(p, &ts);
    CCSolution {
        e_cc: cccore::cc_energy(p, &ts),
        residual_inf: linalg::inf_norm(&r),
        t: ts,
        converged: true,
        iterations: 0,
        singular_jacobian_seen: true,
        field: field_tag::<S>(),
    }
}
