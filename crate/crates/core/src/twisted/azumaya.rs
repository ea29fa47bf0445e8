use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use super::{relative_matrix_gap, verify_iso, IsoWitness, TwistedBundle};
use crate::error::{Error, Result};
use crate::linalg::{self, inverse, principal_root, random_scalar, unvec_rows, CVec};
use crate::report::{CheckRecord, CheckReport};
use crate::scalar::{CMat, Tolerance, ZERO};

/// Attempts at a random test vector for Skolem–Noether recovery.
const RECOVERY_ATTEMPTS: usize = 8;

#[derive(Debug, Clone)]
pub struct AzumayaExtraction {
    pub bundle: TwistedBundle,
    /// Automorphism residuals, root choices and the `END(result) ≅ A` check.
    pub report: CheckReport,
}

/// `φ(E_pq)` for the linear map `φ` acting on row-major vectorised `k × k` matrices.
fn image(phi: &CMat, k: usize, p: usize, q: usize) -> CMat {
    unvec_rows(&phi.column(p * k + q).into_owned(), k, k)
}

/// Largest violation of `φ(E_pq) φ(E_rs) = δ_qr φ(E_ps)` and `φ(1) = 1`.
fn automorphism_residual(phi: &CMat, k: usize) -> f64 {
    let images: Vec<Vec<CMat>> = (0..k).map(|p| (0..k).map(|q| image(phi, k, p, q)).collect()).collect();
    let zero = CMat::zeros(k, k);
    let mut worst: f64 = 0.0;
    for p in 0..k {
        for q in 0..k {
            for r in 0..k {
                for s in 0..k {
                    let lhs = &images[p][q] * &images[r][s];
                    let rhs = if q == r { &images[p][s] } else { &zero };
                    worst = worst.max(relative_matrix_gap(&lhs, rhs));
                }
            }
        }
    }
    let one = (0..k).fold(CMat::zeros(k, k), |acc, p| acc + &images[p][p]);
    worst.max(relative_matrix_gap(&one, &CMat::identity(k, k)))
}

/// Skolem–Noether: columns `φ(E_p0) v = (row 0 of g⁻¹ · v) g e_p` for a random `v`.
fn recover(phi: &CMat, k: usize, rng: &mut ChaCha8Rng, tol: &Tolerance) -> Option<CMat> {
    for _ in 0..RECOVERY_ATTEMPTS {
        let v = CVec::from_fn(k, |_, _| random_scalar(rng));
        let mut g = CMat::zeros(k, k);
        for p in 0..k {
            g.set_column(p, &(image(phi, k, p, 0) * &v));
        }
        let (lo, hi) = linalg::singular_extremes(&g);
        if hi > 0.0 && lo / hi > tol.eps_rank {
            return Some(g);
        }
    }
    None
}

/// Recover a rank-`k` twisted bundle `E` with `END(E) = A` from an algebra
/// bundle `A` whose transitions are automorphisms of `k × k` matrices. Each
/// `g_ij` is normalised to `det = 1` with the principal `k`-th root of its
/// determinant; `λ_ijk = tr(g_ij g_jk g_ik⁻¹) / k`.
pub fn azumaya_extract(a: &TwistedBundle, tol: &Tolerance, seed: u64) -> Result<AzumayaExtraction> {
    let k = (a.rank() as f64).sqrt().round() as usize;
    if k * k != a.rank() || k == 0 {
        return Err(Error::ShapeMismatch(format!(
            "algebra rank {} is not a perfect square",
            a.rank()
        )));
    }
    let nerve = a.nerve().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("azumaya_extract");
    let mut g = BTreeMap::new();
    for &(i, j) in nerve.edges() {
        let edge = nerve.edge_label(i, j);
        let phi = a.g(i, j);
        let residual = automorphism_residual(&phi, k);
        if residual.is_nan() || residual > tol.eps_structural {
            return Err(Error::NotAutomorphism { edge, residual });
        }
        let raw = recover(&phi, k, &mut rng, tol).ok_or_else(|| Error::NotAutomorphism {
            edge: edge.clone(),
            residual: f64::INFINITY,
        })?;
        let det = raw.determinant();
        let root = principal_root(det, k);
        report.push(
            CheckRecord::new("automorphism", true, residual)
                .at(format!("edge {edge}"))
                .with_detail(format!(
                    "det {:.6e}{:+.6e}i normalised by principal {k}-th root {:.6e}{:+.6e}i",
                    det.re, det.im, root.re, root.im
                )),
        );
        g.insert((i, j), raw / root);
    }
    let mut lambda = BTreeMap::new();
    for &t in nerve.triangles() {
        let mut s = t;
        s.sort_unstable();
        let [x, y, z] = s;
        let get = |p: usize, q: usize| -> CMat {
            match (g.get(&(p, q)), g.get(&(q, p))) {
                (Some(m), _) => m.clone(),
                (None, Some(m)) => inverse(m).expect("recovered transitions are invertible"),
                _ => CMat::from_element(k, k, ZERO),
            }
        };
        let m = get(x, y) * get(y, z) * get(z, x);
        lambda.insert(s, m.trace() / k as f64);
    }
    let bundle = TwistedBundle::new(nerve.clone(), k, g, lambda)?;
    report.extend(bundle.validate(tol));
    report.extend(verify_iso(
        &bundle.end(),
        a,
        &IsoWitness::identity(nerve.chart_count(), a.rank()),
        tol,
    ));
    Ok(AzumayaExtraction { bundle, report })
}

/// The rank-1 bundle `L` with `E ⊗ L ≅ E'` via the witness `w` from `E` to `E'`:
/// `l_ij = tr(f_ij (u_i g_ij u_j⁻¹)⁻¹) / r`, twist `λ'/λ`.
pub fn twist_line(e_prime: &TwistedBundle, e: &TwistedBundle, w: &IsoWitness) -> Result<TwistedBundle> {
    if e.nerve() != e_prime.nerve() || e.rank() != e_prime.rank() || w.u.len() != e.nerve().chart_count() {
        return Err(Error::ShapeMismatch("bundles or witness do not match".into()));
    }
    let r = e.rank() as f64;
    let conj = e.conjugate(w);
    let mut g = BTreeMap::new();
    for &(i, j) in e.nerve().edges() {
        let ratio = e_prime.g(i, j) * conj.g(j, i);
        g.insert((i, j), CMat::from_element(1, 1, ratio.trace() / r));
    }
    let lambda = e_prime.twist().mul(&e.twist().inv()).values().clone();
    TwistedBundle::new(e.nerve().clone(), 1, g, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nerve::CechNerve;
    use crate::scalar::C64;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn identity_cocycles_give_trivial_bundle() {
        let nerve = CechNerve::complete(3);
        let a = TwistedBundle::trivial(&nerve, 4);
        let out = azumaya_extract(&a, &tol(), 0).unwrap();
        assert!(out.report.passed());
        assert!(out.bundle.twist().is_trivial(&tol()));
        for &(i, j) in nerve.edges() {
            assert!(relative_matrix_gap(&out.bundle.g(i, j), &CMat::identity(2, 2)) < 1e-12);
        }
    }

    #[test]
    fn round_trip_through_end() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let nerve = CechNerve::complete(4);
        for rank in 1..=3 {
            let e = TwistedBundle::random(&mut rng, &nerve, rank);
            let out = azumaya_extract(&e.end(), &tol(), 5).unwrap();
            assert!(out.report.passed(), "{:?}", out.report.first_failure());
            let w = IsoWitness::identity(4, rank);
            let l = twist_line(&out.bundle, &e, &w).unwrap();
            assert!(l.validate(&tol()).passed());
            let el = e.tensor(&l).unwrap();
            assert!(verify_iso(&el, &out.bundle, &w, &tol()).passed());
        }
    }

    #[test]
    fn non_automorphism_is_rejected() {
        let nerve = CechNerve::complete(2);
        let mut a = TwistedBundle::trivial(&nerve, 4);
        *a.stored_mut(0, 1).unwrap() *= C64::new(2.0, 0.0);
        assert!(matches!(
            azumaya_extract(&a, &tol(), 0),
            Err(Error::NotAutomorphism { .. })
        ));
    }
}
