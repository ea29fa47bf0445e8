//! Twisted vector bundles as Čech data on a finite nerve: transitions `g_ij`
//! with `g_ij g_jk = λ_ijk g_ik` for a scalar 2-cocycle `λ`.

mod azumaya;
mod picard;

pub use azumaya::{azumaya_extract, twist_line, AzumayaExtraction};
pub use picard::{psi, tpic_inv, tpic_mul, TwistRepresentatives};

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{
    self, inverse, kron, max_abs, max_abs_diff, nullspace, random_invertible, random_nonzero_scalar, unvec_rows,
};
use crate::nerve::{CechNerve, CechNerveJson};
use crate::report::{CheckRecord, CheckReport};
use crate::scalar::{from_json_matrix, to_json_matrix, CMat, JsonC64, Tolerance, C64, ONE};

/// Random combinations tried when extending a spanning-tree witness.
pub const WITNESS_ATTEMPTS: usize = 8;

/// `|a − b|_max / (1 + max(|a|_max, |b|_max))`.
pub fn relative_matrix_gap(a: &CMat, b: &CMat) -> f64 {
    max_abs_diff(a, b) / (1.0 + max_abs(a).max(max_abs(b)))
}

fn sorted3(t: [usize; 3]) -> ([usize; 3], bool) {
    let mut s = t;
    let mut odd = false;
    for i in 0..3 {
        for j in 0..2 - i {
            if s[j] > s[j + 1] {
                s.swap(j, j + 1);
                odd = !odd;
            }
        }
    }
    (s, odd)
}

/// Values of `λ` on increasingly ordered triangles; other orderings follow
/// from `λ_σ = λ^{sgn σ}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TwistClass {
    values: BTreeMap<[usize; 3], C64>,
}

impl TwistClass {
    pub fn trivial(nerve: &CechNerve) -> Self {
        TwistClass {
            values: nerve.triangles().iter().map(|&t| (sorted3(t).0, ONE)).collect(),
        }
    }

    /// `λ` on a triangle given in any order.
    pub fn get(&self, t: [usize; 3]) -> Option<C64> {
        let (s, odd) = sorted3(t);
        self.values.get(&s).map(|&v| if odd { v.inv() } else { v })
    }

    pub fn values(&self) -> &BTreeMap<[usize; 3], C64> {
        &self.values
    }

    pub fn mul(&self, other: &TwistClass) -> TwistClass {
        TwistClass {
            values: self
                .values
                .iter()
                .map(|(k, v)| (*k, v * other.values.get(k).copied().unwrap_or(ONE)))
                .collect(),
        }
    }

    pub fn inv(&self) -> TwistClass {
        TwistClass {
            values: self.values.iter().map(|(k, v)| (*k, v.inv())).collect(),
        }
    }

    /// Largest `|λ − μ| / (1 + max(|λ|, |μ|))` over shared triangles; infinite if the supports differ.
    pub fn gap(&self, other: &TwistClass) -> f64 {
        if self.values.keys().ne(other.values.keys()) {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .map(|(k, v)| crate::scalar::relative_gap(*v, other.values[k]))
            .fold(0.0, f64::max)
    }

    pub fn is_trivial(&self, tol: &Tolerance) -> bool {
        self.values.values().all(|v| tol.close(*v, ONE))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistedBundle {
    nerve: CechNerve,
    rank: usize,
    /// Transitions as supplied, keyed by ordered chart pair.
    g: BTreeMap<(usize, usize), CMat>,
    lambda: TwistClass,
}

/// Per-chart matrices `u_i` with `f_ij = u_i g_ij u_j⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsoWitness {
    pub u: Vec<CMat>,
}

impl IsoWitness {
    pub fn identity(charts: usize, rank: usize) -> Self {
        IsoWitness {
            u: vec![CMat::identity(rank, rank); charts],
        }
    }
}

impl TwistedBundle {
    /// `g` may hold either orientation of each nerve edge (or both, and `g_ii`);
    /// `lambda` may key a triangle in any order.
    pub fn new(
        nerve: CechNerve,
        rank: usize,
        g: BTreeMap<(usize, usize), CMat>,
        lambda: BTreeMap<[usize; 3], C64>,
    ) -> Result<Self> {
        let m = nerve.chart_count();
        for (&(i, j), mat) in &g {
            if i >= m || j >= m {
                return Err(Error::InvalidNerve(format!(
                    "transition on ({i}, {j}) refers to an unknown chart"
                )));
            }
            if mat.nrows() != rank || mat.ncols() != rank {
                return Err(Error::ShapeMismatch(format!(
                    "g on {} is {}x{}, expected {rank}x{rank}",
                    nerve.edge_label(i, j),
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            if mat.iter().any(|z| !crate::scalar::is_finite(*z)) {
                return Err(Error::NonFinite(format!("g on {}", nerve.edge_label(i, j))));
            }
            if i != j && nerve.find_edge(i, j).is_none() {
                return Err(Error::InvalidNerve(format!(
                    "transition on {} is not a nerve edge",
                    nerve.edge_label(i, j)
                )));
            }
        }
        for &(a, b) in nerve.edges() {
            if !g.contains_key(&(a, b)) && !g.contains_key(&(b, a)) {
                return Err(Error::MissingEdge(nerve.edge_label(a, b)));
            }
        }
        let mut values = BTreeMap::new();
        for (&t, &v) in &lambda {
            let (s, odd) = sorted3(t);
            if !nerve.triangles().iter().any(|&x| sorted3(x).0 == s) {
                return Err(Error::InvalidNerve(format!("twist on {t:?} is not a nerve triangle")));
            }
            if v.norm() == 0.0 || !crate::scalar::is_finite(v) {
                return Err(Error::InvalidInput(format!(
                    "twist on {t:?} must be finite and nonzero"
                )));
            }
            values.insert(s, if odd { v.inv() } else { v });
        }
        for &t in nerve.triangles() {
            if !values.contains_key(&sorted3(t).0) {
                return Err(Error::MissingEdge(format!(
                    "twist on triangle {}",
                    nerve.simplex_label(&t)
                )));
            }
        }
        Ok(TwistedBundle {
            nerve,
            rank,
            g,
            lambda: TwistClass { values },
        })
    }

    /// Ordinary bundle with identity transitions.
    pub fn trivial(nerve: &CechNerve, rank: usize) -> Self {
        let g = nerve.edges().iter().map(|&e| (e, CMat::identity(rank, rank))).collect();
        TwistedBundle {
            nerve: nerve.clone(),
            rank,
            g,
            lambda: TwistClass::trivial(nerve),
        }
    }

    /// `g_ij = c_ij u_i u_j⁻¹` for random invertible `u_i` and nonzero scalars
    /// `c_ij` on nerve edges; the twist is `λ_ijk = c_ij c_jk / c_ik`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, nerve: &CechNerve, rank: usize) -> Self {
        let u: Vec<CMat> = (0..nerve.chart_count()).map(|_| random_invertible(rng, rank)).collect();
        let c: Vec<C64> = nerve.edges().iter().map(|_| random_nonzero_scalar(rng)).collect();
        let scalar = |i: usize, j: usize| {
            let e = nerve.find_edge(i, j).expect("triangle edges are nerve edges");
            if e.forward {
                c[e.index]
            } else {
                c[e.index].inv()
            }
        };
        let g = nerve
            .edges()
            .iter()
            .zip(&c)
            .map(|(&(i, j), &cij)| ((i, j), &u[i] * inverse(&u[j]).expect("invertible") * cij))
            .collect();
        let lambda = nerve
            .triangles()
            .iter()
            .map(|&t| {
                let [i, j, k] = sorted3(t).0;
                ([i, j, k], scalar(i, j) * scalar(j, k) / scalar(i, k))
            })
            .collect();
        TwistedBundle::new(nerve.clone(), rank, g, lambda).expect("random bundle is well formed")
    }

    /// Conjugate by random `u_i`; returns the new bundle and the witness from `self` to it.
    pub fn random_conjugate<R: Rng + ?Sized>(&self, rng: &mut R) -> (TwistedBundle, IsoWitness) {
        let u: Vec<CMat> = (0..self.nerve.chart_count())
            .map(|_| random_invertible(rng, self.rank))
            .collect();
        let w = IsoWitness { u };
        (self.conjugate(&w), w)
    }

    /// `f_ij = u_i g_ij u_j⁻¹` on every nerve edge.
    pub fn conjugate(&self, w: &IsoWitness) -> TwistedBundle {
        let g = self
            .nerve
            .edges()
            .iter()
            .map(|&(i, j)| {
                (
                    (i, j),
                    &w.u[i] * self.g(i, j) * inverse(&w.u[j]).expect("witness is invertible"),
                )
            })
            .collect();
        TwistedBundle {
            nerve: self.nerve.clone(),
            rank: self.rank,
            g,
            lambda: self.lambda.clone(),
        }
    }

    pub fn nerve(&self) -> &CechNerve {
        &self.nerve
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn twist(&self) -> &TwistClass {
        &self.lambda
    }

    pub fn stored(&self) -> &BTreeMap<(usize, usize), CMat> {
        &self.g
    }

    /// Mutable access to a stored transition.
    pub fn stored_mut(&mut self, i: usize, j: usize) -> Option<&mut CMat> {
        self.g.get_mut(&(i, j))
    }

    /// Store `g_ij` explicitly (e.g. the reverse orientation of an edge).
    pub fn insert(&mut self, i: usize, j: usize, m: CMat) -> Result<()> {
        if m.nrows() != self.rank || m.ncols() != self.rank {
            return Err(Error::ShapeMismatch("transition has the wrong rank".into()));
        }
        if i != j && self.nerve.find_edge(i, j).is_none() {
            return Err(Error::InvalidNerve(format!(
                "{} is not a nerve edge",
                self.nerve.edge_label(i, j)
            )));
        }
        self.g.insert((i, j), m);
        Ok(())
    }

    /// `g_ij`: stored, else the inverse of stored `g_ji`, else the identity when `i = j`.
    pub fn g(&self, i: usize, j: usize) -> CMat {
        if let Some(m) = self.g.get(&(i, j)) {
            return m.clone();
        }
        if let Some(m) = self.g.get(&(j, i)) {
            return inverse(m).unwrap_or_else(|| CMat::from_element(self.rank, self.rank, C64::new(f64::NAN, 0.0)));
        }
        assert_eq!(i, j, "no transition stored for ({i}, {j})");
        CMat::identity(self.rank, self.rank)
    }

    /// Twist realised by the transitions: `tr(g_ij g_jk g_ik⁻¹) / r` on each triangle.
    pub fn measured_twist(&self) -> TwistClass {
        TwistClass {
            values: self
                .lambda
                .values
                .keys()
                .map(|&[i, j, k]| {
                    let m = self.g(i, j) * self.g(j, k) * self.g(k, i);
                    ([i, j, k], m.trace() / self.rank as f64)
                })
                .collect(),
        }
    }

    pub fn validate(&self, tol: &Tolerance) -> CheckReport {
        let eps = tol.eps_structural;
        let mut report = CheckReport::new("twisted_bundle");
        let id = CMat::identity(self.rank, self.rank);
        for (&(i, j), m) in &self.g {
            let label = self.nerve.edge_label(i, j);
            if i == j {
                let r = relative_matrix_gap(m, &id);
                report.push(CheckRecord::new("identity", r <= eps, r).at(label));
                continue;
            }
            let (lo, hi) = linalg::singular_extremes(m);
            let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
            report.push(CheckRecord::new("invertible", ratio > tol.eps_rank, ratio).at(label.clone()));
            if i < j {
                if let Some(back) = self.g.get(&(j, i)) {
                    let r = relative_matrix_gap(&(m * back), &id);
                    report.push(CheckRecord::new("inverse", r <= eps, r).at(label));
                }
            }
        }
        for &t in self.nerve.triangles() {
            let [i, j, k] = sorted3(t).0;
            let lam = self.lambda.values[&[i, j, k]];
            let lhs = self.g(i, j) * self.g(j, k);
            let rhs = self.g(i, k) * lam;
            let r = relative_matrix_gap(&lhs, &rhs);
            report.push(
                CheckRecord::new("triangle", r <= eps, r)
                    .at(format!("triangle {}", self.nerve.simplex_label(&[i, j, k]))),
            );
        }
        for &q in self.nerve.quadruples() {
            let mut s = q;
            s.sort_unstable();
            let [i, j, k, l] = s;
            let get = |t: [usize; 3]| self.lambda.get(t);
            let label = format!("quadruple {}", self.nerve.simplex_label(&s));
            match (get([j, k, l]), get([i, k, l]), get([i, j, l]), get([i, j, k])) {
                (Some(a), Some(b), Some(c), Some(d)) => {
                    let v = a / b * c / d;
                    let r = (v - ONE).norm();
                    report.push(CheckRecord::new("two_cocycle", r <= eps, r).at(label));
                }
                _ => report.push(
                    CheckRecord::new("two_cocycle", false, f64::INFINITY)
                        .at(label)
                        .with_detail("a face of the quadruple carries no twist"),
                ),
            }
        }
        report
    }

    fn same_nerve(&self, other: &TwistedBundle) -> Result<()> {
        if self.nerve != other.nerve {
            return Err(Error::InvalidNerve("bundles live on different nerves".into()));
        }
        Ok(())
    }

    fn with_edges(&self, rank: usize, f: impl Fn(usize, usize) -> CMat, lambda: TwistClass) -> TwistedBundle {
        TwistedBundle {
            nerve: self.nerve.clone(),
            rank,
            g: self.nerve.edges().iter().map(|&(i, j)| ((i, j), f(i, j))).collect(),
            lambda,
        }
    }

    /// `g_E ⊗ g_F` with twist `λμ`.
    pub fn tensor(&self, other: &TwistedBundle) -> Result<TwistedBundle> {
        self.same_nerve(other)?;
        Ok(self.with_edges(
            self.rank * other.rank,
            |i, j| kron(&self.g(i, j), &other.g(i, j)),
            self.lambda.mul(&other.lambda),
        ))
    }

    /// `(g_ij⁻¹)ᵀ` with twist `λ⁻¹`.
    pub fn dual(&self) -> TwistedBundle {
        self.with_edges(self.rank, |i, j| self.g(j, i).transpose(), self.lambda.inv())
    }

    /// `HOM(self, other)`: `h_ij(x) = f_ij x g_ij⁻¹` on `r_F × r_E` matrices, in the
    /// row-major vectorisation `f_ij ⊗ (g_ij⁻¹)ᵀ`, with twist `μ/λ`.
    pub fn hom(&self, other: &TwistedBundle) -> Result<TwistedBundle> {
        self.same_nerve(other)?;
        Ok(self.with_edges(
            self.rank * other.rank,
            |i, j| kron(&other.g(i, j), &self.g(j, i).transpose()),
            other.lambda.mul(&self.lambda.inv()),
        ))
    }

    /// `END(self) = HOM(self, self)`.
    pub fn end(&self) -> TwistedBundle {
        self.hom(self).expect("same nerve")
    }
}

/// `f_ij = u_i g_ij u_j⁻¹` on every nerve edge (`self = E` carries `g`, `other = F` carries `f`).
pub fn verify_iso(e: &TwistedBundle, f: &TwistedBundle, w: &IsoWitness, tol: &Tolerance) -> CheckReport {
    let mut report = CheckReport::new("isomorphism");
    if e.nerve != f.nerve || e.rank != f.rank || w.u.len() != e.nerve.chart_count() {
        report.push(CheckRecord::new("shapes", false, f64::INFINITY).with_detail("nerve, rank or witness size differ"));
        return report;
    }
    for (i, u) in w.u.iter().enumerate() {
        let (lo, hi) = linalg::singular_extremes(u);
        let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        report.push(
            CheckRecord::new("witness_invertible", ratio > tol.eps_rank, ratio).at(format!("chart {}", e.nerve.id(i))),
        );
    }
    for &(i, j) in e.nerve.edges() {
        // f_ij u_j = u_i g_ij avoids inverting u_j
        let lhs = f.g(i, j) * &w.u[j];
        let rhs = &w.u[i] * e.g(i, j);
        let r = relative_matrix_gap(&lhs, &rhs);
        report.push(
            CheckRecord::new("intertwines", r <= tol.eps_structural, r)
                .at(format!("edge {}", e.nerve.edge_label(i, j))),
        );
    }
    let gap = e.lambda.gap(&f.lambda);
    report.push(CheckRecord::new("equal_twist", gap <= tol.eps_structural, gap));
    report
}

/// Isomorphism witness from `e` to `f`. Fixes `u_root = 1` on a spanning tree
/// and propagates `u_j = f_ij⁻¹ u_i g_ij`; if a non-tree edge then fails, the
/// root value is re-solved from the linear constraints of all non-tree edges.
/// Failure is inconclusive: it does not prove the bundles non-isomorphic.
pub fn solve_iso(e: &TwistedBundle, f: &TwistedBundle, tol: &Tolerance, seed: u64) -> Result<IsoWitness> {
    use rand::SeedableRng;
    e.same_nerve(f)?;
    if e.rank != f.rank {
        return Err(Error::NoWitnessFound(format!(
            "ranks differ ({} vs {})",
            e.rank, f.rank
        )));
    }
    let gap = e.lambda.gap(&f.lambda);
    if gap > tol.eps_structural {
        return Err(Error::NoWitnessFound(format!("twists differ (gap {gap:.3e})")));
    }
    let r = e.rank;
    let m = e.nerve.chart_count();
    let (roots, tree) = e.nerve.spanning_forest();
    // u_i = A_i X_root B_i
    let mut a = vec![CMat::identity(r, r); m];
    let mut b = vec![CMat::identity(r, r); m];
    let mut root_of: Vec<usize> = (0..m).collect();
    for &(p, c) in &tree {
        let fi = inverse(&f.g(p, c))
            .ok_or_else(|| Error::NoWitnessFound(format!("f on {} is singular", e.nerve.edge_label(p, c))))?;
        a[c] = fi * &a[p];
        b[c] = &b[p] * e.g(p, c);
        root_of[c] = root_of[p];
    }
    let tree_set: Vec<(usize, usize)> = tree.iter().map(|&(p, c)| (p.min(c), p.max(c))).collect();
    let off_tree: Vec<(usize, usize)> = e
        .nerve
        .edges()
        .iter()
        .copied()
        .filter(|&(i, j)| !tree_set.contains(&(i.min(j), i.max(j))))
        .collect();

    let witness_from = |x: &[CMat]| IsoWitness {
        u: (0..m)
            .map(|i| &a[i] * &x[roots.iter().position(|&q| q == root_of[i]).expect("root")] * &b[i])
            .collect(),
    };
    let ok = |w: &IsoWitness| verify_iso(e, f, w, tol).passed();

    let identity_roots = vec![CMat::identity(r, r); roots.len()];
    let w = witness_from(&identity_roots);
    if ok(&w) {
        return Ok(w);
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(roots.len());
    for &root in &roots {
        // f_ij u_j − u_i g_ij = 0 is linear in vec(X_root)
        let rows: Vec<CMat> = off_tree
            .iter()
            .filter(|&&(i, _)| root_of[i] == root)
            .map(|&(i, j)| {
                kron(&(f.g(i, j) * &a[j]), &b[j].transpose()) - kron(&a[i], &(&b[i] * e.g(i, j)).transpose())
            })
            .collect();
        if rows.is_empty() {
            xs.push(CMat::identity(r, r));
            continue;
        }
        let stacked = CMat::from_fn(rows.len() * r * r, r * r, |p, q| rows[p / (r * r)][(p % (r * r), q)]);
        let null = nullspace(&stacked, tol.eps_rank);
        if null.is_empty() {
            return Err(Error::NoWitnessFound(format!(
                "no intertwiner satisfies the non-tree edges of the component of chart {}",
                e.nerve.id(root)
            )));
        }
        let mut found = None;
        for _ in 0..WITNESS_ATTEMPTS {
            let v = null.iter().fold(linalg::CVec::zeros(r * r), |acc, n| {
                acc + n * linalg::random_scalar(&mut rng)
            });
            let x = unvec_rows(&v, r, r);
            let (lo, hi) = linalg::singular_extremes(&x);
            if hi > 0.0 && lo / hi > tol.eps_rank {
                found = Some(x);
                break;
            }
        }
        xs.push(found.ok_or_else(|| Error::NoWitnessFound("intertwiners found are all singular".into()))?);
    }
    let w = witness_from(&xs);
    if ok(&w) {
        Ok(w)
    } else {
        Err(Error::NoWitnessFound("re-solved witness does not verify".into()))
    }
}

/// `{"nerve": {...} | "nerve_ref": path, "rank": r, "g": {"i,j": matrix}, "lambda": {"i,j,k": [re, im]}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwistedJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nerve: Option<CechNerveJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nerve_ref: Option<String>,
    pub rank: usize,
    pub g: BTreeMap<String, Vec<Vec<JsonC64>>>,
    #[serde(default)]
    pub lambda: BTreeMap<String, JsonC64>,
}

fn parse_key<const N: usize>(nerve: &CechNerve, key: &str) -> Result<[usize; N]> {
    let parts: Vec<&str> = key.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(Error::InvalidInput(format!("key \"{key}\" should name {N} charts")));
    }
    let mut out = [0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = nerve
            .index_of(p)
            .ok_or_else(|| Error::InvalidNerve(format!("unknown chart id {p} in key \"{key}\"")))?;
    }
    Ok(out)
}

impl TwistedJson {
    /// Build against an explicitly supplied nerve (inline `nerve` is used when present).
    pub fn to_bundle(&self, nerve: Option<&CechNerve>) -> Result<TwistedBundle> {
        let inline;
        let nerve = match (&self.nerve, nerve) {
            (Some(j), _) => {
                inline = j.to_nerve()?;
                &inline
            }
            (None, Some(n)) => n,
            (None, None) => {
                return Err(Error::InvalidInput(
                    "bundle has neither \"nerve\" nor a resolved \"nerve_ref\"".into(),
                ))
            }
        };
        let mut g = BTreeMap::new();
        for (key, rows) in &self.g {
            let [i, j] = parse_key::<2>(nerve, key)?;
            g.insert((i, j), from_json_matrix(rows, Some(self.rank))?);
        }
        let mut lambda = BTreeMap::new();
        for (key, v) in &self.lambda {
            lambda.insert(parse_key::<3>(nerve, key)?, v.0);
        }
        TwistedBundle::new(nerve.clone(), self.rank, g, lambda)
    }

    pub fn from_bundle(b: &TwistedBundle) -> Self {
        let n = &b.nerve;
        TwistedJson {
            nerve: Some(n.into()),
            nerve_ref: None,
            rank: b.rank,
            g: b.g
                .iter()
                .map(|(&(i, j), m)| (format!("{},{}", n.id(i), n.id(j)), to_json_matrix(m)))
                .collect(),
            lambda: b
                .lambda
                .values
                .iter()
                .map(|(&[i, j, k], v)| (format!("{},{},{}", n.id(i), n.id(j), n.id(k)), JsonC64(*v)))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{c, ZERO};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn omega_line() -> TwistedBundle {
        // g01 g12 = ω g02 with g01 = ω, g12 = g02 = 1
        let omega = C64::from_polar(1.0, std::f64::consts::TAU / 3.0);
        let nerve = CechNerve::complete(3);
        let one = |z: C64| CMat::from_element(1, 1, z);
        let g = BTreeMap::from([((0, 1), one(omega)), ((1, 2), one(ONE)), ((0, 2), one(ONE))]);
        TwistedBundle::new(nerve, 1, g, BTreeMap::from([([0, 1, 2], omega)])).unwrap()
    }

    #[test]
    fn ordinary_and_omega_bundles_validate() {
        let nerve = CechNerve::complete(4);
        assert!(TwistedBundle::trivial(&nerve, 2).validate(&tol()).passed());
        let l = omega_line();
        assert!(l.validate(&tol()).passed());
        assert!(l.twist().gap(&l.measured_twist()) < 1e-14);
        // reversed key order gives the reciprocal
        assert!((l.twist().get([1, 0, 2]).unwrap() * l.twist().get([0, 1, 2]).unwrap() - ONE).norm() < 1e-15);
    }

    #[test]
    fn violated_inverse_is_flagged() {
        let mut b = TwistedBundle::random(&mut ChaCha8Rng::seed_from_u64(1), &CechNerve::complete(3), 2);
        b.insert(1, 0, CMat::identity(2, 2) * c(3.0, 0.0)).unwrap();
        let report = b.validate(&tol());
        let bad = report.first_failure().unwrap();
        assert_eq!((bad.name.as_str(), bad.location.as_deref()), ("inverse", Some("0->1")));
    }

    #[test]
    fn tensor_dual_and_hom_twists() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let nerve = CechNerve::complete(4);
        let e = TwistedBundle::random(&mut rng, &nerve, 2);
        let f = TwistedBundle::random(&mut rng, &nerve, 3);
        let t = e.tensor(&f).unwrap();
        assert_eq!(t.rank(), 6);
        assert!(t.validate(&tol()).passed());
        assert!(t.measured_twist().gap(&e.twist().mul(f.twist())) < 1e-12);
        let d = e.dual();
        assert!(d.validate(&tol()).passed());
        assert!(d.measured_twist().gap(&e.twist().inv()) < 1e-12);
        assert!(verify_iso(&d.dual(), &e, &IsoWitness::identity(4, 2), &tol()).passed());
        let end = e.end();
        assert!(end.validate(&tol()).passed());
        assert!(end.measured_twist().gap(&TwistClass::trivial(&nerve)) < 1e-12);
        // λ ⊗ λ⁻¹ is ordinary
        let ord = e.tensor(&e.dual()).unwrap();
        assert!(ord.twist().is_trivial(&tol()));
    }

    #[test]
    fn hom_is_conjugation_on_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let nerve = CechNerve::complete(3);
        let e = TwistedBundle::random(&mut rng, &nerve, 2);
        let f = TwistedBundle::random(&mut rng, &nerve, 3);
        let h = e.hom(&f).unwrap();
        let x = linalg::random_matrix(&mut rng, 3, 2);
        let direct = f.g(0, 1) * &x * e.g(1, 0);
        let via = unvec_rows(&(h.g(0, 1) * linalg::vec_rows(&x)), 3, 2);
        assert!(max_abs_diff(&direct, &via) < 1e-12);
    }

    #[test]
    fn solve_iso_recovers_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let nerve = CechNerve::complete(4);
        let e = TwistedBundle::random(&mut rng, &nerve, 3);
        let w = solve_iso(&e, &e, &tol(), 0).unwrap();
        assert!(w.u.iter().all(|u| max_abs_diff(u, &CMat::identity(3, 3)) < 1e-12));
        let (f, _) = e.random_conjugate(&mut rng);
        let w = solve_iso(&e, &f, &tol(), 0).unwrap();
        assert!(verify_iso(&e, &f, &w, &tol()).passed());
        let other = TwistedBundle::random(&mut rng, &nerve, 3);
        assert!(matches!(
            solve_iso(&e, &other, &tol(), 0),
            Err(Error::NoWitnessFound(_))
        ));
    }

    #[test]
    fn solve_iso_uses_non_tree_constraints() {
        // a 3-cycle without a triangle: identity at the root fails, a scalar-free
        // intertwiner still exists
        let nerve = CechNerve::anonymous(3, vec![(0, 1), (1, 2), (2, 0)], vec![], vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let g = BTreeMap::from([
            ((0, 1), p.clone()),
            ((1, 2), CMat::identity(2, 2)),
            ((2, 0), CMat::identity(2, 2)),
        ]);
        let e = TwistedBundle::new(nerve, 2, g, BTreeMap::new()).unwrap();
        let (f, _) = e.random_conjugate(&mut rng);
        let w = solve_iso(&e, &f, &tol(), 9).unwrap();
        assert!(verify_iso(&e, &f, &w, &tol()).passed());
    }

    #[test]
    fn json_round_trip() {
        let e = TwistedBundle::random(&mut ChaCha8Rng::seed_from_u64(6), &CechNerve::complete(3), 2);
        let text = serde_json::to_string(&TwistedJson::from_bundle(&e)).unwrap();
        let back = serde_json::from_str::<TwistedJson>(&text)
            .unwrap()
            .to_bundle(None)
            .unwrap();
        assert!(verify_iso(&e, &back, &IsoWitness::identity(3, 2), &tol()).passed());
    }
}
