//! Finite-dimensional commutative Frobenius algebras over ℂ.
//!
//! An algebra is stored by its structure constants `c[i][j][k]`
//! (`b_i · b_j = Σ_k c[i][j][k] b_k`), the coordinates of its unit, and the
//! trace functional `θ` evaluated on the basis. Semisimple algebras are
//! decomposed into their orthogonal idempotents through spectral projectors
//! of a generic multiplication operator.

use nalgebra::linalg::Schur;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, random_scalar};
use crate::report::{CheckRecord, CheckReport};
use crate::scalar::{is_finite, relative_gap, round6, CMat, JsonC64, Tolerance, C64, ONE, ZERO};

/// Attempts with fresh random elements before declaring an algebra non-semisimple.
pub const SEMISIMPLE_ATTEMPTS: usize = 8;
const NEWTON_STEPS: usize = 3;

/// Dense rank-3 array indexed `[i][j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<C64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Tensor3 {
            n,
            data: vec![ZERO; n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t.data[(i * n + j) * n + k] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> C64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: C64) {
        self.data[(i * self.n + j) * self.n + k] = v;
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<C64>>> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| self.get(i, j, k)).collect()).collect())
            .collect()
    }

    /// Largest deviation from full symmetry under index permutations.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let x = self.get(i, j, k);
                    for y in [self.get(j, i, k), self.get(i, k, j), self.get(k, j, i)] {
                        worst = worst.max(relative_gap(x, y));
                    }
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusAlgebra {
    constants: Tensor3,
    unit: Vec<C64>,
    trace: Vec<C64>,
}

/// Orthogonal idempotents `e_1..e_n` with their weights `θ(e_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdempotentBasis {
    pub idempotents: Vec<Vec<C64>>,
    pub weights: Vec<C64>,
}

impl IdempotentBasis {
    pub fn len(&self) -> usize {
        self.idempotents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idempotents.is_empty()
    }
}

/// Outcome of the semisimplicity test.
#[derive(Debug, Clone, PartialEq)]
pub enum Semisimplicity {
    Semisimple(IdempotentBasis),
    /// `min_gap` is the best eigenvalue separation seen over all trials.
    NotSemisimple {
        reason: String,
        min_gap: f64,
    },
}

impl Semisimplicity {
    pub fn is_semisimple(&self) -> bool {
        matches!(self, Semisimplicity::Semisimple(_))
    }
}

impl FrobeniusAlgebra {
    /// Checks shapes and finiteness only; the algebra axioms are reported by
    /// [`FrobeniusAlgebra::validate`].
    pub fn new(constants: Tensor3, unit: Vec<C64>, trace: Vec<C64>) -> Result<Self> {
        let n = constants.dim();
        if n == 0 {
            return Err(Error::ShapeMismatch("dimension must be at least 1".into()));
        }
        if unit.len() != n || trace.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "dim {n} but unit has {} and trace has {} entries",
                unit.len(),
                trace.len()
            )));
        }
        if !constants.data.iter().all(|&z| is_finite(z)) {
            return Err(Error::NonFinite("structure constants".into()));
        }
        if !unit.iter().chain(&trace).all(|&z| is_finite(z)) {
            return Err(Error::NonFinite("unit or trace".into()));
        }
        Ok(FrobeniusAlgebra { constants, unit, trace })
    }

    pub fn from_nested(c: &[Vec<Vec<C64>>], unit: Vec<C64>, trace: Vec<C64>) -> Result<Self> {
        let n = c.len();
        if c.iter().any(|row| row.len() != n || row.iter().any(|v| v.len() != n)) {
            return Err(Error::ShapeMismatch(format!("structure constants are not {n}x{n}x{n}")));
        }
        Self::new(Tensor3::from_fn(n, |i, j, k| c[i][j][k]), unit, trace)
    }

    /// `ℂⁿ` with componentwise product and the given weights as trace.
    pub fn diagonal(weights: &[C64]) -> Result<Self> {
        let n = weights.len();
        let t = Tensor3::from_fn(n, |i, j, k| if i == j && j == k { ONE } else { ZERO });
        Self::new(t, vec![ONE; n], weights.to_vec())
    }

    /// `ℂ[x]/(x² − s)` in the basis `{1, x}`.
    pub fn quadratic(s: C64, trace: [C64; 2]) -> Result<Self> {
        let mut t = Tensor3::zeros(2);
        t.set(0, 0, 0, ONE);
        t.set(0, 1, 1, ONE);
        t.set(1, 0, 1, ONE);
        t.set(1, 1, 0, s);
        Self::new(t, vec![ONE, ZERO], trace.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.constants.dim()
    }

    pub fn constants(&self) -> &Tensor3 {
        &self.constants
    }

    pub fn unit(&self) -> &[C64] {
        &self.unit
    }

    pub fn trace(&self) -> &[C64] {
        &self.trace
    }

    pub fn multiply(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut out = vec![ZERO; n];
        for (i, &xi) in x.iter().enumerate().take(n) {
            if xi == ZERO {
                continue;
            }
            for (j, &yj) in y.iter().enumerate().take(n) {
                let xy = xi * yj;
                if xy == ZERO {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += xy * self.constants.get(i, j, k);
                }
            }
        }
        out
    }

    pub fn apply_trace(&self, x: &[C64]) -> C64 {
        self.trace.iter().zip(x).map(|(t, v)| t * v).sum()
    }

    /// Matrix of `y ↦ a·y`; column `j` holds the coordinates of `a·b_j`.
    pub fn mult_operator(&self, a: &[C64]) -> CMat {
        let n = self.dim();
        CMat::from_fn(n, n, |k, j| (0..n).map(|i| a[i] * self.constants.get(i, j, k)).sum())
    }

    fn basis_vector(&self, i: usize) -> Vec<C64> {
        let mut v = vec![ZERO; self.dim()];
        v[i] = ONE;
        v
    }

    /// Gram matrix `g_ij = θ(b_i b_j)`.
    pub fn metric(&self) -> CMat {
        let n = self.dim();
        CMat::from_fn(n, n, |i, j| {
            (0..n).map(|k| self.constants.get(i, j, k) * self.trace[k]).sum()
        })
    }

    /// `c_ijk = θ(b_i b_j b_k)`.
    pub fn three_point(&self) -> Tensor3 {
        let n = self.dim();
        let g = self.metric();
        // θ((b_i b_j) b_k) = Σ_m c[i][j][m] g[m][k]
        Tensor3::from_fn(n, |i, j, k| {
            (0..n).map(|m| self.constants.get(i, j, m) * g[(m, k)]).sum()
        })
    }

    /// Coordinates of `Φ: A → A*`, `x ↦ g(x, ·)`, in the dual basis.
    pub fn frobenius_iso(&self, tol: &Tolerance) -> Result<CMat> {
        let g = self.metric();
        let (lo, hi) = linalg::singular_extremes(&g);
        if lo.is_nan() || lo <= tol.eps_rank * hi {
            return Err(Error::Degenerate {
                smallest: lo,
                largest: hi,
            });
        }
        Ok(g)
    }

    /// Largest violation of `Φ(a x) = a · Φ(x)` over basis elements, where
    /// `(a φ)(y) = φ(a y)`.
    pub fn module_law_residual(&self) -> f64 {
        let n = self.dim();
        let g = self.metric();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            let ba = self.basis_vector(a);
            for x in 0..n {
                let ax = self.multiply(&ba, &self.basis_vector(x));
                for y in 0..n {
                    let ay = self.multiply(&ba, &self.basis_vector(y));
                    let lhs: C64 = (0..n).map(|m| ax[m] * g[(m, y)]).sum();
                    let rhs: C64 = (0..n).map(|m| ay[m] * g[(x, m)]).sum();
                    worst = worst.max(relative_gap(lhs, rhs));
                }
            }
        }
        worst
    }

    /// Residual of every Frobenius-algebra axiom.
    pub fn validate(&self, tol: &Tolerance) -> CheckReport {
        let n = self.dim();
        let c = &self.constants;
        let eps = tol.eps_structural;
        let mut report = CheckReport::new("frobenius_algebra");

        let mut comm: f64 = 0.0;
        let mut comm_at = None;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let r = relative_gap(c.get(i, j, k), c.get(j, i, k));
                    if r > comm {
                        comm = r;
                        comm_at = Some((i, j, k));
                    }
                }
            }
        }
        let mut rec = CheckRecord::new("commutativity", comm <= eps, comm);
        if let Some((i, j, k)) = comm_at.filter(|_| comm > eps) {
            rec = rec.at(format!("c[{i}][{j}][{k}]"));
        }
        report.push(rec);

        let mut assoc: f64 = 0.0;
        let mut assoc_at = None;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let lhs: C64 = (0..n).map(|m| c.get(i, j, m) * c.get(m, k, l)).sum();
                        let rhs: C64 = (0..n).map(|m| c.get(j, k, m) * c.get(i, m, l)).sum();
                        let r = relative_gap(lhs, rhs);
                        if r > assoc {
                            assoc = r;
                            assoc_at = Some((i, j, k, l));
                        }
                    }
                }
            }
        }
        let mut rec = CheckRecord::new("associativity", assoc <= eps, assoc);
        if let Some((i, j, k, l)) = assoc_at.filter(|_| assoc > eps) {
            rec = rec.at(format!("(b{i} b{j}) b{k} vs b{i} (b{j} b{k}), component {l}"));
        }
        report.push(rec);

        let mut unit: f64 = 0.0;
        for j in 0..n {
            let bj = self.basis_vector(j);
            let left = self.multiply(&self.unit, &bj);
            let right = self.multiply(&bj, &self.unit);
            for k in 0..n {
                unit = unit
                    .max(relative_gap(left[k], bj[k]))
                    .max(relative_gap(right[k], bj[k]));
            }
        }
        report.push(CheckRecord::new("unit", unit <= eps, unit));

        let (lo, hi) = linalg::singular_extremes(&self.metric());
        let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        report.push(
            CheckRecord::new("metric_nondegenerate", ratio > tol.eps_rank, ratio)
                .with_detail("smallest/largest singular value of the Gram matrix"),
        );
        report
    }

    /// Semisimplicity with seed 0.
    pub fn is_semisimple(&self, tol: &Tolerance) -> Semisimplicity {
        self.semisimplicity(tol, 0)
    }

    pub fn semisimplicity(&self, tol: &Tolerance, seed: u64) -> Semisimplicity {
        match self.decompose(tol, seed) {
            Ok(basis) => Semisimplicity::Semisimple(basis),
            Err((reason, min_gap)) => Semisimplicity::NotSemisimple { reason, min_gap },
        }
    }

    /// Canonically ordered idempotent basis.
    pub fn idempotent_basis(&self, tol: &Tolerance, seed: u64) -> Result<IdempotentBasis> {
        let basis = self.decompose(tol, seed).map_err(|(reason, _)| Error::NotSemisimple {
            attempts: SEMISIMPLE_ATTEMPTS,
            reason,
        })?;
        if let Some(index) = basis.weights.iter().position(|w| w.norm() <= tol.eps_rank) {
            return Err(Error::DegenerateTrace { index });
        }
        Ok(basis)
    }

    fn decompose(&self, tol: &Tolerance, seed: u64) -> std::result::Result<IdempotentBasis, (String, f64)> {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let separation = tol.eps_rank.sqrt();
        let mut best_gap: f64 = 0.0;
        let mut last_reason = String::from("no trial element");

        for _ in 0..SEMISIMPLE_ATTEMPTS {
            let a: Vec<C64> = (0..n).map(|_| random_scalar(&mut rng)).collect();
            let op = self.mult_operator(&a);
            let Some(eigs) = Schur::try_new(op.clone(), f64::EPSILON, 10_000).and_then(|s| s.eigenvalues()) else {
                last_reason = "eigen-solver did not converge".into();
                continue;
            };
            let eigs: Vec<C64> = eigs.iter().copied().collect();
            let scale = 1.0 + eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let mut gap = f64::INFINITY;
            for p in 0..n {
                for q in p + 1..n {
                    gap = gap.min((eigs[p] - eigs[q]).norm() / scale);
                }
            }
            if n == 1 {
                gap = 1.0;
            }
            best_gap = best_gap.max(gap);
            if gap <= separation {
                last_reason =
                    format!("multiplication operator has eigenvalue separation {gap:.3e} (threshold {separation:.1e})");
                continue;
            }

            let mut idempotents: Vec<Vec<C64>> = (0..n)
                .map(|j| {
                    // spectral projector p_j(a) = Π_{k≠j} (a − λ_k)/(λ_j − λ_k), applied to the unit
                    let mut v = linalg::CVec::from_vec(self.unit.clone());
                    for k in (0..n).filter(|&k| k != j) {
                        v = (&op * &v - &v * eigs[k]) / (eigs[j] - eigs[k]);
                    }
                    v.iter().copied().collect()
                })
                .collect();
            for e in idempotents.iter_mut() {
                for _ in 0..NEWTON_STEPS {
                    let e2 = self.multiply(e, e);
                    let e3 = self.multiply(&e2, e);
                    *e = e2.iter().zip(&e3).map(|(p, q)| 3.0 * p - 2.0 * q).collect();
                }
            }

            let residual = self.idempotent_residual(&idempotents);
            if residual > tol.eps_structural {
                last_reason = format!("idempotent relations fail with residual {residual:.3e}");
                continue;
            }
            let weights = idempotents.iter().map(|e| self.apply_trace(e)).collect();
            let mut basis = IdempotentBasis { idempotents, weights };
            canonical_order(&mut basis);
            return Ok(basis);
        }
        Err((last_reason, best_gap))
    }

    /// Largest violation of `e_i² = e_i`, `e_i e_j = 0`, `Σ e_i = 1`.
    pub fn idempotent_residual(&self, idempotents: &[Vec<C64>]) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for (p, ep) in idempotents.iter().enumerate() {
            for (q, eq) in idempotents.iter().enumerate().skip(p) {
                let prod = self.multiply(ep, eq);
                for k in 0..n {
                    let target = if p == q { ep[k] } else { ZERO };
                    worst = worst.max(relative_gap(prod[k], target));
                }
            }
        }
        for k in 0..n {
            let s: C64 = idempotents.iter().map(|e| e[k]).sum();
            worst = worst.max(relative_gap(s, self.unit[k]));
        }
        worst
    }

    /// Rank of multiplication by `x`.
    pub fn multiplication_rank(&self, x: &[C64], tol: &Tolerance) -> usize {
        linalg::rank(&self.mult_operator(x), tol.eps_rank)
    }

    /// Block-diagonal sum `A ⊕ B`.
    pub fn direct_sum(&self, other: &FrobeniusAlgebra) -> FrobeniusAlgebra {
        let (n, m) = (self.dim(), other.dim());
        let t = Tensor3::from_fn(n + m, |i, j, k| match (i < n, j < n, k < n) {
            (true, true, true) => self.constants.get(i, j, k),
            (false, false, false) => other.constants.get(i - n, j - n, k - n),
            _ => ZERO,
        });
        FrobeniusAlgebra {
            constants: t,
            unit: self.unit.iter().chain(&other.unit).copied().collect(),
            trace: self.trace.iter().chain(&other.trace).copied().collect(),
        }
    }

    /// Change of basis: coordinates transform as `y = P x`.
    pub fn conjugate(&self, p: &CMat) -> Result<FrobeniusAlgebra> {
        let n = self.dim();
        let p_inv = linalg::inverse(p).ok_or_else(|| Error::InvalidInput("singular change of basis".into()))?;
        let old = |v: &[C64]| -> Vec<C64> { (0..n).map(|r| (0..n).map(|s| p_inv[(r, s)] * v[s]).sum()).collect() };
        let new = |v: &[C64]| -> Vec<C64> { (0..n).map(|r| (0..n).map(|s| p[(r, s)] * v[s]).sum()).collect() };
        let mut t = Tensor3::zeros(n);
        for i in 0..n {
            let bi = old(&self.basis_vector(i));
            for j in 0..n {
                let bj = old(&self.basis_vector(j));
                let prod = new(&self.multiply(&bi, &bj));
                for (k, v) in prod.into_iter().enumerate() {
                    t.set(i, j, k, v);
                }
            }
        }
        let unit = new(&self.unit);
        let trace = (0..n)
            .map(|k| (0..n).map(|m| self.trace[m] * p_inv[(m, k)]).sum())
            .collect();
        FrobeniusAlgebra::new(t, unit, trace)
    }
}

/// Sort by `(−|θ(e)|, coordinates)`, all rounded to six decimals.
fn canonical_order(basis: &mut IdempotentBasis) {
    let key = |e: &Vec<C64>, w: &C64| -> (i64, Vec<(i64, i64)>) {
        (
            -round6(w.norm()),
            e.iter().map(|z| (round6(z.re), round6(z.im))).collect(),
        )
    };
    let mut pairs: Vec<(Vec<C64>, C64)> = basis.idempotents.drain(..).zip(basis.weights.drain(..)).collect();
    pairs.sort_by_cached_key(|(e, w)| key(e, w));
    for (e, w) in pairs {
        basis.idempotents.push(e);
        basis.weights.push(w);
    }
}

/// JSON form: `{"dim", "c": [[[re,im]...]...], "unit", "trace"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub dim: usize,
    pub c: Vec<Vec<Vec<JsonC64>>>,
    pub unit: Vec<JsonC64>,
    pub trace: Vec<JsonC64>,
}

impl AlgebraJson {
    pub fn to_algebra(&self) -> Result<FrobeniusAlgebra> {
        let n = self.dim;
        if self.c.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "dim is {n} but c has {} slices",
                self.c.len()
            )));
        }
        let nested: Vec<Vec<Vec<C64>>> = self
            .c
            .iter()
            .map(|r| r.iter().map(|v| v.iter().map(|z| z.0).collect()).collect())
            .collect();
        FrobeniusAlgebra::from_nested(
            &nested,
            self.unit.iter().map(|z| z.0).collect(),
            self.trace.iter().map(|z| z.0).collect(),
        )
    }
}

impl From<&FrobeniusAlgebra> for AlgebraJson {
    fn from(a: &FrobeniusAlgebra) -> Self {
        AlgebraJson {
            dim: a.dim(),
            c: a.constants
                .to_nested()
                .into_iter()
                .map(|r| r.into_iter().map(|v| v.into_iter().map(JsonC64).collect()).collect())
                .collect(),
            unit: a.unit.iter().copied().map(JsonC64).collect(),
            trace: a.trace.iter().copied().map(JsonC64).collect(),
        }
    }
}
