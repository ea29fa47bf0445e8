//! The maximal category of boundary conditions over a semisimple closed sector.
//!
//! A label is a dimension vector `d(a, i)`; morphisms `a → b` are tuples of
//! matrices, block `i` of shape `d(b, i) × d(a, i)`. Composition is written in
//! diagrammatic order: `compose(σ: a → b, τ: b → c)` has blocks `τ_i σ_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frobenius::{FrobeniusAlgebra, IdempotentBasis, Tensor3};
use crate::linalg::{self, random_scalar};
use crate::report::{CheckRecord, CheckReport};
use crate::scalar::{from_json_matrix, is_finite, to_json_matrix, CMat, JsonC64, Tolerance, C64, ONE, ZERO};

/// Random samples drawn by the sewing, centrality and adjointness checks.
pub const CHECK_SAMPLES: usize = 8;

/// Weights `θ(e_i)` of a semisimple closed algebra together with chosen roots `λ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedSector {
    weights: Vec<C64>,
    roots: Vec<C64>,
}

impl ClosedSector {
    /// `roots` defaults to the principal square roots.
    pub fn new(weights: Vec<C64>, roots: Option<Vec<C64>>, tol: &Tolerance) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::ShapeMismatch("closed sector needs at least one weight".into()));
        }
        if !weights.iter().all(|&w| is_finite(w)) {
            return Err(Error::NonFinite("sector weights".into()));
        }
        if let Some(index) = weights.iter().position(|w| w.norm() <= tol.eps_rank) {
            return Err(Error::DegenerateTrace { index });
        }
        let roots = match roots {
            None => weights.iter().map(|w| w.sqrt()).collect(),
            Some(r) => {
                if r.len() != weights.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "{} weights but {} roots",
                        weights.len(),
                        r.len()
                    )));
                }
                for (index, (root, w)) in r.iter().zip(&weights).enumerate() {
                    let residual = (root * root - w).norm();
                    if !is_finite(*root) || residual > tol.eps_structural * (1.0 + w.norm()) {
                        return Err(Error::InvalidRoot { index, residual });
                    }
                }
                r
            }
        };
        Ok(ClosedSector { weights, roots })
    }

    pub fn from_basis(basis: &IdempotentBasis, tol: &Tolerance) -> Result<Self> {
        Self::new(basis.weights.clone(), None, tol)
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn roots(&self) -> &[C64] {
        &self.roots
    }

    /// Same sector with `λ_i` replaced by `−λ_i`.
    pub fn with_flipped_root(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.roots[i] = -s.roots[i];
        s
    }

    /// `θ(Σ x_i e_i) = Σ x_i θ(e_i)`.
    pub fn theta(&self, x: &ClosedState) -> C64 {
        x.coords.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    pub fn generator_labels(&self) -> Vec<BraneLabel> {
        (0..self.n()).map(|i| BraneLabel::generator(self.n(), i)).collect()
    }

    /// Random sector with weights bounded away from zero.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Self {
        let weights: Vec<C64> = (0..n).map(|_| linalg::random_nonzero_scalar(rng)).collect();
        let roots = weights.iter().map(|w| w.sqrt()).collect();
        ClosedSector { weights, roots }
    }
}

/// Element of the closed algebra in idempotent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedState {
    pub coords: Vec<C64>,
}

impl ClosedState {
    pub fn unit(n: usize) -> Self {
        ClosedState { coords: vec![ONE; n] }
    }

    pub fn idempotent(n: usize, i: usize) -> Self {
        let mut coords = vec![ZERO; n];
        coords[i] = ONE;
        ClosedState { coords }
    }

    pub fn product(&self, other: &ClosedState) -> ClosedState {
        ClosedState {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Self {
        ClosedState {
            coords: (0..n).map(|_| random_scalar(rng)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BraneLabel {
    pub dims: Vec<usize>,
}

impl BraneLabel {
    pub fn new(dims: Vec<usize>) -> Self {
        BraneLabel { dims }
    }

    pub fn zero(n: usize) -> Self {
        BraneLabel { dims: vec![0; n] }
    }

    /// `ξ_i`: one-dimensional on index `i`, zero elsewhere.
    pub fn generator(n: usize, i: usize) -> Self {
        let mut dims = vec![0; n];
        dims[i] = 1;
        BraneLabel { dims }
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn is_zero(&self) -> bool {
        self.dims.iter().all(|&d| d == 0)
    }

    /// `dim E_ab = Σ_i d(a,i) d(b,i)`.
    pub fn hom_dim(&self, other: &BraneLabel) -> usize {
        self.dims.iter().zip(&other.dims).map(|(a, b)| a * b).sum()
    }

    pub fn direct_sum(&self, other: &BraneLabel) -> Result<BraneLabel> {
        same_rank(self, other)?;
        Ok(BraneLabel {
            dims: self.dims.iter().zip(&other.dims).map(|(a, b)| a + b).collect(),
        })
    }

    /// `M ⊗ a` for a trivial bundle of rank `m`.
    pub fn tensor(&self, m: usize) -> BraneLabel {
        BraneLabel {
            dims: self.dims.iter().map(|d| d * m).collect(),
        }
    }

    /// `M ⊗ a` with a separate multiplicity over each index.
    pub fn tensor_ranks(&self, ranks: &[usize]) -> Result<BraneLabel> {
        if ranks.len() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "rank vector has {} entries, label has {}",
                ranks.len(),
                self.n()
            )));
        }
        Ok(BraneLabel {
            dims: self.dims.iter().zip(ranks).map(|(d, m)| d * m).collect(),
        })
    }
}

fn same_rank(a: &BraneLabel, b: &BraneLabel) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::LabelMismatch(format!(
            "labels over {} and {} idempotents",
            a.n(),
            b.n()
        )));
    }
    Ok(())
}

fn check_sector(sec: &ClosedSector, labels: &[&BraneLabel]) -> Result<()> {
    for l in labels {
        if l.n() != sec.n() {
            return Err(Error::LabelMismatch(format!(
                "label has {} entries but the sector has {} idempotents",
                l.n(),
                sec.n()
            )));
        }
    }
    Ok(())
}

/// An element of `E_ab = ⊕_i Hom(V_{a,i}, V_{b,i})`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomSpace {
    pub source: BraneLabel,
    pub target: BraneLabel,
    pub blocks: Vec<CMat>,
}

impl HomSpace {
    pub fn new(source: BraneLabel, target: BraneLabel, blocks: Vec<CMat>) -> Result<Self> {
        same_rank(&source, &target)?;
        if blocks.len() != source.n() {
            return Err(Error::ShapeMismatch(format!(
                "{} blocks for labels over {} idempotents",
                blocks.len(),
                source.n()
            )));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.shape() != (target.dims[i], source.dims[i]) {
                return Err(Error::ShapeMismatch(format!(
                    "block {i} is {:?}, expected {}x{}",
                    b.shape(),
                    target.dims[i],
                    source.dims[i]
                )));
            }
        }
        Ok(HomSpace { source, target, blocks })
    }

    pub fn zero(source: &BraneLabel, target: &BraneLabel) -> Self {
        let blocks = source
            .dims
            .iter()
            .zip(&target.dims)
            .map(|(&s, &t)| CMat::zeros(t, s))
            .collect();
        HomSpace {
            source: source.clone(),
            target: target.clone(),
            blocks,
        }
    }

    pub fn identity(a: &BraneLabel) -> Self {
        HomSpace {
            source: a.clone(),
            target: a.clone(),
            blocks: a.dims.iter().map(|&d| CMat::identity(d, d)).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, source: &BraneLabel, target: &BraneLabel) -> Self {
        let blocks = source
            .dims
            .iter()
            .zip(&target.dims)
            .map(|(&s, &t)| linalg::random_matrix(rng, t, s))
            .collect();
        HomSpace {
            source: source.clone(),
            target: target.clone(),
            blocks,
        }
    }

    pub fn is_endomorphism(&self) -> bool {
        self.source == self.target
    }

    pub fn dim(&self) -> usize {
        self.source.hom_dim(&self.target)
    }

    /// Coordinates, block-major then row-major.
    pub fn coords(&self) -> Vec<C64> {
        self.blocks
            .iter()
            .flat_map(|b| (0..b.nrows()).flat_map(move |r| (0..b.ncols()).map(move |c| b[(r, c)])))
            .collect()
    }

    pub fn from_coords(source: &BraneLabel, target: &BraneLabel, coords: &[C64]) -> Self {
        let mut out = Self::zero(source, target);
        let mut k = 0;
        for b in out.blocks.iter_mut() {
            for r in 0..b.nrows() {
                for c in 0..b.ncols() {
                    b[(r, c)] = coords[k];
                    k += 1;
                }
            }
        }
        out
    }

    /// Matrix units of `E_ab`, enumerated block-major then row-major.
    pub fn matrix_unit_basis(source: &BraneLabel, target: &BraneLabel) -> Vec<HomSpace> {
        let dim = source.hom_dim(target);
        (0..dim)
            .map(|k| {
                let mut coords = vec![ZERO; dim];
                coords[k] = ONE;
                Self::from_coords(source, target, &coords)
            })
            .collect()
    }

    /// Matrix units mixed by a random invertible change of basis.
    pub fn random_basis<R: Rng + ?Sized>(rng: &mut R, source: &BraneLabel, target: &BraneLabel) -> Vec<HomSpace> {
        let dim = source.hom_dim(target);
        let p = linalg::random_invertible(rng, dim);
        (0..dim)
            .map(|k| {
                let coords: Vec<C64> = (0..dim).map(|r| p[(r, k)]).collect();
                Self::from_coords(source, target, &coords)
            })
            .collect()
    }

    /// `self` is `a → b`, `then` is `b → c`; the result is `a → c`.
    pub fn then(&self, then: &HomSpace) -> Result<HomSpace> {
        compose(self, then)
    }

    pub fn add(&self, other: &HomSpace) -> Result<HomSpace> {
        if self.source != other.source || self.target != other.target {
            return Err(Error::LabelMismatch("adding morphisms between different labels".into()));
        }
        Ok(HomSpace {
            source: self.source.clone(),
            target: self.target.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(x, y)| x + y).collect(),
        })
    }

    pub fn scale(&self, s: C64) -> HomSpace {
        HomSpace {
            source: self.source.clone(),
            target: self.target.clone(),
            blocks: self.blocks.iter().map(|b| b * s).collect(),
        }
    }

    /// Largest entrywise difference; labels must agree.
    pub fn max_abs_diff(&self, other: &HomSpace) -> f64 {
        debug_assert_eq!(self.source, other.source);
        debug_assert_eq!(self.target, other.target);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(x, y)| linalg::max_abs_diff(x, y))
            .fold(0.0, f64::max)
    }
}

/// Composition `E_ab × E_bc → E_ac`, block `i` equal to `τ_i σ_i`.
pub fn compose(sigma: &HomSpace, tau: &HomSpace) -> Result<HomSpace> {
    if sigma.target != tau.source {
        return Err(Error::LabelMismatch(format!(
            "cannot compose {:?} -> {:?} with {:?} -> {:?}",
            sigma.source.dims, sigma.target.dims, tau.source.dims, tau.target.dims
        )));
    }
    Ok(HomSpace {
        source: sigma.source.clone(),
        target: tau.target.clone(),
        blocks: sigma.blocks.iter().zip(&tau.blocks).map(|(s, t)| t * s).collect(),
    })
}

fn require_endo(sigma: &HomSpace) -> Result<()> {
    if sigma.is_endomorphism() {
        Ok(())
    } else {
        Err(Error::NotEndomorphism)
    }
}

/// `θ_a(σ) = Σ_i λ_i tr(σ_i)`.
pub fn theta_a(sec: &ClosedSector, sigma: &HomSpace) -> Result<C64> {
    require_endo(sigma)?;
    check_sector(sec, &[&sigma.source])?;
    Ok(sigma.blocks.iter().zip(&sec.roots).map(|(b, l)| l * b.trace()).sum())
}

/// `ι_a(X)`: block `i` is `X_i · Id`.
pub fn iota_a(sec: &ClosedSector, a: &BraneLabel, x: &ClosedState) -> Result<HomSpace> {
    check_sector(sec, &[a])?;
    if x.coords.len() != sec.n() {
        return Err(Error::ShapeMismatch("closed state has the wrong length".into()));
    }
    Ok(HomSpace {
        source: a.clone(),
        target: a.clone(),
        blocks: a
            .dims
            .iter()
            .zip(&x.coords)
            .map(|(&d, &v)| CMat::identity(d, d) * v)
            .collect(),
    })
}

/// `ι^a(σ) = Σ_i tr(σ_i)/λ_i e_i`.
pub fn iota_upper_a(sec: &ClosedSector, sigma: &HomSpace) -> Result<ClosedState> {
    require_endo(sigma)?;
    check_sector(sec, &[&sigma.source])?;
    Ok(ClosedState {
        coords: sigma
            .blocks
            .iter()
            .zip(&sec.roots)
            .map(|(b, l)| b.trace() / l)
            .collect(),
    })
}

/// Closed form `π_b^a(σ) = Σ_i tr(σ_i)/λ_i ι_b(e_i)`.
pub fn pi_formula(sec: &ClosedSector, b: &BraneLabel, sigma: &HomSpace) -> Result<HomSpace> {
    let traces = iota_upper_a(sec, sigma)?;
    iota_a(sec, b, &traces)
}

/// `π_b^a(σ) = Σ_ν ψ_ν σ ψ^ν` for a basis `{ψ_ν}` of `E_ab` (matrix units by
/// default) and its dual basis `{ψ^ν}` of `E_ba` under `(φ, ψ) ↦ θ_a(ψ ∘ φ)`.
pub fn pi_basis(
    sec: &ClosedSector,
    b: &BraneLabel,
    sigma: &HomSpace,
    basis: Option<&[HomSpace]>,
    tol: &Tolerance,
) -> Result<HomSpace> {
    require_endo(sigma)?;
    let a = &sigma.source;
    check_sector(sec, &[a, b])?;
    let units;
    let basis = match basis {
        Some(bs) => {
            if bs.len() != a.hom_dim(b) || bs.iter().any(|p| &p.source != a || &p.target != b) {
                return Err(Error::LabelMismatch("supplied basis does not span E_ab".into()));
            }
            bs
        }
        None => {
            units = HomSpace::matrix_unit_basis(a, b);
            &units[..]
        }
    };
    let dim = basis.len();
    if dim == 0 {
        return Ok(HomSpace::zero(b, b));
    }
    let reverse = HomSpace::matrix_unit_basis(b, a);
    let mut gram = CMat::zeros(dim, dim);
    for (nu, phi) in basis.iter().enumerate() {
        for (mu, chi) in reverse.iter().enumerate() {
            gram[(nu, mu)] = theta_a(sec, &compose(phi, chi)?)?;
        }
    }
    let (lo, hi) = linalg::singular_extremes(&gram);
    if lo.is_nan() || lo <= tol.eps_rank * hi {
        return Err(Error::DegeneratePairing(lo));
    }
    let inv = linalg::inverse(&gram).ok_or(Error::DegeneratePairing(lo))?;

    let mut out = HomSpace::zero(b, b);
    for (nu, phi) in basis.iter().enumerate() {
        // dual element ψ^ν = Σ_μ (G⁻¹)_{μν} χ_μ
        let coords: Vec<C64> = (0..dim).map(|mu| inv[(mu, nu)]).collect();
        let dual = HomSpace::from_coords(b, a, &coords);
        let term = compose(&compose(&dual, sigma)?, phi)?;
        out = out.add(&term)?;
    }
    Ok(out)
}

/// Residual of `π_b^a = ι_b ∘ ι^a` over the matrix units of `E_aa`, with `π`
/// evaluated through the basis sum.
pub fn check_cardy(sec: &ClosedSector, a: &BraneLabel, b: &BraneLabel, tol: &Tolerance) -> Result<CheckReport> {
    check_sector(sec, &[a, b])?;
    let mut worst: f64 = 0.0;
    for sigma in HomSpace::matrix_unit_basis(a, a) {
        let lhs = pi_basis(sec, b, &sigma, None, tol)?;
        let rhs = iota_a(sec, b, &iota_upper_a(sec, &sigma)?)?;
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    let mut report = CheckReport::new("cardy");
    report.push(
        CheckRecord::new("cardy", worst <= tol.eps_structural, worst).at(format!("{:?} -> {:?}", a.dims, b.dims)),
    );
    Ok(report)
}

/// Symmetry `θ_a(ψ∘φ) = θ_b(φ∘ψ)` on random pairs and nondegeneracy of the pairing.
pub fn check_sewing(
    sec: &ClosedSector,
    a: &BraneLabel,
    b: &BraneLabel,
    tol: &Tolerance,
    seed: u64,
) -> Result<CheckReport> {
    check_sector(sec, &[a, b])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loc = format!("{:?} -> {:?}", a.dims, b.dims);
    let mut worst: f64 = 0.0;
    for _ in 0..CHECK_SAMPLES {
        let phi = HomSpace::random(&mut rng, a, b);
        let psi = HomSpace::random(&mut rng, b, a);
        let lhs = theta_a(sec, &compose(&phi, &psi)?)?;
        let rhs = theta_a(sec, &compose(&psi, &phi)?)?;
        worst = worst.max((lhs - rhs).norm());
    }
    let mut report = CheckReport::new("sewing");
    report.push(CheckRecord::new("sewing_symmetry", worst <= tol.eps_structural, worst).at(loc.clone()));

    let forward = HomSpace::matrix_unit_basis(a, b);
    let backward = HomSpace::matrix_unit_basis(b, a);
    let dim = forward.len();
    let ratio = if dim == 0 {
        1.0
    } else {
        let mut gram = CMat::zeros(dim, dim);
        for (p, phi) in forward.iter().enumerate() {
            for (q, psi) in backward.iter().enumerate() {
                gram[(p, q)] = theta_a(sec, &compose(phi, psi)?)?;
            }
        }
        let (lo, hi) = linalg::singular_extremes(&gram);
        if hi > 0.0 {
            lo / hi
        } else {
            0.0
        }
    };
    report.push(
        CheckRecord::new("pairing_nondegenerate", ratio > tol.eps_rank, ratio)
            .at(loc)
            .with_detail("smallest/largest singular value of the pairing"),
    );
    Ok(report)
}

/// `σ ι_a(X) = ι_b(X) σ` for random `σ ∈ E_ab` and closed states `X`.
pub fn check_centrality(
    sec: &ClosedSector,
    a: &BraneLabel,
    b: &BraneLabel,
    tol: &Tolerance,
    seed: u64,
) -> Result<CheckReport> {
    check_sector(sec, &[a, b])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..CHECK_SAMPLES {
        let sigma = HomSpace::random(&mut rng, a, b);
        let x = ClosedState::random(&mut rng, sec.n());
        let lhs = compose(&iota_a(sec, a, &x)?, &sigma)?;
        let rhs = compose(&sigma, &iota_a(sec, b, &x)?)?;
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    let mut report = CheckReport::new("centrality");
    report.push(
        CheckRecord::new("centrality", worst <= tol.eps_structural, worst).at(format!("{:?} -> {:?}", a.dims, b.dims)),
    );
    Ok(report)
}

/// `θ(ι^a(σ) X) = θ_a(σ ι_a(X))` for random `σ ∈ E_aa` and `X`.
pub fn check_adjoint(sec: &ClosedSector, a: &BraneLabel, tol: &Tolerance, seed: u64) -> Result<CheckReport> {
    check_sector(sec, &[a])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..CHECK_SAMPLES {
        let sigma = HomSpace::random(&mut rng, a, a);
        let x = ClosedState::random(&mut rng, sec.n());
        let lhs = sec.theta(&iota_upper_a(sec, &sigma)?.product(&x));
        let rhs = theta_a(sec, &compose(&iota_a(sec, a, &x)?, &sigma)?)?;
        worst = worst.max((lhs - rhs).norm());
    }
    let mut report = CheckReport::new("adjoint");
    report.push(CheckRecord::new("adjoint", worst <= tol.eps_structural, worst).at(format!("{:?}", a.dims)));
    Ok(report)
}

/// Canonical inclusions `a → a⊕b`, `b → a⊕b` and projections back.
pub struct DirectSum {
    pub label: BraneLabel,
    pub incl_a: HomSpace,
    pub incl_b: HomSpace,
    pub proj_a: HomSpace,
    pub proj_b: HomSpace,
}

pub fn direct_sum_label(a: &BraneLabel, b: &BraneLabel) -> Result<DirectSum> {
    let sum = a.direct_sum(b)?;
    let n = a.n();
    let mut incl_a = Vec::with_capacity(n);
    let mut incl_b = Vec::with_capacity(n);
    for i in 0..n {
        let (da, db) = (a.dims[i], b.dims[i]);
        let mut ia = CMat::zeros(da + db, da);
        ia.view_mut((0, 0), (da, da)).fill_with_identity();
        let mut ib = CMat::zeros(da + db, db);
        ib.view_mut((da, 0), (db, db)).fill_with_identity();
        incl_a.push(ia);
        incl_b.push(ib);
    }
    let proj_a = incl_a.iter().map(|m| m.transpose()).collect();
    let proj_b = incl_b.iter().map(|m| m.transpose()).collect();
    Ok(DirectSum {
        incl_a: HomSpace::new(a.clone(), sum.clone(), incl_a)?,
        incl_b: HomSpace::new(b.clone(), sum.clone(), incl_b)?,
        proj_a: HomSpace::new(sum.clone(), a.clone(), proj_a)?,
        proj_b: HomSpace::new(sum.clone(), b.clone(), proj_b)?,
        label: sum,
    })
}

/// Trace additivity, block-diagonal `ι`, and `π^{a⊕b}_c = π^a_c + π^b_c` on a
/// random endomorphism of `a ⊕ b`.
pub fn check_additivity(
    sec: &ClosedSector,
    a: &BraneLabel,
    b: &BraneLabel,
    c: &BraneLabel,
    tol: &Tolerance,
    seed: u64,
) -> Result<CheckReport> {
    check_sector(sec, &[a, b, c])?;
    let ds = direct_sum_label(a, b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loc = format!("{:?} + {:?} -> {:?}", a.dims, b.dims, c.dims);
    let (mut theta_res, mut iota_res, mut pi_res): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..CHECK_SAMPLES {
        let sigma = HomSpace::random(&mut rng, &ds.label, &ds.label);
        // σ_11 = p_a σ i_a, σ_22 = p_b σ i_b
        let s11 = compose(&compose(&ds.incl_a, &sigma)?, &ds.proj_a)?;
        let s22 = compose(&compose(&ds.incl_b, &sigma)?, &ds.proj_b)?;
        let lhs = theta_a(sec, &sigma)?;
        let rhs = theta_a(sec, &s11)? + theta_a(sec, &s22)?;
        theta_res = theta_res.max((lhs - rhs).norm());

        let pi_sum = pi_basis(sec, c, &sigma, None, tol)?;
        let pi_parts = pi_basis(sec, c, &s11, None, tol)?.add(&pi_basis(sec, c, &s22, None, tol)?)?;
        pi_res = pi_res.max(pi_sum.max_abs_diff(&pi_parts));

        let x = ClosedState::random(&mut rng, sec.n());
        let whole = iota_a(sec, &ds.label, &x)?;
        let ia = compose(&compose(&ds.proj_a, &iota_a(sec, a, &x)?)?, &ds.incl_a)?;
        let ib = compose(&compose(&ds.proj_b, &iota_a(sec, b, &x)?)?, &ds.incl_b)?;
        iota_res = iota_res.max(whole.max_abs_diff(&ia.add(&ib)?));
    }
    let eps = tol.eps_structural;
    let mut report = CheckReport::new("additivity");
    report.push(CheckRecord::new("theta_additive", theta_res <= eps, theta_res).at(loc.clone()));
    report.push(CheckRecord::new("iota_block_diagonal", iota_res <= eps, iota_res).at(loc.clone()));
    report.push(CheckRecord::new("pi_additive", pi_res <= eps, pi_res).at(loc));
    Ok(report)
}

/// `M ⊗ a` together with the check `dim E_{(M⊗a)b} = m · dim E_ab`.
pub fn tensor_label(m: usize, a: &BraneLabel, b: &BraneLabel) -> (BraneLabel, CheckRecord) {
    let scaled = a.tensor(m);
    let lhs = scaled.hom_dim(b);
    let rhs = m * a.hom_dim(b);
    let rec = CheckRecord::new("tensor_hom_dim", lhs == rhs, lhs.abs_diff(rhs) as f64)
        .at(format!("{m} x {:?} -> {:?}", a.dims, b.dims));
    (scaled, rec)
}

/// Splits an idempotent endomorphism into kernel and image labels `(K, I)`.
pub fn split_idempotent(sigma: &HomSpace, tol: &Tolerance) -> Result<(BraneLabel, BraneLabel)> {
    require_endo(sigma)?;
    let sq = compose(sigma, sigma)?;
    let residual = sq.max_abs_diff(sigma);
    let scale = 1.0 + sigma.blocks.iter().map(linalg::max_abs).fold(0.0, f64::max);
    if residual > tol.eps_structural * scale {
        return Err(Error::NotIdempotent(residual));
    }
    let image: Vec<usize> = sigma.blocks.iter().map(|b| linalg::rank(b, tol.eps_rank)).collect();
    let kernel = sigma.source.dims.iter().zip(&image).map(|(d, r)| d - r).collect();
    Ok((BraneLabel::new(kernel), BraneLabel::new(image)))
}

/// The generators `ξ_i` and the integer identities they satisfy against `labels`:
/// `dim E_{ξ_i ξ_j} = δ_ij`, `dim E_ab = Σ_i dim E_{aξ_i} dim E_{ξ_i b}` and
/// `d(b, i) = dim E_{ξ_i b}`.
pub fn generator_labels(sec: &ClosedSector, labels: &[BraneLabel]) -> Result<(Vec<BraneLabel>, CheckReport)> {
    let gens = sec.generator_labels();
    let refs: Vec<&BraneLabel> = labels.iter().collect();
    check_sector(sec, &refs)?;
    let mut report = CheckReport::new("generators");
    for (i, xi) in gens.iter().enumerate() {
        for (j, xj) in gens.iter().enumerate() {
            let d = xi.hom_dim(xj);
            let want = usize::from(i == j);
            report.push(
                CheckRecord::new("generator_orthogonality", d == want, d.abs_diff(want) as f64)
                    .at(format!("xi{i}, xi{j}")),
            );
        }
    }
    for a in labels {
        for b in labels {
            let direct = a.hom_dim(b);
            let through: usize = gens.iter().map(|x| a.hom_dim(x) * x.hom_dim(b)).sum();
            report.push(
                CheckRecord::new("decomposition", direct == through, direct.abs_diff(through) as f64)
                    .at(format!("{:?} -> {:?}", a.dims, b.dims)),
            );
        }
        for (i, x) in gens.iter().enumerate() {
            let d = x.hom_dim(a);
            report.push(
                CheckRecord::new("linear_combination", d == a.dims[i], d.abs_diff(a.dims[i]) as f64)
                    .at(format!("{:?}, index {i}", a.dims)),
            );
        }
    }
    Ok((gens, report))
}

/// `E_aa` as an algebra in its matrix-unit basis with trace `θ_a`.
pub fn endomorphism_algebra(sec: &ClosedSector, a: &BraneLabel) -> Result<FrobeniusAlgebra> {
    check_sector(sec, &[a])?;
    let basis = HomSpace::matrix_unit_basis(a, a);
    let dim = basis.len();
    if dim == 0 {
        return Err(Error::ShapeMismatch("endomorphism algebra of the zero label".into()));
    }
    let mut t = Tensor3::zeros(dim);
    for (i, x) in basis.iter().enumerate() {
        for (j, y) in basis.iter().enumerate() {
            // b_i · b_j means "b_j after b_i" in matrix order: blocks x_i y_i
            let prod = compose(y, x)?.coords();
            for (k, v) in prod.into_iter().enumerate() {
                t.set(i, j, k, v);
            }
        }
    }
    let unit = HomSpace::identity(a).coords();
    let trace = basis.iter().map(|x| theta_a(sec, x)).collect::<Result<Vec<_>>>()?;
    FrobeniusAlgebra::new(t, unit, trace)
}

/// Dimension of the center of `E_aa`.
pub fn center_dimension(sec: &ClosedSector, a: &BraneLabel, tol: &Tolerance) -> Result<usize> {
    check_sector(sec, &[a])?;
    let basis = HomSpace::matrix_unit_basis(a, a);
    let dim = basis.len();
    if dim == 0 {
        return Ok(0);
    }
    // stack the maps x ↦ [b_k, x] and count the common kernel
    let mut stacked = CMat::zeros(dim * dim, dim);
    for (k, bk) in basis.iter().enumerate() {
        for (j, x) in basis.iter().enumerate() {
            let comm = compose(x, bk)?.add(&compose(bk, x)?.scale(-ONE))?.coords();
            for (r, v) in comm.into_iter().enumerate() {
                stacked[(k * dim + r, j)] = v;
            }
        }
    }
    Ok(dim - linalg::rank(&stacked, tol.eps_rank))
}

/// `{"weights": [...], "roots": [...]?}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorJson {
    pub weights: Vec<JsonC64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<JsonC64>>,
}

impl SectorJson {
    pub fn to_sector(&self, tol: &Tolerance) -> Result<ClosedSector> {
        ClosedSector::new(
            self.weights.iter().map(|z| z.0).collect(),
            self.roots.as_ref().map(|r| r.iter().map(|z| z.0).collect()),
            tol,
        )
    }
}

/// `{"blocks": [matrix, ...]}` with row-major `[re, im]` entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorphismJson {
    pub blocks: Vec<Vec<Vec<JsonC64>>>,
}

impl MorphismJson {
    pub fn to_morphism(&self, source: &BraneLabel, target: &BraneLabel) -> Result<HomSpace> {
        if self.blocks.len() != source.n() {
            return Err(Error::ShapeMismatch("wrong number of blocks".into()));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&source.dims)
            .map(|(b, &cols)| from_json_matrix(b, Some(cols)))
            .collect::<Result<Vec<_>>>()?;
        HomSpace::new(source.clone(), target.clone(), blocks)
    }
}

impl From<&HomSpace> for MorphismJson {
    fn from(h: &HomSpace) -> Self {
        MorphismJson {
            blocks: h.blocks.iter().map(to_json_matrix).collect(),
        }
    }
}

/// Input of the brane suite: a sector plus the labels to check pairwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BraneSystemJson {
    #[serde(flatten)]
    pub sector: SectorJson,
    pub labels: Vec<BraneLabel>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn label(d: &[usize]) -> BraneLabel {
        BraneLabel::new(d.to_vec())
    }

    fn sector(w: &[f64]) -> ClosedSector {
        ClosedSector::new(w.iter().map(|&x| c(x, 0.0)).collect(), None, &tol()).unwrap()
    }

    #[test]
    fn compose_identity_and_single_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = label(&[2, 1]);
        let b = label(&[1, 3]);
        let s = HomSpace::random(&mut rng, &a, &b);
        assert_eq!(compose(&HomSpace::identity(&a), &s).unwrap(), s);
        assert_eq!(compose(&s, &HomSpace::identity(&b)).unwrap(), s);

        let one = label(&[2]);
        let x = HomSpace::random(&mut rng, &one, &one);
        let y = HomSpace::random(&mut rng, &one, &one);
        let xy = compose(&x, &y).unwrap();
        assert!(linalg::max_abs_diff(&xy.blocks[0], &(&y.blocks[0] * &x.blocks[0])) < 1e-15);
        assert!(matches!(compose(&s, &s), Err(Error::LabelMismatch(_))));
    }

    #[test]
    fn theta_examples() {
        let sec = sector(&[1.0, 1.0]);
        assert_eq!(
            theta_a(&sec, &HomSpace::identity(&label(&[1, 1]))).unwrap(),
            c(2.0, 0.0)
        );
        let sec = sector(&[4.0, 9.0]);
        let a = label(&[2, 1]);
        assert_eq!(theta_a(&sec, &HomSpace::identity(&a)).unwrap(), c(7.0, 0.0));
        assert_eq!(theta_a(&sec, &HomSpace::zero(&a, &a)).unwrap(), ZERO);
        let off = HomSpace::zero(&a, &label(&[1, 1]));
        assert_eq!(theta_a(&sec, &off), Err(Error::NotEndomorphism));
    }

    #[test]
    fn iota_of_idempotent_is_block_identity() {
        let sec = sector(&[1.0, 1.0]);
        let a = label(&[2, 3]);
        let img = iota_a(&sec, &a, &ClosedState::idempotent(2, 0)).unwrap();
        assert_eq!(img.blocks[0], CMat::identity(2, 2));
        assert_eq!(img.blocks[1], CMat::zeros(3, 3));
        assert_eq!(iota_a(&sec, &a, &ClosedState::unit(2)).unwrap(), HomSpace::identity(&a));
        // ι^a(ι_a(e_1)) = d(a,1) e_1 when λ_1 = 1
        let back = iota_upper_a(&sec, &img).unwrap();
        assert_eq!(back.coords, vec![c(2.0, 0.0), ZERO]);
    }

    #[test]
    fn pi_on_single_unit_block() {
        let sec = sector(&[1.0]);
        let a = label(&[1]);
        let s = HomSpace::new(a.clone(), a.clone(), vec![CMat::from_element(1, 1, c(0.3, -2.0))]).unwrap();
        assert_eq!(pi_formula(&sec, &a, &s).unwrap(), s);
        assert!(pi_basis(&sec, &a, &s, None, &tol()).unwrap().max_abs_diff(&s) < 1e-15);
    }

    #[test]
    fn pi_with_disjoint_supports_is_zero() {
        let sec = sector(&[1.0, 2.0]);
        let a = label(&[2, 0]);
        let b = label(&[0, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = HomSpace::random(&mut rng, &a, &a);
        let p = pi_basis(&sec, &b, &s, None, &tol()).unwrap();
        assert_eq!(p, HomSpace::zero(&b, &b));
        assert!(check_sewing(&sec, &a, &b, &tol(), 0).unwrap().passed());
    }

    #[test]
    fn cardy_on_mixed_weights() {
        let sec = ClosedSector::new(vec![ONE, c(4.0, 0.0)], Some(vec![ONE, c(2.0, 0.0)]), &tol()).unwrap();
        let report = check_cardy(&sec, &label(&[2, 1]), &label(&[1, 3]), &tol()).unwrap();
        assert!(report.passed());
        assert!(report.max_residual() < 1e-10);
        assert!(check_cardy(&sec, &label(&[2, 1]), &label(&[0, 0]), &tol())
            .unwrap()
            .passed());
    }

    #[test]
    fn adjoint_reduces_to_root_squared() {
        // X = e_i, σ = identity: θ(ι^a(σ) e_i) = d θ(e_i)/λ_i and θ_a(ι_a(e_i)) = λ_i d
        let sec = sector(&[3.0, -2.0]);
        let a = label(&[2, 1]);
        let lhs = sec.theta(
            &iota_upper_a(&sec, &HomSpace::identity(&a))
                .unwrap()
                .product(&ClosedState::idempotent(2, 1)),
        );
        let rhs = theta_a(&sec, &iota_a(&sec, &a, &ClosedState::idempotent(2, 1)).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
        assert!(check_adjoint(&sec, &a, &tol(), 3).unwrap().passed());
    }

    #[test]
    fn centrality_with_unit_and_idempotent() {
        let sec = sector(&[1.0, 5.0]);
        let a = label(&[2, 1]);
        let b = label(&[1, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = HomSpace::random(&mut rng, &a, &b);
        let e0 = ClosedState::idempotent(2, 0);
        let lhs = compose(&iota_a(&sec, &a, &e0).unwrap(), &s).unwrap();
        let rhs = compose(&s, &iota_a(&sec, &b, &e0).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(lhs.blocks[0], s.blocks[0]);
        assert_eq!(lhs.blocks[1], CMat::zeros(2, 1));
        assert!(check_centrality(&sec, &a, &b, &tol(), 0).unwrap().passed());
    }

    #[test]
    fn direct_sums_and_tensors() {
        let a = label(&[1, 0]);
        let b = label(&[0, 2]);
        assert_eq!(a.direct_sum(&b).unwrap(), label(&[1, 2]));
        assert_eq!(a.direct_sum(&BraneLabel::zero(2)).unwrap(), a);
        let sec = sector(&[2.0, 0.5]);
        let report = check_additivity(&sec, &label(&[1, 2]), &label(&[2, 1]), &label(&[1, 1]), &tol(), 4).unwrap();
        assert!(report.passed(), "{report:?}");

        let a = label(&[1, 2]);
        let (t3, rec) = tensor_label(3, &a, &label(&[2, 2]));
        assert_eq!(t3, label(&[3, 6]));
        assert!(rec.passed());
        assert_eq!(tensor_label(1, &a, &a).0, a);
        assert!(tensor_label(0, &a, &a).0.is_zero());
        assert_eq!(a.tensor_ranks(&[2, 0]).unwrap(), label(&[2, 0]));
    }

    #[test]
    fn splitting_idempotents() {
        let a = label(&[2, 1]);
        assert_eq!(
            split_idempotent(&HomSpace::identity(&a), &tol()).unwrap(),
            (BraneLabel::zero(2), a.clone())
        );
        assert_eq!(
            split_idempotent(&HomSpace::zero(&a, &a), &tol()).unwrap(),
            (a.clone(), BraneLabel::zero(2))
        );
        let mut p = HomSpace::zero(&a, &a);
        p.blocks[0][(0, 0)] = ONE;
        let (k, i) = split_idempotent(&p, &tol()).unwrap();
        assert_eq!((k.dims[0], i.dims[0]), (1, 1));
        assert_eq!(k.direct_sum(&i).unwrap(), a);
        p.blocks[0][(0, 1)] = c(0.0, 1.0);
        p.blocks[0][(1, 1)] = c(2.0, 0.0);
        assert!(matches!(split_idempotent(&p, &tol()), Err(Error::NotIdempotent(_))));
    }

    #[test]
    fn generators_decompose_labels() {
        let sec = sector(&[1.0, 1.0]);
        let labels = vec![label(&[2, 1]), label(&[0, 3]), label(&[1, 1])];
        let (gens, report) = generator_labels(&sec, &labels).unwrap();
        assert_eq!(gens, vec![label(&[1, 0]), label(&[0, 1])]);
        assert!(report.passed());
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert_eq!(
            ClosedSector::new(vec![ONE, ZERO], None, &tol()),
            Err(Error::DegenerateTrace { index: 1 })
        );
        assert!(matches!(
            ClosedSector::new(vec![c(4.0, 0.0)], Some(vec![c(3.0, 0.0)]), &tol()),
            Err(Error::InvalidRoot { index: 0, .. })
        ));
        let sec = ClosedSector::new(vec![c(4.0, 0.0)], Some(vec![c(-2.0, 0.0)]), &tol()).unwrap();
        assert_eq!(sec.roots()[0], c(-2.0, 0.0));
    }

    #[test]
    fn endomorphism_algebra_of_multiplicity_free_label() {
        let sec = sector(&[2.0, 3.0, 0.5]);
        let a = label(&[1, 0, 1]);
        let alg = endomorphism_algebra(&sec, &a).unwrap();
        assert!(alg.validate(&tol()).passed());
        assert!(alg.is_semisimple(&tol()).is_semisimple());
        let big = label(&[2, 1, 0]);
        assert_eq!(center_dimension(&sec, &big, &tol()).unwrap(), 2);
        let alg = endomorphism_algebra(&sec, &big).unwrap();
        let report = alg.validate(&tol());
        assert!(!report.records[0].passed(), "M_2 is not commutative");
        assert!(report.records[1].passed(), "but it is associative");
    }

    #[test]
    fn json_system_parses() {
        let text =
            r#"{"weights": [[1,0],[4,0]], "roots": [[1,0],[-2,0]], "labels": [{"dims": [2,1]}, {"dims": [1,3]}]}"#;
        let sys: BraneSystemJson = serde_json::from_str(text).unwrap();
        let sec = sys.sector.to_sector(&tol()).unwrap();
        assert_eq!(sec.roots()[1], c(-2.0, 0.0));
        assert_eq!(sys.labels[1].dims, vec![1, 3]);
        let m: MorphismJson = serde_json::from_str(r#"{"blocks": [[[[1,0]],[[0,1]]], []]}"#).unwrap();
        let h = m.to_morphism(&label(&[1, 0]), &label(&[2, 0])).unwrap();
        assert_eq!(h.blocks[0][(1, 0)], c(0.0, 1.0));
    }
}
