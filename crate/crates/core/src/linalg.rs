//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::DVector;
use rand::Rng;

use crate::scalar::{c, CMat, C64, ZERO};

pub type CVec = DVector<C64>;

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff_slice(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// (smallest, largest) singular value; (0, 0) for an empty matrix.
pub fn singular_extremes(m: &CMat) -> (f64, f64) {
    let s = singular_values(m);
    match (s.last(), s.first()) {
        (Some(&lo), Some(&hi)) if m.nrows() == m.ncols() => (lo, hi),
        (Some(_), Some(&hi)) => (0.0, hi),
        _ => (0.0, 0.0),
    }
}

/// Numerical rank: singular values above `eps * largest`.
pub fn rank(m: &CMat, eps: f64) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > eps * top).count()
}

/// Orthonormal basis of the right null space of `m`.
pub fn nullspace(m: &CMat, eps: f64) -> Vec<CVec> {
    let n = m.ncols();
    if n == 0 {
        return Vec::new();
    }
    // pad to at least n rows so the SVD returns a full right factor
    let rows = m.nrows().max(n);
    let mut padded = CMat::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = if top == 0.0 { 0.0 } else { eps * top };
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cutoff)
        .map(|(k, _)| v_t.row(k).adjoint())
        .collect()
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() != m.ncols() {
        return None;
    }
    if m.is_empty() {
        return Some(m.clone());
    }
    m.clone().try_inverse()
}

/// Kronecker product with row-major block layout.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Row-major flattening of a matrix.
pub fn vec_rows(m: &CMat) -> CVec {
    let (r, cc) = m.shape();
    CVec::from_fn(r * cc, |k, _| m[(k / cc, k % cc)])
}

pub fn unvec_rows(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// Principal branch of the k-th root.
pub fn principal_root(z: C64, k: usize) -> C64 {
    if z == ZERO {
        return ZERO;
    }
    z.powf(1.0 / k as f64)
}

pub fn random_scalar<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_nonzero_scalar<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    loop {
        let z = random_scalar(rng);
        if z.norm() > 0.2 {
            return z;
        }
    }
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| random_scalar(rng))
}

/// Random square matrix with condition number below 1e3.
pub fn random_invertible<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    loop {
        let m = random_matrix(rng, n, n);
        let (lo, hi) = singular_extremes(&m);
        if n == 0 || lo > 1e-3 * hi {
            return m;
        }
    }
}
