//! Kapranov–Voevodsky 2-vector spaces up to isomorphism: morphisms
//! `Vectⁿ → Vectᵐ` are `m × n` matrices of vector spaces, recorded here by
//! their dimension matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "DimMatrixJson", into = "DimMatrixJson")]
pub struct DimMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DimMatrixJson {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<u64>>,
}

impl TryFrom<DimMatrixJson> for DimMatrix {
    type Error = Error;

    fn try_from(j: DimMatrixJson) -> Result<Self> {
        if j.entries.len() != j.rows || j.entries.iter().any(|r| r.len() != j.cols) {
            return Err(Error::ShapeMismatch(format!(
                "entries do not form a {}x{} matrix",
                j.rows, j.cols
            )));
        }
        Ok(DimMatrix::from_rows(j.rows, j.cols, &j.entries))
    }
}

impl From<DimMatrix> for DimMatrixJson {
    fn from(m: DimMatrix) -> Self {
        DimMatrixJson {
            rows: m.rows,
            cols: m.cols,
            entries: m.to_rows(),
        }
    }
}

/// Object `(V_1, ..., V_n)` of `Vectⁿ`, by dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwoVectorObject {
    pub dims: Vec<u64>,
}

/// Why a dimension matrix cannot be an equivalence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Obstruction {
    NonSquare {
        rows: usize,
        cols: usize,
    },
    /// `det d(A) ∉ {±1}`, so `Σ_k a_ik b_kj = δ_ij` has no integer solution.
    Determinant {
        det: i128,
    },
    /// The unique solution of `Σ_k a_ik b_kj = δ_ij` has `b_ij < 0`.
    NegativeInverseEntry {
        row: usize,
        col: usize,
        value: i128,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    /// `inverse` satisfies `A·B = B·A = I`; `permutation[i]` is the column of the 1 in row `i`.
    Equivalence {
        inverse: DimMatrix,
        permutation: Vec<usize>,
    },
    NotEquivalence(Obstruction),
}

impl Equivalence {
    pub fn is_equivalence(&self) -> bool {
        matches!(self, Equivalence::Equivalence { .. })
    }
}

impl DimMatrix {
    pub fn from_rows(rows: usize, cols: usize, entries: &[Vec<u64>]) -> Self {
        assert!(entries.len() == rows && entries.iter().all(|r| r.len() == cols));
        DimMatrix {
            rows,
            cols,
            entries: entries.iter().flatten().copied().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        DimMatrix { rows, cols, entries }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| u64::from(i == j))
    }

    /// Row `i` has its single 1 in column `perm[i]`.
    pub fn permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        Self::from_fn(n, n, |i, j| u64::from(perm[i] == j))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.entries
            .chunks(self.cols.max(1))
            .take(self.rows)
            .map(<[u64]>::to_vec)
            .collect()
    }

    /// `AV = (Σ_j V_{1j} ⊗ V_j, ..., Σ_j V_{mj} ⊗ V_j)`.
    pub fn apply(&self, v: &TwoVectorObject) -> Result<TwoVectorObject> {
        if v.dims.len() != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix applied to an object of rank {}",
                self.rows,
                self.cols,
                v.dims.len()
            )));
        }
        Ok(TwoVectorObject {
            dims: (0..self.rows)
                .map(|i| (0..self.cols).map(|j| self.get(i, j) * v.dims[j]).sum())
                .collect(),
        })
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &DimMatrix) -> Result<DimMatrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(DimMatrix::from_fn(self.rows, other.cols, |i, k| {
            (0..self.cols).map(|j| self.get(i, j) * other.get(j, k)).sum()
        }))
    }

    /// Exact determinant (square matrices only).
    pub fn determinant(&self) -> Option<i128> {
        (self.rows == self.cols).then(|| det_bareiss(self.signed()))
    }

    fn signed(&self) -> Vec<Vec<i128>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| i128::from(self.get(i, j))).collect())
            .collect()
    }

    /// Permutation column of each row, if `self` is a permutation matrix.
    pub fn as_permutation(&self) -> Option<Vec<usize>> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut perm = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for i in 0..n {
            let ones: Vec<usize> = (0..n).filter(|&j| self.get(i, j) != 0).collect();
            match ones[..] {
                [j] if self.get(i, j) == 1 && !seen[j] => {
                    seen[j] = true;
                    perm.push(j);
                }
                _ => return None,
            }
        }
        Some(perm)
    }

    /// A square matrix is an equivalence iff it is a permutation matrix; the
    /// certificate is its transpose.
    pub fn is_equivalence(&self) -> Equivalence {
        if self.rows != self.cols {
            return Equivalence::NotEquivalence(Obstruction::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if let Some(perm) = self.as_permutation() {
            let inverse = DimMatrix::from_fn(self.rows, self.cols, |i, j| self.get(j, i));
            return Equivalence::Equivalence {
                inverse,
                permutation: perm,
            };
        }
        let a = self.signed();
        let det = det_bareiss(a.clone());
        if det.abs() != 1 {
            return Equivalence::NotEquivalence(Obstruction::Determinant { det });
        }
        // the integer system has the unique solution B = A⁻¹ = det · adj(A)
        let n = self.rows;
        for i in 0..n {
            for j in 0..n {
                let value = det * cofactor(&a, j, i);
                if value < 0 {
                    return Equivalence::NotEquivalence(Obstruction::NegativeInverseEntry { row: i, col: j, value });
                }
            }
        }
        unreachable!("a nonnegative integer matrix with nonnegative integer inverse is a permutation")
    }
}

fn cofactor(a: &[Vec<i128>], row: usize, col: usize) -> i128 {
    let minor: Vec<Vec<i128>> = a
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|&(j, _)| j != col)
                .map(|(_, &x)| x)
                .collect()
        })
        .collect();
    let sign = if (row + col).is_multiple_of(2) { 1 } else { -1 };
    sign * det_bareiss(minor)
}

/// Fraction-free Gaussian elimination.
fn det_bareiss(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1;
    let mut prev = 1;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&p| m[p][k] != 0) else {
                return 0;
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[u64]]) -> DimMatrix {
        let v: Vec<Vec<u64>> = rows.iter().map(|r| r.to_vec()).collect();
        DimMatrix::from_rows(v.len(), v[0].len(), &v)
    }

    #[test]
    fn apply_examples() {
        let v = TwoVectorObject { dims: vec![3, 1] };
        assert_eq!(DimMatrix::identity(2).apply(&v).unwrap(), v);
        assert_eq!(m(&[&[1, 1], &[0, 2]]).apply(&v).unwrap().dims, vec![4, 2]);
        assert_eq!(m(&[&[0, 0], &[0, 0]]).apply(&v).unwrap().dims, vec![0, 0]);
        assert!(matches!(m(&[&[1, 1, 1]]).apply(&v), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn compose_examples() {
        let a = m(&[&[1, 1], &[1, 2]]);
        assert_eq!(DimMatrix::identity(2).compose(&a).unwrap(), a);
        assert_eq!(a.compose(&m(&[&[2], &[1]])).unwrap(), m(&[&[3], &[4]]));
        assert!(a.compose(&m(&[&[1, 2, 3]])).is_err());
    }

    #[test]
    fn determinants() {
        assert_eq!(m(&[&[1, 1], &[0, 1]]).determinant(), Some(1));
        assert_eq!(m(&[&[0, 1], &[1, 0]]).determinant(), Some(-1));
        assert_eq!(m(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]).determinant(), Some(18));
        assert_eq!(m(&[&[0, 1, 1], &[1, 0, 1], &[1, 1, 0]]).determinant(), Some(2));
        assert_eq!(m(&[&[1, 2]]).determinant(), None);
    }

    #[test]
    fn equivalences_of_rank_two() {
        for a in [m(&[&[1, 0], &[0, 1]]), m(&[&[0, 1], &[1, 0]])] {
            let Equivalence::Equivalence { inverse, .. } = a.is_equivalence() else {
                panic!("{a:?} should be an equivalence");
            };
            assert_eq!(a.compose(&inverse).unwrap(), DimMatrix::identity(2));
            assert_eq!(inverse.compose(&a).unwrap(), DimMatrix::identity(2));
        }
        for k in 1..=5u64 {
            let ak = m(&[&[1, 1], &[k - 1, k]]);
            assert_eq!(ak.determinant(), Some(1));
            assert!(matches!(
                ak.is_equivalence(),
                Equivalence::NotEquivalence(Obstruction::NegativeInverseEntry { .. })
            ));
        }
        assert_eq!(
            m(&[&[1, 0, 0], &[0, 1, 0]]).is_equivalence(),
            Equivalence::NotEquivalence(Obstruction::NonSquare { rows: 2, cols: 3 })
        );
        assert_eq!(
            m(&[&[2, 0], &[0, 1]]).is_equivalence(),
            Equivalence::NotEquivalence(Obstruction::Determinant { det: 2 })
        );
    }

    #[test]
    fn json_form() {
        let a: DimMatrix = serde_json::from_str(r#"{"rows": 2, "cols": 1, "entries": [[3], [4]]}"#).unwrap();
        assert_eq!(a, m(&[&[3], &[4]]));
        assert!(serde_json::from_str::<DimMatrix>(r#"{"rows": 2, "cols": 2, "entries": [[3], [4]]}"#).is_err());
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(text, r#"{"rows":2,"cols":1,"entries":[[3],[4]]}"#);
    }
}
