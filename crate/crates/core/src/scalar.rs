//! Complex scalars, tolerances and the JSON encoding of complex numbers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Numerical thresholds shared by every check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub eps_structural: f64,
    pub eps_rank: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            eps_structural: 1e-9,
            eps_rank: 1e-8,
        }
    }
}

impl Tolerance {
    pub fn new(eps_structural: f64, eps_rank: f64) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(eps_structural) || !ok(eps_rank) {
            return Err(Error::InvalidTolerance {
                eps_structural,
                eps_rank,
            });
        }
        Ok(Tolerance {
            eps_structural,
            eps_rank,
        })
    }

    /// `|x - y| <= eps * (1 + max(|x|, |y|))`
    pub fn close(&self, x: C64, y: C64) -> bool {
        relative_gap(x, y) <= self.eps_structural
    }
}

/// Scale-aware distance used by all structural comparisons.
#[inline]
pub fn relative_gap(x: C64, y: C64) -> f64 {
    (x - y).norm() / (1.0 + x.norm().max(y.norm()))
}

/// Round to six decimals for canonical orderings.
#[inline]
pub(crate) fn round6(x: f64) -> i64 {
    (x * 1e6).round() as i64
}

/// JSON form of a complex number: `[re, im]`, or a bare real number on input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsonC64(pub C64);

impl Serialize for JsonC64 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&self.0.re)?;
        t.serialize_element(&self.0.im)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for JsonC64 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = JsonC64;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an [re, im] pair")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<JsonC64, E> {
                Ok(JsonC64(c(v, 0.0)))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<JsonC64, E> {
                Ok(JsonC64(c(v as f64, 0.0)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<JsonC64, E> {
                Ok(JsonC64(c(v as f64, 0.0)))
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<JsonC64, A::Error> {
                let re: f64 = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let im: f64 = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(JsonC64(c(re, im)))
            }
        }
        d.deserialize_any(V)
    }
}

impl From<C64> for JsonC64 {
    fn from(z: C64) -> Self {
        JsonC64(z)
    }
}

pub fn to_json_vec(v: &[C64]) -> Vec<JsonC64> {
    v.iter().copied().map(JsonC64).collect()
}

pub fn from_json_vec(v: &[JsonC64]) -> Vec<C64> {
    v.iter().map(|z| z.0).collect()
}

/// Row-major nested arrays of complex entries.
pub fn to_json_matrix(m: &CMat) -> Vec<Vec<JsonC64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| JsonC64(m[(i, j)])).collect())
        .collect()
}

/// Rejects ragged rows. `cols` is needed for matrices with zero rows.
pub fn from_json_matrix(rows: &[Vec<JsonC64>], cols: Option<usize>) -> Result<CMat> {
    let ncols = rows.first().map(|r| r.len()).or(cols).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::ShapeMismatch("ragged matrix rows".into()));
    }
    Ok(CMat::from_fn(rows.len(), ncols, |i, j| rows[i][j].0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_complex_accepts_pairs_and_reals() {
        let v: Vec<JsonC64> = serde_json::from_str("[[1.5, -2], 3, 0.25]").unwrap();
        assert_eq!(from_json_vec(&v), vec![c(1.5, -2.0), c(3.0, 0.0), c(0.25, 0.0)]);
        assert_eq!(serde_json::to_string(&JsonC64(c(1.0, -0.5))).unwrap(), "[1.0,-0.5]");
        assert!(serde_json::from_str::<JsonC64>("[1, 2, 3]").is_err());
    }

    #[test]
    fn tolerance_rejects_nonpositive() {
        assert!(Tolerance::new(0.0, 1e-8).is_err());
        assert!(Tolerance::new(1e-9, f64::NAN).is_err());
        assert!(Tolerance::new(1e-9, 1e-8).is_ok());
    }

    #[test]
    fn close_is_scale_aware() {
        let tol = Tolerance::default();
        assert!(tol.close(c(1e6, 0.0), c(1e6 + 1e-4, 0.0)));
        assert!(!tol.close(c(0.0, 0.0), c(1e-6, 0.0)));
    }
}
