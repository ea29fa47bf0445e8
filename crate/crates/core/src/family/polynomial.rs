use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::{is_finite, JsonC64, C64, ZERO};

/// Multivariate polynomial with complex coefficients, keyed by exponent vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, C64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, C64)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (monomial, coeff) in terms {
            if monomial.len() != nvars {
                return Err(Error::InvalidPolynomial(format!(
                    "monomial {monomial:?} has {} exponents, expected {nvars}",
                    monomial.len()
                )));
            }
            if !is_finite(coeff) {
                return Err(Error::NonFinite(format!("coefficient of {monomial:?}")));
            }
            *p.terms.entry(monomial).or_insert(ZERO) += coeff;
        }
        p.terms.retain(|_, c| *c != ZERO);
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], C64)> {
        self.terms.iter().map(|(m, c)| (m.as_slice(), *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    /// Exact partial derivative in variable `var`.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(var < self.nvars, "variable index out of range");
        let mut out = Self::zero(self.nvars);
        for (m, &c) in &self.terms {
            let e = m[var];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2[var] = e - 1;
            *out.terms.entry(m2).or_insert(ZERO) += c * e as f64;
        }
        out.terms.retain(|_, c| *c != ZERO);
        out
    }

    pub fn eval(&self, point: &[C64]) -> C64 {
        assert_eq!(point.len(), self.nvars, "point has wrong dimension");
        self.terms
            .iter()
            .map(|(m, &c)| m.iter().zip(point).fold(c, |acc, (&e, &x)| acc * x.powu(e)))
            .sum()
    }
}

/// `{"coeff": [re, im] | re, "monomial": [exponents]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermJson {
    pub coeff: JsonC64,
    pub monomial: Vec<u32>,
}

impl Polynomial {
    pub fn from_json(nvars: usize, terms: &[TermJson]) -> Result<Self> {
        Self::from_terms(nvars, terms.iter().map(|t| (t.monomial.clone(), t.coeff.0)))
    }

    pub fn to_json(&self) -> Vec<TermJson> {
        self.terms
            .iter()
            .map(|(m, &c)| TermJson {
                coeff: JsonC64(c),
                monomial: m.clone(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    #[test]
    fn derivative_and_eval() {
        // p = t0^2 t1 / 2 + t1^4 / 24
        let p = Polynomial::from_terms(2, [(vec![2, 1], c(0.5, 0.0)), (vec![0, 4], c(1.0 / 24.0, 0.0))]).unwrap();
        let d111 = p.derivative(1).derivative(1).derivative(1);
        assert_eq!(d111.terms().collect::<Vec<_>>(), vec![(&[0u32, 1][..], c(1.0, 0.0))]);
        let d001 = p.derivative(0).derivative(0).derivative(1);
        assert_eq!(d001.eval(&[c(3.0, 1.0), c(-2.0, 0.5)]), c(1.0, 0.0));
        assert!(p.derivative(0).derivative(0).derivative(0).is_zero());
        assert_eq!(p.degree(), 4);
        let t = [c(0.0, 1.0), c(2.0, 0.0)];
        assert!((p.eval(&t) - (c(-1.0, 0.0) + c(16.0 / 24.0, 0.0))).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_monomials() {
        assert!(Polynomial::from_terms(2, [(vec![1], c(1.0, 0.0))]).is_err());
        assert!(Polynomial::from_terms(1, [(vec![1], c(f64::NAN, 0.0))]).is_err());
    }
}
