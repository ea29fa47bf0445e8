//! Computation and verification of the finite-dimensional algebra behind
//! open/closed two-dimensional topological field theories.

pub mod bdr;
pub mod brane;
pub mod error;
pub mod family;
pub mod frobenius;
pub mod linalg;
pub mod nerve;
pub mod permutation;
pub mod report;
pub mod scalar;
pub mod spectral;
pub mod twisted;
pub mod two_vector;

pub use error::{Error, Result};
pub use frobenius::{FrobeniusAlgebra, IdempotentBasis, Semisimplicity, Tensor3};
pub use nerve::CechNerve;
pub use permutation::Permutation;
pub use report::{CheckRecord, CheckReport, Status};
pub use scalar::{Tolerance, C64};
