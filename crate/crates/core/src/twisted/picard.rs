use super::{TwistClass, TwistedBundle};
use crate::error::{Error, Result};
use crate::scalar::Tolerance;

fn require_line(l: &TwistedBundle) -> Result<()> {
    if l.rank() != 1 {
        return Err(Error::InvalidInput(format!(
            "expected a twisted line bundle, got rank {}",
            l.rank()
        )));
    }
    Ok(())
}

/// `[𝕃]·[𝕂] = [𝕃 ⊗ 𝕂]`.
pub fn tpic_mul(l: &TwistedBundle, k: &TwistedBundle) -> Result<TwistedBundle> {
    require_line(l)?;
    require_line(k)?;
    l.tensor(k)
}

/// `[𝕃]⁻¹ = [𝕃* ⊗ L*]` with the ordinary line `L = 𝕃 ⊗ 𝕃*`.
pub fn tpic_inv(l: &TwistedBundle) -> Result<TwistedBundle> {
    require_line(l)?;
    let ordinary = l.tensor(&l.dual())?;
    l.dual().tensor(&ordinary.dual())
}

/// A fixed choice of twisted line bundle `𝕃_λ` per twist class.
#[derive(Debug, Clone, Default)]
pub struct TwistRepresentatives {
    reps: Vec<TwistedBundle>,
}

impl TwistRepresentatives {
    pub fn new(reps: Vec<TwistedBundle>) -> Result<Self> {
        for r in &reps {
            require_line(r)?;
        }
        Ok(TwistRepresentatives { reps })
    }

    pub fn reps(&self) -> &[TwistedBundle] {
        &self.reps
    }

    pub fn find(&self, twist: &TwistClass, tol: &Tolerance) -> Option<&TwistedBundle> {
        self.reps.iter().find(|r| r.twist().gap(twist) <= tol.eps_structural)
    }

    /// Every representative's dual twist also has a representative.
    pub fn closed_under_dual(&self, tol: &Tolerance) -> bool {
        self.reps.iter().all(|r| self.find(&r.twist().inv(), tol).is_some())
    }
}

/// `Ψ[𝔼] = [𝔼 ⊗ 𝕃_{λ⁻¹}]`, an ordinary bundle.
pub fn psi(e: &TwistedBundle, reps: &TwistRepresentatives, tol: &Tolerance) -> Result<TwistedBundle> {
    let rep = reps.find(&e.twist().inv(), tol).ok_or(Error::MissingRepresentative)?;
    let out = e.tensor(rep)?;
    if !out.twist().is_trivial(tol) {
        return Err(Error::InvalidInput("representative does not cancel the twist".into()));
    }
    Ok(out)
}
