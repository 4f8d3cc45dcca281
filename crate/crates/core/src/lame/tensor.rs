use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::AdmissibleBox;
use crate::error::{Error, Result};

/// `ℂ = λ I⊗I + 2μ 𝕀_sym`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropicTensor {
    pub lambda: f64,
    pub mu: f64,
}

impl IsotropicTensor {
    pub fn new(lambda: f64, mu: f64) -> Self {
        Self { lambda, mu }
    }

    /// `ℂA = λ tr(Â) I + 2μ Â` with `Â` the symmetric part of `A`.
    pub fn apply(&self, a: &Matrix3<f64>) -> Matrix3<f64> {
        let sym = (a + a.transpose()) * 0.5;
        Matrix3::identity() * (self.lambda * sym.trace()) + sym * (2.0 * self.mu)
    }

    /// `ℂA : B`.
    pub fn contract(&self, a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
        self.apply(a).component_mul(b).sum()
    }

    pub fn poisson_ratio(&self) -> Result<f64> {
        poisson_ratio(self.lambda, self.mu)
    }

    pub fn is_strongly_convex(&self, bx: &AdmissibleBox) -> bool {
        self.mu >= bx.alpha0 && 2.0 * self.mu + 3.0 * self.lambda >= bx.beta0
    }
}

/// `ν = λ / (2(λ + μ))`.
pub fn poisson_ratio(lambda: f64, mu: f64) -> Result<f64> {
    let den = 2.0 * (lambda + mu);
    if den == 0.0 || !den.is_finite() {
        return Err(Error::Domain(format!(
            "Poisson ratio undefined for lambda + mu = {}",
            lambda + mu
        )));
    }
    Ok(lambda / den)
}

/// `[−1 + β0α0/4, 1/2 − α0²/4]`, the range of `ν` over strongly convex tensors.
pub fn poisson_bounds(bx: &AdmissibleBox) -> (f64, f64) {
    (
        -1.0 + bx.beta0 * bx.alpha0 / 4.0,
        0.5 - bx.alpha0 * bx.alpha0 / 4.0,
    )
}
