//! Lamé parameter vectors, the admissible parameter set and the
//! logarithmic modulus of continuity.
//!
//! A parameter vector stores `N` pairs `(λ_j, μ_j)`, one per subdomain, and
//! is laid out as `(λ_1, …, λ_N, μ_1, …, μ_N)` whenever it is flattened.

mod modulus;
mod tensor;

pub use modulus::{propbv_constant, PropBvInputs, SigmaModulus};
pub use tensor::{poisson_bounds, poisson_ratio, IsotropicTensor};

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Piecewise-constant Lamé parameters, one pair per subdomain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LameVector {
    lambdas: Vec<f64>,
    mus: Vec<f64>,
}

impl LameVector {
    pub fn new(lambdas: Vec<f64>, mus: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return invalid("a Lamé vector needs at least one subdomain");
        }
        if lambdas.len() != mus.len() {
            return invalid(format!(
                "{} lambdas but {} mus",
                lambdas.len(),
                mus.len()
            ));
        }
        if lambdas.iter().chain(&mus).any(|v| !v.is_finite()) {
            return invalid("Lamé parameters must be finite");
        }
        Ok(Self { lambdas, mus })
    }

    /// Builds a vector from the flat layout `(λ_1..λ_N, μ_1..μ_N)`.
    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if values.len() % 2 != 0 {
            return invalid("flat Lamé vector must have even length");
        }
        let n = values.len() / 2;
        Self::new(values[..n].to_vec(), values[n..].to_vec())
    }

    /// The same pair `(λ, μ)` on every one of `n` subdomains.
    pub fn uniform(n: usize, lambda: f64, mu: f64) -> Result<Self> {
        Self::new(vec![lambda; n], vec![mu; n])
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn mus(&self) -> &[f64] {
        &self.mus
    }

    /// Tensor of subdomain `j` (zero based).
    pub fn tensor(&self, j: usize) -> IsotropicTensor {
        IsotropicTensor::new(self.lambdas[j], self.mus[j])
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.lambdas.iter().chain(&self.mus).copied().collect()
    }

    /// Number of scalar parameters, `2N`.
    pub fn dim(&self) -> usize {
        2 * self.len()
    }

    /// `max_j max(|λ_j|, |μ_j|)`.
    pub fn norm_inf(&self) -> f64 {
        self.lambdas
            .iter()
            .chain(&self.mus)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dist_inf(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "Lamé vectors of different length");
        self.to_flat()
            .iter()
            .zip(other.to_flat())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            lambdas: self.lambdas.iter().map(|v| c * v).collect(),
            mus: self.mus.iter().map(|v| c * v).collect(),
        }
    }

    /// `self + t·dir`, with `dir` in the flat layout.
    pub fn offset(&self, dir: &[f64], t: f64) -> Self {
        assert_eq!(dir.len(), self.dim());
        let n = self.len();
        Self {
            lambdas: (0..n).map(|j| self.lambdas[j] + t * dir[j]).collect(),
            mus: (0..n).map(|j| self.mus[j] + t * dir[n + j]).collect(),
        }
    }

    /// Membership in the open set `μ_j > 0, 2μ_j + 3λ_j > 0`.
    pub fn in_open_set(&self) -> bool {
        self.lambdas
            .iter()
            .zip(&self.mus)
            .all(|(&l, &m)| m > 0.0 && 2.0 * m + 3.0 * l > 0.0)
    }
}

/// The a-priori constants `α0 ∈ (0,1)` and `β0 ∈ (0,2)` defining the compact
/// parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleBox {
    pub alpha0: f64,
    pub beta0: f64,
}

impl Default for AdmissibleBox {
    fn default() -> Self {
        Self {
            alpha0: 0.5,
            beta0: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Constraint {
    MuLower,
    MuUpper,
    LambdaUpper,
    Convexity,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::MuLower => "mu lower",
            Constraint::MuUpper => "mu upper",
            Constraint::LambdaUpper => "lambda upper",
            Constraint::Convexity => "convexity",
        })
    }
}

/// A violated constraint on subdomain `subdomain` (one based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub subdomain: usize,
    pub constraint: Constraint,
}

impl AdmissibleBox {
    pub fn new(alpha0: f64, beta0: f64) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0 < 1.0) {
            return invalid(format!("alpha0 = {alpha0} outside (0,1)"));
        }
        if !(beta0 > 0.0 && beta0 < 2.0) {
            return invalid(format!("beta0 = {beta0} outside (0,2)"));
        }
        Ok(Self { alpha0, beta0 })
    }

    pub fn mu_min(&self) -> f64 {
        self.alpha0
    }

    pub fn mu_max(&self) -> f64 {
        1.0 / self.alpha0
    }

    pub fn lambda_max(&self) -> f64 {
        1.0 / self.alpha0
    }

    /// Lower bound on `λ` implied by strong convexity at shear modulus `mu`.
    pub fn lambda_min(&self, mu: f64) -> f64 {
        (self.beta0 - 2.0 * mu) / 3.0
    }

    /// Every violated scalar inequality, in subdomain order.
    pub fn violations(&self, l: &LameVector) -> Vec<Violation> {
        let mut out = Vec::new();
        for (j, (&lam, &mu)) in l.lambdas().iter().zip(l.mus()).enumerate() {
            let mut push = |constraint| {
                out.push(Violation {
                    subdomain: j + 1,
                    constraint,
                })
            };
            if mu < self.mu_min() {
                push(Constraint::MuLower);
            }
            if mu > self.mu_max() {
                push(Constraint::MuUpper);
            }
            if lam > self.lambda_max() {
                push(Constraint::LambdaUpper);
            }
            if 2.0 * mu + 3.0 * lam < self.beta0 {
                push(Constraint::Convexity);
            }
        }
        out
    }

    pub fn contains(&self, l: &LameVector) -> bool {
        self.violations(l).is_empty()
    }

    /// Uniform draw of `μ_j` in `[α0, 1/α0]`, then `λ_j` in
    /// `[(β0 − 2μ_j)/3, 1/α0]`. Every draw is admissible.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> LameVector {
        let mut lambdas = Vec::with_capacity(n);
        let mut mus = Vec::with_capacity(n);
        for _ in 0..n {
            let mu = rng.gen_range(self.mu_min()..=self.mu_max());
            let lam = rng.gen_range(self.lambda_min(mu)..=self.lambda_max());
            lambdas.push(lam);
            mus.push(mu);
        }
        LameVector { lambdas, mus }
    }

    /// Clips each coordinate into the box, then restores convexity by raising
    /// `λ_j` where `2μ_j + 3λ_j < β0`.
    pub fn clip(&self, l: &LameVector) -> LameVector {
        let mus: Vec<f64> = l
            .mus()
            .iter()
            .map(|m| m.clamp(self.mu_min(), self.mu_max()))
            .collect();
        let lambdas = l
            .lambdas()
            .iter()
            .zip(&mus)
            .map(|(&lam, &mu)| lam.min(self.lambda_max()).max(self.lambda_min(mu)))
            .collect();
        LameVector { lambdas, mus }
    }
}

/// Admissibility check returning the verdict and the violated constraints.
pub fn check_admissible(l: &LameVector, bx: &AdmissibleBox) -> (bool, Vec<Violation>) {
    let v = bx.violations(l);
    (v.is_empty(), v)
}
