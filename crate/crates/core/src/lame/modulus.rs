use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const INV_E: f64 = 1.0 / E;

/// The logarithmic modulus
///
/// ```text
/// σ(t) = |log t|^(−1/(8δ))   for 0 < t < 1/e
/// σ(t) = t − 1/e + 1         for t ≥ 1/e
/// ```
///
/// extended by `σ(0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaModulus {
    delta: f64,
}

impl SigmaModulus {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return invalid(format!("delta = {delta} outside (0,1)"));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("sigma undefined at t = {t}")));
        }
        Ok(if t == 0.0 {
            0.0
        } else if t < INV_E {
            t.ln().abs().powf(-1.0 / (8.0 * self.delta))
        } else {
            t - INV_E + 1.0
        })
    }

    /// `σ` applied `n` times.
    pub fn compose(&self, t: f64, n: usize) -> Result<f64> {
        if n == 0 {
            return invalid("composition count must be at least 1");
        }
        (0..n).try_fold(t, |acc, _| self.eval(acc))
    }

    /// Inverse of `σ` on `[0, ∞)`. Both branches invert in closed form:
    /// `t = exp(−s^(−8δ))` below 1 and `t = s − 1 + 1/e` above.
    pub fn inverse(&self, s: f64) -> Result<f64> {
        if s.is_nan() || s < 0.0 {
            return Err(Error::Domain(format!("sigma inverse undefined at {s}")));
        }
        Ok(if s == 0.0 {
            0.0
        } else if s < 1.0 {
            (-s.powf(-8.0 * self.delta)).exp()
        } else {
            s - 1.0 + INV_E
        })
    }

    /// Inverse of `σ^n`.
    pub fn compose_inverse(&self, s: f64, n: usize) -> Result<f64> {
        if n == 0 {
            return invalid("composition count must be at least 1");
        }
        (0..n).try_fold(s, |acc, _| self.inverse(acc))
    }
}

/// Inputs of the explicit Lipschitz-stability constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropBvInputs {
    /// Distance of the compact set from the complement of the open set.
    pub m1: f64,
    /// Radius of a ball containing the compact set.
    pub m2: f64,
    /// Lower bound of the derivative on unit directions.
    pub q0: f64,
    /// Lipschitz constant of the derivative.
    pub lipschitz_fprime: f64,
    /// Constant in front of `σ^N` in the inverse's modulus of continuity.
    pub c_star: f64,
    pub delta: f64,
    pub n: usize,
}

/// `C = max{2M1/σ2⁻¹(δ1), 2/q0}` with `σ2 = C∗σ^N`, `δ0 = q0/(2C_F′)` and
/// `δ1 = min{δ0, M2}/2`.
///
/// Fails with [`Error::Unrepresentable`] when `σ2⁻¹(δ1)` underflows, which
/// happens quickly for `N ≥ 2` because each inversion is doubly exponential.
pub fn propbv_constant(p: &PropBvInputs) -> Result<f64> {
    if p.q0 <= 0.0 {
        return invalid("q0 must be positive (derivative not injective)");
    }
    for (name, v) in [
        ("M1", p.m1),
        ("M2", p.m2),
        ("C_F'", p.lipschitz_fprime),
        ("C_*", p.c_star),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return invalid(format!("{name} must be positive and finite, got {v}"));
        }
    }
    let sigma = SigmaModulus::new(p.delta)?;
    let delta0 = p.q0 / (2.0 * p.lipschitz_fprime);
    let delta1 = 0.5 * delta0.min(p.m2);
    let inv = sigma.compose_inverse(delta1 / p.c_star, p.n)?;
    if inv <= 0.0 || !inv.is_finite() {
        return Err(Error::Unrepresentable(format!(
            "sigma^{} inverse of {:e} underflows",
            p.n,
            delta1 / p.c_star
        )));
    }
    Ok((2.0 * p.m1 / inv).max(2.0 / p.q0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Independent inverse by bisection on the increasing function σ.
    fn bisect_inverse(sigma: &SigmaModulus, s: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while sigma.eval(hi).unwrap() < s {
            hi *= 2.0;
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if sigma.eval(mid).unwrap() < s {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn sigma_examples() {
        let s = SigmaModulus::new(0.3).unwrap();
        assert_relative_eq!(s.eval(INV_E).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(s.eval(INV_E + 1.0).unwrap(), 2.0, epsilon = 1e-15);
        let s = SigmaModulus::new(0.5).unwrap();
        assert_relative_eq!(s.eval((-256.0f64).exp()).unwrap(), 0.25, epsilon = 1e-12);
        assert_eq!(s.eval(0.0).unwrap(), 0.0);
        assert!(s.eval(-1e-3).is_err());
        assert!(SigmaModulus::new(1.0).is_err());
    }

    #[test]
    fn sigma_is_continuous_at_one_over_e() {
        let s = SigmaModulus::new(0.7).unwrap();
        let left = s.eval(INV_E * (1.0 - 1e-12)).unwrap();
        let right = s.eval(INV_E).unwrap();
        assert!((left - right).abs() < 1e-11);
    }

    #[test]
    fn sigma_increasing_and_vanishing() {
        let s = SigmaModulus::new(0.4).unwrap();
        let mut prev = 0.0;
        for i in 1..2000 {
            let t = i as f64 * 1e-3;
            let v = s.eval(t).unwrap();
            assert!(v > prev);
            prev = v;
        }
        for n in 1..=5 {
            let vals: Vec<f64> = (1..=12)
                .map(|k| s.compose(10f64.powi(-k), n).unwrap())
                .collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]), "n={n}: {vals:?}");
        }
    }

    #[test]
    fn closed_form_inverse_matches_bisection() {
        for delta in [0.2, 0.5, 0.9] {
            let s = SigmaModulus::new(delta).unwrap();
            for target in [0.05, 0.25, 0.6, 0.99, 1.0, 1.7, 4.0] {
                let a = s.inverse(target).unwrap();
                if target < 1.0 && target.powf(-8.0 * delta) > 700.0 {
                    // exp(-700) is the edge of the f64 range
                    assert!(a < 1e-300);
                    continue;
                }
                let b = bisect_inverse(&s, target);
                assert_relative_eq!(a, b, max_relative = 1e-10);
                assert_relative_eq!(s.eval(a).unwrap(), target, max_relative = 1e-12);
            }
        }
    }

    fn base() -> PropBvInputs {
        PropBvInputs {
            m1: 1.0,
            m2: 1.0,
            q0: 2.0,
            lipschitz_fprime: 1.0,
            c_star: 2.0,
            delta: 0.5,
            n: 1,
        }
    }

    #[test]
    fn propbv_example() {
        // δ0 = q0/(2 C_F') = 1, δ1 = min(1, 1)/2 = 0.5, σ⁻¹(0.5/C∗)
        let p = base();
        let s = SigmaModulus::new(0.5).unwrap();
        let expected = (2.0 / bisect_inverse(&s, 0.5 / p.c_star)).max(1.0);
        assert_relative_eq!(propbv_constant(&p).unwrap(), expected, max_relative = 1e-9);
    }

    #[test]
    fn propbv_structure() {
        let p = base();
        let c1 = propbv_constant(&p).unwrap();
        let c2 = propbv_constant(&PropBvInputs { m1: 2.0, ..p }).unwrap();
        // first branch dominates here and is linear in M1
        assert_relative_eq!(c2, 2.0 * c1, max_relative = 1e-14);

        let mut last = f64::INFINITY;
        for q0 in [0.01, 0.1, 0.5, 1.0, 2.0, 10.0] {
            let c = propbv_constant(&PropBvInputs { q0, delta: 0.1, ..p }).unwrap();
            assert!(c <= last);
            last = c;
        }
        assert!(propbv_constant(&PropBvInputs { q0: 0.0, ..p }).is_err());
        assert!(matches!(
            propbv_constant(&PropBvInputs { n: 3, ..p }),
            Err(Error::Unrepresentable(_))
        ));
    }
}
