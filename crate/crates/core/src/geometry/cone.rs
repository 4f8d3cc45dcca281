use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Nested balls on the axis of the cone `C_ρ(γ3)` with vertex at the origin
/// and axis `-e3`, truncated by the cylinder of radius `ρ` and half-height
/// `ρ / tan γ3`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeChain {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub rho: f64,
    pub chi: f64,
    pub t0: f64,
    pub r: f64,
    pub k0: usize,
    pub t: f64,
    /// Depths `s_1, ..., s_{k0}`; `s[k0 - 1] == r`.
    s: Vec<f64>,
}

/// Slack in each inclusion of the chain at step `k`. An open ball sits inside
/// an open set exactly when the slack is non-negative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestingMargins {
    /// `r2(k) - |w(k+1) - w(k)| - r1(k+1)`.
    pub inner_in_middle: f64,
    /// `r3(k) - r2(k)`.
    pub middle_in_outer: f64,
    /// `dist(w(k), complement of the cone) - r3(k)`.
    pub outer_in_cone: f64,
}

impl NestingMargins {
    pub fn min(&self) -> f64 {
        self.inner_in_middle.min(self.middle_in_outer).min(self.outer_in_cone)
    }
}

impl ConeChain {
    /// Builds the chain ending at depth `r`, which must satisfy
    /// `0 < r <= χ t0`.
    pub fn new(rho: f64, gamma3: f64, r: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return invalid(format!("rho must be positive, got {rho}"));
        }
        if !(gamma3 > 0.0 && gamma3 < std::f64::consts::FRAC_PI_2) {
            return invalid(format!("gamma3 must lie in (0, pi/2), got {gamma3}"));
        }
        let sin3 = gamma3.sin();
        let (sin1, sin2) = (0.25 * sin3, 0.75 * sin3);
        let chi = (1.0 - sin2) / (1.0 - sin1);
        let t0 = rho / gamma3.tan() / (1.0 + sin3);
        if !(r > 0.0 && r <= chi * t0) {
            return invalid(format!("r = {r} outside (0, chi*t0 = {}]", chi * t0));
        }
        // largest k with chi^(k-1) t0 >= r, which keeps chi t0 <= t <= t0
        // (compared through the same expression that produces s_1)
        let mut k0 = 1usize;
        while r / chi.powi(k0 as i32) <= t0 {
            k0 += 1;
        }
        let s: Vec<f64> = (1..=k0).map(|k| r / chi.powi((k0 - k) as i32)).collect();
        Ok(Self {
            gamma1: sin1.asin(),
            gamma2: sin2.asin(),
            gamma3,
            rho,
            chi,
            t0,
            r,
            k0,
            t: s[0],
            s,
        })
    }

    /// Half-height of the truncating cylinder, `ρ / tan γ3`.
    pub fn height(&self) -> f64 {
        self.rho / self.gamma3.tan()
    }

    /// Depth `s_k` for `1 <= k <= k0`.
    pub fn depth(&self, k: usize) -> f64 {
        self.s[k - 1]
    }

    pub fn center(&self, k: usize) -> [f64; 3] {
        [0.0, 0.0, -self.depth(k)]
    }

    /// `r_i^{(k)} = s_k sin γ_i` for `i` in `1..=3`.
    pub fn radius(&self, i: usize, k: usize) -> f64 {
        let g = match i {
            1 => self.gamma1,
            2 => self.gamma2,
            3 => self.gamma3,
            _ => panic!("ball index {i} not in 1..=3"),
        };
        self.depth(k) * g.sin()
    }

    /// Distance from an axis point at depth `s` to the boundary of the
    /// truncated cone.
    fn axis_clearance(&self, s: f64) -> f64 {
        (s * self.gamma3.sin()).min(self.height() - s).min(self.rho)
    }

    /// Inclusion slacks at step `k < k0`; the last step has no successor and
    /// reports `inner_in_middle` as infinite.
    pub fn margins(&self, k: usize) -> NestingMargins {
        let inner_in_middle = if k < self.k0 {
            let gap = self.depth(k + 1) - self.depth(k);
            self.radius(2, k) - gap.abs() - self.radius(1, k + 1)
        } else {
            f64::INFINITY
        };
        NestingMargins {
            inner_in_middle,
            middle_in_outer: self.radius(3, k) - self.radius(2, k),
            outer_in_cone: self.axis_clearance(self.depth(k)) - self.radius(3, k),
        }
    }

    pub fn all_margins(&self) -> Vec<NestingMargins> {
        (1..=self.k0).map(|k| self.margins(k)).collect()
    }
}

/// `η_r = θ̄ (r/t)^{|log θ̄| / |log χ|}`.
pub fn eta_r(chain: &ConeChain, theta_bar: f64) -> Result<f64> {
    eta_at(chain.r, chain.t, chain.chi, theta_bar)
}

pub(crate) fn eta_at(r: f64, t: f64, chi: f64, theta_bar: f64) -> Result<f64> {
    if !(theta_bar > 0.0 && theta_bar < 1.0) {
        return invalid(format!("theta_bar must lie in (0,1), got {theta_bar}"));
    }
    if !(r > 0.0) || r > t {
        return invalid(format!("need 0 < r <= t, got r={r}, t={t}"));
    }
    Ok(theta_bar * (r / t).powf(theta_bar.ln().abs() / chi.ln().abs()))
}

/// `τ_r = θ̃ (r/r0)^δ`.
pub fn tau_r(r: f64, r0: f64, theta_tilde: f64, delta: f64) -> Result<f64> {
    if !(theta_tilde > 0.0 && theta_tilde < 1.0) {
        return invalid(format!("theta_tilde must lie in (0,1), got {theta_tilde}"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta must lie in (0,1), got {delta}"));
    }
    if !(r > 0.0) || r > r0 {
        return invalid(format!("need 0 < r <= r0, got r={r}, r0={r0}"));
    }
    Ok(theta_tilde * (r / r0).powf(delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gamma_for_l(l: f64) -> f64 {
        (1.0 / (2.0 * l)).atan()
    }

    #[test]
    fn chi_for_unit_lipschitz() {
        let c = ConeChain::new(1.0, gamma_for_l(1.0), 0.01).unwrap();
        assert!((c.gamma3.sin() - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        let s5 = 5f64.sqrt();
        let expected = (4.0 * s5 - 3.0) / (4.0 * s5 - 1.0);
        assert!((c.chi - expected).abs() < 1e-15);
        assert!((c.chi - 0.748246).abs() < 1e-6);
    }

    #[test]
    fn largest_r_gives_two_steps() {
        let g = gamma_for_l(1.0);
        let probe = ConeChain::new(1.0, g, 0.01).unwrap();
        let c = ConeChain::new(1.0, g, probe.chi * probe.t0).unwrap();
        assert_eq!(c.k0, 2);
        assert!((c.t - c.t0).abs() < 1e-15 * c.t0);
    }

    #[test]
    fn chain_ends_at_r() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let rho = rng.gen_range(0.1..3.0);
            let g3 = rng.gen_range(0.05..1.5);
            let probe = ConeChain::new(rho, g3, 1e-9).unwrap();
            let r = rng.gen_range(1e-4..=1.0) * probe.chi * probe.t0;
            let c = ConeChain::new(rho, g3, r).unwrap();
            assert_eq!(c.center(c.k0), [0.0, 0.0, -r]);
            assert_eq!(c.radius(1, c.k0), r * c.gamma1.sin());
            assert!(c.chi * c.t0 <= c.t * (1.0 + 1e-14) && c.t <= c.t0 * (1.0 + 1e-14));
            for k in 1..c.k0 {
                assert!((c.depth(k + 1) / c.depth(k) - c.chi).abs() < 1e-13);
            }
            for m in c.all_margins() {
                // two of the three inclusions are tangent by construction
                assert!(m.min() >= -1e-14 * c.t0, "{m:?}");
                assert!(m.middle_in_outer > 0.0);
            }
        }
    }

    #[test]
    fn tangent_inclusions() {
        let c = ConeChain::new(1.0, 0.6, 0.001).unwrap();
        let m = c.margins(1);
        assert!(m.inner_in_middle.abs() < 1e-15);
        assert!(m.outer_in_cone.abs() < 1e-15);
    }

    #[test]
    fn r_out_of_range() {
        let c = ConeChain::new(1.0, 0.5, 0.01).unwrap();
        assert!(ConeChain::new(1.0, 0.5, c.chi * c.t0 * 1.001).is_err());
        assert!(ConeChain::new(1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn exponents() {
        let c = ConeChain::new(1.0, 0.5, 0.01).unwrap();
        let mut at_t = c.clone();
        at_t.r = at_t.t;
        assert_eq!(eta_r(&at_t, 0.3).unwrap(), 0.3);
        assert!((tau_r(0.25, 1.0, 0.5, 0.5).unwrap() - 0.25).abs() < 1e-15);
        let mut prev = 0.0;
        for i in 1..=100 {
            let r = c.t * i as f64 / 100.0;
            let e = eta_at(r, c.t, c.chi, 0.4).unwrap();
            assert!(e > prev && e < 1.0);
            prev = e;
        }
        assert!(eta_at(2.0 * c.t, c.t, c.chi, 0.4).is_err());
        assert!(tau_r(2.0, 1.0, 0.5, 0.5).is_err());
    }
}
