use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::{Member, SolutionEnsemble};
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::quadrature::ball_rule;

/// Default points per direction of the spherical product rule.
pub const BALL_ORDER: usize = 16;

fn check_ball(m: &Member, center: &Point3, radius: f64) -> Result<()> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("ball radius {radius}")));
    }
    if let Some(s) = m.singularity() {
        let d = ((s[0] - center[0]).powi(2) + (s[1] - center[1]).powi(2) + (s[2] - center[2]).powi(2)).sqrt();
        if d <= radius {
            return Err(Error::Domain(format!(
                "ball of radius {radius} around {center:?} contains the source {s:?}"
            )));
        }
    }
    Ok(())
}

/// `∫_{B_radius(center)} |u|²` with `n` points per direction.
pub fn ball_l2_order(m: &Member, center: &Point3, radius: f64, n: usize) -> Result<f64> {
    check_ball(m, center, radius)?;
    ball_rule(center, radius, n).iter().try_fold(0.0, |acc, (x, w)| {
        let u = m.value(x)?;
        Ok(acc + w * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]))
    })
}

pub fn ball_l2(m: &Member, center: &Point3, radius: f64) -> Result<f64> {
    ball_l2_order(m, center, radius, BALL_ORDER)
}

/// `∫_{B_radius(center)} |∇u|²`.
pub fn ball_grad_l2(m: &Member, center: &Point3, radius: f64) -> Result<f64> {
    check_ball(m, center, radius)?;
    ball_rule(center, radius, BALL_ORDER)
        .iter()
        .try_fold(0.0, |acc, (x, w)| Ok(acc + w * m.gradient(x)?.norm_squared()))
}

/// Fitted `∫₂ ≤ C (∫₁)^θ0 (∫₃)^{1−θ0}` on logarithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeSphereFit {
    pub theta0: f64,
    pub log_c: f64,
    /// Fraction of held-out members violating the fitted inequality.
    pub violation_rate: f64,
    pub fit_size: usize,
    pub test_size: usize,
}

/// `(∫_{B_r1}, ∫_{B_r2}, ∫_{B_r3})` per member, in member order.
pub fn three_sphere_integrals(ens: &SolutionEnsemble, center: &Point3, radii: [f64; 3]) -> Result<Vec<[f64; 3]>> {
    let [r1, r2, r3] = radii;
    if !(0.0 < r1 && r1 <= r2 && r2 < r3) {
        return Err(Error::InvalidInput(format!("radii {radii:?} must satisfy 0 < r1 <= r2 < r3")));
    }
    ens.members
        .par_iter()
        .map(|m| Ok([ball_l2(m, center, r1)?, ball_l2(m, center, r2)?, ball_l2(m, center, r3)?]))
        .collect()
}

const THETA_MIN: f64 = 1e-6;

fn residual(v: &[f64; 3], theta: f64) -> f64 {
    v[1] - theta * v[0] - (1.0 - theta) * v[2]
}

fn logs(vals: &[[f64; 3]]) -> Vec<[f64; 3]> {
    vals.iter().filter(|v| v.iter().all(|&x| x > 0.0)).map(|v| v.map(f64::ln)).collect()
}

/// Chebyshev fit of `log∫₂ = θ log∫₁ + (1−θ) log∫₃ + log C`: `θ` minimizes
/// the spread `max − min` of the residuals over the fit set, then `log C` is
/// the largest residual so the inequality holds on every fitted member.
///
/// Minimizing only the largest residual would always pick `θ → 0`, since
/// `∫₁ ≤ ∫₃` makes every residual increasing in `θ`.
pub fn fit_three_sphere(fit: &[[f64; 3]], test: &[[f64; 3]]) -> Result<ThreeSphereFit> {
    let lf = logs(fit);
    if lf.is_empty() {
        return Err(Error::InvalidInput("degenerate ensemble: every member vanishes".into()));
    }
    let spread = |theta: f64| {
        let (lo, hi) = lf.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            let r = residual(v, theta);
            (lo.min(r), hi.max(r))
        });
        hi - lo
    };
    // convex in θ: golden section
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (THETA_MIN, 1.0 - THETA_MIN);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (spread(c), spread(d));
    for _ in 0..200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = spread(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = spread(d);
        }
    }
    let theta0 = (0.5 * (a + b)).clamp(THETA_MIN, 1.0 - THETA_MIN);
    let log_c = lf.iter().map(|v| residual(v, theta0)).fold(f64::NEG_INFINITY, f64::max);
    let lt = logs(test);
    let tol = 1e-12 * log_c.abs().max(1.0);
    let violations = lt.iter().filter(|v| residual(v, theta0) > log_c + tol).count();
    Ok(ThreeSphereFit {
        theta0,
        log_c,
        violation_rate: if lt.is_empty() { 0.0 } else { violations as f64 / lt.len() as f64 },
        fit_size: lf.len(),
        test_size: lt.len(),
    })
}

pub fn three_sphere_fit(
    fit: &SolutionEnsemble,
    test: &SolutionEnsemble,
    center: &Point3,
    radii: [f64; 3],
) -> Result<ThreeSphereFit> {
    fit_three_sphere(&three_sphere_integrals(fit, center, radii)?, &three_sphere_integrals(test, center, radii)?)
}

/// Rows `member_id,r1_int,r2_int,r3_int`.
pub fn three_sphere_csv(vals: &[[f64; 3]]) -> String {
    let mut s = String::from("member_id,r1_int,r2_int,r3_int\n");
    for (i, v) in vals.iter().enumerate() {
        let _ = writeln!(s, "{i},{:e},{:e},{:e}", v[0], v[1], v[2]);
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaccioppoliReport {
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
}

/// `(ρ1 − ρ2)² ∫_{B_ρ2}|∇u|² / ∫_{B_ρ1}|u|²`, zero for the zero field.
pub fn caccioppoli_ratio(m: &Member, center: &Point3, rho2: f64, rho1: f64) -> Result<f64> {
    if !(0.0 < rho2 && rho2 < rho1) {
        return Err(Error::InvalidInput(format!("need 0 < rho2 < rho1, got {rho2}, {rho1}")));
    }
    let num = ball_grad_l2(m, center, rho2)?;
    let den = ball_l2(m, center, rho1)?;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((rho1 - rho2).powi(2) * num / den)
}

pub fn caccioppoli_check(ens: &SolutionEnsemble, center: &Point3, rho2: f64, rho1: f64) -> Result<CaccioppoliReport> {
    let ratios: Vec<f64> =
        ens.members.par_iter().map(|m| caccioppoli_ratio(m, center, rho2, rho1)).collect::<Result<_>>()?;
    Ok(CaccioppoliReport { max_ratio: ratios.iter().cloned().fold(0.0, f64::max), ratios })
}

#[cfg(test)]
fn ball_volume(r: f64) -> f64 {
    4.0 / 3.0 * std::f64::consts::PI * r.powi(3)
}
