use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::{Member, SolutionEnsemble};
use super::spheres::{ball_l2, BALL_ORDER};
use crate::error::{Error, Result};
use crate::geometry::{eta_r, ConeChain};
use crate::quadrature::cone_rule;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeMemberReport {
    pub member_id: usize,
    /// `(∫_{B_{t sin γ1}(w_1)} |u|²)^{1/2}`.
    pub eps: f64,
    /// `(∫_{C_ρ(γ3)} |u|²)^{1/2}`.
    pub energy: f64,
    /// `|u(−r e3)|`.
    pub value: f64,
    /// `|u(−r e3)| r^{3/2} / (ε^{η_r} E^{1−η_r})`.
    pub c_impl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub theta_bar: f64,
    pub eta: f64,
    pub r: f64,
    pub rows: Vec<ConeMemberReport>,
    /// Members left out: zero fields and those with `ε > eps_small`.
    pub skipped: Vec<usize>,
    pub max_c_impl: f64,
}

fn inside_cone(chain: &ConeChain, x: &[f64; 3]) -> bool {
    let depth = -x[2];
    depth >= 0.0 && depth <= chain.height() && x[0].hypot(x[1]) <= depth * chain.gamma3.tan()
}

/// `∫_{B_{r1(k)}(w_k)} |u|²` for `k = 1..=k0`.
pub fn chain_ball_profile(chain: &ConeChain, m: &Member) -> Result<Vec<f64>> {
    (1..=chain.k0).map(|k| ball_l2(m, &chain.center(k), chain.radius(1, k))).collect()
}

pub fn cone_propagation_experiment(
    chain: &ConeChain,
    ens: &SolutionEnsemble,
    eps_small: f64,
    theta_bar: f64,
) -> Result<ConeReport> {
    let eta = eta_r(chain, theta_bar)?;
    let r = chain.r;
    for m in &ens.members {
        if let Some(s) = m.singularity() {
            if inside_cone(chain, &s) {
                return Err(Error::Domain(format!("source {s:?} lies in the cone")));
            }
        }
    }
    let quad = cone_rule(&[0.0; 3], chain.gamma3, chain.height(), BALL_ORDER);
    let rows: Vec<Option<ConeMemberReport>> = ens
        .members
        .par_iter()
        .enumerate()
        .map(|(member_id, m)| -> Result<Option<ConeMemberReport>> {
            if m.is_zero() {
                return Ok(None);
            }
            let eps = ball_l2(m, &chain.center(1), chain.t * chain.gamma1.sin())?.sqrt();
            if eps > eps_small {
                return Ok(None);
            }
            let energy = quad
                .iter()
                .try_fold(0.0, |acc, (x, w)| -> Result<f64> {
                    let u = m.value(x)?;
                    Ok(acc + w * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]))
                })?
                .sqrt();
            let u = m.value(&[0.0, 0.0, -r])?;
            let value = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
            let c_impl = value * r.powf(1.5) / (eps.powf(eta) * energy.powf(1.0 - eta));
            Ok(Some(ConeMemberReport { member_id, eps, energy, value, c_impl }))
        })
        .collect::<Result<_>>()?;
    let skipped: Vec<usize> = rows.iter().enumerate().filter(|(_, r)| r.is_none()).map(|(i, _)| i).collect();
    let rows: Vec<ConeMemberReport> = rows.into_iter().flatten().collect();
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no member passed the screening at eps_small = {eps_small}; use a larger value"
        )));
    }
    let max_c_impl = rows.iter().map(|r| r.c_impl).fold(0.0, f64::max);
    Ok(ConeReport { theta_bar, eta, r, rows, skipped, max_c_impl })
}

/// Rows `member_id,eps,E,value,C_impl`.
pub fn cone_csv(report: &ConeReport) -> String {
    let mut s = String::from("member_id,eps,E,value,C_impl\n");
    for r in &report.rows {
        let _ = writeln!(s, "{},{:e},{:e},{:e},{:e}", r.member_id, r.eps, r.energy, r.value, r.c_impl);
    }
    s
}
