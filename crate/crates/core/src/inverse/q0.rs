use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forward::{frechet_derivative, ForwardContext};
use crate::error::{Error, Result};
use crate::lame::LameVector;

/// Outcome for one sample `L`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Q0Sample {
    pub lame: Vec<f64>,
    /// Smallest `‖F'(L)[H]‖⋆` found on `‖H‖∞ = 1`.
    pub q0: f64,
    /// `σ_min` of the whitened stacked Jacobian over `√m`; a certified lower
    /// bound for the same minimum.
    pub lower: f64,
    pub direction: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Q0Report {
    pub q0: f64,
    pub q0_lower: f64,
    pub samples: Vec<Q0Sample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

const SUBGRADIENT_STEPS: usize = 400;
const RANDOM_STARTS: usize = 16;

/// Largest `|eigenvalue|` and its eigenvector.
fn top(a: &DMatrix<f64>) -> (f64, nalgebra::DVector<f64>) {
    let e = SymmetricEigen::new(a.clone());
    let k = e.eigenvalues.iamax();
    let lam = e.eigenvalues[k];
    (lam.abs(), e.eigenvectors.column(k) * lam.signum())
}

fn combine(cols: &[DMatrix<f64>], h: &[f64]) -> DMatrix<f64> {
    let m = cols[0].nrows();
    cols.iter().zip(h).fold(DMatrix::zeros(m, m), |acc, (c, &x)| acc + c * x)
}

/// Projected subgradient descent of `‖Σ H_p W_p‖₂`; `project` maps an
/// iterate back onto the feasible set. Returns the best point visited.
fn descend(cols: &[DMatrix<f64>], start: Vec<f64>, project: impl Fn(&mut [f64])) -> (f64, Vec<f64>) {
    let mut h = start;
    project(&mut h);
    let mut best = (f64::INFINITY, h.clone());
    for k in 0..SUBGRADIENT_STEPS {
        let (f, v) = top(&combine(cols, &h));
        if f < best.0 {
            best = (f, h.clone());
        }
        let g: Vec<f64> = cols.iter().map(|c| v.dot(&(c * &v))).collect();
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn == 0.0 {
            break;
        }
        let step = 0.5 / ((k + 1) as f64).sqrt();
        for (x, gx) in h.iter_mut().zip(&g) {
            *x -= step * gx / gn;
        }
        project(&mut h);
    }
    best
}

/// Minimum of `‖Σ H_p W_p‖₂` over the `∞`-sphere for one sample.
fn sphere_minimum(cols: &[DMatrix<f64>], seed: u64) -> (f64, Vec<f64>) {
    let np = cols.len();
    let gram = DMatrix::from_fn(np, np, |p, q| cols[p].dot(&cols[q]));
    let mut best = (f64::INFINITY, vec![0.0; np]);
    if np <= 8 {
        // the norm is even and convex: one face per coordinate, H_p = 1
        for p in 0..np {
            let rest: Vec<usize> = (0..np).filter(|&q| q != p).collect();
            let mut start = vec![0.0; np];
            start[p] = 1.0;
            if !rest.is_empty() {
                let a = DMatrix::from_fn(rest.len(), rest.len(), |i, j| gram[(rest[i], rest[j])]);
                let b = nalgebra::DVector::from_fn(rest.len(), |i, _| -gram[(rest[i], p)]);
                if let Some(x) = a.cholesky().map(|c| c.solve(&b)) {
                    for (i, &q) in rest.iter().enumerate() {
                        start[q] = x[i];
                    }
                }
            }
            let r = descend(cols, start, |h| {
                for x in h.iter_mut() {
                    *x = x.clamp(-1.0, 1.0);
                }
                h[p] = 1.0;
            });
            if r.0 < best.0 {
                best = r;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..RANDOM_STARTS {
            let start: Vec<f64> = (0..np).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let r = descend(cols, start, |h| {
                let m = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if m > 0.0 {
                    h.iter_mut().for_each(|x| *x /= m);
                } else {
                    h[0] = 1.0;
                }
            });
            if r.0 < best.0 {
                best = r;
            }
        }
    }
    best
}

/// `q0 = min_L min_{‖H‖∞=1} ‖F'(L)[H]‖⋆` over the given samples.
pub fn q0_estimate(ctx: &ForwardContext, samples: &[LameVector], seed: u64) -> Result<Q0Report> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("q0 needs at least one sample".into()));
    }
    let gram = ctx.gram();
    let per: Vec<Q0Sample> = samples
        .par_iter()
        .enumerate()
        .map(|(i, l)| -> Result<Q0Sample> {
            let jac = frechet_derivative(ctx, l)?;
            let cols: Vec<DMatrix<f64>> = jac.columns().iter().map(|j| gram.whiten(j)).collect();
            let m = cols[0].nrows() as f64;
            let np = cols.len();
            let g = DMatrix::from_fn(np, np, |p, q| cols[p].dot(&cols[q]));
            let smin = SymmetricEigen::new(g).eigenvalues.min().max(0.0).sqrt();
            let (q0, direction) = sphere_minimum(&cols, seed.wrapping_add(i as u64));
            Ok(Q0Sample { lame: l.to_flat(), q0, lower: smin / m.sqrt(), direction })
        })
        .collect::<Result<_>>()?;
    let q0 = per.iter().map(|s| s.q0).fold(f64::INFINITY, f64::min);
    let q0_lower = per.iter().map(|s| s.lower).fold(f64::INFINITY, f64::min);
    let diagnostic = (q0 == 0.0).then(|| "derivative vanishes in some direction".to_string());
    Ok(Q0Report { q0, q0_lower, samples: per, diagnostic })
}
