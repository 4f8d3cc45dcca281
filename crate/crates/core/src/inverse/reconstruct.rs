use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::forward::{forward_and_derivative, ForwardContext, Jacobian};
use crate::error::{Error, Result};
use crate::fem::{DnMatrix, SigmaGram};
use crate::lame::{AdmissibleBox, LameVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussNewtonOptions {
    pub max_iters: usize,
    /// Stop when the accepted step has `∞`-norm at most this.
    pub tol: f64,
    pub damping: f64,
    pub damping_increase: f64,
    pub damping_decrease: f64,
    /// Consecutive rejected trial steps tolerated before giving up.
    pub max_rejections: usize,
    pub bounds: AdmissibleBox,
}

impl Default for GaussNewtonOptions {
    fn default() -> Self {
        Self {
            max_iters: 30,
            tol: 1e-10,
            damping: 1e-6,
            damping_increase: 10.0,
            damping_decrease: 3.0,
            max_rejections: 40,
            bounds: AdmissibleBox::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub k: usize,
    /// Whitened Frobenius norm of `F(L) − Λ_obs`.
    pub residual: f64,
    #[serde(rename = "L")]
    pub lame: Vec<f64>,
    pub damping: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    StepTolerance,
    MaxIterations,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Reconstruction {
    pub lame: LameVector,
    pub iterates: Vec<Iterate>,
    pub stop: StopReason,
    /// Number of accepted Gauss-Newton steps.
    pub iterations: usize,
}

impl Reconstruction {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::StepTolerance
    }
}

fn whitened_vec(gram: &SigmaGram, t: &DMatrix<f64>) -> DVector<f64> {
    let w = gram.whiten(t);
    DVector::from_column_slice(w.as_slice())
}

fn stacked(gram: &SigmaGram, jac: &Jacobian) -> DMatrix<f64> {
    jac.whitened_stack(gram)
}

/// `L + s δ'` where `δ'` is the box-clipped step and `s ≤ 1` is the largest
/// factor keeping `2μ_j + 3λ_j ≥ β0`.
fn project_step(bounds: &AdmissibleBox, l: &LameVector, delta: &[f64]) -> Result<LameVector> {
    let n = l.len();
    let mut x: Vec<f64> = l.to_flat().iter().zip(delta).map(|(a, d)| a + d).collect();
    for j in 0..n {
        x[j] = x[j].min(bounds.lambda_max());
        x[n + j] = x[n + j].clamp(bounds.mu_min(), bounds.mu_max());
    }
    let base = l.to_flat();
    let d: Vec<f64> = x.iter().zip(&base).map(|(a, b)| a - b).collect();
    let mut s: f64 = 1.0;
    for j in 0..n {
        let c0 = 2.0 * base[n + j] + 3.0 * base[j] - bounds.beta0;
        let dc = 2.0 * d[n + j] + 3.0 * d[j];
        if c0 + dc < 0.0 && dc < 0.0 {
            s = s.min((c0 / -dc).max(0.0));
        }
    }
    let mut out: Vec<f64> = base.iter().zip(&d).map(|(b, dd)| b + s * dd).collect();
    for j in 0..n {
        out[j] = out[j].max(bounds.lambda_min(out[n + j]));
    }
    LameVector::from_flat(&out)
}

/// Projected Levenberg-Marquardt on `r(L) = vec(W (F(L) − Λ_obs) W)`. The
/// damping multiplies `diag(JᵀJ)`.
pub fn reconstruct(
    ctx: &ForwardContext,
    observed: &DnMatrix,
    init: &LameVector,
    opts: &GaussNewtonOptions,
    truth: Option<&LameVector>,
) -> Result<Reconstruction> {
    if observed.dim() != ctx.operators().n_sigma() {
        return Err(Error::InvalidInput(format!(
            "observed map has dimension {}, the mesh has {} trace unknowns",
            observed.dim(),
            ctx.operators().n_sigma()
        )));
    }
    if !opts.bounds.contains(init) {
        return Err(Error::InvalidInput("initial guess is not admissible".into()));
    }
    let gram = ctx.gram();
    let obs = observed.entries();
    let mut l = init.clone();
    let (f, mut jac) = forward_and_derivative(ctx, &l)?;
    let mut r = whitened_vec(gram, &(f.entries() - obs));
    let mut damping = opts.damping;
    let record = |k: usize, l: &LameVector, res: f64, damping: f64| Iterate {
        k,
        residual: res,
        lame: l.to_flat(),
        damping,
        error: truth.map(|t| t.dist_inf(l)),
    };
    let mut iterates = vec![record(0, &l, r.norm(), damping)];
    let np = l.dim();
    for k in 0..opts.max_iters {
        let a = stacked(gram, &jac);
        let jtj = a.transpose() * &a;
        let g = a.transpose() * &r;
        let mut rejections = 0;
        loop {
            let mut m = jtj.clone();
            for p in 0..np {
                let d = if jtj[(p, p)] > 0.0 { jtj[(p, p)] } else { 1.0 };
                m[(p, p)] += damping * d;
            }
            let delta = match m.cholesky() {
                Some(c) => -c.solve(&g),
                None => {
                    damping *= opts.damping_increase;
                    rejections += 1;
                    if rejections > opts.max_rejections {
                        return Err(Error::Reconstruction(format!(
                            "damped normal matrix stayed singular at iteration {k}; trace: {iterates:?}"
                        )));
                    }
                    continue;
                }
            };
            let cand = project_step(&opts.bounds, &l, delta.as_slice())?;
            let step = cand.dist_inf(&l);
            if step <= opts.tol {
                return Ok(Reconstruction { lame: l, iterates, stop: StopReason::StepTolerance, iterations: k });
            }
            let (fc, jc) = forward_and_derivative(ctx, &cand)?;
            let rc = whitened_vec(gram, &(fc.entries() - obs));
            if rc.norm() < r.norm() {
                l = cand;
                r = rc;
                jac = jc;
                damping /= opts.damping_decrease;
                iterates.push(record(k + 1, &l, r.norm(), damping));
                break;
            }
            damping *= opts.damping_increase;
            rejections += 1;
            if rejections > opts.max_rejections {
                return Ok(Reconstruction { lame: l, iterates, stop: StopReason::StepTolerance, iterations: k });
            }
        }
    }
    Ok(Reconstruction { lame: l, iterates, stop: StopReason::MaxIterations, iterations: opts.max_iters })
}

/// Random symmetric perturbation with `‖Δ‖⋆ = level`.
pub fn operator_noise<R: Rng + ?Sized>(gram: &SigmaGram, level: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let g = gram.gram_half();
    let d = g.nrows();
    let x = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let x = (&x + x.transpose()) * 0.5;
    let half = crate::fem::sym_power(&g, 0.5)?;
    let delta = &half * x * &half;
    let s = gram.star_norm(&delta);
    Ok(delta * (level / s))
}
