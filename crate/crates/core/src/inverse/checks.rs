use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forward::{forward, frechet_derivative, ForwardContext};
use crate::error::{Error, Result};
use crate::lame::LameVector;

/// `‖(F(L+hE_p) − F(L−hE_p))/2h − J_p‖⋆ / ‖J_p‖⋆` for every coordinate `p`.
pub fn fd_derivative_errors(ctx: &ForwardContext, l: &LameVector, h: f64) -> Result<Vec<f64>> {
    let jac = frechet_derivative(ctx, l)?;
    let gram = ctx.gram();
    (0..l.dim())
        .into_par_iter()
        .map(|p| {
            let mut e = vec![0.0; l.dim()];
            e[p] = 1.0;
            let fp = forward(ctx, &l.offset(&e, h))?;
            let fm = forward(ctx, &l.offset(&e, -h))?;
            let fd = (fp.entries() - fm.entries()) / (2.0 * h);
            let j = &jac.columns()[p];
            Ok(gram.star_norm(&(fd - j)) / gram.star_norm(j))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderProfile {
    pub steps: Vec<f64>,
    /// `‖F(L+hH) − F(L) − h F'(L)[H]‖⋆` per step.
    pub remainders: Vec<f64>,
    /// Least-squares slope of `log remainder` against `log h`.
    pub slope: f64,
}

/// First-order Taylor remainder along `dir` over the given steps.
pub fn remainder_profile(ctx: &ForwardContext, l: &LameVector, dir: &[f64], steps: &[f64]) -> Result<RemainderProfile> {
    if steps.len() < 2 {
        return Err(Error::InvalidInput("need at least two steps".into()));
    }
    let f0 = forward(ctx, l)?;
    let d = frechet_derivative(ctx, l)?.directional(dir)?;
    let gram = ctx.gram();
    let remainders: Vec<f64> = steps
        .par_iter()
        .map(|&h| {
            let f = forward(ctx, &l.offset(dir, h))?;
            Ok(gram.star_norm(&(f.entries() - f0.entries() - &d * h)))
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = remainders.iter().map(|r| r.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(RemainderProfile { steps: steps.to_vec(), remainders, slope: sxy / sxx })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_layered_cube;
    use std::sync::Arc;

    #[test]
    fn remainder_is_quadratic() {
        let ctx = ForwardContext::new(Arc::new(build_layered_cube(2, 4, 0.25).unwrap())).unwrap();
        let l = LameVector::new(vec![0.4, 0.9], vec![1.0, 0.7]).unwrap();
        let prof = remainder_profile(&ctx, &l, &[0.3, -0.5, 1.0, 0.2], &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!((prof.slope - 2.0).abs() < 0.2, "{prof:?}");
        let errs = fd_derivative_errors(&ctx, &l, 1e-4).unwrap();
        assert!(errs.iter().all(|&e| e < 1e-5), "{errs:?}");
    }
}
