use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forward::{forward, frechet_derivative, ForwardContext};
use super::report::MeshSummary;
use crate::error::Result;
use crate::fem::spectral_norm;
use crate::lame::{AdmissibleBox, LameVector};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairRatio {
    pub index: usize,
    pub param_distance: f64,
    pub dn_distance: f64,
    pub ratio: f64,
}

/// Empirical stability constant `max ‖L1 − L2‖∞ / ‖F(L1) − F(L2)‖⋆`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub max_ratio: f64,
    pub pairs: Vec<PairRatio>,
    /// Indices of coincident pairs that were skipped.
    pub skipped: Vec<usize>,
    pub mesh: MeshSummary,
}

impl LipschitzReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.ratio).collect()
    }
}

/// `n` independent pairs drawn from the admissible box.
pub fn random_pairs<R: Rng + ?Sized>(
    bx: &AdmissibleBox,
    n_subdomains: usize,
    n: usize,
    rng: &mut R,
) -> Vec<(LameVector, LameVector)> {
    (0..n).map(|_| (bx.sample(n_subdomains, rng), bx.sample(n_subdomains, rng))).collect()
}

pub fn lipschitz_probe(ctx: &ForwardContext, pairs: &[(LameVector, LameVector)]) -> Result<LipschitzReport> {
    let gram = ctx.gram();
    let results: Vec<Option<PairRatio>> = pairs
        .par_iter()
        .enumerate()
        .map(|(index, (a, b))| -> Result<Option<PairRatio>> {
            let param_distance = a.dist_inf(b);
            if param_distance == 0.0 {
                return Ok(None);
            }
            let fa = forward(ctx, a)?;
            let fb = forward(ctx, b)?;
            let dn_distance = gram.star_norm(&(fa.entries() - fb.entries()));
            Ok(Some(PairRatio { index, param_distance, dn_distance, ratio: param_distance / dn_distance }))
        })
        .collect::<Result<_>>()?;
    let skipped = results.iter().enumerate().filter(|(_, r)| r.is_none()).map(|(i, _)| i).collect();
    let pairs: Vec<PairRatio> = results.into_iter().flatten().collect();
    let max_ratio = pairs.iter().map(|p| p.ratio).fold(0.0, f64::max);
    Ok(LipschitzReport { max_ratio, pairs, skipped, mesh: MeshSummary::new(ctx) })
}

/// Fitted `C` with `‖J(L1) − J(L2)‖ ≤ C ‖L1 − L2‖∞`, the operator norm of
/// `J` taken as `max_{‖H‖∞≤1}` bounded by `Σ_p ‖J_p‖⋆`. Returns the per-pair
/// ratios and their maximum.
pub fn derivative_lipschitz_probe(
    ctx: &ForwardContext,
    pairs: &[(LameVector, LameVector)],
) -> Result<(f64, Vec<f64>)> {
    let gram = ctx.gram();
    let ratios: Vec<f64> = pairs
        .par_iter()
        .filter(|(a, b)| a.dist_inf(b) > 0.0)
        .map(|(a, b)| -> Result<f64> {
            let ja = frechet_derivative(ctx, a)?;
            let jb = frechet_derivative(ctx, b)?;
            let norm: f64 = ja
                .columns()
                .iter()
                .zip(jb.columns())
                .map(|(x, y)| spectral_norm(&gram.whiten(&(x - y))))
                .sum();
            Ok(norm / a.dist_inf(b))
        })
        .collect::<Result<_>>()?;
    Ok((ratios.iter().cloned().fold(0.0, f64::max), ratios))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_layered_cube;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn coincident_pairs_are_skipped_and_swap_is_symmetric() {
        let ctx = ForwardContext::new(Arc::new(build_layered_cube(2, 4, 0.1).unwrap())).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bx = AdmissibleBox::default();
        let (a, b) = (bx.sample(2, &mut rng), bx.sample(2, &mut rng));
        let rep = lipschitz_probe(&ctx, &[(a.clone(), a.clone()), (a.clone(), b.clone()), (b, a)]).unwrap();
        assert_eq!(rep.skipped, vec![0]);
        assert_eq!(rep.pairs.len(), 2);
        assert!(rep.max_ratio.is_finite() && rep.max_ratio > 0.0);
        assert!((rep.pairs[0].ratio - rep.pairs[1].ratio).abs() <= 1e-10 * rep.pairs[0].ratio);
    }

    #[test]
    fn derivative_is_lipschitz_with_one_constant() {
        let ctx = ForwardContext::new(Arc::new(build_layered_cube(2, 4, 0.1).unwrap())).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pairs = random_pairs(&AdmissibleBox::default(), 2, 20, &mut rng);
        let (c, ratios) = derivative_lipschitz_probe(&ctx, &pairs[..10]).unwrap();
        assert_eq!(ratios.len(), 10);
        assert!(c.is_finite() && c > 0.0);
        // the constant fitted on half the pairs covers the other half
        let (_, held) = derivative_lipschitz_probe(&ctx, &pairs[10..]).unwrap();
        assert!(held.iter().all(|&r| r <= 2.0 * c), "{held:?} vs {c}");
    }
}
