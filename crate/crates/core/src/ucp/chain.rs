use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{exterior_singular_solution, exterior_trace, FemSystem, GreenFunction};
use crate::geometry::{AugmentedDomain, Point3, PointLocator};

/// Probe layout for the chain experiment. Sources sit on the outward normal
/// through the centroid of `Σ` at the given heights above it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainProbeConfig {
    pub source_heights: Vec<f64>,
    pub direction: [f64; 3],
    /// Distance of `x̃` below the deepest interface crossed.
    pub probe_offset: f64,
    /// Profile points along the axis.
    pub samples: usize,
}

impl Default for ChainProbeConfig {
    fn default() -> Self {
        Self { source_heights: vec![0.05, 0.1, 0.2, 0.4], direction: [0.0, 0.0, 1.0], probe_offset: 0.1, samples: 40 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterfaceCrossing {
    pub labels: [u32; 2],
    pub depth: f64,
    pub value: f64,
    /// `|v_above − v_below| / |v|` with each side extrapolated geometrically
    /// (linearly in `log|v|`) from points one and two cells away.
    pub relative_jump: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub n_subdomains: usize,
    /// `(depth below Σ, |v|)` for the first source height.
    pub profile: Vec<(f64, f64)>,
    pub crossings: Vec<InterfaceCrossing>,
    /// `sup |v(x)| dist(x, Σ)^{1/2}` over the profile.
    pub sup_weighted: f64,
    pub probe_point: Point3,
    /// Per source height: `max |trace|` on `Σ` and `|v(x̃)|`.
    pub eps: Vec<f64>,
    pub probe_values: Vec<f64>,
    /// Least-squares slope of `log|v(x̃)|` against `log ε`.
    pub fitted_exponent: Option<f64>,
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Observes how an exterior point force seen through `Σ` decays along the
/// chain of layers below it.
pub fn interface_chain_experiment(sys: &FemSystem, cfg: &ChainProbeConfig) -> Result<ChainReport> {
    if cfg.source_heights.is_empty() || cfg.source_heights.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::InvalidInput("source heights must be positive".into()));
    }
    if cfg.samples < 2 {
        return Err(Error::InvalidInput("need at least two profile samples".into()));
    }
    let mesh = sys.mesh();
    let aug = AugmentedDomain::new(mesh)?;
    let (p1, n) = (aug.p1(), aug.normal());
    let locator = PointLocator::new(mesh);
    let at = |s: f64| -> Point3 { [0, 1, 2].map(|i| p1[i] - s * n[i]) };

    // axis length inside Ω
    let mut s_max = 0.0;
    let step = mesh.max_edge() / 8.0;
    while locator.locate(&at(s_max + step)).is_some() {
        s_max += step;
    }
    if s_max <= 0.0 {
        return Err(Error::Domain("the inward normal through Σ leaves the mesh at once".into()));
    }

    let mut crossings: Vec<([u32; 2], f64)> = mesh
        .interfaces()
        .iter()
        .filter_map(|itf| {
            let denom: f64 = (0..3).map(|i| n[i] * itf.normal[i]).sum();
            if denom.abs() < 1e-12 {
                return None;
            }
            let s = (0..3).map(|i| (p1[i] - itf.point[i]) * itf.normal[i]).sum::<f64>() / denom;
            (s > 0.0 && s < s_max).then_some((itf.labels, s))
        })
        .collect();
    crossings.sort_by(|a, b| a.1.total_cmp(&b.1));

    let probe_depth = crossings.last().map_or(0.0, |c| c.1) + cfg.probe_offset;
    if probe_depth >= s_max {
        return Err(Error::Domain(format!("probe depth {probe_depth} exceeds the axis length {s_max}")));
    }
    let probe_point = at(probe_depth);

    let solve = |h: f64| -> Result<GreenFunction> {
        let y = [0, 1, 2].map(|i| p1[i] + h * n[i]);
        exterior_singular_solution(sys, &y, &cfg.direction)
    };
    let value = |g: &GreenFunction, s: f64| -> Result<f64> { Ok(norm(&g.value(&locator, &at(s))?)) };

    let first = solve(cfg.source_heights[0])?;
    let profile: Vec<(f64, f64)> = (0..cfg.samples)
        .map(|k| {
            let s = s_max * (k as f64 + 0.5) / cfg.samples as f64;
            Ok((s, value(&first, s)?))
        })
        .collect::<Result<_>>()?;
    let sup_weighted = profile.iter().map(|&(s, v)| v * s.sqrt()).fold(0.0, f64::max);

    let h = (6.0 * mesh.volumes().iter().cloned().fold(0.0, f64::max)).cbrt();
    let crossings = crossings
        .into_iter()
        .map(|(labels, s)| -> Result<InterfaceCrossing> {
            let v = value(&first, s)?;
            let side = |sign: f64| -> Result<f64> {
                let (a, b) = (value(&first, s + sign * h)?, value(&first, s + sign * 2.0 * h)?);
                Ok(a * a / b)
            };
            let (above, below) = (side(-1.0)?, side(1.0)?);
            Ok(InterfaceCrossing { labels, depth: s, value: v, relative_jump: (above - below).abs() / v })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut eps = Vec::new();
    let mut probe_values = Vec::new();
    for &hgt in &cfg.source_heights {
        let y = [0, 1, 2].map(|i| p1[i] + hgt * n[i]);
        let trace = exterior_trace(sys.operators(), &y, &cfg.direction)?;
        eps.push(trace.chunks(3).map(|c| (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()).fold(0.0, f64::max));
        probe_values.push(norm(&solve(hgt)?.value(&locator, &probe_point)?));
    }
    let fitted_exponent = (eps.len() >= 2).then(|| {
        let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
        let ys: Vec<f64> = probe_values.iter().map(|v| v.ln()).collect();
        let k = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    });

    Ok(ChainReport {
        n_subdomains: mesh.n_subdomains(),
        profile,
        crossings,
        sup_weighted,
        probe_point,
        eps,
        probe_values,
        fitted_exponent,
    })
}
