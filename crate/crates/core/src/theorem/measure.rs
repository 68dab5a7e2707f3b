use rayon::prelude::*;
use serde::Serialize;

use super::TheoremError;
use crate::access::c0_exterior_test;
use crate::domain::{DomainOracle, SampledBoundary};
use crate::dyadic::{DyadicCube, DyadicGrid};
use crate::geometry::{Ball, Point};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdrEstimate {
    /// `inf σ(Δ(x, r)) / r^n` over the used windows.
    pub c_low: f64,
    /// `sup σ(Δ(x, r)) / r^n` over the used windows.
    pub c_high: f64,
    pub used: usize,
    /// Windows outside `[10h, diam]`, off the complete region or with no mass.
    pub excluded: usize,
}

/// ADR ratios `σ(Δ(x, r))/r^n` with `n = d - 1` over `windows`.
pub fn adr_estimate(s: &SampledBoundary, windows: &[Ball]) -> Result<AdrEstimate, TheoremError> {
    let n = (s.dim() - 1) as i32;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut used = 0;
    for w in windows {
        let ok = w.radius >= 10.0 * s.h() * (1.0 - 1e-12) && w.radius <= s.diam() && s.window_ok(w);
        let mass = if ok { s.mass_in_ball(&w.center, w.radius) } else { 0.0 };
        if mass <= 0.0 {
            continue;
        }
        let ratio = mass / w.radius.powi(n);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        used += 1;
    }
    if used == 0 {
        return Err(TheoremError::Resolution("no admissible ADR window".into()));
    }
    Ok(AdrEstimate { c_low: lo, c_high: hi, used, excluded: windows.len() - used })
}

/// Membership in the bad collection: cubes failing the `c0` exterior test,
/// by generation and id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BadCollection {
    pub c0: f64,
    pub failed: Vec<Vec<bool>>,
}

pub fn bad_collection(
    g: &DyadicGrid,
    oracle: &dyn DomainOracle,
    s: &SampledBoundary,
    c0: f64,
) -> Result<BadCollection, TheoremError> {
    let failed = g
        .generations()
        .map(|cubes| {
            cubes
                .par_iter()
                .map(|q| c0_exterior_test(oracle, s, q, c0, None).map(|o| !o.pass))
                .collect::<Result<Vec<bool>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| TheoremError::Precondition(e.to_string()))?;
    Ok(BadCollection { c0, failed })
}

/// `𝔪(𝔻_Q)/σ(Q)`: the σ-mass of failing cubes inside `Q` over `σ(Q)`.
pub fn packing_ratio_with(g: &DyadicGrid, bad: &BadCollection, q: &DyadicCube) -> f64 {
    let m: f64 = g
        .descendants(q)
        .iter()
        .filter(|c| bad.failed[(c.k - g.k_min()) as usize][c.id])
        .map(|c| c.sigma)
        .sum();
    (m + 0.0) / q.sigma
}

/// [`packing_ratio_with`] for a single cube, running the `c0` test on its
/// descendants only.
pub fn packing_ratio(
    g: &DyadicGrid,
    oracle: &dyn DomainOracle,
    s: &SampledBoundary,
    q: &DyadicCube,
    c0: f64,
) -> Result<f64, TheoremError> {
    let desc = g.descendants(q);
    let flags = desc
        .par_iter()
        .map(|c| c0_exterior_test(oracle, s, c, c0, None).map(|o| !o.pass))
        .collect::<Result<Vec<bool>, _>>()
        .map_err(|e| TheoremError::Precondition(e.to_string()))?;
    let m: f64 = desc.iter().zip(flags).filter(|(_, f)| *f).map(|(c, _)| c.sigma).sum();
    Ok((m + 0.0) / q.sigma)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerEnergy {
    pub ball: Ball,
    /// Collar width in units of `h`.
    pub kappa: f64,
    pub value: f64,
    /// Lattice points kept after the collar exclusion.
    pub points: usize,
    /// Per-point contributions in lattice order.
    #[serde(skip)]
    pub contributions: Vec<(Point, f64)>,
}

/// Lattice points per radius for [`layer_energy`].
pub const ENERGY_LATTICE: usize = 64;

/// `r^{-n} Σ |∇²𝒮1(X)|² δ_S(X) · cell` over the lattice of spacing `r/64`
/// in `B` with `δ_S(X) > κh`, where `𝒮1 = Σ w_i K(X - p_i)` and `K` is the
/// fundamental solution: `log|X|/(2π)` for `d = 2`, `-1/(4π|X|)` for `d = 3`.
pub fn layer_energy(s: &SampledBoundary, ball: &Ball, kappa: f64) -> Result<LayerEnergy, TheoremError> {
    if kappa < 3.0 {
        return Err(TheoremError::Precondition(format!("collar κ = {kappa} is below 3")));
    }
    let d = s.dim();
    let r = ball.radius;
    let step = r / ENERGY_LATTICE as f64;
    let m = ENERGY_LATTICE as i64;
    let collar = kappa * s.h();
    let mut lattice = Vec::new();
    let range = -m..=m;
    for i in range.clone() {
        for j in range.clone() {
            let ks: Vec<i64> = if d == 2 { vec![0] } else { range.clone().collect() };
            for l in ks {
                let off = if d == 2 {
                    Point::xy(i as f64, j as f64)
                } else {
                    Point::xyz(i as f64, j as f64, l as f64)
                } * step;
                if off.norm() < r {
                    lattice.push(ball.center + off);
                }
            }
        }
    }
    let cell = step.powi(d as i32);
    let contributions: Vec<(Point, f64)> = lattice
        .par_iter()
        .filter_map(|x| {
            let (_, dist) = s.nearest(x)?;
            if dist <= collar {
                return None;
            }
            let hess = single_layer_hessian(s, x);
            let norm_sq: f64 = hess.iter().flatten().map(|v| v * v).sum();
            Some((*x, norm_sq * dist * cell))
        })
        .collect();
    if contributions.is_empty() {
        return Err(TheoremError::Resolution(format!("every lattice point of B(x, {r}) lies in the κh collar")));
    }
    let scale = r.powi(d as i32 - 1);
    let value = contributions.iter().map(|c| c.1).sum::<f64>() / scale;
    let contributions = contributions.into_iter().map(|(p, v)| (p, v / scale)).collect();
    Ok(LayerEnergy { ball: *ball, kappa, value, points: lattice.len(), contributions })
}

/// `∇²𝒮1(X) = Σ_i w_i ∇²K(X - p_i)`, summed in index order.
fn single_layer_hessian(s: &SampledBoundary, x: &Point) -> [[f64; 3]; 3] {
    let d = s.dim();
    let mut h = [[0.0; 3]; 3];
    for (p, w) in s.points().iter().zip(s.weights()) {
        let y = *x - *p;
        let q = y.norm_sq();
        let (a, b) = if d == 2 {
            // ∂ij log|y| / 2π = (δij |y|² - 2 yi yj) / (2π |y|⁴)
            (w / (2.0 * std::f64::consts::PI * q), -2.0 * w / (2.0 * std::f64::consts::PI * q * q))
        } else {
            // ∂ij (-1 / 4π|y|) = (δij |y|² - 3 yi yj) / (4π |y|⁵)
            let n3 = q * q.sqrt();
            (w / (4.0 * std::f64::consts::PI * n3), -3.0 * w / (4.0 * std::f64::consts::PI * n3 * q))
        };
        for i in 0..d {
            for j in 0..d {
                h[i][j] += b * y.get(i) * y.get(j) + if i == j { a } else { 0.0 };
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, sample_boundary, CorpusSpec};

    fn cloud(name: &str, h: f64) -> SampledBoundary {
        let spec: CorpusSpec = name.parse().unwrap();
        sample_boundary(&make_domain(&spec).unwrap(), h).unwrap()
    }

    #[test]
    fn kernel_hessian_is_symmetric_and_traceless() {
        for (name, x) in [("disk", Point::xy(1.3, 0.4)), ("ball3", Point::xyz(0.2, 1.4, -0.3))] {
            let s = cloud(name, 0.02);
            let h = single_layer_hessian(&s, &x);
            let d = s.dim();
            let scale: f64 = (0..d).map(|i| h[i][i].abs()).sum();
            let trace: f64 = (0..d).map(|i| h[i][i]).sum();
            assert!(trace.abs() <= 1e-12 * scale, "{name}: trace {trace}");
            for i in 0..d {
                for j in 0..d {
                    assert_eq!(h[i][j], h[j][i]);
                }
            }
        }
    }

    #[test]
    fn empty_lattice_is_a_resolution_error() {
        let s = cloud("disk", 0.01);
        let err = layer_energy(&s, &Ball { center: Point::xy(1.0, 0.0), radius: 0.02 }, 3.0).unwrap_err();
        assert!(matches!(err, TheoremError::Resolution(_)), "{err:?}");
    }

    #[test]
    fn packing_counts_failing_mass() {
        let s = cloud("halfspace", 2f64.powi(-8));
        let g = crate::dyadic::build_grid(&s, 1, 3).unwrap();
        let mut failed: Vec<Vec<bool>> = g.generations().map(|c| vec![false; c.len()]).collect();
        let top = &g.generation(1)[0];
        assert_eq!(packing_ratio_with(&g, &BadCollection { c0: 0.01, failed: failed.clone() }, top), 0.0);
        for f in failed.iter_mut() {
            f.iter_mut().for_each(|b| *b = true);
        }
        // Every generation below `top` tiles it, so each contributes σ(top).
        let all = packing_ratio_with(&g, &BadCollection { c0: 0.01, failed }, top);
        assert!((all - 3.0).abs() < 1e-9, "{all}");
    }
}
