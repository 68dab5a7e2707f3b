//! Bilateral β-numbers, the bad set of non-flat cubes, its Carleson norm and
//! the scan for a flat window inside a ball.

mod beta;

pub use beta::{bbeta, bbeta_with, beta_lower_bound, BetaOptions, BetaRecord};

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::domain::SampledBoundary;
use crate::dyadic::{cube_window, DyadicGrid};
use crate::geometry::{Ball, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlatnessError {
    #[error("need at least {need} samples in the window, found {got}")]
    InsufficientData { got: usize, need: usize },
    #[error("radius {r} is below the trusted scale {min}")]
    RadiusBelowResolution { r: f64, min: f64 },
    #[error("window of radius {r} leaves the sampled region")]
    Truncated { r: f64 },
    #[error("{0}")]
    Geometry(String),
}

/// Default dilation between a cube and its β window.
pub const DEFAULT_DILATION: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CubeFlag {
    Flagged,
    Clean,
    /// β could not be evaluated; counted as clean.
    Untested,
}

/// β of every cube's window `B(x_Q, A ℓ(Q))`, by generation and cube id.
#[derive(Debug, Clone)]
pub struct CubeBetas {
    pub dilation: f64,
    pub theta: f64,
    pub k_min: i32,
    pub records: Vec<Vec<Result<BetaRecord, FlatnessError>>>,
}

pub fn cube_betas(g: &DyadicGrid, s: &SampledBoundary, dilation: f64, opts: &BetaOptions) -> CubeBetas {
    let records = g
        .generations()
        .map(|cubes| {
            cubes
                .par_iter()
                .map(|q| {
                    let w = cube_window(q, dilation);
                    bbeta_with(s, &w.center, w.radius, opts, &[])
                })
                .collect()
        })
        .collect();
    CubeBetas { dilation, theta: opts.theta, k_min: g.k_min(), records }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BadSet {
    pub eps: f64,
    pub dilation: f64,
    pub k_min: i32,
    pub flags: Vec<Vec<CubeFlag>>,
}

/// Flags cubes whose computed β is at least `eps`.
pub fn flag_cubes(betas: &CubeBetas, eps: f64) -> BadSet {
    let flags = betas
        .records
        .iter()
        .map(|gen| {
            gen.iter()
                .map(|r| match r {
                    Ok(b) if b.value >= eps => CubeFlag::Flagged,
                    Ok(_) => CubeFlag::Clean,
                    Err(_) => CubeFlag::Untested,
                })
                .collect()
        })
        .collect();
    BadSet { eps, dilation: betas.dilation, k_min: betas.k_min, flags }
}

/// The bad set at `eps` with the net resolution `θ = ε/8`.
pub fn bad_set(g: &DyadicGrid, s: &SampledBoundary, eps: f64, dilation: f64) -> BadSet {
    flag_cubes(&cube_betas(g, s, dilation, &BetaOptions::for_eps(eps)), eps)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopRatio {
    pub id: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarlesonReport {
    pub eps: f64,
    pub dilation: f64,
    pub k_min: i32,
    pub k_max: i32,
    /// `𝔠(Q)` for each cube of the coarsest generation.
    pub ratios: Vec<TopRatio>,
    pub norm: f64,
    pub flagged_per_generation: Vec<usize>,
    pub untested_per_generation: Vec<usize>,
}

/// `𝔠(Q) = ln 2 · Σ_{Q' ⊆ Q flagged} σ(Q') / σ(Q)`: each generation is one
/// `dt/t` layer of height `ln 2`. The norm is the largest ratio over the
/// coarsest generation.
pub fn carleson_norm(g: &DyadicGrid, bad: &BadSet) -> CarlesonReport {
    let flag = |k: i32, id: usize| bad.flags[(k - g.k_min()) as usize][id];
    let ratios: Vec<TopRatio> = g
        .generation(g.k_min())
        .iter()
        .map(|q| {
            let flagged: f64 = g
                .descendants(q)
                .iter()
                .filter(|c| flag(c.k, c.id) == CubeFlag::Flagged)
                .map(|c| c.sigma)
                .sum();
            // `+ 0.0` turns the empty sum's -0.0 into 0.0.
            TopRatio { id: q.id, ratio: std::f64::consts::LN_2 * (flagged + 0.0) / q.sigma }
        })
        .collect();
    let norm = ratios.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let count = |f: CubeFlag| bad.flags.iter().map(|g| g.iter().filter(|&&x| x == f).count()).collect();
    CarlesonReport {
        eps: bad.eps,
        dilation: bad.dilation,
        k_min: g.k_min(),
        k_max: g.k_max(),
        ratios,
        norm,
        flagged_per_generation: count(CubeFlag::Flagged),
        untested_per_generation: count(CubeFlag::Untested),
    }
}

/// A flat window found by [`low_beta_window`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowBetaWindow {
    pub y: Point,
    pub s: f64,
    pub record: BetaRecord,
}

/// Scans `s = r/4, r/8, …` down to `10h` and, at each scale, the samples
/// `y ∈ Δ(x, r/2)` in index order; returns the first window with
/// `β(y, s) < eps`. Windows whose lower bound already reaches `eps` are
/// skipped without computing the full value.
pub fn low_beta_window(
    s: &SampledBoundary,
    x: &Point,
    r: f64,
    eps: f64,
) -> Result<Option<LowBetaWindow>, FlatnessError> {
    if r < 40.0 * s.h() * (1.0 - 1e-12) {
        return Err(FlatnessError::RadiusBelowResolution { r, min: 40.0 * s.h() });
    }
    let opts = BetaOptions::for_eps(eps);
    let ys = s.within(x, r / 2.0);
    let mut scale = r / 4.0;
    while scale >= 10.0 * s.h() * (1.0 - 1e-12) {
        let found = ys.par_iter().find_map_first(|&i| {
            let y = s.points()[i];
            let ball = Ball { center: y, radius: scale };
            if !s.window_ok(&ball) || y.dist(x) + scale > r {
                return None;
            }
            if beta_lower_bound(s, &y, scale, &opts).map_or(true, |lb| lb >= eps) {
                return None;
            }
            match bbeta_with(s, &y, scale, &opts, &[]) {
                Ok(rec) if rec.value < eps => Some(LowBetaWindow { y, s: scale, record: rec }),
                _ => None,
            }
        });
        if found.is_some() {
            return Ok(found);
        }
        scale /= 2.0;
    }
    Ok(None)
}

/// β CSV: `k,ell,x1,x2[,x3],bbeta,flagged` per cube; untested cubes have an
/// empty β and `flagged = untested`.
pub fn write_beta_csv<W: Write>(mut out: W, g: &DyadicGrid, betas: &CubeBetas, bad: &BadSet) -> std::io::Result<()> {
    let dim = g.generation(g.k_min())[0].x.dim();
    let coords = ["x1", "x2", "x3"][..dim].join(",");
    writeln!(out, "k,ell,{coords},bbeta,flagged")?;
    for (gi, cubes) in g.generations().enumerate() {
        for q in cubes {
            let xs: Vec<String> = q.x.coords().iter().map(|c| c.to_string()).collect();
            let (val, flag) = match (&betas.records[gi][q.id], bad.flags[gi][q.id]) {
                (Ok(b), CubeFlag::Flagged) => (b.value.to_string(), "1"),
                (Ok(b), _) => (b.value.to_string(), "0"),
                (Err(_), _) => (String::new(), "untested"),
            };
            writeln!(out, "{},{},{},{},{}", q.k, q.ell, xs.join(","), val, flag)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, sample_boundary, CorpusSpec};
    use crate::dyadic::build_grid;

    fn cloud(name: &str, h: f64) -> SampledBoundary {
        let spec: CorpusSpec = name.parse().unwrap();
        sample_boundary(&make_domain(&spec).unwrap(), h).unwrap()
    }

    #[test]
    fn line_has_no_bad_cubes() {
        // The P-to-E term carries a sampling slack of about 1.5h/r, so ε = 0.01
        // is resolvable only on windows with r > 150h.
        let s = cloud("halfspace", 2f64.powi(-10));
        let g = build_grid(&s, 1, 3).unwrap();
        let bad = bad_set(&g, &s, 0.01, DEFAULT_DILATION);
        assert!(bad.flags.iter().flatten().all(|&f| f != CubeFlag::Flagged));
        assert_eq!(carleson_norm(&g, &bad).norm, 0.0);
    }

    #[test]
    fn circle_flags_only_coarse_generations() {
        let s = cloud("disk", 2f64.powi(-10));
        let g = build_grid(&s, 1, 6).unwrap();
        let bad = bad_set(&g, &s, 0.1, DEFAULT_DILATION);
        let rep = carleson_norm(&g, &bad);
        // β ≈ Aℓ/2 crosses 0.1 near ℓ = 0.1, so generations with ℓ <= 1/32 are clean.
        for k in 5..=6 {
            assert_eq!(rep.flagged_per_generation[(k - 1) as usize], 0, "generation {k}");
        }
        let flagged_gens = rep.flagged_per_generation.iter().filter(|&&n| n > 0).count();
        assert!(rep.norm <= std::f64::consts::LN_2 * flagged_gens as f64 + 1e-12);
    }

    #[test]
    fn norm_is_monotone_in_eps() {
        let s = cloud("cantor:2", 2f64.powi(-9));
        let g = build_grid(&s, 0, 5).unwrap();
        let betas = cube_betas(&g, &s, DEFAULT_DILATION, &BetaOptions::for_eps(0.05));
        let norms: Vec<f64> =
            [0.05, 0.1, 0.2, 0.4].iter().map(|&e| carleson_norm(&g, &flag_cubes(&betas, e)).norm).collect();
        assert!(norms.windows(2).all(|w| w[0] >= w[1]), "{norms:?}");
    }

    #[test]
    fn flat_window_on_the_line_is_immediate() {
        let s = cloud("halfspace", 0.001);
        let x = Point::xy(0.0, 0.0);
        let w = low_beta_window(&s, &x, 0.4, 0.1).unwrap().unwrap();
        assert_eq!(w.s, 0.1);
        let first = s.within(&x, 0.2)[0];
        assert_eq!(w.y, s.points()[first]);
    }

    #[test]
    fn csv_has_one_row_per_cube() {
        let s = cloud("halfspace", 2f64.powi(-8));
        let g = build_grid(&s, 1, 4).unwrap();
        let betas = cube_betas(&g, &s, DEFAULT_DILATION, &BetaOptions::for_eps(0.1));
        let bad = flag_cubes(&betas, 0.1);
        let mut out = Vec::new();
        write_beta_csv(&mut out, &g, &betas, &bad).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), g.len() + 1);
        assert!(text.starts_with("k,ell,x1,x2,bbeta,flagged\n"));
    }
}
