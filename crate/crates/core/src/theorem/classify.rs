use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::measure::{adr_estimate, bad_collection, layer_energy, packing_ratio_with, AdrEstimate};
use super::{AnalysisConfig, TheoremError};
use crate::access::{exterior_corkscrew, good_curve, interior_corkscrew};
use crate::domain::{make_domain, sample_boundary, CorpusSpec, DomainOracle, SampledBoundary};
use crate::dyadic::{analysis_range, build_grid, DyadicGrid};
use crate::flatness::{carleson_norm, cube_betas, flag_cubes, BetaOptions, CubeFlag};
use crate::geometry::{Ball, Point};

/// Version of the report layout; bumped on any field change.
pub const SCHEMA_VERSION: u32 = 1;

/// JSON Schema every serialized [`ClassificationReport`] validates against.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Untested,
}

impl Status {
    /// Three-valued conjunction: any failure fails, then any gap is untested.
    pub fn and(self, other: Status) -> Status {
        match (self, other) {
            (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
            (Status::Untested, _) | (_, Status::Untested) => Status::Untested,
            _ => Status::Pass,
        }
    }

    fn from_bool(b: bool) -> Status {
        if b {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Untested => "untested",
        })
    }
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |x| x.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub statistic: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

/// Verdicts hold at the tested scales `scale_range` only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdicts {
    pub scale_range: [f64; 2],
    pub adr: Verdict,
    pub ur_diagnostic: Verdict,
    pub uniform: Verdict,
    pub nta: Verdict,
    pub chord_arc: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecEntry {
    pub label: String,
    pub corpus: Option<CorpusSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdrSection {
    pub estimate: Option<AdrEstimate>,
    pub error: Option<String>,
}

/// Corkscrew constants of one window; `None` when no point was found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRecord {
    pub x: Point,
    pub r: f64,
    pub interior: Option<f64>,
    pub exterior: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorkscrewSection {
    pub windows: Vec<WindowRecord>,
    pub interior_min: Option<f64>,
    pub exterior_min: Option<f64>,
    /// Smallest window radius whose exterior constant misses the threshold.
    pub exterior_failure_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    pub x: Point,
    pub y: Point,
    /// `|X - Y| / min(δ(X), δ(Y))`.
    pub lambda: f64,
    pub length_ratio: Option<f64>,
    pub cigar: Option<f64>,
    pub case_trace: Vec<String>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSection {
    pub pairs: Vec<PairRecord>,
    pub length_ratio_max: Option<f64>,
    pub cigar_min: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BwglEntry {
    pub eps: f64,
    pub norm: f64,
    pub flagged_per_generation: Vec<usize>,
    pub untested_per_generation: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BwglSection {
    pub k_min: Option<i32>,
    pub k_max: Option<i32>,
    pub dilation: f64,
    pub theta: Option<f64>,
    pub entries: Vec<BwglEntry>,
    pub tail_eps: f64,
    /// Mean of `ln 2 · σ(flagged)/σ(tested)` over the two finest generations.
    pub tail: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingEntry {
    pub c0: f64,
    /// Packing ratio of each coarsest-generation cube.
    pub ratios: Vec<f64>,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingSection {
    pub entries: Vec<PackingEntry>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyEntry {
    pub x: Point,
    pub r: f64,
    pub kappa: f64,
    pub value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub chordarc: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub h: f64,
    pub versions: Versions,
    pub schema_version: u32,
}

/// Full classifier output; serializes with this exact field order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub spec: SpecEntry,
    pub config: AnalysisConfig,
    pub adr: AdrSection,
    pub corkscrews: Option<CorkscrewSection>,
    pub curves: Option<CurveSection>,
    pub bwgl: BwglSection,
    pub packing: Option<PackingSection>,
    pub layer_energy: Vec<EnergyEntry>,
    pub verdicts: Verdicts,
    pub provenance: Provenance,
}

/// Samples `spec` at `cfg.h` and classifies it with its own oracle.
pub fn classify_domain(spec: &CorpusSpec, cfg: &AnalysisConfig) -> Result<ClassificationReport, TheoremError> {
    cfg.validate()?;
    let d = make_domain(spec).map_err(|e| TheoremError::Precondition(e.to_string()))?;
    let s = sample_boundary(&d, cfg.h).map_err(|e| TheoremError::Precondition(e.to_string()))?;
    let entry = SpecEntry { label: spec.to_string(), corpus: Some(spec.clone()) };
    classify_cloud(entry, &s, Some(&d), cfg)
}

/// Window balls for the sweeps. Every cube of every generation whose window
/// radius `Aℓ` lies in `[r_min, r_max]` contributes `B(y, Aℓ)` with `y` a
/// random member sample within `ℓ/4` of `x_Q`, coarse generations first; the
/// windows then cover the boundary at each tested dyadic scale. Random
/// windows with log-uniform radii top the list up to `n`.
pub fn sweep_windows(
    s: &SampledBoundary,
    g: &DyadicGrid,
    n: usize,
    r_min: f64,
    r_max: f64,
    dilation: f64,
    seed: u64,
) -> Vec<Ball> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fits = |x: &Point, r: f64| s.complete().map_or(true, |b| b.inner_margin(x) >= r);
    let mut out = Vec::new();
    for cubes in g.generations() {
        let Some(first) = cubes.first() else { continue };
        let r = dilation * first.ell;
        if r < r_min * (1.0 - 1e-12) || r > r_max * (1.0 + 1e-12) {
            continue;
        }
        for q in cubes {
            let near = s.within(&q.x, q.ell / 4.0);
            let near: Vec<usize> = near.into_iter().filter(|i| q.members.binary_search(i).is_ok()).collect();
            let x = if near.is_empty() { q.x } else { s.points()[near[rng.gen_range(0..near.len())]] };
            if fits(&x, r) {
                out.push(Ball { center: x, radius: r });
            }
        }
    }
    let mut attempts = 0;
    while out.len() < n && attempts < 100 * n {
        attempts += 1;
        let x = s.points()[rng.gen_range(0..s.len())];
        let u: f64 = rng.gen();
        let r = r_min * (r_max / r_min).powf(u);
        if fits(&x, r) {
            out.push(Ball { center: x, radius: r });
        }
    }
    out
}

fn min_opt(it: impl Iterator<Item = f64>) -> Option<f64> {
    it.fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
}

fn max_opt(it: impl Iterator<Item = f64>) -> Option<f64> {
    it.fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
}

/// Runs every stage on a sampled boundary. Accessibility stages need
/// `oracle`; without it their verdicts are untested.
pub fn classify_cloud(
    spec: SpecEntry,
    s: &SampledBoundary,
    oracle: Option<&dyn DomainOracle>,
    cfg: &AnalysisConfig,
) -> Result<ClassificationReport, TheoremError> {
    cfg.validate()?;
    let th = &cfg.thresholds;
    let h = s.h();
    let r_min = cfg.r_min.unwrap_or(20.0 * h).max(10.0 * h);
    let r_max = cfg.r_max.unwrap_or(s.diam() / 4.0);
    if r_min > r_max {
        return Err(TheoremError::Precondition(format!("scale range [{r_min}, {r_max}] is empty")));
    }
    let (k0, k1) = analysis_range(s);
    let (k_min, k_max) = (cfg.k_min.unwrap_or(k0), cfg.k_max.unwrap_or(k1));
    let grid = build_grid(s, k_min, k_max).map_err(|e| TheoremError::Resolution(e.to_string()))?;
    let windows = sweep_windows(s, &grid, cfg.windows, r_min, r_max, cfg.dilation, cfg.seed);

    let adr = match adr_estimate(s, &windows) {
        Ok(e) => AdrSection { estimate: Some(e), error: None },
        Err(e) => AdrSection { estimate: None, error: Some(e.to_string()) },
    };
    let bwgl = bwgl_section(s, &grid, cfg);
    let corkscrews = oracle.map(|o| corkscrew_section(o, &windows, cfg));
    let curves = match (oracle, &corkscrews) {
        (Some(o), Some(c)) => Some(curve_section(o, c, cfg)),
        _ => None,
    };
    let packing = oracle.map(|o| packing_section(o, s, &grid, cfg));
    let layer_energy = energy_section(s, &windows, cfg);

    // Verdicts.
    let scale_range = [r_min, r_max];
    let adr_v = match &adr.estimate {
        Some(e) => {
            let stat = e.c_high.max(1.0 / e.c_low);
            Verdict {
                status: Status::from_bool(stat <= th.adr_c),
                statistic: Some(stat),
                threshold: Some(th.adr_c),
                detail: format!("σ(Δ)/r^n in [{}, {}] over {} windows", e.c_low, e.c_high, e.used),
            }
        }
        None => untested(adr.error.clone().unwrap_or_default()),
    };
    let ur_v = match (adr_v.status, bwgl.tail) {
        (Status::Fail, _) => Verdict { status: Status::Fail, statistic: bwgl.tail, threshold: Some(th.ur_tail), detail: "boundary is not ADR".into() },
        (_, None) => untested("no tested cube in the two finest generations".into()),
        (a, Some(t)) => Verdict {
            status: a.and(Status::from_bool(t <= th.ur_tail)),
            statistic: Some(t),
            threshold: Some(th.ur_tail),
            detail: format!("Carleson increment of the two finest generations at ε = {}", th.ur_eps),
        },
    };
    let uniform_v = match (&corkscrews, &curves) {
        (Some(c), Some(cv)) => {
            let int_ok = c.interior_min.map_or(false, |v| v >= th.corkscrew_min);
            let len_ok = cv.length_ratio_max.map_or(false, |v| v <= th.curve_length_max);
            let cig_ok = cv.cigar_min.map_or(false, |v| v >= th.curve_cigar_min);
            let ok = int_ok && len_ok && cig_ok && cv.failures == 0;
            Verdict {
                status: Status::from_bool(ok),
                statistic: c.interior_min,
                threshold: Some(th.corkscrew_min),
                detail: format!(
                    "interior corkscrew min {}; good curves: {} failures, C max {}, c min {}",
                    show(c.interior_min),
                    cv.failures,
                    show(cv.length_ratio_max),
                    show(cv.cigar_min)
                ),
            }
        }
        _ => untested("no domain oracle".into()),
    };
    let exterior = match &corkscrews {
        Some(c) => Status::from_bool(c.exterior_min.map_or(false, |v| v >= th.exterior_min)),
        None => Status::Untested,
    };
    let nta_v = Verdict {
        status: uniform_v.status.and(exterior),
        statistic: corkscrews.as_ref().and_then(|c| c.exterior_min),
        threshold: Some(th.exterior_min),
        detail: format!(
            "uniform {}; exterior corkscrew min {}, failing from r = {}",
            uniform_v.status,
            show(corkscrews.as_ref().and_then(|c| c.exterior_min)),
            show(corkscrews.as_ref().and_then(|c| c.exterior_failure_scale))
        ),
    };
    let chord_arc_v = Verdict {
        status: nta_v.status.and(adr_v.status),
        statistic: None,
        threshold: None,
        detail: format!("NTA {} and ADR {}", nta_v.status, adr_v.status),
    };
    let verdicts = Verdicts { scale_range, adr: adr_v, ur_diagnostic: ur_v, uniform: uniform_v, nta: nta_v, chord_arc: chord_arc_v };
    let provenance = Provenance {
        seed: cfg.seed,
        h,
        versions: Versions { chordarc: env!("CARGO_PKG_VERSION").to_string() },
        schema_version: SCHEMA_VERSION,
    };
    Ok(ClassificationReport {
        spec,
        config: cfg.clone(),
        adr,
        corkscrews,
        curves,
        bwgl,
        packing,
        layer_energy,
        verdicts,
        provenance,
    })
}

fn untested(detail: String) -> Verdict {
    Verdict { status: Status::Untested, statistic: None, threshold: None, detail }
}

fn bwgl_section(s: &SampledBoundary, g: &DyadicGrid, cfg: &AnalysisConfig) -> BwglSection {
    let tail_eps = cfg.thresholds.ur_eps;
    let theta_eps = cfg.eps_grid.iter().copied().fold(tail_eps, f64::min);
    let opts = BetaOptions::for_eps(theta_eps);
    let betas = cube_betas(g, s, cfg.dilation, &opts);
    let entries = cfg
        .eps_grid
        .iter()
        .map(|&eps| {
            let rep = carleson_norm(g, &flag_cubes(&betas, eps));
            BwglEntry {
                eps,
                norm: rep.norm,
                flagged_per_generation: rep.flagged_per_generation,
                untested_per_generation: rep.untested_per_generation,
            }
        })
        .collect();
    let bad = flag_cubes(&betas, tail_eps);
    let mut incs = Vec::new();
    for k in (g.k_min().max(g.k_max() - 1)..=g.k_max()).rev() {
        let flags = &bad.flags[(k - g.k_min()) as usize];
        let (mut flagged, mut tested) = (0.0, 0.0);
        for q in g.generation(k) {
            match flags[q.id] {
                CubeFlag::Flagged => {
                    flagged += q.sigma;
                    tested += q.sigma;
                }
                CubeFlag::Clean => tested += q.sigma,
                CubeFlag::Untested => {}
            }
        }
        if tested > 0.0 {
            incs.push(std::f64::consts::LN_2 * flagged / tested);
        }
    }
    let tail = (!incs.is_empty()).then(|| incs.iter().sum::<f64>() / incs.len() as f64);
    BwglSection {
        k_min: Some(g.k_min()),
        k_max: Some(g.k_max()),
        dilation: cfg.dilation,
        theta: Some(opts.theta),
        entries,
        tail_eps,
        tail,
        error: None,
    }
}

fn corkscrew_section(o: &dyn DomainOracle, windows: &[Ball], cfg: &AnalysisConfig) -> CorkscrewSection {
    let records: Vec<WindowRecord> = windows
        .par_iter()
        .map(|w| {
            let step = w.radius * cfg.corkscrew_step;
            let int = interior_corkscrew(o, &w.center, w.radius, step).ok().flatten();
            let ext = exterior_corkscrew(o, &w.center, w.radius, step).ok().flatten();
            WindowRecord {
                x: w.center,
                r: w.radius,
                interior: Some(int.map_or(0.0, |c| c.constant)),
                exterior: Some(ext.map_or(0.0, |c| c.constant)),
            }
        })
        .collect();
    let interior_min = min_opt(records.iter().filter_map(|r| r.interior));
    let exterior_min = min_opt(records.iter().filter_map(|r| r.exterior));
    let exterior_failure_scale = min_opt(
        records
            .iter()
            .filter(|r| r.exterior.map_or(true, |c| c < cfg.thresholds.exterior_min))
            .map(|r| r.r),
    );
    CorkscrewSection { windows: records, interior_min, exterior_min, exterior_failure_scale }
}

/// Pair `j` joins the interior corkscrew point of a window `(x, r)` to that of
/// `(x, r/Λ_j)` with `Λ_j = Λ_max^{(j+1)/P}`.
fn curve_section(o: &dyn DomainOracle, c: &CorkscrewSection, cfg: &AnalysisConfig) -> CurveSection {
    let p = cfg.pairs;
    let jobs: Vec<(usize, f64)> = (0..p)
        .map(|j| {
            let w = j * c.windows.len() / p;
            (w, cfg.lambda_max.powf((j + 1) as f64 / p as f64))
        })
        .collect();
    let pairs: Vec<PairRecord> = jobs
        .par_iter()
        .filter_map(|&(wi, lambda)| {
            let w = c.windows.get(wi)?;
            let fail = |x: Point, y: Point, m: String| PairRecord {
                x,
                y,
                lambda,
                length_ratio: None,
                cigar: None,
                case_trace: vec![],
                failure: Some(m),
            };
            let step = |r: f64| r * cfg.corkscrew_step;
            let Some(cx) = interior_corkscrew(o, &w.x, w.r, step(w.r)).ok().flatten() else {
                return Some(fail(w.x, w.x, format!("no interior corkscrew in B(x, {})", w.r)));
            };
            let ry = w.r / lambda;
            let Some(cy) = interior_corkscrew(o, &w.x, ry, step(ry)).ok().flatten() else {
                return Some(fail(cx.point, w.x, format!("no interior corkscrew in B(x, {ry})")));
            };
            let (x, y) = (cx.point, cy.point);
            if x == y {
                return None;
            }
            let lam = x.dist(&y) / o.boundary_distance(&x).min(o.boundary_distance(&y));
            Some(match good_curve(o, &x, &y, cfg.curve_step) {
                Ok(g) => PairRecord {
                    x,
                    y,
                    lambda: lam,
                    length_ratio: Some(g.length_ratio),
                    cigar: Some(g.cigar),
                    case_trace: g.case_trace,
                    failure: None,
                },
                Err(e) => PairRecord { lambda: lam, ..fail(x, y, e.to_string()) },
            })
        })
        .collect();
    let failures = pairs.iter().filter(|p| p.failure.is_some()).count();
    CurveSection {
        length_ratio_max: max_opt(pairs.iter().filter_map(|p| p.length_ratio)),
        cigar_min: min_opt(pairs.iter().filter_map(|p| p.cigar)),
        failures,
        pairs,
    }
}

fn packing_section(o: &dyn DomainOracle, s: &SampledBoundary, g: &DyadicGrid, cfg: &AnalysisConfig) -> PackingSection {
    let mut entries = Vec::new();
    for &c0 in &cfg.c0_grid {
        match bad_collection(g, o, s, c0) {
            Ok(bad) => {
                let ratios: Vec<f64> = g.generation(g.k_min()).iter().map(|q| packing_ratio_with(g, &bad, q)).collect();
                let max = ratios.iter().copied().fold(0.0, f64::max) + 0.0;
                entries.push(PackingEntry { c0, ratios, max });
            }
            Err(e) => return PackingSection { entries, error: Some(e.to_string()) },
        }
    }
    PackingSection { entries, error: None }
}

/// Energies on the `energy_windows` largest sweep windows.
fn energy_section(s: &SampledBoundary, windows: &[Ball], cfg: &AnalysisConfig) -> Vec<EnergyEntry> {
    let mut order: Vec<usize> = (0..windows.len()).collect();
    order.sort_by(|&a, &b| windows[b].radius.total_cmp(&windows[a].radius).then(a.cmp(&b)));
    order
        .into_iter()
        .take(cfg.energy_windows)
        .map(|i| {
            let w = &windows[i];
            let (value, error) = match layer_energy(s, w, cfg.kappa) {
                Ok(e) => (Some(e.value), None),
                Err(e) => (None, Some(e.to_string())),
            };
            EnergyEntry { x: w.center, r: w.radius, kappa: cfg.kappa, value, error }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, sample_boundary};
    use crate::dyadic::build_grid;

    #[test]
    fn three_valued_and() {
        use Status::*;
        assert_eq!(Pass.and(Pass), Pass);
        assert_eq!(Pass.and(Untested), Untested);
        assert_eq!(Untested.and(Fail), Fail);
        assert_eq!(Fail.and(Pass), Fail);
    }

    #[test]
    fn windows_cover_every_tested_generation() {
        let spec: CorpusSpec = "disk".parse().unwrap();
        let s = sample_boundary(&make_domain(&spec).unwrap(), 0.005).unwrap();
        let g = build_grid(&s, 1, 4).unwrap();
        let w = sweep_windows(&s, &g, 10, 0.1, 0.5, 2.0, 0);
        let cubes: usize = (2..=4).map(|k| g.generation(k).len()).sum();
        assert_eq!(w.len(), cubes);
        for q in g.generation(4) {
            assert!(w.iter().any(|b| b.radius == 2.0 * q.ell && b.center.dist(&q.x) < q.ell / 4.0));
        }
        assert_eq!(w, sweep_windows(&s, &g, 10, 0.1, 0.5, 2.0, 0));
    }
}
