use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use super::{chain_to_curve, harnack_chain, interior_corkscrew, AccessError};
use crate::domain::DomainOracle;
use crate::geometry::{Point, Polyline};

/// Samples per segment for the measured constants.
pub const CURVE_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodCurve {
    pub curve: Polyline,
    /// `ℓ(γ)/|X - Y|`.
    pub length_ratio: f64,
    /// `min δ(Z)/dist(Z, {X, Y})` over the curve samples.
    pub cigar: f64,
    pub case_trace: Vec<String>,
}

/// A good-curve construction that could not complete; `stage` names the
/// failing sub-search.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("good curve failed at {stage}: {reason}")]
pub struct GoodCurveFailure {
    pub stage: String,
    pub reason: String,
}

fn fail(stage: impl Into<String>, reason: impl ToString) -> GoodCurveFailure {
    GoodCurveFailure { stage: stage.into(), reason: reason.to_string() }
}

/// `C = ℓ(γ)/|X - Y|` and `c = min δ(Z)/dist(Z, {X, Y})` over
/// [`CURVE_SAMPLES`] points per segment; samples at an endpoint are skipped.
pub fn curve_constants(oracle: &dyn DomainOracle, curve: &Polyline) -> (f64, f64) {
    let (x, y) = (curve.start(), curve.end());
    let chord = x.dist(&y);
    let big_c = if chord > 0.0 { curve.length() / chord } else { 1.0 };
    let mut small_c = f64::INFINITY;
    for z in curve.densify(CURVE_SAMPLES) {
        let d = z.dist(&x).min(z.dist(&y));
        if d > 0.0 {
            small_c = small_c.min(oracle.boundary_distance(&z) / d);
        }
    }
    (big_c, small_c)
}

/// Dyadic exponent `j` with `2^j <= t < 2^(j+1)`.
fn dyadic_exp(t: f64) -> i32 {
    let mut j = t.log2().floor() as i32;
    if 2f64.powi(j) > t {
        j -= 1;
    } else if 2f64.powi(j + 1) <= t {
        j += 1;
    }
    j
}

struct Ladder {
    points: Vec<Point>,
    /// Measured corkscrew constant of each rung, starting at `2^start`.
    constants: Vec<f64>,
    start: i32,
}

/// `X_i` corkscrew relative to `B(q, 2^i)` for `j + 2 <= i <= k`, with the
/// first rung forced to be `p` itself.
fn ladder(oracle: &dyn DomainOracle, p: &Point, j: i32, k: i32, tag: &str) -> Result<Ladder, GoodCurveFailure> {
    let q = oracle.nearest_boundary(p).ok_or_else(|| fail(format!("{tag}.nearest_boundary"), "oracle has no projection"))?;
    let r0 = 2f64.powi(j + 2);
    let c0 = oracle.boundary_distance(p).min(r0 - p.dist(&q)) / r0;
    if !(c0 > 0.0) {
        return Err(fail(format!("{tag}.rung[{}]", j + 2), "forced rung is not a corkscrew point"));
    }
    let mut points = vec![*p];
    let mut constants = vec![c0];
    for i in j + 3..=k {
        let r = 2f64.powi(i);
        let cert = interior_corkscrew(oracle, &q, r, r / 40.0)
            .map_err(|e| fail(format!("{tag}.rung[{i}]"), e))?
            .ok_or_else(|| fail(format!("{tag}.rung[{i}]"), "no interior corkscrew point"))?;
        points.push(cert.point);
        constants.push(cert.constant);
    }
    let c = constants.iter().copied().fold(f64::INFINITY, f64::min);
    for (n, w) in points.windows(2).enumerate() {
        let i = j + 2 + n as i32;
        let scale = 2f64.powi(i);
        let near = w[0].dist(&w[1]) <= 4.0 * scale;
        let deep = oracle.boundary_distance(&w[0]).min(oracle.boundary_distance(&w[1])) >= c * scale - 1e-12;
        if !(near && deep) {
            return Err(fail(format!("{tag}.rung[{i}]"), "consecutive rungs break the ladder bounds"));
        }
    }
    Ok(Ladder { points, constants, start: j + 2 })
}

fn chain_curve(
    oracle: &dyn DomainOracle,
    a: &Point,
    b: &Point,
    lattice_step: f64,
    stage: &str,
) -> Result<Polyline, GoodCurveFailure> {
    let step = lattice_step * oracle.boundary_distance(a).min(oracle.boundary_distance(b));
    let chain = harnack_chain(oracle, a, b, step)
        .map_err(|e| fail(stage, e))?
        .ok_or_else(|| fail(stage, "endpoints are not joined by a Harnack chain"))?;
    Ok(chain_to_curve(&chain))
}

fn ladder_curve(
    oracle: &dyn DomainOracle,
    l: &Ladder,
    lattice_step: f64,
    tag: &str,
) -> Result<Option<Polyline>, GoodCurveFailure> {
    let mut out: Option<Polyline> = None;
    for (n, w) in l.points.windows(2).enumerate() {
        let piece = chain_curve(oracle, &w[0], &w[1], lattice_step, &format!("{tag}.chain[{}]", l.start + n as i32))?;
        out = Some(match out {
            Some(c) => c.join(&piece),
            None => piece,
        });
    }
    Ok(out)
}

/// Good curve from `x` to `y` following the three-case construction.
///
/// Case 1 (`|X - Y| <= min δ / 2`) is the segment. Case 2
/// (`k <= min(j_X, j_Y) + 2`) is one Harnack chain. Otherwise corkscrew
/// ladders climb from each endpoint with `j + 2 <= k` to scale `2^k` and a
/// top chain joins their last rungs. Harnack chains run on a lattice of
/// spacing `lattice_step · min δ` of their endpoints.
pub fn good_curve(oracle: &dyn DomainOracle, x: &Point, y: &Point, lattice_step: f64) -> Result<GoodCurve, GoodCurveFailure> {
    if !(lattice_step > 0.0 && lattice_step < 1.0) {
        return Err(fail("input", AccessError::InvalidStep { step: lattice_step, max: 1.0 }));
    }
    for (p, tag) in [(x, "x"), (y, "y")] {
        if !oracle.is_inside(p) || oracle.boundary_distance(p) <= 0.0 {
            return Err(fail(format!("input.{tag}"), AccessError::NotInside(*p)));
        }
    }
    let (dx, dy) = (oracle.boundary_distance(x), oracle.boundary_distance(y));
    let dist = x.dist(y);
    let mut trace = Vec::new();
    let curve = if dist <= 0.5 * dx.min(dy) {
        trace.push("case1".to_string());
        let end = if dist > 0.0 { *y } else { *x };
        Polyline::new(vec![*x, end]).map_err(|e| fail("case1", e))?
    } else {
        let k = dyadic_exp(dist);
        let (jx, jy) = (dyadic_exp(dx), dyadic_exp(dy));
        if k <= (jx + 2).min(jy + 2) {
            trace.push(format!("case2 k={k} jx={jx} jy={jy}"));
            chain_curve(oracle, x, y, lattice_step, "case2.chain")?
        } else {
            trace.push(format!("case3 k={k} jx={jx} jy={jy}"));
            let lx = if jx + 2 <= k { Some(ladder(oracle, x, jx, k, "ladder_x")?) } else { None };
            let ly = if jy + 2 <= k { Some(ladder(oracle, y, jy, k, "ladder_y")?) } else { None };
            for (l, tag) in [(&lx, "ladder_x"), (&ly, "ladder_y")] {
                if let Some(l) = l {
                    let c = l.constants.iter().copied().fold(f64::INFINITY, f64::min);
                    trace.push(format!("{tag} rungs={}..={} c={c:.4}", l.start, l.start + l.points.len() as i32 - 1));
                }
            }
            let top_x = lx.as_ref().map_or(*x, |l| *l.points.last().unwrap());
            let top_y = ly.as_ref().map_or(*y, |l| *l.points.last().unwrap());
            trace.push(if ly.is_some() { "top chain X_k to Y_k".into() } else { "top chain X_k to Y".into() });
            let mut pieces: Vec<Polyline> = Vec::new();
            if let Some(l) = &lx {
                pieces.extend(ladder_curve(oracle, l, lattice_step, "ladder_x")?);
            }
            pieces.push(chain_curve(oracle, &top_x, &top_y, lattice_step, "top.chain")?);
            if let Some(l) = &ly {
                pieces.extend(ladder_curve(oracle, l, lattice_step, "ladder_y")?.map(|c| c.reversed()));
            }
            let mut it = pieces.into_iter();
            let first = it.next().unwrap();
            it.fold(first, |acc, p| acc.join(&p))
        }
    };
    let (length_ratio, cigar) = curve_constants(oracle, &curve);
    Ok(GoodCurve { curve, length_ratio, cigar, case_trace: trace })
}

/// Curve export: the vertices as point-cloud rows with unit weight under a
/// `dim=<d> h=<step>` header.
pub fn write_curve<W: Write>(mut out: W, c: &GoodCurve, step: f64) -> std::io::Result<()> {
    let dim = c.curve.start().dim();
    writeln!(out, "dim={dim} h={step}")?;
    for p in c.curve.vertices() {
        writeln!(out, "{p} 1")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Sidecar<'a> {
    #[serde(rename = "C_meas")]
    c_big: f64,
    c_meas: f64,
    case_trace: &'a [String],
}

/// JSON sidecar `{C_meas, c_meas, case_trace}`.
pub fn curve_sidecar(c: &GoodCurve) -> serde_json::Value {
    serde_json::to_value(Sidecar { c_big: c.length_ratio, c_meas: c.cigar, case_trace: &c.case_trace })
        .expect("sidecar serializes")
}
