use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use super::{AccessError, CorkscrewCert, CorkscrewKind};
use crate::domain::{DomainOracle, SampledBoundary, Side};
use crate::dyadic::DyadicCube;
use crate::geometry::{Ball, Point};

/// Largest `min(δ(X), r - |X - x|)` over `Ω ∩ B(x, r)`: the best point of the
/// lattice of spacing `step` anchored at `x`, refined by three rounds of
/// coordinate descent with halving steps.
pub fn interior_corkscrew(
    oracle: &dyn DomainOracle,
    x: &Point,
    r: f64,
    step: f64,
) -> Result<Option<CorkscrewCert>, AccessError> {
    corkscrew(oracle, x, r, step, CorkscrewKind::Interior)
}

/// As [`interior_corkscrew`] over the open exterior `ℝ^d ∖ Ω̄`.
pub fn exterior_corkscrew(
    oracle: &dyn DomainOracle,
    x: &Point,
    r: f64,
    step: f64,
) -> Result<Option<CorkscrewCert>, AccessError> {
    corkscrew(oracle, x, r, step, CorkscrewKind::Exterior)
}

fn on_side(oracle: &dyn DomainOracle, p: &Point, kind: CorkscrewKind) -> bool {
    match kind {
        CorkscrewKind::Interior => oracle.is_inside(p),
        _ => oracle.is_exterior(p),
    }
}

fn corkscrew(
    oracle: &dyn DomainOracle,
    x: &Point,
    r: f64,
    step: f64,
    kind: CorkscrewKind,
) -> Result<Option<CorkscrewCert>, AccessError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(AccessError::InvalidRadius(r));
    }
    if !(step > 0.0 && step <= r / 20.0 * (1.0 + 1e-12)) {
        return Err(AccessError::InvalidStep { step, max: r / 20.0 });
    }
    let f = |p: &Point| -> f64 {
        if !on_side(oracle, p, kind) {
            return f64::NEG_INFINITY;
        }
        oracle.boundary_distance(p).min(r - p.dist(x))
    };
    let Some((best, val)) = lattice_max(x, r, step, &f) else {
        return Ok(None);
    };
    let (best, val) = descend(best, val, step, &f);
    if !(val > 0.0) {
        return Ok(None);
    }
    let cert = CorkscrewCert {
        anchor: *x,
        r,
        point: best,
        radius: val,
        constant: val / r,
        kind,
        witness: None,
    };
    validate(oracle, &cert)?;
    Ok(Some(cert))
}

/// Best lattice point; ties go to the first point in row-major order.
fn lattice_max(x: &Point, r: f64, step: f64, f: &(dyn Fn(&Point) -> f64 + Sync)) -> Option<(Point, f64)> {
    let d = x.dim();
    let m = (r / step).floor() as i64;
    let rows: Vec<i64> = (-m..=m).collect();
    let best = rows
        .par_iter()
        .map(|&i| {
            let mut best: Option<(Point, f64)> = None;
            let inner: Vec<(i64, i64)> = if d == 2 {
                (-m..=m).map(|j| (j, 0)).collect()
            } else {
                (-m..=m).flat_map(|j| (-m..=m).map(move |l| (j, l))).collect()
            };
            for (j, l) in inner {
                let off = if d == 2 {
                    Point::xy(i as f64 * step, j as f64 * step)
                } else {
                    Point::xyz(i as f64 * step, j as f64 * step, l as f64 * step)
                };
                if off.norm() >= r {
                    continue;
                }
                let p = *x + off;
                let v = f(&p);
                if v > 0.0 && best.map_or(true, |(_, b)| v > b) {
                    best = Some((p, v));
                }
            }
            best
        })
        .collect::<Vec<_>>();
    best.into_iter().flatten().fold(None, |acc: Option<(Point, f64)>, cur| match acc {
        Some(a) if a.1 >= cur.1 => Some(a),
        _ => Some(cur),
    })
}

fn descend(mut p: Point, mut val: f64, step: f64, f: &dyn Fn(&Point) -> f64) -> (Point, f64) {
    let d = p.dim();
    let mut s = step;
    for _ in 0..3 {
        s /= 2.0;
        let mut improved = true;
        let mut moves = 0;
        while improved && moves < 64 {
            improved = false;
            for a in 0..d {
                for sign in [1.0, -1.0] {
                    let q = p + Point::basis(d, a) * (sign * s);
                    let v = f(&q);
                    if v > val {
                        p = q;
                        val = v;
                        improved = true;
                        moves += 1;
                    }
                }
            }
        }
    }
    (p, val)
}

/// Re-checks a certificate against the oracle: depth, containment in
/// `B(x, r)` and side at 10^3 sampled points of the ball.
pub fn validate(oracle: &dyn DomainOracle, c: &CorkscrewCert) -> Result<(), AccessError> {
    let bad = |m: String| Err(AccessError::Validation(m));
    if oracle.boundary_distance(&c.point) < c.radius - 1e-9 {
        return bad(format!("δ(X) = {} below radius {}", oracle.boundary_distance(&c.point), c.radius));
    }
    let outer = match (c.kind, c.witness) {
        (CorkscrewKind::C0Exterior, Some(z)) => Ball { center: z, radius: c.r },
        _ => Ball { center: c.anchor, radius: c.r },
    };
    let inner = Ball { center: c.point, radius: c.radius };
    if !inner.inside(&outer, 1e-9) {
        return bad("ball leaves the window".into());
    }
    let side = |p: &Point| match c.kind {
        CorkscrewKind::Interior => oracle.side(p) == Side::Inside,
        _ => oracle.side(p) == Side::Outside,
    };
    let d = c.point.dim();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(c.point.coords().iter().fold(0u64, |h, v| h ^ v.to_bits()));
    for _ in 0..1000 {
        let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let Some(u) = Point::from_slice(&dir).unwrap().normalized() else { continue };
        let t: f64 = rng.gen::<f64>().powf(1.0 / d as f64) * c.radius * (1.0 - 1e-9);
        let p = c.point + u * t;
        if !side(&p) {
            return bad(format!("sample {p:?} of the ball is on the wrong side"));
        }
    }
    Ok(())
}

/// Outcome of the dyadic exterior corkscrew test for one cube.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct C0Outcome {
    pub pass: bool,
    pub cert: Option<CorkscrewCert>,
}

/// Looks for `B(X, c0 ℓ(Q)) ⊆ B(z, r_Q/4) ∖ Ω̄` with `z ∈ Δ(x_Q, r_Q)`.
///
/// Candidate anchors `z` are the cube's samples in `Δ(x_Q, r_Q)` thinned to
/// an `r_Q/16`-net in index order; the first anchor that passes wins. A ball
/// of radius above `r_Q/8` never fits, so larger `c0 ℓ(Q)` fails at once.
pub fn c0_exterior_test(
    oracle: &dyn DomainOracle,
    s: &SampledBoundary,
    q: &DyadicCube,
    c0: f64,
    step: Option<f64>,
) -> Result<C0Outcome, AccessError> {
    if !(c0 > 0.0 && c0 < 0.125) {
        return Err(AccessError::InvalidC0(c0));
    }
    let need = c0 * q.ell;
    let window = q.r_q / 4.0;
    if need > window / 2.0 {
        return Ok(C0Outcome { pass: false, cert: None });
    }
    let step = step.unwrap_or(window / 20.0);
    let mut anchors: Vec<Point> = Vec::new();
    for i in s.within(&q.x, q.r_q) {
        if q.members.binary_search(&i).is_err() {
            continue;
        }
        let z = s.points()[i];
        if anchors.iter().all(|a| a.dist(&z) >= q.r_q / 16.0) {
            anchors.push(z);
        }
    }
    for z in anchors {
        if let Some(mut cert) = exterior_corkscrew(oracle, &z, window, step)? {
            if cert.radius >= need {
                cert.kind = CorkscrewKind::C0Exterior;
                cert.witness = Some(z);
                cert.anchor = q.x;
                validate(oracle, &cert)?;
                return Ok(C0Outcome { pass: true, cert: Some(cert) });
            }
        }
    }
    Ok(C0Outcome { pass: false, cert: None })
}
