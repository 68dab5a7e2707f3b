use super::cloud::SampledBoundary;
use super::corpus::{CorpusKind, CorpusSpec, Domain};
use super::shapes::BoundaryPiece;
use super::DomainError;
use crate::geometry::Point;
use crate::index::KdTree;

/// Samples the exact boundary of `domain` at spacing at most `h`.
///
/// Every sample carries the boundary measure of its share of the
/// parametrization, so the weights add up to the measure of the sampled
/// region. Samples closer than `h/4` (shared polygon vertices, the slit
/// junction, the cusp tip) are merged and their weights added.
/// Coarsest admissible `h`: a hundredth of the sampled region's diameter,
/// and no more than the square side for Cantor complements.
pub fn max_resolution(spec: &CorpusSpec) -> f64 {
    let scale = spec.placement.scale;
    let max = region_diameter(&spec.kind) * scale / 100.0;
    match spec.kind {
        CorpusKind::CantorComplement { level } => max.min(0.25f64.powi(level as i32) * scale),
        _ => max,
    }
}

pub fn sample_boundary(domain: &Domain, h: f64) -> Result<SampledBoundary, DomainError> {
    let spec = domain.spec();
    let scale = spec.placement.scale;
    if !(h > 0.0 && h.is_finite()) {
        return Err(DomainError::Resolution { h, max: f64::NAN });
    }
    let max = max_resolution(spec);
    if h > max {
        return Err(DomainError::Resolution { h, max });
    }

    let local_h = h / scale;
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for piece in domain.boundary() {
        sample_piece(&piece, local_h, &mut pts, &mut wts);
    }
    let n = spec.dim() as i32 - 1;
    let wscale = scale.powi(n);
    let pts: Vec<Point> = pts.iter().map(|p| domain.from_local(p)).collect();
    let wts: Vec<f64> = wts.iter().map(|w| w * wscale).collect();
    let (pts, wts) = merge_close(pts, wts, h / 4.0);
    SampledBoundary::new(pts, wts, h, domain.complete_box())
}

/// Diameter of the sampled region in local units.
fn region_diameter(kind: &CorpusKind) -> f64 {
    match kind {
        CorpusKind::HalfSpace { dim, window } => 2.0 * window * ((*dim - 1) as f64).sqrt(),
        CorpusKind::Ball { radius, .. } => 2.0 * radius,
        CorpusKind::Square { side } => side * 2f64.sqrt(),
        CorpusKind::LipschitzGraph { breakpoints, .. } => {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &(_, y) in breakpoints {
                lo = lo.min(y);
                hi = hi.max(y);
            }
            let w = breakpoints[breakpoints.len() - 1].0 - breakpoints[0].0;
            w.hypot(hi - lo)
        }
        CorpusKind::CantorComplement { .. } => 2f64.sqrt(),
        CorpusKind::Cusp { exponent, height } => (2.0 * height.powf(*exponent)).hypot(*height),
        CorpusKind::SlitDisk { radius, .. } => 2.0 * radius,
    }
}

fn sample_piece(piece: &BoundaryPiece, h: f64, pts: &mut Vec<Point>, wts: &mut Vec<f64>) {
    match piece {
        BoundaryPiece::Segment { a, b } => open_path(&[*a, *b], h, pts, wts),
        BoundaryPiece::Path { vertices } => open_path(vertices, h, pts, wts),
        BoundaryPiece::Polygon { vertices } => {
            for (i, a) in vertices.iter().enumerate() {
                let b = vertices[(i + 1) % vertices.len()];
                let len = a.dist(&b);
                let m = (len / h).ceil().max(1.0) as usize;
                for j in 0..m {
                    pts.push(a.lerp(&b, j as f64 / m as f64));
                    wts.push(len / m as f64);
                }
            }
        }
        BoundaryPiece::Circle { center, radius } => {
            let total = std::f64::consts::TAU * radius;
            let m = (total / h).ceil() as usize;
            for j in 0..m {
                let t = std::f64::consts::TAU * j as f64 / m as f64;
                pts.push(*center + Point::xy(t.cos(), t.sin()) * *radius);
                wts.push(total / m as f64);
            }
        }
        BoundaryPiece::Sphere { center, radius } => {
            let total = 4.0 * std::f64::consts::PI * radius * radius;
            let m = (total / (h * h)).ceil() as usize;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            for j in 0..m {
                let z = 1.0 - (2.0 * j as f64 + 1.0) / m as f64;
                let rho = (1.0 - z * z).sqrt();
                let t = golden * j as f64;
                pts.push(*center + Point::xyz(rho * t.cos(), rho * t.sin(), z) * *radius);
                wts.push(total / m as f64);
            }
        }
        BoundaryPiece::PlanePatch { half_width } => {
            let m = (2.0 * half_width / h).ceil() as usize;
            let cell = 2.0 * half_width / m as f64;
            for i in 0..m {
                for j in 0..m {
                    let x = -half_width + (i as f64 + 0.5) * cell;
                    let y = -half_width + (j as f64 + 0.5) * cell;
                    pts.push(Point::xyz(x, y, 0.0));
                    wts.push(cell * cell);
                }
            }
        }
        BoundaryPiece::PowerCurve { exponent, sign, height } => {
            power_curve(*exponent, *sign, *height, h, pts, wts);
        }
    }
}

/// Arclength sampling of an open path. Each sample carries half of each
/// adjacent spacing, so the two ends carry half a spacing.
fn open_path(vertices: &[Point], h: f64, pts: &mut Vec<Point>, wts: &mut Vec<f64>) {
    let steps: Vec<(usize, f64)> = vertices
        .windows(2)
        .map(|w| {
            let len = w[0].dist(&w[1]);
            let m = (len / h).ceil().max(1.0) as usize;
            (m, len / m as f64)
        })
        .collect();
    let last = steps.len() - 1;
    for (i, w) in vertices.windows(2).enumerate() {
        let (m, step) = steps[i];
        let first = if i == 0 { 0 } else { 1 };
        for j in first..=m {
            pts.push(w[0].lerp(&w[1], j as f64 / m as f64));
            let wt = if j == 0 || (j == m && i == last) {
                step / 2.0
            } else if j == m {
                (step + steps[i + 1].1) / 2.0
            } else {
                step
            };
            wts.push(wt);
        }
    }
}

/// Arclength sampling of `{(sign · t^a, t) : 0 <= t <= height}` through a
/// tabulated arclength inverse.
fn power_curve(a: f64, sign: f64, height: f64, h: f64, pts: &mut Vec<Point>, wts: &mut Vec<f64>) {
    const TABLE: usize = 1 << 16;
    let speed = |t: f64| (1.0 + (a * t.powf(a - 1.0)).powi(2)).sqrt();
    let dt = height / TABLE as f64;
    let mut cum = Vec::with_capacity(TABLE + 1);
    cum.push(0.0);
    for i in 0..TABLE {
        let t0 = i as f64 * dt;
        // Simpson on each cell.
        let s = (speed(t0) + 4.0 * speed(t0 + dt / 2.0) + speed(t0 + dt)) * dt / 6.0;
        cum.push(cum[i] + s);
    }
    let total = cum[TABLE];
    let m = (total / h).ceil().max(1.0) as usize;
    let step = total / m as f64;
    for j in 0..=m {
        let target = j as f64 * step;
        let i = cum.partition_point(|&c| c < target).clamp(1, TABLE);
        let frac = (target - cum[i - 1]) / (cum[i] - cum[i - 1]);
        let t = ((i - 1) as f64 + frac.clamp(0.0, 1.0)) * dt;
        pts.push(Point::xy(sign * t.powf(a), t));
        wts.push(if j == 0 || j == m { step / 2.0 } else { step });
    }
}

/// Greedy in input order: each surviving sample absorbs the later samples
/// within `tol`.
fn merge_close(pts: Vec<Point>, wts: Vec<f64>, tol: f64) -> (Vec<Point>, Vec<f64>) {
    let tree = KdTree::new(&pts);
    let mut absorbed = vec![false; pts.len()];
    let mut out_p = Vec::with_capacity(pts.len());
    let mut out_w = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        if absorbed[i] {
            continue;
        }
        let mut w = wts[i];
        for j in tree.within(&pts[i], tol) {
            if j > i && !absorbed[j] {
                absorbed[j] = true;
                w += wts[j];
            }
        }
        out_p.push(pts[i]);
        out_w.push(w);
    }
    (out_p, out_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, CorpusSpec, DomainOracle};

    fn sample(s: &str, h: f64) -> SampledBoundary {
        let spec: CorpusSpec = s.parse().unwrap();
        sample_boundary(&make_domain(&spec).unwrap(), h).unwrap()
    }

    #[test]
    fn circle_perimeter() {
        let s = sample("disk", 0.01);
        let tau = std::f64::consts::TAU;
        assert!((s.total_weight() - tau).abs() <= 0.01 * tau);
    }

    #[test]
    fn cantor_total_perimeter_is_four() {
        for k in 1..=4 {
            let s = sample(&format!("cantor:{k}"), (0.25f64.powi(k) / 4.0).min(0.01));
            assert!((s.total_weight() - 4.0).abs() < 1e-12, "level {k}: {}", s.total_weight());
        }
    }

    #[test]
    fn halfspace_window_length() {
        let s = sample("halfspace", 0.01);
        assert!((s.total_weight() - 2.0).abs() < 1e-12);
        let s3 = sample("halfspace3", 0.02);
        assert!((s3.total_weight() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn weights_match_exact_measure() {
        for name in ["square", "lipschitz", "cusp:2", "slit", "ball3", "disk:2"] {
            let spec: CorpusSpec = name.parse().unwrap();
            let d = make_domain(&spec).unwrap();
            let h = if name == "ball3" { 0.02 } else { 0.005 };
            let s = sample_boundary(&d, h).unwrap();
            let exact = d.sampled_measure();
            assert!((s.total_weight() - exact).abs() <= 0.01 * exact, "{name}: {} vs {exact}", s.total_weight());
        }
    }

    #[test]
    fn samples_lie_on_the_boundary_and_form_a_net() {
        for name in ["disk", "square", "lipschitz", "cantor:2", "cusp:2", "slit", "ball3"] {
            let spec: CorpusSpec = name.parse().unwrap();
            let d = make_domain(&spec).unwrap();
            let h = if name == "ball3" { 0.02 } else { 0.01 };
            let s = sample_boundary(&d, h).unwrap();
            for (i, p) in s.points().iter().enumerate() {
                assert!(d.boundary_distance(p) < 1e-9, "{name}: sample off boundary");
                assert_eq!(s.within(p, h / 4.0), vec![i], "{name}: samples too close");
            }
        }
    }

    #[test]
    fn nearest_sample_tracks_nearest_boundary_point() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for name in ["disk", "lipschitz", "cantor:2", "slit"] {
            let spec: CorpusSpec = name.parse().unwrap();
            let d = make_domain(&spec).unwrap();
            let h = 0.01;
            let s = sample_boundary(&d, h).unwrap();
            let mut checked = 0;
            while checked < 300 {
                let x = Point::xy(rng.gen_range(0.05..0.95), rng.gen_range(-0.9..0.9));
                let delta = d.boundary_distance(&x);
                let q = d.nearest_boundary(&x).unwrap();
                if delta <= 2.0 * h || !s.window_ok(&crate::geometry::Ball::new(q, 2.0 * h).unwrap()) {
                    continue;
                }
                let (_, dist) = s.nearest(&q).unwrap();
                assert!(dist <= h + 1e-12, "{name}: gap {dist} at {q:?}");
                checked += 1;
            }
        }
    }

    #[test]
    fn too_coarse_resolution_is_rejected() {
        let d = make_domain(&"disk".parse().unwrap()).unwrap();
        assert!(matches!(sample_boundary(&d, 0.05), Err(DomainError::Resolution { .. })));
        let c = make_domain(&"cantor:4".parse().unwrap()).unwrap();
        assert!(matches!(sample_boundary(&c, 0.01), Err(DomainError::Resolution { .. })));
    }
}
