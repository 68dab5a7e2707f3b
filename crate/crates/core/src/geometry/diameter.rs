use super::Point;

/// Diameter of a finite point set.
///
/// Planar sets go through the convex hull and rotating calipers, which is
/// exact. Spatial sets are exact up to a few thousand points and otherwise
/// use the largest distance between extreme points along a fixed direction
/// fan, which is a lower bound within a fraction of a percent for the
/// smooth shapes generated here.
pub fn set_diameter(points: &[Point]) -> f64 {
    match points.first().map(|p| p.dim()) {
        None => 0.0,
        Some(2) => planar_diameter(points),
        Some(_) => spatial_diameter(points),
    }
}

fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.get(0) - o.get(0)) * (b.get(1) - o.get(1)) - (a.get(1) - o.get(1)) * (b.get(0) - o.get(0))
}

pub(crate) fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut p: Vec<Point> = points.to_vec();
    p.sort_by(|a, b| a.lex_cmp(b));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for q in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(*q);
        }
        hull.pop();
    }
    hull
}

fn planar_diameter(points: &[Point]) -> f64 {
    let h = convex_hull(points);
    let n = h.len();
    match n {
        0 | 1 => return 0.0,
        2 => return h[0].dist(&h[1]),
        _ => {}
    }
    let mut best = 0.0f64;
    let mut j = 1;
    for i in 0..n {
        let ni = (i + 1) % n;
        while cross(&h[i], &h[ni], &h[(j + 1) % n]).abs() > cross(&h[i], &h[ni], &h[j]).abs() {
            j = (j + 1) % n;
        }
        best = best.max(h[i].dist(&h[j])).max(h[ni].dist(&h[j]));
    }
    best
}

fn spatial_diameter(points: &[Point]) -> f64 {
    let pick: Vec<Point> = if points.len() <= 3000 {
        points.to_vec()
    } else {
        let mut dirs = Vec::new();
        let m = 24;
        for a in 0..m {
            for b in 0..m {
                let th = std::f64::consts::PI * (a as f64 + 0.5) / m as f64;
                let ph = std::f64::consts::TAU * b as f64 / m as f64;
                dirs.push(Point::xyz(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()));
            }
        }
        let mut out = Vec::new();
        for d in &dirs {
            let (mut lo, mut hi) = (0usize, 0usize);
            for (i, p) in points.iter().enumerate() {
                if p.dot(d) < points[lo].dot(d) {
                    lo = i;
                }
                if p.dot(d) > points[hi].dot(d) {
                    hi = i;
                }
            }
            out.push(points[lo]);
            out.push(points[hi]);
        }
        out
    };
    let mut best = 0.0f64;
    for i in 0..pick.len() {
        for j in i + 1..pick.len() {
            best = best.max(pick[i].dist_sq(&pick[j]));
        }
    }
    best.sqrt()
}
