//! Closed-form distance and side tests for the corpus shapes, in the shapes'
//! own (unplaced) coordinates.

use serde::{Deserialize, Serialize};

use super::Side;
use crate::geometry::Point;

/// Exact parametrized boundary pieces, used for sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPiece {
    /// Open segment; its endpoints take half a spacing of measure.
    Segment { a: Point, b: Point },
    /// Open polygonal path.
    Path { vertices: Vec<Point> },
    /// Closed polygon.
    Polygon { vertices: Vec<Point> },
    Circle { center: Point, radius: f64 },
    Sphere { center: Point, radius: f64 },
    /// `{x3 = 0, |x1|, |x2| <= half_width}`.
    PlanePatch { half_width: f64 },
    /// `{(sign · t^exponent, t) : 0 <= t <= height}`.
    PowerCurve { exponent: f64, sign: f64, height: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Shape {
    HalfSpace,
    Ball { radius: f64 },
    Square { side: f64 },
    Graph { nodes: Vec<(f64, f64)> },
    Cantor { level: u32 },
    Cusp { exponent: f64 },
    Slit { radius: f64, slit: f64 },
}

impl Shape {
    pub(crate) fn side(&self, p: &Point) -> Side {
        let inside = match self {
            Shape::HalfSpace => p.get(p.dim() - 1) > 0.0,
            Shape::Ball { radius } => p.norm() < *radius,
            Shape::Square { side } => p.get(0).abs() < side / 2.0 && p.get(1).abs() < side / 2.0,
            Shape::Graph { nodes } => p.get(1) > graph_height(nodes, p.get(0)),
            Shape::Cantor { level } => cantor_query(*level, p).2 == Side::Inside,
            Shape::Cusp { exponent } => p.get(1) > 0.0 && p.get(0).abs() < p.get(1).powf(*exponent),
            Shape::Slit { radius, slit } => {
                let (d, _) = seg_nearest(p, &Point::xy(radius - slit, 0.0), &Point::xy(*radius, 0.0));
                p.norm() < *radius && d > 0.0
            }
        };
        if inside {
            Side::Inside
        } else {
            Side::Outside
        }
    }

    /// Distance to the boundary and a closest boundary point.
    pub(crate) fn nearest(&self, p: &Point) -> (f64, Point) {
        match self {
            Shape::HalfSpace => {
                let k = p.dim() - 1;
                (p.get(k).abs(), p.with(k, 0.0))
            }
            Shape::Ball { radius } => {
                let n = p.norm();
                let q = match p.normalized() {
                    Some(u) => u * *radius,
                    None => Point::basis(p.dim(), 0) * *radius,
                };
                ((n - radius).abs(), q)
            }
            Shape::Square { side } => square_nearest(p, -side / 2.0, -side / 2.0, *side),
            Shape::Graph { nodes } => graph_nearest(nodes, p),
            Shape::Cantor { level } => {
                let (d, q, _) = cantor_query(*level, p);
                (d, q)
            }
            Shape::Cusp { exponent } => {
                let (d1, q1) = power_curve_nearest(*exponent, p.get(0), p.get(1));
                let (d2, q2) = power_curve_nearest(*exponent, -p.get(0), p.get(1));
                if d1 <= d2 {
                    (d1, Point::xy(q1.0, q1.1))
                } else {
                    (d2, Point::xy(-q2.0, q2.1))
                }
            }
            Shape::Slit { radius, slit } => {
                let (ds, qs) = seg_nearest(p, &Point::xy(radius - slit, 0.0), &Point::xy(*radius, 0.0));
                let (dc, qc) = Shape::Ball { radius: *radius }.nearest(p);
                if ds < dc {
                    (ds, qs)
                } else {
                    (dc, qc)
                }
            }
        }
    }
}

pub(crate) fn seg_nearest(p: &Point, a: &Point, b: &Point) -> (f64, Point) {
    let ab = *b - *a;
    let len2 = ab.norm_sq();
    let t = if len2 > 0.0 { ((*p - *a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let q = *a + ab * t;
    (p.dist(&q), q)
}

/// Distance from `p` to the boundary of the closed square `[x0, x0+s] × [y0, y0+s]`.
fn square_nearest(p: &Point, x0: f64, y0: f64, s: f64) -> (f64, Point) {
    let (x, y) = (p.get(0), p.get(1));
    let inside = x > x0 && x < x0 + s && y > y0 && y < y0 + s;
    if inside {
        let cands = [(x - x0, Point::xy(x0, y)), (x0 + s - x, Point::xy(x0 + s, y)), (y - y0, Point::xy(x, y0)), (y0 + s - y, Point::xy(x, y0 + s))];
        let best = cands.iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
        (best.0, best.1)
    } else {
        let q = Point::xy(x.clamp(x0, x0 + s), y.clamp(y0, y0 + s));
        (p.dist(&q), q)
    }
}

fn graph_height(nodes: &[(f64, f64)], x: f64) -> f64 {
    let first = nodes[0];
    let last = nodes[nodes.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let i = nodes.partition_point(|n| n.0 <= x).max(1);
    let (a, b) = (nodes[i - 1], nodes[i]);
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

fn graph_nearest(nodes: &[(f64, f64)], p: &Point) -> (f64, Point) {
    let first = nodes[0];
    let last = nodes[nodes.len() - 1];
    let left = Point::xy(p.get(0).min(first.0), first.1);
    let right = Point::xy(p.get(0).max(last.0), last.1);
    let mut best = (p.dist(&left), left);
    let r = (p.dist(&right), right);
    if r.0 < best.0 {
        best = r;
    }
    for w in nodes.windows(2) {
        let c = seg_nearest(p, &Point::xy(w[0].0, w[0].1), &Point::xy(w[1].0, w[1].1));
        if c.0 < best.0 {
            best = c;
        }
    }
    best
}

/// Nearest point of `{(t^a, t) : t >= 0}` to `(x, y)`.
fn power_curve_nearest(a: f64, x: f64, y: f64) -> (f64, (f64, f64)) {
    let pow = |t: f64| if a.fract() == 0.0 && a.abs() < 64.0 { t.powi(a as i32) } else { t.powf(a) };
    let g = |t: f64| {
        let dx = pow(t) - x;
        let dy = t - y;
        dx * dx + dy * dy
    };
    let t0 = y.max(0.0);
    let d0 = g(t0).sqrt();
    let lo = (y - d0).max(0.0);
    let hi = (y + d0).max(lo);
    const N: usize = 128;
    let step = (hi - lo) / N as f64;
    let mut bi = 0;
    let mut bv = f64::INFINITY;
    for i in 0..=N {
        let v = g(lo + step * i as f64);
        if v < bv {
            bv = v;
            bi = i;
        }
    }
    let mut a_ = lo + step * bi.saturating_sub(1) as f64;
    let mut b_ = (lo + step * (bi + 1) as f64).min(hi);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..64 {
        let c = b_ - phi * (b_ - a_);
        let d = a_ + phi * (b_ - a_);
        if g(c) <= g(d) {
            b_ = d;
        } else {
            a_ = c;
        }
    }
    let mut t = (a_ + b_) / 2.0;
    for cand in [lo + step * bi as f64, 0.0] {
        if g(cand) < g(t) {
            t = cand;
        }
    }
    (g(t).sqrt(), (pow(t), t))
}

/// Distance to the level-`k` four-corners square union, a closest point on
/// its boundary and the side of the complement domain.
fn cantor_query(level: u32, p: &Point) -> (f64, Point, Side) {
    struct Best {
        d: f64,
        q: Point,
        inside_square: bool,
    }
    fn box_dist(p: &Point, x0: f64, y0: f64, s: f64) -> f64 {
        let dx = (x0 - p.get(0)).max(p.get(0) - x0 - s).max(0.0);
        let dy = (y0 - p.get(1)).max(p.get(1) - y0 - s).max(0.0);
        (dx * dx + dy * dy).sqrt()
    }
    fn rec(p: &Point, x0: f64, y0: f64, s: f64, depth: u32, level: u32, best: &mut Best) {
        if box_dist(p, x0, y0, s) > best.d {
            return;
        }
        if depth == level {
            let (d, q) = square_nearest(p, x0, y0, s);
            let inside = p.get(0) > x0 && p.get(0) < x0 + s && p.get(1) > y0 && p.get(1) < y0 + s;
            if d < best.d || inside {
                *best = Best { d, q, inside_square: inside };
            }
            return;
        }
        let c = s / 4.0;
        let mut kids = [(x0, y0), (x0 + 3.0 * c, y0), (x0, y0 + 3.0 * c), (x0 + 3.0 * c, y0 + 3.0 * c)]
            .map(|(x, y)| (box_dist(p, x, y, c), x, y));
        kids.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, x, y) in kids {
            rec(p, x, y, c, depth + 1, level, best);
        }
    }
    let mut best = Best { d: f64::INFINITY, q: *p, inside_square: false };
    rec(p, 0.0, 0.0, 1.0, 0, level, &mut best);
    let side = if best.inside_square || best.d == 0.0 { Side::Outside } else { Side::Inside };
    (best.d, best.q, side)
}

/// Lower-left corners of the level-`k` squares, side `4^-k`.
pub(crate) fn cantor_squares(level: u32) -> Vec<(f64, f64)> {
    let mut cur = vec![(0.0, 0.0)];
    let mut s = 1.0;
    for _ in 0..level {
        let c = s / 4.0;
        cur = cur
            .iter()
            .flat_map(|&(x, y)| [(x, y), (x + 3.0 * c, y), (x, y + 3.0 * c), (x + 3.0 * c, y + 3.0 * c)])
            .collect();
        s = c;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantor_center_matches_brute_force() {
        // Brute force over the four level-1 squares.
        let p = Point::xy(0.5, 0.5);
        let brute = cantor_squares(1)
            .iter()
            .map(|&(x, y)| square_nearest(&p, x, y, 0.25).0)
            .fold(f64::INFINITY, f64::min);
        let (d, _, side) = cantor_query(1, &p);
        assert_eq!(side, Side::Inside);
        assert!((d - brute).abs() < 1e-15);
        assert!((d - 2f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn cantor_branch_and_bound_equals_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for level in 1..=4 {
            let sq = cantor_squares(level);
            let s = 0.25f64.powi(level as i32);
            for _ in 0..300 {
                let p = Point::xy(rng.gen_range(-0.2..1.2), rng.gen_range(-0.2..1.2));
                let brute = sq.iter().map(|&(x, y)| square_nearest(&p, x, y, s).0).fold(f64::INFINITY, f64::min);
                let (d, q, _) = cantor_query(level, &p);
                assert!((d - brute).abs() < 1e-14, "level {level} {p:?}");
                assert!((p.dist(&q) - d).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn power_curve_distance_is_accurate() {
        // Dense brute force along the curve.
        for &(x, y) in &[(0.0, 0.5), (0.1, 0.3), (-0.3, 0.1), (0.5, -0.2), (0.0, 0.05)] {
            let (d, _) = power_curve_nearest(2.0, x, y);
            let brute = (0..200_000)
                .map(|i| {
                    let t = i as f64 * 1e-5;
                    ((t * t - x).powi(2) + (t - y).powi(2)).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(d <= brute + 1e-12 && brute - d < 1e-8, "({x},{y}) {d} vs {brute}");
        }
    }

    #[test]
    fn graph_height_interpolates() {
        let nodes = vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.0)];
        assert_eq!(graph_height(&nodes, 0.5), 0.25);
        assert_eq!(graph_height(&nodes, -4.0), 0.0);
        assert_eq!(graph_height(&nodes, 1.5), 0.25);
    }
}
