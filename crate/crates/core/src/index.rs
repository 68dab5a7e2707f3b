//! Static k-d tree over sample points, used for ball queries and nearest
//! sample lookups.

use crate::geometry::Point;

const LEAF: usize = 12;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    lo: [f64; 3],
    hi: [f64; 3],
    start: u32,
    end: u32,
    left: u32,
    right: u32,
}

#[derive(Debug, Clone, Default)]
pub struct KdTree {
    pts: Vec<[f64; 3]>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(points: &[Point]) -> Self {
        let pts: Vec<[f64; 3]> = points.iter().map(|p| *p.raw()).collect();
        let mut order: Vec<u32> = (0..pts.len() as u32).collect();
        let mut nodes = Vec::new();
        if !pts.is_empty() {
            build(&pts, &mut order, 0, pts.len(), &mut nodes);
        }
        Self { pts, order, nodes }
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    /// Nearest point index and its distance.
    pub fn nearest(&self, q: &Point) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let q = q.raw();
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_rec(0, q, &mut best);
        Some((best.0, best.1.sqrt()))
    }

    fn nearest_rec(&self, ni: u32, q: &[f64; 3], best: &mut (usize, f64)) {
        let n = &self.nodes[ni as usize];
        if box_dist_sq(&n.lo, &n.hi, q) > best.1 {
            return;
        }
        if n.left == NONE {
            for &i in &self.order[n.start as usize..n.end as usize] {
                let d = dist_sq(&self.pts[i as usize], q);
                if d < best.1 || (d == best.1 && (i as usize) < best.0) {
                    *best = (i as usize, d);
                }
            }
            return;
        }
        let (a, b) = (n.left, n.right);
        let da = box_dist_sq(&self.nodes[a as usize].lo, &self.nodes[a as usize].hi, q);
        let db = box_dist_sq(&self.nodes[b as usize].lo, &self.nodes[b as usize].hi, q);
        if da <= db {
            self.nearest_rec(a, q, best);
            self.nearest_rec(b, q, best);
        } else {
            self.nearest_rec(b, q, best);
            self.nearest_rec(a, q, best);
        }
    }

    /// Calls `f(index, dist_sq)` for every point with `|p - q| < r`, in no
    /// particular order.
    pub fn for_each_within(&self, q: &Point, r: f64, mut f: impl FnMut(usize, f64)) {
        if self.nodes.is_empty() || !(r > 0.0) {
            return;
        }
        self.within_rec(0, q.raw(), r * r, &mut |i, d| {
            f(i, d);
            true
        });
    }

    /// Sorted indices of points strictly inside `B(q, r)`.
    pub fn within(&self, q: &Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(q, r, |i, _| out.push(i));
        out.sort_unstable();
        out
    }

    /// True if some point in `B(q, r)` satisfies `pred`; stops at the first hit.
    pub fn any_within(&self, q: &Point, r: f64, mut pred: impl FnMut(usize) -> bool) -> bool {
        if self.nodes.is_empty() || !(r > 0.0) {
            return false;
        }
        let mut hit = false;
        self.within_rec(0, q.raw(), r * r, &mut |i, _| {
            if pred(i) {
                hit = true;
                false
            } else {
                true
            }
        });
        hit
    }

    /// Returns false when the visitor asked to stop.
    fn within_rec(&self, ni: u32, q: &[f64; 3], r2: f64, f: &mut dyn FnMut(usize, f64) -> bool) -> bool {
        let n = &self.nodes[ni as usize];
        if box_dist_sq(&n.lo, &n.hi, q) >= r2 {
            return true;
        }
        if n.left == NONE {
            for &i in &self.order[n.start as usize..n.end as usize] {
                let d = dist_sq(&self.pts[i as usize], q);
                if d < r2 && !f(i as usize, d) {
                    return false;
                }
            }
            return true;
        }
        self.within_rec(n.left, q, r2, f) && self.within_rec(n.right, q, r2, f)
    }
}

fn build(pts: &[[f64; 3]], order: &mut [u32], start: usize, end: usize, nodes: &mut Vec<Node>) -> u32 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in &order[start..end] {
        let p = &pts[i as usize];
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let id = nodes.len() as u32;
    nodes.push(Node { lo, hi, start: start as u32, end: end as u32, left: NONE, right: NONE });
    let spread = |a: usize| hi[a] - lo[a];
    let axis = (0..3).max_by(|&a, &b| spread(a).total_cmp(&spread(b))).unwrap();
    if end - start <= LEAF || spread(axis) == 0.0 {
        return id;
    }
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        pts[a as usize][axis].total_cmp(&pts[b as usize][axis]).then(a.cmp(&b))
    });
    let left = build(pts, order, start, mid, nodes);
    let right = build(pts, order, mid, end, nodes);
    nodes[id as usize].left = left;
    nodes[id as usize].right = right;
    id
}

#[inline]
fn dist_sq(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
fn box_dist_sq(lo: &[f64; 3], hi: &[f64; 3], q: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        let d = if q[a] < lo[a] {
            lo[a] - q[a]
        } else if q[a] > hi[a] {
            q[a] - hi[a]
        } else {
            0.0
        };
        s += d * d;
    }
    s
}
