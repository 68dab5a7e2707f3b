use rayon::prelude::*;

use super::AccessError;
use crate::domain::DomainOracle;
use crate::geometry::{Ball, Point, Polyline};
use crate::index::KdTree;

/// Whitney balls `B(Z_i, δ(Z_i)/2)` from `X` to `X'`, consecutive balls
/// intersecting.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HarnackChain {
    pub x: Point,
    pub x_prime: Point,
    pub balls: Vec<Ball>,
    /// Graph nodes built for the search.
    pub nodes: usize,
}

impl HarnackChain {
    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }
}

/// Cell budget of the adaptive lattice; beyond it the search gives up.
const MAX_CELLS: usize = 40_000_000;

/// The search box starts at `|X - X'| + max δ` and grows fourfold this many
/// times before the endpoints count as disconnected.
const BOX_GROWTH: usize = 3;

/// Shortest chain of Whitney balls joining `x` to `x_prime`.
///
/// Nodes are `x`, `x_prime` and Inside points of the lattice of spacing
/// `step` anchored at `x` with `δ > step`. The lattice is thinned by a
/// Whitney quadtree: a cell of side `a` is kept whole once
/// `a <= δ(center)/(4√d)` and only its lower corner becomes a node. Edges join
/// intersecting balls; the chain minimizes the ball count, then the length of
/// the center polyline. `Ok(None)` when the endpoints are not connected
/// inside the largest search box.
pub fn harnack_chain(
    oracle: &dyn DomainOracle,
    x: &Point,
    x_prime: &Point,
    step: f64,
) -> Result<Option<HarnackChain>, AccessError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(AccessError::InvalidStep { step, max: f64::INFINITY });
    }
    for p in [x, x_prime] {
        if !oracle.is_inside(p) || oracle.boundary_distance(p) <= 0.0 {
            return Err(AccessError::NotInside(*p));
        }
    }
    let ball = |z: &Point| Ball { center: *z, radius: oracle.boundary_distance(z) / 2.0 };
    if x == x_prime {
        return Ok(Some(HarnackChain { x: *x, x_prime: *x, balls: vec![ball(x)], nodes: 1 }));
    }

    let mut reach = x.dist(x_prime) + oracle.boundary_distance(x).max(oracle.boundary_distance(x_prime));
    for _ in 0..=BOX_GROWTH {
        if let Some(chain) = search(oracle, x, x_prime, step, reach)? {
            verify_chain(oracle, &chain)?;
            return Ok(Some(chain));
        }
        reach *= 4.0;
    }
    Ok(None)
}

/// Chain search inside the cube of half-width about `reach` around `x`.
fn search(
    oracle: &dyn DomainOracle,
    x: &Point,
    x_prime: &Point,
    step: f64,
    reach: f64,
) -> Result<Option<HarnackChain>, AccessError> {
    let mut nodes = vec![*x, *x_prime];
    whitney_nodes(oracle, x, x_prime, step, reach, &mut nodes)?;
    let delta: Vec<f64> = nodes.iter().map(|z| oracle.boundary_distance(z)).collect();
    let tree = KdTree::new(&nodes);

    // Breadth-first layers; within a layer the shortest polyline wins.
    let n = nodes.len();
    let mut hops = vec![u32::MAX; n];
    let mut length = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    hops[0] = 0;
    length[0] = 0.0;
    let mut frontier = vec![0usize];
    while !frontier.is_empty() && hops[1] == u32::MAX {
        // Neighbor lists in parallel; merged in frontier order for determinism.
        let adj: Vec<Vec<(usize, f64)>> = frontier
            .par_iter()
            .map(|&u| {
                let mut out = Vec::new();
                tree.for_each_within(&nodes[u], 2.0 * delta[u], |v, d2| {
                    let d = d2.sqrt();
                    if d < (delta[u] + delta[v]) / 2.0 && hops[v] == u32::MAX {
                        out.push((v, d));
                    }
                });
                out.sort_unstable_by_key(|e| e.0);
                out
            })
            .collect();
        let mut next = Vec::new();
        for (&u, nbrs) in frontier.iter().zip(&adj) {
            let h = hops[u] + 1;
            for &(v, d) in nbrs {
                if hops[v] == u32::MAX {
                    hops[v] = h;
                    next.push(v);
                }
                if hops[v] == h && length[u] + d < length[v] {
                    length[v] = length[u] + d;
                    pred[v] = u;
                }
            }
        }
        next.sort_unstable();
        frontier = next;
    }
    if hops[1] == u32::MAX {
        return Ok(None);
    }
    let mut path = vec![1usize];
    while *path.last().unwrap() != 0 {
        path.push(pred[*path.last().unwrap()]);
    }
    path.reverse();
    let balls = path.iter().map(|&i| Ball { center: nodes[i], radius: delta[i] / 2.0 }).collect();
    Ok(Some(HarnackChain { x: *x, x_prime: *x_prime, balls, nodes: n }))
}

fn whitney_nodes(
    oracle: &dyn DomainOracle,
    x: &Point,
    x_prime: &Point,
    step: f64,
    reach: f64,
    out: &mut Vec<Point>,
) -> Result<(), AccessError> {
    let d = x.dim();
    let sqrt_d = (d as f64).sqrt();
    let levels = (reach / step).log2().ceil().clamp(0.0, 40.0) as i32;
    let half = step * 2f64.powi(levels);
    let ones = (0..d).fold(Point::zero(d), |acc, a| acc + Point::basis(d, a));
    // Level by level; each level is evaluated in parallel and kept in order.
    let mut level = vec![*x - ones * half];
    let mut a = 2.0 * half;
    let mut cells = 0usize;
    while !level.is_empty() {
        cells += level.len();
        if cells > MAX_CELLS {
            return Err(AccessError::SearchTooLarge { cells });
        }
        let base = a <= step * (1.0 + 1e-9);
        let verdicts: Vec<Cell> = level
            .par_iter()
            .map(|lo| {
                let c = *lo + ones * (a / 2.0);
                let dc = oracle.boundary_distance(&c);
                let clear = dc > a * sqrt_d / 2.0;
                if clear && !oracle.is_inside(&c) {
                    Cell::Drop
                } else if (clear && a <= dc / (4.0 * sqrt_d)) || base {
                    let keep =
                        lo != x && lo != x_prime && oracle.is_inside(lo) && oracle.boundary_distance(lo) > step;
                    if keep {
                        Cell::Node
                    } else {
                        Cell::Drop
                    }
                } else {
                    Cell::Split
                }
            })
            .collect();
        let h = a / 2.0;
        let mut next = Vec::new();
        for (lo, v) in level.iter().zip(verdicts) {
            match v {
                Cell::Drop => {}
                Cell::Node => out.push(*lo),
                Cell::Split => {
                    for corner in 0..(1usize << d) {
                        let mut p = *lo;
                        for ax in 0..d {
                            if corner >> ax & 1 == 1 {
                                p = p + Point::basis(d, ax) * h;
                            }
                        }
                        next.push(p);
                    }
                }
            }
        }
        level = next;
        a = h;
    }
    Ok(())
}

enum Cell {
    Drop,
    Node,
    Split,
}

/// Checks the chain against the oracle: endpoints, overlaps and the
/// two-sided Whitney bound `diam/4 <= δ(Z) - radius <= δ(Z) <= 4 diam`.
pub fn verify_chain(oracle: &dyn DomainOracle, c: &HarnackChain) -> Result<(), AccessError> {
    let bad = |m: String| Err(AccessError::Validation(m));
    let (Some(first), Some(last)) = (c.balls.first(), c.balls.last()) else {
        return bad("empty chain".into());
    };
    if !first.contains(&c.x) || !last.contains(&c.x_prime) {
        return bad("chain does not contain its endpoints".into());
    }
    for w in c.balls.windows(2) {
        if w[0].center.dist(&w[1].center) >= w[0].radius + w[1].radius {
            return bad(format!("balls at {:?} and {:?} do not meet", w[0].center, w[1].center));
        }
    }
    for b in &c.balls {
        let delta = oracle.boundary_distance(&b.center);
        let diam = 2.0 * b.radius;
        if delta - b.radius < diam / 4.0 - 1e-12 || delta > 4.0 * diam + 1e-12 || !oracle.is_inside(&b.center) {
            return bad(format!("ball at {:?} violates the Whitney bound", b.center));
        }
    }
    Ok(())
}

/// Polygonal curve through `X`, the ball centers in order, and `X'`, with
/// repeated consecutive vertices merged.
pub fn chain_to_curve(c: &HarnackChain) -> Polyline {
    let mut v = vec![c.x];
    for p in c.balls.iter().map(|b| b.center).chain(std::iter::once(c.x_prime)) {
        if *v.last().unwrap() != p {
            v.push(p);
        }
    }
    if v.len() < 2 {
        v.push(c.x_prime);
    }
    Polyline::new(v).expect("chain centers are finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, CorpusSpec};

    #[test]
    fn curve_merges_repeated_centers() {
        let x = Point::xy(0.0, 1.0);
        let y = Point::xy(1.0, 1.0);
        let c = HarnackChain {
            x,
            x_prime: y,
            balls: vec![Ball { center: x, radius: 0.5 }, Ball { center: y, radius: 0.5 }],
            nodes: 2,
        };
        assert_eq!(chain_to_curve(&c).vertices(), &[x, y]);
    }

    #[test]
    fn chain_goes_around_the_slit() {
        let d = make_domain(&"slit".parse::<CorpusSpec>().unwrap()).unwrap();
        let a = Point::xy(0.9, 0.02);
        let b = Point::xy(0.9, -0.02);
        let c = harnack_chain(&d, &a, &b, 0.005).unwrap().unwrap();
        // The chain has to go around the slit tip at (0.5, 0).
        assert!(c.balls.iter().any(|b| b.center.get(0) < 0.5));
        let outside = Point::xy(2.0, 0.0);
        assert!(harnack_chain(&d, &a, &outside, 0.005).is_err());
    }
}
