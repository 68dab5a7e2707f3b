//! Dimension-generic primitives for `d ∈ {2, 3}`: points, balls, hyperplanes,
//! polylines and the half-ball geometry used by the side classification.

mod diameter;
mod fit;
mod point;

pub use diameter::set_diameter;
pub use fit::{fit_plane, PlaneFit};
pub use point::{Point, Vector};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("normal vector has zero length")]
    ZeroNormal,
    #[error("half-ball offset eps = {0} leaves an empty region (need 0 <= eps < 1)")]
    EmptyRegion(f64),
    #[error("need at least {need} points, got {got}")]
    InsufficientPoints { got: usize, need: usize },
    #[error("total weight must be positive")]
    ZeroWeight,
    #[error("degenerate point set: scatter rank {rank} < {needed}")]
    Degenerate { rank: usize, needed: usize },
    #[error("polyline needs at least two vertices")]
    TooFewVertices,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Open Euclidean ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::InvalidRadius(radius));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.center.dist_sq(p) < self.radius * self.radius
    }

    /// `self ⊆ other` up to `tol`.
    pub fn inside(&self, other: &Ball, tol: f64) -> bool {
        self.center.dist(&other.center) + self.radius <= other.radius + tol
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }
}

/// Affine hyperplane `{y : (y - base) · normal = 0}` with unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub base: Point,
    pub normal: Vector,
}

impl Hyperplane {
    /// Normalizes `normal`; fails on the zero vector.
    pub fn new(base: Point, normal: Vector) -> Result<Self, GeometryError> {
        let normal = normal.normalized().ok_or(GeometryError::ZeroNormal)?;
        Ok(Self { base, normal })
    }

    pub fn offset(&self, y: &Point) -> f64 {
        plane_offset(self, y)
    }

    pub fn project(&self, y: &Point) -> Point {
        *y - self.normal * self.offset(y)
    }

    /// Same normal, base shifted by `t` along it.
    pub fn shifted(&self, t: f64) -> Hyperplane {
        Hyperplane { base: self.base + self.normal * t, normal: self.normal }
    }
}

/// Signed distance `(y - base) · normal`.
pub fn plane_offset(p: &Hyperplane, y: &Point) -> f64 {
    (*y - p.base).dot(&p.normal)
}

/// Largest ball inside `B ∩ {(y - x) · v > eps · r}`.
///
/// Along the axis the ball centred at `x + t v` has room `min(r - t, t - eps r)`,
/// maximized at `t = r (1 + eps) / 2`.
pub fn inscribed_halfball(b: &Ball, v: &Vector, eps: f64) -> Result<Ball, GeometryError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(GeometryError::EmptyRegion(eps));
    }
    let v = v.normalized().ok_or(GeometryError::ZeroNormal)?;
    let r = b.radius;
    Ball::new(b.center + v * (r * (1.0 + eps) / 2.0), r * (1.0 - eps) / 2.0)
}

/// Ordered vertex chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    vertices: Vec<Point>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 2 {
            return Err(GeometryError::TooFewVertices);
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].dist(&w[1])).sum()
    }

    pub fn start(&self) -> Point {
        self.vertices[0]
    }

    pub fn end(&self) -> Point {
        *self.vertices.last().unwrap()
    }

    /// `per_segment` evenly spaced points on each segment, endpoints included.
    pub fn densify(&self, per_segment: usize) -> Vec<Point> {
        let n = per_segment.max(2);
        let mut out = Vec::with_capacity(self.vertices.len() * n);
        for w in self.vertices.windows(2) {
            for j in 0..n {
                out.push(w[0].lerp(&w[1], j as f64 / (n - 1) as f64));
            }
        }
        out
    }

    /// Concatenates `other` after `self`, merging the shared endpoint.
    pub fn join(mut self, other: &Polyline) -> Polyline {
        let mut rest = other.vertices.iter();
        if self.end() == other.start() {
            rest.next();
        }
        self.vertices.extend(rest);
        self
    }

    pub fn reversed(&self) -> Polyline {
        let mut v = self.vertices.clone();
        v.reverse();
        Polyline { vertices: v }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn offset_axis_aligned() {
        let p = Hyperplane::new(Point::xy(0.0, 0.0), Point::xy(0.0, 1.0)).unwrap();
        assert_eq!(plane_offset(&p, &Point::xy(3.0, 5.0)), 5.0);
        assert_eq!(plane_offset(&p, &Point::xy(7.0, 0.0)), 0.0);
    }

    #[test]
    fn offset_diagonal_plane() {
        let p = Hyperplane::new(Point::xy(1.0, 1.0), Point::xy(1.0, 1.0)).unwrap();
        let got = plane_offset(&p, &Point::xy(2.0, 2.0));
        assert!((got - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn halfball_closed_forms() {
        let x = Point::xy(0.0, 0.0);
        let v = Point::xy(0.0, 1.0);
        let b = inscribed_halfball(&Ball::new(x, 1.0).unwrap(), &v, 0.0).unwrap();
        assert_eq!(b.center, Point::xy(0.0, 0.5));
        assert_eq!(b.radius, 0.5);

        let b = inscribed_halfball(&Ball::new(x, 1.0).unwrap(), &v, 1.0 / 3.0).unwrap();
        assert!((b.center.get(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((b.radius - 1.0 / 3.0).abs() < 1e-15);

        let b = inscribed_halfball(&Ball::new(x, 2.0).unwrap(), &v, 0.1).unwrap();
        assert!((b.radius - 0.9).abs() < 1e-15);
    }

    #[test]
    fn halfball_rejects_eps_one() {
        let b = Ball::new(Point::xy(0.0, 0.0), 1.0).unwrap();
        assert_eq!(
            inscribed_halfball(&b, &Point::xy(1.0, 0.0), 1.0),
            Err(GeometryError::EmptyRegion(1.0))
        );
    }

    #[test]
    fn polyline_needs_two_vertices() {
        assert!(Polyline::new(vec![Point::xy(0.0, 0.0)]).is_err());
        let p = Polyline::new(vec![Point::xy(0.0, 0.0), Point::xy(3.0, 4.0), Point::xy(3.0, 5.0)]).unwrap();
        assert_eq!(p.length(), 6.0);
        assert_eq!(p.densify(64).len(), 128);
    }

    proptest! {
        #[test]
        fn halfball_stays_in_region(
            eps in 0.0f64..0.95,
            r in 0.1f64..10.0,
            ang in 0.0f64..std::f64::consts::TAU,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let x = Point::xy(0.3, -1.2);
            let v = Point::xy(ang.cos(), ang.sin());
            let b = inscribed_halfball(&Ball::new(x, r).unwrap(), &v, eps).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..10_000 {
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let s: f64 = rng.gen::<f64>().sqrt() * b.radius * 0.999_999;
                let p = b.center + Point::xy(t.cos(), t.sin()) * s;
                prop_assert!((p - x).dot(&v) > eps * r);
                prop_assert!((p - x).norm() < r);
            }
        }

        #[test]
        fn offset_pythagoras(
            bx in -5.0f64..5.0, by in -5.0f64..5.0, bz in -5.0f64..5.0,
            nx in -1.0f64..1.0, ny in -1.0f64..1.0, nz in -1.0f64..1.0,
            yx in -5.0f64..5.0, yy in -5.0f64..5.0, yz in -5.0f64..5.0,
        ) {
            prop_assume!(nx * nx + ny * ny + nz * nz > 1e-3);
            let p = Hyperplane::new(Point::xyz(bx, by, bz), Point::xyz(nx, ny, nz)).unwrap();
            let y = Point::xyz(yx, yy, yz);
            let off = plane_offset(&p, &y);
            let in_plane = p.project(&y).dist_sq(&p.base);
            let total = y.dist_sq(&p.base);
            prop_assert!((off * off + in_plane - total).abs() <= 1e-9 * total.max(1.0));
        }
    }
}
